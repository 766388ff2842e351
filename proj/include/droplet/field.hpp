#pragma once

#include "droplet/geometry.hpp"

#include <string>
#include <vector>

namespace droplet {

struct SolverError : Error {
    SolverError(const std::string& what, double residual) : Error(what), residual(residual) {}
    double residual;
};

struct Profile {
    std::vector<double> values; // row-major, one per cell
    Mask mask;
    double F = 0.0;
    double residual = 0.0;
};

struct EnergyReport {
    double dirichlet = 0.0;
    double volume = 0.0;
    double j_energy = 0.0;
    double pressure = 0.0;
};

struct SolveOptions {
    double tol = 1e-10;
    long max_iter = 0; // 0: 50 * unknowns
};

// Discrete harmonic function on the mask, F on the inner boundary, 0 elsewhere.
Profile solve_harmonic(const Domain& d, const Mask& mask, double F, const SolveOptions& opt = {});

// Dirichlet energy over edges between non-obstacle cells, each edge once.
double dirichlet_energy(const std::vector<double>& u, const Domain& d);

EnergyReport energy_report(const Profile& p, const Domain& d);

struct SlopeSample {
    int cell = 0;
    double slope = 0.0;
};

struct SlopeOptions {
    // Samples are averaged (in slope^2) over free boundary cells within this many cells.
    double smoothing_cells = 4.0;
};

// Gradient magnitude at free boundary cells. Along each axis the estimate is
// u/h towards a dry neighbour, a one-sided difference next to the obstacle and a
// centred difference otherwise; slope^2 is then averaged along the boundary.
std::vector<SlopeSample> boundary_slope_samples(const Profile& p, const Domain& d,
                                                const SlopeOptions& opt = {});

// Unsmoothed per-cell estimates.
std::vector<SlopeSample> raw_slope_samples(const Profile& p, const Domain& d);

struct EnergyDifference {
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
};

// lhs = D(v0) - D(v1), rhs = energy of v1 on edges with both ends outside {v0 > 0}.
EnergyDifference energy_difference_check(const Profile& v0, const Profile& v1, const Domain& d,
                                         double tol = 1e-8);

void write_profile_binary(const std::string& path, const Profile& p, const Domain& d);
Profile read_profile_binary(const std::string& path, const Domain& d);
void write_profile_csv(const std::string& path, const Profile& p, const Domain& d);

} // namespace droplet
