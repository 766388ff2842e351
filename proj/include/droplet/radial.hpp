#pragma once

#include "droplet/geometry.hpp"

#include <string>
#include <vector>

namespace droplet {

struct Schedule;

// Unique R > 1 with R ln R = s.
double zeta(double s);

struct RadialState {
    double R = 1.0;
    double F = 1.0;
    double lambda = 1.0;
};

enum class Regime { Pinned, Advancing, Receding };
const char* regime_name(Regime r);

struct RadialProfile {
    double R = 1.0;
    double F = 1.0;
    double operator()(double r) const;
};

RadialProfile radial_profile(double lambda, double F);

bool in_region_S(const RadialState& s, const HysteresisParams& p);

struct RadialStep {
    double t = 0.0;
    RadialState state;
    Regime regime = Regime::Pinned;
};

// Exact branch following; first entry is the initial state at t_0 (regime pinned).
std::vector<RadialStep> radial_evolve(const Schedule& s, double R0, const HysteresisParams& p);

void write_radial_csv(const std::string& path, const std::vector<RadialStep>& steps);

// Minimiser of F^2/R + Q R over R > 0.
double halfline_optimum(double F, double Q);

} // namespace droplet
