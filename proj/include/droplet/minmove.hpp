#pragma once

#include "droplet/field.hpp"
#include "droplet/geometry.hpp"

#include <string>
#include <utility>
#include <vector>

namespace droplet {

// The wet set reached the truncation box.
struct DomainTooSmall : Error {
    using Error::Error;
};

struct StepError : Error {
    StepError(const std::string& what, int index) : Error(what), index(index) {}
    int index;
};

struct StepResult {
    Profile profile;
    Mask mask;
    EnergyReport energy;
    double augmented = 0.0;
    long flips = 0;   // cells changed by accepted moves
    long moves = 0;   // accepted block moves
    int sweeps = 0;   // grow or shrink passes
};

// Piecewise-linear forcing through (times[i], F[i]); steps of size delta from
// times.front(). delta <= 0 uses the knots themselves as steps.
struct Schedule {
    std::vector<double> times;
    std::vector<double> F;
    double delta = 0.0;

    double forcing(double t) const;
    std::vector<std::pair<double, double>> points() const;
    void validate() const;
};

enum class Order { GrowFirst, ShrinkFirst };

struct StepOptions {
    int max_block = 16;       // longest arc tried as one move
    int track_depth = 3;      // layers behind the front kept in the Green's matrix
    int refresh_every = 64;   // accepted moves between exact refactorisations
    double tol = 1e-10;       // acceptance threshold, times F^2
    Order order = Order::GrowFirst;
    bool guard_outer = true;  // throw DomainTooSmall when a wet cell touches the box edge
    bool collective = true;   // exact submodular move over the whole front layer once arcs stall
};

StepResult step(const Mask& prev, double F, const Domain& d, const HysteresisParams& p,
                const StepOptions& opt = {});

// Local search on E(prev, .) started from `start` rather than from prev.
StepResult step_from(const Mask& prev, const Mask& start, double F, const Domain& d,
                     const HysteresisParams& p, const StepOptions& opt = {});

StepResult brute_force_step(const Mask& prev, double F, const Domain& d, const HysteresisParams& p,
                            const std::vector<int>& candidates);

struct Bracket {
    StepResult minimal;
    StepResult maximal;
};

Bracket bracket_minimizers(const Mask& prev, double F, const Domain& d, const HysteresisParams& p,
                           const StepOptions& opt = {});

struct TraceRecord {
    double t = 0.0;
    double F = 0.0;
    Mask mask;
    std::vector<double> wet_values; // values on mask cells in index order
    EnergyReport energy;
    double augmented = 0.0;
    double diss_increment = 0.0;
    double cumulative_dissbar = 0.0;
    long flips = 0;
    bool jump = false;

    Profile profile(const Domain& d) const;
};

struct Trace {
    Domain domain;
    HysteresisParams params;
    std::vector<TraceRecord> records;
    bool settled = false; // the initial mask was not a fixed point and was settled at t_0
};

TraceRecord make_record(double t, const StepResult& r, const Domain& d);

struct RunOptions {
    StepOptions step;
    bool bracket = true; // compare grow-first and shrink-first on moving steps
};

Trace run(const Schedule& s, const Mask& init, const Domain& d, const HysteresisParams& p,
          const RunOptions& opt = {});

void write_trace_csv(const std::string& path, const Trace& tr);

} // namespace droplet
