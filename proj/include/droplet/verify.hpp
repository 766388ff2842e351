#pragma once

#include "droplet/field.hpp"
#include "droplet/minmove.hpp"

#include <map>
#include <string>
#include <vector>

namespace droplet {

struct Certificate {
    std::string name;
    bool pass = false;
    bool vacuous = false;
    double tolerance = 0.0;
    double worst_residual = 0.0;
    int argmax = -1;                 // record index of the worst residual
    std::vector<double> series;      // per record
    std::map<std::string, double> stats;
    std::string note;
};

struct StabilityOptions {
    double tol_s = 0.15;
    SlopeOptions slope;
    int first = 0;  // record range [first, last)
    int last = -1;
};

Certificate check_stability(const Trace& tr, const StabilityOptions& opt = {});

// Pairwise check over all k < l. The certified work per step is
// D_m (F_{m+1}^2/F_m^2 - 1), the exact integral of 2(1+g)F'P for the scheme;
// the trapezoid version is reported in the stats.
Certificate check_dissipation_inequality(const Trace& tr, double tol = 1e-6);

Certificate check_energy_balance(const Trace& tr, double tol = 0.05);

// J_k + min(mu) BV_k <= J_0 prod_m max(F_{m+1}^2/F_m^2, 1); for nondecreasing
// forcing the right side is J_0 F_k^2/F_0^2.
Certificate check_gronwall(const Trace& tr, double tol = 1e-6);

struct DynamicSlopeOptions {
    double tol_d = 0.15;     // relative band around 1+mu_plus and 1-mu_minus
    double fraction = 0.9;
    SlopeOptions slope;
    int first = 0;           // transitions k -> k+1 with first <= k < last
    int last = -1;
    enum class Sample { Before, After, Both };
    Sample sample = Sample::Both; // which side of the transition is sampled
};

Certificate check_dynamic_slope(const Trace& tr, const DynamicSlopeOptions& opt = {});

enum class Relation { Equal, RightContainsLeft, LeftContainsRight, Incomparable };
const char* relation_name(Relation r);

struct JumpRecord {
    double t = 0.0;
    int index = 0; // right state record index
    Mask left_mask;
    Mask right_mask;
    std::vector<std::pair<Mask, Relation>> per_component_ordering;
    bool reproduced = false;  // step() from the left state returns the right state
    bool fixed_point = false; // no move from the right state lowers E(left, .)
};

// threshold <= 0 uses 10 h^d.
std::vector<JumpRecord> jump_report(const Trace& tr, double threshold = 0.0,
                                    const StepOptions& opt = {});

struct RegularityOptions {
    double c = 0.1;
    double radius_cells = 4.0;
    double lipschitz_max = 0.0; // 0: 1.2 sqrt(1 + mu_plus + 0.15)
    double nondegeneracy_min = 0.0; // 0: c
};

struct RegularityProxies {
    double lipschitz = 0.0;
    double nondegeneracy = 0.0;
    double density_min = 1.0;
    double density_max = 0.0;
};

RegularityProxies regularity_proxies(const Profile& p, const Domain& d, const RegularityOptions& opt = {});
Certificate regularity_report(const Trace& tr, const RegularityOptions& opt = {});

void write_certificates_json(const std::string& path, const std::vector<Certificate>& certs,
                             const std::string& series_dir = "");

} // namespace droplet
