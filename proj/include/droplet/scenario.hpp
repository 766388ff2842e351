#pragma once

#include "droplet/minmove.hpp"
#include "droplet/radial.hpp"
#include "droplet/verify.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace droplet {

// Malformed or inconsistent scenario file; the message names the field.
struct ConfigError : Error {
    using Error::Error;
};

// Capsule: points within `radius` of the segment [a, b].
struct Segment {
    double ax = 0.0, ay = 0.0, bx = 0.0, by = 0.0;
    double radius = 0.0;
};

struct Scenario {
    enum class Init { Radius, Lambda, MaskFile, Settle };

    std::string name;
    std::string base_dir; // relative paths in the file resolve against this

    int dim = 2;
    int nx = 0;
    int ny = 1;
    double h = 0.0;
    std::vector<Disk> disks;
    std::vector<Segment> segments;

    HysteresisParams params;
    Schedule schedule;

    Init init = Init::Settle;
    double init_value = 0.0;
    std::string mask_file;

    RunOptions run;

    std::string out_dir;
    int snapshot_stride = 0;
    std::vector<std::string> certificates;
    double jump_threshold_cells = 0.0; // 0: default 10 cells
    std::optional<int> expect_jumps;
    bool radial_compare = false;
    std::map<std::string, double> tolerances;

    Domain domain() const;
    Mask initial_mask(const Domain& d) const;
    // Single unit-radius disk at the origin.
    bool is_radial() const;
};

const std::vector<std::string>& certificate_names();

Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

struct RadialRow {
    double t = 0.0;
    double F = 0.0;
    double measured = 0.0; // sqrt(|Omega|/pi + 1)
    double branch = 0.0;
    Regime regime = Regime::Pinned;
    double error = 0.0;
    double allowed = 0.0;  // max(2h, 3% of the branch radius)
    bool moved = false;    // area changed since the previous row
};

struct RadialComparison {
    std::vector<RadialRow> rows;
    double max_error = 0.0;
    double mean_error = 0.0;
    double worst_ratio = 0.0; // error / allowed on moving segments
    int pinned_moves = 0;     // rows inside a pinned segment whose area changed
    bool pass = false;
};

// rows: (t, F, area). The branch starts from the measured radius of the first row.
RadialComparison compare_radial(const std::vector<std::array<double, 3>>& rows, double h,
                                const HysteresisParams& p);
RadialComparison compare_radial(const Trace& tr);
std::vector<std::array<double, 3>> read_trace_areas(const std::string& csv_path);
void write_radial_comparison_csv(const std::string& path, const RadialComparison& c);

struct ScenarioReport {
    Trace trace;
    std::vector<Certificate> certificates;
    std::vector<JumpRecord> jumps;
    bool pass = false;
};

// Runs, writes artifacts into sc.out_dir and evaluates the certificates.
ScenarioReport execute_scenario(const Scenario& sc, bool quiet = true);

// Exit status: 0 pass, 1 certificate failure, 2 config error, 3 runtime error.
int run_scenario(const std::string& config_path, const std::optional<std::string>& out_dir = {},
                 std::optional<int> snapshot_stride = {},
                 const std::optional<std::vector<std::string>>& verify = {}, bool quiet = false);

} // namespace droplet
