#include "doctest.h"
#include "droplet/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace droplet;

namespace {

const char* kBase = R"({
  "version": 1,
  "name": "tiny",
  "domain": {"dim": 2, "cells": [64, 64], "cells_per_unit": 8,
             "obstacles": [{"type": "disk", "center": [0, 0], "radius": 1}]},
  "params": {"mu_plus": 0.2, "mu_minus": 0.2},
  "schedule": {"knots": [[0, 1], [1, 1.5]], "delta": 0.25},
  "initial": {"type": "radial", "lambda": 1}
})";

std::string patched(const std::string& from, const std::string& to)
{
    std::string s = kBase;
    auto at = s.find(from);
    REQUIRE(at != std::string::npos);
    return s.replace(at, from.size(), to);
}

std::string error_of(const std::string& text)
{
    try {
        parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::filesystem::path scratch()
{
    auto dir = std::filesystem::temp_directory_path() / "droplet_scenario_test";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_SUITE("scenario") {

TEST_CASE("valid file parses with defaults")
{
    Scenario sc = parse_scenario(kBase);
    CHECK(sc.name == "tiny");
    CHECK(sc.h == doctest::Approx(0.125));
    CHECK(sc.out_dir == "out/tiny");
    CHECK(sc.is_radial());
    CHECK(sc.certificates.size() == 7);
    Domain d = sc.domain();
    Mask m = sc.initial_mask(d);
    CHECK(m.count() > Mask::inner_boundary(d).count());
}

TEST_CASE("field diagnostics")
{
    CHECK(error_of(patched("\"delta\": 0.25", "\"delta\": 0.25, \"dt\": 1")) == "schedule.dt: unknown field");
    CHECK(error_of(patched("\"mu_minus\": 0.2", "\"mu_minus\": 1.5")).rfind("params:", 0) == 0);
    CHECK(error_of(patched("\"version\": 1", "\"version\": 3")).rfind("version:", 0) == 0);
    CHECK(error_of(patched("\"delta\": 0.25", "\"delta\": 0")) == "schedule.delta: must be positive");
    CHECK(error_of(patched("[1, 1.5]", "[1, -1]")).rfind("schedule", 0) == 0);
    CHECK(error_of(patched("\"cells_per_unit\": 8", "\"cells_per_unit\": 8, \"h\": 0.1")) ==
          "domain: give exactly one of h and cells_per_unit");
    CHECK(error_of(patched("\"radius\": 1}", "\"radius\": 3.5}")).find("10 cells") != std::string::npos);
    CHECK(error_of(patched("\"type\": \"disk\"", "\"type\": \"blob\"")) ==
          "domain.obstacles[0].type: expected \"disk\" or \"segment\"");
    CHECK(error_of(patched("\"params\": {\"mu_plus\": 0.2, \"mu_minus\": 0.2},", "")) ==
          "params: required field missing");
    CHECK(error_of(patched("}\n}", "")).find("malformed JSON") == 0);
}

TEST_CASE("segment obstacles and 1d domains")
{
    std::string capsule = patched(R"({"type": "disk", "center": [0, 0], "radius": 1})",
                                  R"({"type": "segment", "from": [-1, 0], "to": [1, 0], "radius": 0.5})");
    auto at = capsule.find(R"("lambda": 1)");
    Scenario sc = parse_scenario(capsule.replace(at, 11, R"("radius": 1)"));
    Domain cd = sc.domain();
    CHECK(!sc.is_radial());
    CHECK(cd.is_obstacle(cd.index(32 + 6, 32)));
    CHECK(!cd.is_obstacle(cd.index(32, 32 + 6)));
    CHECK(sc.initial_mask(cd).count() > Mask::inner_boundary(cd).count());
    CHECK(error_of(patched(R"({"type": "disk", "center": [0, 0], "radius": 1})",
                           R"({"type": "segment", "from": [-1, 0], "to": [1, 0], "radius": 0.5})")) ==
          "initial.lambda: needs disk obstacles only");

    Scenario line = parse_scenario(R"({"version": 1, "name": "line",
        "domain": {"dim": 1, "cells": [300], "h": 0.01},
        "params": {"mu_plus": 0.21, "mu_minus": 0.2},
        "schedule": {"knots": [[0, 1], [1, 1]], "delta": 0.5},
        "initial": {"type": "radial", "radius": 0.5}})");
    Domain d = line.domain();
    CHECK(d.dim() == 1);
    CHECK(measure(line.initial_mask(d), d) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("mask file initial condition resolves against the config directory")
{
    auto dir = scratch();
    Scenario sc = parse_scenario(kBase);
    Domain d = sc.domain();
    Mask m = Mask::disks(d, {{0.0, 0.0, 1.6}});
    write_mask_pgm((dir / "start.pgm").string(), m, d, 0.0, 1.0);
    std::ofstream((dir / "cfg.json")) << patched(R"({"type": "radial", "lambda": 1})",
                                                 R"({"type": "mask_file", "path": "start.pgm"})");
    Scenario from_file = load_scenario((dir / "cfg.json").string());
    CHECK(from_file.initial_mask(d) == m);
    std::filesystem::remove_all(dir);
}

TEST_CASE("radial comparison flags motion while pinned")
{
    HysteresisParams p{0.2, 0.2};
    double a0 = M_PI * (zeta(1.0) * zeta(1.0) - 1.0);
    std::vector<std::array<double, 3>> rows{{0.0, 1.0, a0}, {0.1, 1.02, a0}, {0.2, 1.04, a0}};
    RadialComparison ok = compare_radial(rows, 0.1, p);
    CHECK(ok.pass);
    CHECK(ok.pinned_moves == 0);
    rows[2][2] += 0.5;
    RadialComparison moved = compare_radial(rows, 0.1, p);
    CHECK(!moved.pass);
    CHECK(moved.pinned_moves == 1);
}

TEST_CASE("run_scenario exit codes and artifacts")
{
    auto dir = scratch();
    std::ofstream(dir / "bad.json") << patched("\"mu_minus\": 0.2", "\"mu_minus\": 1.5");
    CHECK(run_scenario((dir / "bad.json").string(), {}, {}, {}, true) == 2);
    CHECK(run_scenario((dir / "missing.json").string(), {}, {}, {}, true) == 2);

    std::ofstream(dir / "big.json") << patched("[1, 1.5]", "[1, 9]");
    CHECK(run_scenario((dir / "big.json").string(), (dir / "big").string(), {}, {}, true) == 3);

    std::ofstream(dir / "ok.json") << kBase;
    auto out = dir / "out";
    int rc = run_scenario((dir / "ok.json").string(), out.string(), 2,
                          std::vector<std::string>{"dissipation_inequality", "gronwall", "radial"}, true);
    CHECK(rc == 0);
    CHECK(std::filesystem::exists(out / "trace.csv"));
    CHECK(std::filesystem::exists(out / "certificates.json"));
    CHECK(std::filesystem::exists(out / "radial.csv"));
    CHECK(std::filesystem::exists(out / "snapshots" / "mask_00000.pgm"));
    CHECK(std::filesystem::exists(out / "snapshots" / "mask_00004.pgm"));
    CHECK(read_trace_areas((out / "trace.csv").string()).size() == 5);
    std::filesystem::remove_all(dir);
}

}
