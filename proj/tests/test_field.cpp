#include "doctest.h"
#include "droplet/field.hpp"

#include <cmath>
#include <filesystem>

using namespace droplet;

TEST_SUITE("field") {

TEST_CASE("annulus profile approaches the logarithm")
{
    double h = 1.0 / 16, F = 1.5, R = 2.5;
    Domain d = Domain::box_with_disks(128, 128, h, {{0.0, 0.0, 1.0}});
    Mask m = Mask::disks(d, {{0.0, 0.0, R}});
    Profile p = solve_harmonic(d, m, F);
    CHECK(p.residual < 1e-8);
    double worst = 0.0;
    for (int k = 0; k < d.size(); ++k) {
        if (!m.test(k))
            continue;
        auto c = d.center(k);
        double r = std::hypot(c[0], c[1]);
        double exact = std::clamp(F * std::log(R / r) / std::log(R), 0.0, F);
        worst = std::max(worst, std::abs(p.values[k] - exact));
    }
    CHECK(worst < 0.1 * F);

    EnergyReport e = energy_report(p, d);
    double D = 2.0 * M_PI * F * F / std::log(R);
    CHECK(e.dirichlet == doctest::Approx(D).epsilon(0.05));
    CHECK(e.pressure == doctest::Approx(e.dirichlet / F));
    CHECK(e.j_energy == doctest::Approx(e.dirichlet + e.volume));
}

TEST_CASE("values are zero off the mask and F on the ring")
{
    Domain d = Domain::box_with_disks(48, 48, 0.125, {{0.0, 0.0, 1.0}});
    Mask m = Mask::disks(d, {{0.0, 0.0, 2.0}});
    Profile p = solve_harmonic(d, m, 2.0);
    for (int k = 0; k < d.size(); ++k) {
        if (d.kind(k) == CellKind::InnerBoundary)
            CHECK(p.values[k] == 2.0);
        else if (!m.test(k))
            CHECK(p.values[k] == 0.0);
        else
            CHECK((p.values[k] >= 0.0 && p.values[k] <= 2.0));
    }
}

TEST_CASE("half-line profile is linear")
{
    Domain d = Domain::halfline(200, 0.01);
    Mask m = Mask::rasterize(d, [](double x, double) { return x < 0.5; });
    Profile p = solve_harmonic(d, m, 1.0);
    EnergyReport e = energy_report(p, d);
    // Wet cells 1..50 at x = 0..0.49, zero at the first dry cell x = 0.5.
    CHECK(e.dirichlet == doctest::Approx(1.0 / 0.5).epsilon(1e-9));
    auto s = raw_slope_samples(p, d);
    REQUIRE(s.size() == 1);
    CHECK(s[0].slope == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("energy difference identity for nested masks")
{
    Domain d = Domain::box_with_disks(64, 64, 0.1, {{0.0, 0.0, 1.0}});
    Profile small = solve_harmonic(d, Mask::disks(d, {{0.0, 0.0, 1.6}}), 1.0);
    Profile large = solve_harmonic(d, Mask::disks(d, {{0.0, 0.0, 2.2}}), 1.0);
    EnergyDifference ed = energy_difference_check(small, large, d);
    CHECK(ed.ok);
    CHECK(ed.lhs > 0.0);
}

TEST_CASE("smoothed slope on a circle sits near the analytic value")
{
    double h = 1.0 / 16, F = 1.0, R = 2.0;
    Domain d = Domain::box_with_disks(128, 128, h, {{0.0, 0.0, 1.0}});
    Profile p = solve_harmonic(d, Mask::disks(d, {{0.0, 0.0, R}}), F);
    auto s = boundary_slope_samples(p, d);
    REQUIRE(!s.empty());
    double mean = 0.0;
    for (const auto& v : s)
        mean += v.slope;
    mean /= s.size();
    CHECK(mean == doctest::Approx(F / (R * std::log(R))).epsilon(0.15));
}

TEST_CASE("profile binary round trip")
{
    Domain d = Domain::box_with_disks(32, 32, 0.125, {{0.0, 0.0, 1.0}});
    Profile p = solve_harmonic(d, Mask::disks(d, {{0.0, 0.0, 1.7}}), 1.3);
    auto path = (std::filesystem::temp_directory_path() / "droplet_profile.bin").string();
    write_profile_binary(path, p, d);
    Profile q = read_profile_binary(path, d);
    CHECK(q.values == p.values);
    CHECK(q.mask == p.mask);
    CHECK(q.F == p.F);
    std::filesystem::remove(path);
}

}
