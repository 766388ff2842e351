#include "doctest.h"
#include "droplet/minmove.hpp"
#include "droplet/radial.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace droplet;

namespace {

int last_wet(const Mask& m, const Domain& d)
{
    int last = -1;
    for (int k = 0; k < d.size(); ++k)
        if (m.test(k))
            last = k;
    return last;
}

} // namespace

TEST_SUITE("minmove") {

TEST_CASE("schedule forcing and validation")
{
    Schedule s{{0.0, 1.0, 3.0}, {1.0, 2.0, 1.0}, 0.5};
    CHECK(s.forcing(0.5) == doctest::Approx(1.5));
    CHECK(s.forcing(2.0) == doctest::Approx(1.5));
    auto pts = s.points();
    REQUIRE(pts.size() == 7);
    CHECK(pts.back().first == doctest::Approx(3.0));
    CHECK_THROWS_AS((Schedule{{0.0, 0.0}, {1.0, 1.0}, 0.1}.validate()), InvalidArgument);
    CHECK_THROWS_AS((Schedule{{0.0, 1.0}, {1.0, -1.0}, 0.1}.validate()), InvalidArgument);
}

TEST_CASE("1d step advances to the analytic optimum")
{
    Domain d = Domain::halfline(400, 0.01);
    HysteresisParams p{0.21, 0.2};
    StepResult r = step(Mask::inner_boundary(d), 1.0, d, p);
    double R = d.center(last_wet(r.mask, d))[0] + 0.5 * d.h();
    CHECK(std::abs(R - halfline_optimum(1.0, 1.21)) <= d.h());
}

TEST_CASE("1d step recedes to the other branch")
{
    Domain d = Domain::halfline(400, 0.01);
    HysteresisParams p{0.21, 0.19};
    Mask prev = Mask::rasterize(d, [](double x, double) { return x < 2.0; });
    StepResult r = step(prev, 1.0, d, p);
    double R = d.center(last_wet(r.mask, d))[0] + 0.5 * d.h();
    CHECK(std::abs(R - halfline_optimum(1.0, 0.81)) <= d.h());
}

TEST_CASE("inside the pinning interval nothing moves")
{
    Domain d = Domain::halfline(400, 0.01);
    HysteresisParams p{0.3, 0.3};
    Mask prev = Mask::rasterize(d, [](double x, double) { return x < 1.0; });
    StepResult r = step(prev, 1.0, d, p);
    CHECK(r.mask == prev);
    CHECK(r.flips == 0);
}

TEST_CASE("step matches exhaustive search on small boxes")
{
    std::mt19937_64 rng(21);
    for (int inst = 0; inst < 15; ++inst) {
        std::vector<bool> obs(36, false);
        obs[2 * 6 + 2] = true;
        Domain d = Domain::from_obstacle(2, 6, 6, 0.125, 0.0, 0.0, obs);
        std::vector<int> cand;
        for (int k = 0; k < d.size(); ++k)
            if (d.kind(k) == CellKind::Interior)
                cand.push_back(k);
        REQUIRE(cand.size() <= 18);
        Mask prev = Mask::inner_boundary(d);
        for (int c : cand)
            if (rng() & 1u)
                prev.set(c);
        double F = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
        HysteresisParams p{0.1 + 0.3 * (inst % 3) / 2.0, 0.25};
        StepOptions so;
        so.guard_outer = false;
        double a = step(prev, F, d, p, so).augmented;
        double b = brute_force_step(prev, F, d, p, cand).augmented;
        CHECK(a <= b + 1e-9 * std::abs(b));
    }
}

TEST_CASE("a minimizer is a fixed point of its own step")
{
    Domain d = Domain::box_with_disks(64, 64, 0.125, {{0.0, 0.0, 1.0}});
    HysteresisParams p{0.2, 0.2};
    StepResult r = step(Mask::inner_boundary(d), 2.0, d, p);
    StepResult again = step(r.mask, 2.0, d, p);
    CHECK(again.mask == r.mask);
}

TEST_CASE("bracket orders the two minimizers")
{
    Domain d = Domain::box_with_disks(64, 64, 0.125, {{0.0, 0.0, 1.0}});
    HysteresisParams p{0.2, 0.2};
    Bracket b = bracket_minimizers(Mask::inner_boundary(d), 1.8, d, p);
    CHECK(b.minimal.mask.subset_of(b.maximal.mask));
    CHECK(b.minimal.augmented == doctest::Approx(b.maximal.augmented).epsilon(1e-9));
}

TEST_CASE("box too small is reported")
{
    Domain d = Domain::box_with_disks(24, 24, 0.125, {{0.0, 0.0, 1.0}});
    CHECK_THROWS_AS(step(Mask::inner_boundary(d), 6.0, d, {0.1, 0.1}), DomainTooSmall);
}

TEST_CASE("run is deterministic and writes the trace schema")
{
    Domain d = Domain::box_with_disks(64, 64, 0.125, {{0.0, 0.0, 1.0}});
    HysteresisParams p{0.2, 0.2};
    Schedule s{{0.0, 1.0}, {1.0, 1.6}, 0.1};
    Mask init = Mask::disks(d, {{0.0, 0.0, zeta(1.0)}});
    Trace a = run(s, init, d, p);
    Trace b = run(s, init, d, p);
    REQUIRE(a.records.size() == 11);
    for (std::size_t k = 0; k < a.records.size(); ++k)
        CHECK(a.records[k].mask == b.records[k].mask);
    for (std::size_t k = 1; k < a.records.size(); ++k)
        CHECK(a.records[k - 1].mask.subset_of(a.records[k].mask));

    auto path = (std::filesystem::temp_directory_path() / "droplet_trace.csv").string();
    write_trace_csv(path, a);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "t,F,area,D,J,P,diss_increment,cumulative_dissbar,flips,jump_flag");
    std::filesystem::remove(path);
}

}
