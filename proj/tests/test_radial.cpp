#include "doctest.h"
#include "droplet/minmove.hpp"
#include "droplet/radial.hpp"

#include <cmath>

using namespace droplet;

TEST_SUITE("radial") {

TEST_CASE("zeta inverts R ln R")
{
    for (double R : {1.0001, 1.5, std::exp(1.0), 10.0, 100.0})
        CHECK(std::abs(zeta(R * std::log(R)) - R) <= 1e-10 * R);
    CHECK_THROWS(zeta(-1.0));
}

TEST_CASE("half-line optimum")
{
    CHECK(halfline_optimum(1.0, 1.21) == doctest::Approx(1.0 / 1.1));
    CHECK(halfline_optimum(2.0, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("profile is F on the obstacle and zero at R")
{
    RadialProfile u = radial_profile(1.0, 2.0);
    CHECK(u(1.0) == doctest::Approx(2.0));
    CHECK(u(u.R) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(u.R * std::log(u.R) == doctest::Approx(2.0));
}

TEST_CASE("stable region is the pinning interval")
{
    HysteresisParams p{0.2, 0.2};
    double R = 2.0;
    double F_lo = std::sqrt(0.8) * R * std::log(R), F_hi = std::sqrt(1.2) * R * std::log(R);
    CHECK(in_region_S({R, 0.5 * (F_lo + F_hi), 1.0}, p));
    CHECK(!in_region_S({R, 1.01 * F_hi, 1.0}, p));
    CHECK(!in_region_S({R, 0.99 * F_lo, 1.0}, p));
}

TEST_CASE("loop: pinned, advancing, pinned, receding")
{
    HysteresisParams p{0.2, 0.2};
    Schedule s{{0.0, 1.0, 2.0}, {1.0, 2.0, 1.0}, 0.01};
    double R0 = zeta(1.0);
    auto steps = radial_evolve(s, R0, p);
    REQUIRE(steps.size() == 201);
    CHECK(steps.front().regime == Regime::Pinned);

    std::vector<Regime> runs{steps[1].regime};
    for (std::size_t k = 2; k < steps.size(); ++k)
        if (steps[k].regime != runs.back())
            runs.push_back(steps[k].regime);
    CHECK(runs == std::vector<Regime>{Regime::Pinned, Regime::Advancing, Regime::Pinned, Regime::Receding});

    for (const auto& st : steps) {
        CHECK(in_region_S(st.state, p));
        if (st.regime == Regime::Advancing)
            CHECK(st.state.R * std::log(st.state.R) == doctest::Approx(st.state.F / std::sqrt(1.2)));
        if (st.regime == Regime::Receding)
            CHECK(st.state.R * std::log(st.state.R) == doctest::Approx(st.state.F / std::sqrt(0.8)));
    }
    CHECK(std::string(regime_name(Regime::Advancing)) == "advancing");
}

}
