#include "doctest.h"
#include "droplet/submodular.hpp"

#include <cmath>
#include <random>

using namespace droplet;

namespace {

using SetFn = std::function<double(const std::vector<bool>&)>;

ChainOracle chain(int n, const SetFn& f)
{
    return [n, f](const std::vector<int>& order, std::vector<double>& prefix) {
        std::vector<bool> in(n, false);
        for (int k = 0; k < n; ++k) {
            in[order[k]] = true;
            prefix[k] = f(in);
        }
    };
}

double brute_min(int n, const SetFn& f)
{
    double best = 0.0;
    for (unsigned s = 0; s < (1u << n); ++s) {
        std::vector<bool> in(n);
        for (int i = 0; i < n; ++i)
            in[i] = (s >> i) & 1u;
        best = std::min(best, f(in));
    }
    return best;
}

} // namespace

TEST_SUITE("submodular") {

TEST_CASE("modular function picks the negative weights")
{
    std::vector<double> w{1.0, -2.0, 0.5, -0.1};
    SetFn f = [&](const std::vector<bool>& in) {
        double s = 0.0;
        for (int i = 0; i < 4; ++i)
            s += in[i] ? w[i] : 0.0;
        return s;
    };
    auto r = minimize_submodular(4, chain(4, f));
    CHECK(r.value == doctest::Approx(-2.1));
    CHECK(r.set == std::vector<int>{1, 3});
}

TEST_CASE("random cut plus modular terms match exhaustive search")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 4 + static_cast<int>(rng() % 9);
        std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
        std::vector<double> m(n);
        for (int i = 0; i < n; ++i) {
            m[i] = 2.0 * U(rng) - 1.2;
            for (int j = i + 1; j < n; ++j)
                if (U(rng) < 0.4)
                    w[i][j] = w[j][i] = U(rng);
        }
        SetFn f = [&](const std::vector<bool>& in) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                s += in[i] ? m[i] : 0.0;
                for (int j = i + 1; j < n; ++j)
                    if (in[i] != in[j])
                        s += w[i][j];
            }
            return s;
        };
        auto r = minimize_submodular(n, chain(n, f), {}, 1e-12);
        double exact = brute_min(n, f);
        CHECK(r.value == doctest::Approx(exact).epsilon(1e-9));
        CHECK(r.lower <= r.value + 1e-12);
        std::vector<bool> in(n, false);
        for (int i : r.set)
            in[i] = true;
        CHECK(f(in) == doctest::Approx(r.value));
    }
}

TEST_CASE("concave of cardinality minus modular")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 10;
        std::vector<double> m(n);
        for (auto& v : m)
            v = std::uniform_real_distribution<double>(0.0, 1.5)(rng);
        SetFn f = [&](const std::vector<bool>& in) {
            double card = 0.0, s = 0.0;
            for (int i = 0; i < n; ++i)
                if (in[i]) {
                    card += 1.0;
                    s += m[i];
                }
            return 2.0 * std::sqrt(card) - s;
        };
        auto r = minimize_submodular(n, chain(n, f), {}, 1e-12);
        CHECK(r.value == doctest::Approx(brute_min(n, f)).epsilon(1e-9));
    }
}

TEST_CASE("empty set is optimal for a non-negative function")
{
    SetFn f = [](const std::vector<bool>& in) {
        double s = 0.0;
        for (bool b : in)
            s += b;
        return std::sqrt(s);
    };
    auto r = minimize_submodular(6, chain(6, f));
    CHECK(r.set.empty());
    CHECK(r.value == 0.0);
}

}
