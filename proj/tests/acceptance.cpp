// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include "droplet/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>

#ifndef DROPLET_SCENARIO_DIR
#define DROPLET_SCENARIO_DIR "scenarios"
#endif

using namespace droplet;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail)
{
    if (!pass)
        ++failures;
    std::printf("%s  %2d  %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...)
{
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

Scenario scenario(const char* name)
{
    return load_scenario(std::string(DROPLET_SCENARIO_DIR) + "/" + name + ".json");
}

Trace simulate(const Scenario& sc)
{
    Domain d = sc.domain();
    return run(sc.schedule, sc.initial_mask(d), d, sc.params, sc.run);
}

Scenario refined(Scenario sc, bool halve_delta)
{
    sc.nx *= 2;
    sc.ny *= 2;
    sc.h /= 2.0;
    if (halve_delta)
        sc.schedule.delta /= 2.0;
    return sc;
}

// Traces are expensive; keep them across criteria.
struct Cache {
    std::map<std::string, std::pair<Trace, double>> traces;

    const Trace& get(const std::string& key, const std::function<Scenario()>& make, double* secs = nullptr)
    {
        auto it = traces.find(key);
        if (it == traces.end()) {
            auto t0 = Clock::now();
            Trace tr = simulate(make());
            it = traces.emplace(key, std::make_pair(std::move(tr), since(t0))).first;
        }
        if (secs)
            *secs = it->second.second;
        return it->second.first;
    }
    const Trace& radial(double* secs = nullptr) { return get("radial", [] { return scenario("radial-loop"); }, secs); }
    const Trace& radial_fine(double* secs = nullptr)
    {
        return get("radial-fine", [] { return refined(scenario("radial-loop"), true); }, secs);
    }
    const Trace& merge(double* secs = nullptr) { return get("merge", [] { return scenario("two-droplet-merge"); }, secs); }
};

Mask random_mask(const Domain& d, std::mt19937_64& rng)
{
    Mask m(d);
    for (int k = 0; k < d.size(); ++k)
        if (!d.is_obstacle(k) && (rng() & 1u))
            m.set(k);
    return m;
}

void c1()
{
    auto t0 = Clock::now();
    std::vector<bool> obs(32 * 32, false);
    Domain d = Domain::from_obstacle(2, 32, 32, 1.0 / 32, 0.0, 0.0, obs);
    HysteresisParams p{0.3, 0.2};
    std::mt19937_64 rng(1);
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
        Mask a = random_mask(d, rng), b = random_mask(d, rng), c = random_mask(d, rng);
        if (!triangle_defect(a, b, c, d, p).exact())
            ++bad;
    }
    double s = since(t0);
    report(1, bad == 0 && s < 5.0, "triangle identity", fmt("%d of 10000 inexact, %.2f s", bad, s));
}

void c2()
{
    auto t0 = Clock::now();
    Domain d = Domain::halfline(2000, 1.0 / 1000);
    HysteresisParams p{0.21, 0.2};
    StepResult r = step(Mask::inner_boundary(d), 1.0, d, p);
    double s = since(t0);
    // Boundary sits between the last wet cell and the first dry one.
    int last = -1;
    for (int k = 0; k < d.size(); ++k)
        if (r.mask.test(k))
            last = k;
    double R = d.center(last)[0] + 0.5 * d.h();
    double target = 1.0 / 1.1;
    double err = std::abs(R - target) / d.h();
    report(2, err <= 1.0 && s < 1.0, "1d half-line optimum",
           fmt("R = %.5f, target %.5f, %.2f cells off, %.3f s", R, target, err, s));
}

void c3()
{
    auto t0 = Clock::now();
    std::mt19937_64 rng(7);
    int bad = 0;
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        std::uniform_int_distribution<int> sz(5, 7);
        Domain d;
        std::vector<int> cand;
        while (true) {
            int nx = sz(rng), ny = sz(rng);
            std::vector<bool> obs(nx * ny, false);
            int ox = 1 + static_cast<int>(rng() % (nx - 2)), oy = 1 + static_cast<int>(rng() % (ny - 2));
            obs[oy * nx + ox] = true;
            if ((rng() & 1u) && ox + 1 < nx - 1)
                obs[oy * nx + ox + 1] = true;
            d = Domain::from_obstacle(2, nx, ny, 1.0 / 8, 0.0, 0.0, obs);
            cand.clear();
            for (int k = 0; k < d.size(); ++k)
                if (d.kind(k) == CellKind::Interior)
                    cand.push_back(k);
            if (cand.size() >= 8 && cand.size() <= 18)
                break;
        }
        Mask prev = Mask::inner_boundary(d);
        for (int c : cand)
            if (rng() & 1u)
                prev.set(c);
        double F = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
        std::uniform_real_distribution<double> mu(0.0, 0.5);
        HysteresisParams p{mu(rng), mu(rng)};
        StepOptions so;
        so.guard_outer = false;
        double a = step(prev, F, d, p, so).augmented;
        double b = brute_force_step(prev, F, d, p, cand).augmented;
        double rel = (a - b) / std::abs(b);
        worst = std::max(worst, rel);
        if (rel > 1e-9)
            ++bad;
    }
    double s = since(t0);
    report(3, bad == 0 && s < 120.0, "step() against exhaustive search",
           fmt("%d of 50 above 1e-9, worst %.2e, %.1f s", bad, worst, s));
}

void c4(Cache& cache)
{
    double secs = 0.0;
    const Trace& tr = cache.radial(&secs);
    RadialComparison c = compare_radial(tr);
    report(4, c.pass && secs < 600.0, "radial hysteresis loop",
           fmt("worst error/allowed %.3f, max error %.4f, %d moves while pinned, %.1f s", c.worst_ratio,
               c.max_error, c.pinned_moves, secs));
}

void c5(Cache& cache)
{
    StabilityOptions so;
    so.tol_s = 0.15;
    Certificate r = check_stability(cache.radial(), so);
    Certificate m = check_stability(cache.merge(), so);
    Certificate f = check_stability(cache.radial_fine(), so);
    double n0 = r.stats["outside_tolerance"], n1 = f.stats["outside_tolerance"];
    bool halves = n1 <= 0.5 * n0;
    report(5, r.pass && m.pass && halves, "stability certificate",
           fmt("worst %.3f radial / %.3f merge (tol 0.15); violations %g at h, %g at h/2", r.worst_residual,
               m.worst_residual, n0, n1));
}

void c6(Cache& cache)
{
    Certificate dr = check_dissipation_inequality(cache.radial(), 1e-6);
    Certificate dm = check_dissipation_inequality(cache.merge(), 1e-6);
    Certificate e0 = check_energy_balance(cache.radial(), 0.05);
    Certificate e1 = check_energy_balance(cache.radial_fine(), 0.05);
    bool pass = dr.pass && dm.pass && e0.pass && e1.worst_residual < e0.worst_residual;
    report(6, pass, "dissipation inequality and energy balance",
           fmt("inequality worst %.1e / %.1e; balance %.2e at (h, delta), %.2e at (h/2, delta/2)",
               dr.worst_residual, dm.worst_residual, e0.worst_residual, e1.worst_residual));
}

void c7(Cache& cache)
{
    Certificate r = check_gronwall(cache.radial(), 1e-6);
    Certificate m = check_gronwall(cache.merge(), 1e-6);
    report(7, r.pass && m.pass, "Gronwall bound",
           fmt("worst %.1e radial, %.1e merge", r.worst_residual, m.worst_residual));
}

void c8(Cache& cache)
{
    DynamicSlopeOptions o;
    o.tol_d = 0.15;
    o.fraction = 0.9;
    Certificate c = check_dynamic_slope(cache.radial(), o);
    double adv = c.stats["advancing_in_band"], rec = c.stats["receding_in_band"];
    bool pass = adv >= 0.9 && rec >= 0.9 && c.stats["advancing_samples"] > 0 && c.stats["receding_samples"] > 0;
    report(8, pass, "dynamic slope",
           fmt("advancing %.3f of %g samples, receding %.3f of %g samples in band", adv,
               c.stats["advancing_samples"], rec, c.stats["receding_samples"]));
}

void c9(Cache& cache)
{
    Scenario sc = scenario("two-droplet-merge");
    double secs = 0.0;
    const Trace& tr = cache.merge(&secs);
    auto jumps = jump_report(tr, sc.jump_threshold_cells * tr.domain.cell_measure(), sc.run.step);
    bool stable = !jumps.empty();
    int incomparable = 0, containment = 0;
    for (const auto& j : jumps) {
        StabilityOptions so;
        so.first = j.index;
        so.last = j.index + 1;
        stable = stable && check_stability(tr, so).pass;
        for (const auto& pc : j.per_component_ordering) {
            if (pc.second == Relation::Incomparable)
                ++incomparable;
            else if (pc.second != Relation::Equal)
                ++containment;
        }
    }
    bool pass = jumps.size() == 1 && stable && incomparable == 0 && containment > 0 && secs < 600.0;
    report(9, pass, "merge jump",
           fmt("%zu jump(s), right state %s, %d incomparable component(s), %.1f s", jumps.size(),
               stable ? "stable" : "not stable", incomparable, secs));
}

void c10(Cache& cache)
{
    std::string detail;
    bool pass = true;
    for (const char* name : {"radial-loop", "two-droplet-merge"}) {
        Scenario sc = scenario(name);
        for (auto& t : sc.schedule.times)
            t *= 2.0;
        sc.schedule.delta *= 2.0;
        Trace slow = simulate(sc);
        const Trace& fast = std::string(name) == "radial-loop" ? cache.radial() : cache.merge();
        bool same = slow.records.size() == fast.records.size();
        for (std::size_t k = 0; same && k < fast.records.size(); ++k)
            same = slow.records[k].mask == fast.records[k].mask;
        pass = pass && same;
        detail += fmt("%s%s %s", detail.empty() ? "" : ", ", name, same ? "identical" : "differs");
    }
    report(10, pass, "rate independence", detail);
}

void c11()
{
    double worst = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double R = 1.0001 * std::pow(100.0 / 1.0001, static_cast<double>(i) / (n - 1));
        worst = std::max(worst, std::abs(zeta(R * std::log(R)) - R) / R);
    }
    report(11, worst <= 1e-10, "zeta round trip", fmt("worst relative error %.2e", worst));
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> want;
    for (int i = 1; i < argc; ++i)
        want.insert(std::atoi(argv[i]));
    auto on = [&](int id) { return want.empty() || want.count(id); };

    Cache cache;
    try {
        if (on(1)) c1();
        if (on(2)) c2();
        if (on(3)) c3();
        if (on(11)) c11();
        if (on(4)) c4(cache);
        if (on(7)) c7(cache);
        if (on(8)) c8(cache);
        if (on(9)) c9(cache);
        if (on(10)) c10(cache);
        if (on(6)) c6(cache);
        if (on(5)) c5(cache);
    } catch (const std::exception& e) {
        std::printf("FAIL  error: %s\n", e.what());
        return 1;
    }
    return failures == 0 ? 0 : 1;
}
