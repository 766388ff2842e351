#include "droplet/verify.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>

namespace droplet {

namespace {

int last_index(const Trace& tr, int last)
{
    int n = static_cast<int>(tr.records.size());
    return last < 0 ? n : std::min(last, n);
}

void finalize(Certificate& c)
{
    c.worst_residual = 0.0;
    c.argmax = -1;
    for (std::size_t k = 0; k < c.series.size(); ++k) {
        if (c.argmax < 0 || c.series[k] > c.worst_residual) {
            c.worst_residual = c.series[k];
            c.argmax = static_cast<int>(k);
        }
    }
    c.pass = c.worst_residual <= c.tolerance;
}

} // namespace

Certificate check_stability(const Trace& tr, const StabilityOptions& opt)
{
    Certificate c;
    c.name = "stability";
    c.tolerance = opt.tol_s;
    if (tr.records.empty()) {
        c.note = "empty trace";
        return c;
    }
    const auto& p = tr.params;
    double hi = p.q_plus(), lo = p.q_minus();
    long total = 0, outside = 0, beyond = 0;
    int last = last_index(tr, opt.last);
    c.series.assign(tr.records.size(), 0.0);
    for (int k = opt.first; k < last; ++k) {
        Profile prof = tr.records[k].profile(tr.domain);
        auto samples = boundary_slope_samples(prof, tr.domain, opt.slope);
        double worst = 0.0;
        for (const auto& s : samples) {
            double s2 = s.slope * s.slope;
            double v = std::max({0.0, s2 - hi, lo - s2});
            if (v > 0.0)
                ++outside;
            if (v > opt.tol_s)
                ++beyond;
            worst = std::max(worst, v);
        }
        total += static_cast<long>(samples.size());
        c.series[k] = worst;
    }
    finalize(c);
    c.stats["samples"] = static_cast<double>(total);
    c.stats["outside_interval"] = static_cast<double>(outside);
    c.stats["outside_tolerance"] = static_cast<double>(beyond);
    return c;
}

namespace {

// Bitsets restricted to the cells whose status changes somewhere in the trace.
std::vector<std::vector<std::uint64_t>> compress(const Trace& tr)
{
    const auto& recs = tr.records;
    Mask any = recs.front().mask, all = recs.front().mask;
    for (const auto& r : recs) {
        any = any | r.mask;
        all = all & r.mask;
    }
    Mask active = any.minus(all);
    std::vector<int> cells;
    for (int k = 0; k < active.size(); ++k)
        if (active.test(k))
            cells.push_back(k);
    std::size_t words = (cells.size() + 63) / 64;
    std::vector<std::vector<std::uint64_t>> out(recs.size(), std::vector<std::uint64_t>(words, 0));
    for (std::size_t r = 0; r < recs.size(); ++r)
        for (std::size_t q = 0; q < cells.size(); ++q)
            if (recs[r].mask.test(cells[q]))
                out[r][q >> 6] |= std::uint64_t{1} << (q & 63);
    return out;
}

long minus_count(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b)
{
    long s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::popcount(a[i] & ~b[i]);
    return s;
}

} // namespace

Certificate check_dissipation_inequality(const Trace& tr, double tol)
{
    Certificate c;
    c.name = "dissipation_inequality";
    c.tolerance = tol;
    const auto& recs = tr.records;
    int n = static_cast<int>(recs.size());
    c.series.assign(recs.size(), 0.0);
    if (n < 2) {
        c.vacuous = true;
        c.pass = true;
        c.note = "fewer than two records";
        return c;
    }
    if (n > 2000)
        c.note = "more than 2000 records: pairs limited to adjacent and from-start";
    double scale = 0.0;
    for (const auto& r : recs)
        scale = std::max(scale, std::abs(r.energy.j_energy));
    scale = std::max(scale, 1e-300);
    std::vector<double> wg(n, 0.0), wt(n, 0.0);
    for (int m = 0; m + 1 < n; ++m) {
        double r = recs[m + 1].F / recs[m].F;
        wg[m + 1] = wg[m] + recs[m].energy.dirichlet * (r * r - 1.0);
        double dF = recs[m + 1].F - recs[m].F;
        wt[m + 1] = wt[m] + dF * (recs[m].energy.pressure + recs[m + 1].energy.pressure);
    }
    auto bits = compress(tr);
    double v = tr.domain.cell_measure();
    const auto& p = tr.params;
    double worst_trap = -std::numeric_limits<double>::infinity();
    double worst_trap_adj = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        double worst = -std::numeric_limits<double>::infinity();
        for (int l = k + 1; l < n; ++l) {
            if (n > 2000 && l != k + 1 && k != 0)
                continue;
            double dk = v * (p.mu_plus * minus_count(bits[l], bits[k]) +
                             p.mu_minus * minus_count(bits[k], bits[l]));
            double dj = recs[k].energy.j_energy - recs[l].energy.j_energy;
            double res = (dk - (dj + wg[l] - wg[k])) / scale;
            double rt = (dk - (dj + wt[l] - wt[k])) / scale;
            worst = std::max(worst, res);
            worst_trap = std::max(worst_trap, rt);
            if (l == k + 1)
                worst_trap_adj = std::max(worst_trap_adj, rt);
        }
        c.series[k] = k + 1 < n ? worst : 0.0;
    }
    finalize(c);
    c.stats["worst_trapezoid"] = worst_trap;
    c.stats["worst_trapezoid_adjacent"] = worst_trap_adj;
    c.stats["scale"] = scale;
    return c;
}

Certificate check_energy_balance(const Trace& tr, double tol)
{
    Certificate c;
    c.name = "energy_balance";
    c.tolerance = tol;
    const auto& recs = tr.records;
    int n = static_cast<int>(recs.size());
    c.series.assign(recs.size(), 0.0);
    if (n < 2) {
        c.vacuous = true;
        c.pass = true;
        return c;
    }
    double J0 = recs.front().energy.j_energy;
    double work = 0.0;
    std::vector<double> raw(n, 0.0);
    bool grow = true, shrink = true;
    for (int m = 0; m + 1 < n; ++m) {
        double dF = recs[m + 1].F - recs[m].F;
        work += dF * (recs[m].energy.pressure + recs[m + 1].energy.pressure);
        raw[m + 1] = J0 - recs[m + 1].energy.j_energy + work - recs[m + 1].cumulative_dissbar;
        grow = grow && recs[m].mask.subset_of(recs[m + 1].mask);
        shrink = shrink && recs[m + 1].mask.subset_of(recs[m].mask);
    }
    double dissbar = recs.back().cumulative_dissbar;
    double den = dissbar > 1e-12 * std::abs(J0) ? dissbar : std::max(std::abs(J0), 1e-300);
    for (int k = 0; k < n; ++k)
        c.series[k] = std::abs(raw[k]) / den;
    c.worst_residual = c.series.back();
    c.argmax = n - 1;
    c.pass = c.worst_residual <= c.tolerance;
    c.stats["residual"] = raw.back();
    c.stats["dissbar"] = dissbar;
    c.stats["work"] = work;
    c.stats["denominator"] = den;
    if (grow || shrink) {
        double direct = diss(recs.front().mask, recs.back().mask, tr.domain, tr.params);
        c.stats["telescoping_gap"] = std::abs(direct - dissbar);
        c.note = "monotone trace";
    } else {
        c.note = "non-monotone trace: step-partition dissbar is a lower bound (one-sided)";
    }
    return c;
}

Certificate check_gronwall(const Trace& tr, double tol)
{
    Certificate c;
    c.name = "gronwall";
    c.tolerance = tol;
    const auto& recs = tr.records;
    int n = static_cast<int>(recs.size());
    c.series.assign(recs.size(), 0.0);
    if (n == 0)
        return c;
    double J0 = recs.front().energy.j_energy;
    double scale = std::max(std::abs(J0), 1e-300);
    double mu = std::min(tr.params.mu_plus, tr.params.mu_minus);
    double v = tr.domain.cell_measure();
    double growth = 1.0, bv = 0.0;
    for (int k = 1; k < n; ++k) {
        double r = recs[k].F / recs[k - 1].F;
        growth *= std::max(r * r, 1.0);
        bv += v * (count_minus(recs[k].mask, recs[k - 1].mask) + count_minus(recs[k - 1].mask, recs[k].mask));
        double lhs = recs[k].energy.j_energy + mu * bv;
        c.series[k] = (lhs - J0 * growth) / scale;
    }
    finalize(c);
    c.stats["bv"] = bv;
    return c;
}

Certificate check_dynamic_slope(const Trace& tr, const DynamicSlopeOptions& opt)
{
    Certificate c;
    c.name = "dynamic_slope";
    c.tolerance = 1.0 - opt.fraction;
    const auto& recs = tr.records;
    const Domain& d = tr.domain;
    int n = static_cast<int>(recs.size());
    c.series.assign(recs.size(), 0.0);
    double qa = tr.params.q_plus(), qr = tr.params.q_minus();
    long na = 0, nr = 0, ia = 0, ir = 0;
    int last = std::min(last_index(tr, opt.last), n - 1);
    int nb[8];
    for (int k = std::max(0, opt.first); k < last; ++k) {
        const Mask& a = recs[k].mask;
        const Mask& b = recs[k + 1].mask;
        if (a == b)
            continue;
        Mask added = b.minus(a), removed = a.minus(b);
        long sa = 0, sr = 0, oa = 0, orr = 0;
        for (int side = 0; side < 2; ++side) {
            if ((side == 0 && opt.sample == DynamicSlopeOptions::Sample::After) ||
                (side == 1 && opt.sample == DynamicSlopeOptions::Sample::Before))
                continue;
            Profile prof = recs[k + side].profile(d);
            for (const auto& s : boundary_slope_samples(prof, d, opt.slope)) {
                bool adv = added.test(s.cell), rec = removed.test(s.cell);
                int cnt = d.neighbors8(s.cell, nb);
                for (int q = 0; q < cnt; ++q) {
                    adv = adv || added.test(nb[q]);
                    rec = rec || removed.test(nb[q]);
                }
                double s2 = s.slope * s.slope;
                if (adv && !rec) {
                    ++sa;
                    if (std::abs(s2 / qa - 1.0) > opt.tol_d)
                        ++oa;
                } else if (rec && !adv) {
                    ++sr;
                    if (std::abs(s2 / qr - 1.0) > opt.tol_d)
                        ++orr;
                }
            }
        }
        na += sa;
        nr += sr;
        ia += sa - oa;
        ir += sr - orr;
        double fa = sa ? double(oa) / sa : 0.0, fr = sr ? double(orr) / sr : 0.0;
        c.series[k + 1] = std::max(fa, fr);
    }
    double out_a = na ? 1.0 - double(ia) / na : 0.0;
    double out_r = nr ? 1.0 - double(ir) / nr : 0.0;
    c.worst_residual = std::max(out_a, out_r);
    c.argmax = -1;
    c.vacuous = na == 0 && nr == 0;
    c.pass = c.worst_residual <= c.tolerance;
    c.stats["advancing_samples"] = static_cast<double>(na);
    c.stats["receding_samples"] = static_cast<double>(nr);
    c.stats["advancing_in_band"] = na ? double(ia) / na : 1.0;
    c.stats["receding_in_band"] = nr ? double(ir) / nr : 1.0;
    if (c.vacuous)
        c.note = "no moving boundary cells";
    return c;
}

const char* relation_name(Relation r)
{
    switch (r) {
    case Relation::Equal:
        return "equal";
    case Relation::RightContainsLeft:
        return "right_contains_left";
    case Relation::LeftContainsRight:
        return "left_contains_right";
    default:
        return "incomparable";
    }
}

std::vector<JumpRecord> jump_report(const Trace& tr, double threshold, const StepOptions& opt)
{
    const Domain& d = tr.domain;
    if (threshold <= 0.0)
        threshold = 10.0 * d.cell_measure();
    std::vector<JumpRecord> out;
    const auto& recs = tr.records;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        const Mask& a = recs[k].mask;
        const Mask& b = recs[k + 1].mask;
        double m = (count_minus(a, b) + count_minus(b, a)) * d.cell_measure();
        if (!(m > threshold))
            continue;
        JumpRecord j;
        j.t = recs[k + 1].t;
        j.index = static_cast<int>(k + 1);
        j.left_mask = a;
        j.right_mask = b;
        for (auto& comp : connected_components(a | b, d)) {
            Mask l = a & comp, r = b & comp;
            Relation rel = l == r ? Relation::Equal
                           : l.subset_of(r) ? Relation::RightContainsLeft
                           : r.subset_of(l) ? Relation::LeftContainsRight
                                            : Relation::Incomparable;
            j.per_component_ordering.emplace_back(std::move(comp), rel);
        }
        StepOptions o = opt;
        double F = recs[k + 1].F;
        o.order = F >= recs[k].F ? Order::GrowFirst : Order::ShrinkFirst;
        j.reproduced = step(a, F, d, tr.params, o).mask == b;
        j.fixed_point = step_from(a, b, F, d, tr.params, o).flips == 0;
        out.push_back(std::move(j));
    }
    return out;
}

RegularityProxies regularity_proxies(const Profile& p, const Domain& d, const RegularityOptions& opt)
{
    RegularityProxies out;
    const Mask& m = p.mask;
    auto fb = free_boundary_cells(m, d);
    if (fb.empty())
        return out;
    double r = opt.radius_cells;
    int ri = static_cast<int>(std::ceil(r));
    int rj = d.dim() == 2 ? ri : 0;
    std::vector<std::pair<int, int>> ball;
    for (int dj = -rj; dj <= rj; ++dj)
        for (int di = -ri; di <= ri; ++di)
            if (di * di + dj * dj < r * r)
                ball.emplace_back(di, dj);
    int nx = d.nx(), ny = d.ny();
    double h = d.h();
    auto dry = [&](int k) { return !m.test(k) && !d.is_obstacle(k); };
    out.nondegeneracy = std::numeric_limits<double>::infinity();
    std::vector<char> seen(d.size(), 0);
    for (int c : fb) {
        int i = d.ix(c), j = d.iy(c);
        long wet = 0, tot = 0;
        double sup = 0.0;
        for (auto [di, dj] : ball) {
            int a = i + di, b = j + dj;
            if (a < 0 || b < 0 || a >= nx || b >= ny)
                continue;
            int k = b * nx + a;
            if (d.is_obstacle(k))
                continue;
            ++tot;
            if (m.test(k)) {
                ++wet;
                sup = std::max(sup, p.values[k]);
                if (!seen[k]) {
                    seen[k] = 1;
                    // distance to the nearest dry cell within the ball radius
                    double best = std::numeric_limits<double>::infinity();
                    for (auto [ei, ej] : ball) {
                        int x = a + ei, y = b + ej;
                        if (x < 0 || y < 0 || x >= nx || y >= ny)
                            continue;
                        if (dry(y * nx + x))
                            best = std::min(best, std::sqrt(double(ei * ei + ej * ej)));
                    }
                    if (std::isfinite(best))
                        out.lipschitz = std::max(out.lipschitz, p.values[k] / (best * h));
                }
            }
        }
        double frac = tot ? double(wet) / tot : 0.0;
        out.density_min = std::min(out.density_min, frac);
        out.density_max = std::max(out.density_max, frac);
        out.nondegeneracy = std::min(out.nondegeneracy, sup / (r * h));
    }
    return out;
}

Certificate regularity_report(const Trace& tr, const RegularityOptions& opt)
{
    Certificate c;
    c.name = "regularity";
    c.tolerance = 0.0;
    RegularityOptions o = opt;
    if (o.lipschitz_max <= 0.0)
        o.lipschitz_max = 1.2 * std::sqrt(tr.params.q_plus() + 0.15);
    if (o.nondegeneracy_min <= 0.0)
        o.nondegeneracy_min = o.c;
    c.series.assign(tr.records.size(), 0.0);
    double lip = 0.0, nd = std::numeric_limits<double>::infinity(), dmin = 1.0, dmax = 0.0;
    for (std::size_t k = 0; k < tr.records.size(); ++k) {
        auto q = regularity_proxies(tr.records[k].profile(tr.domain), tr.domain, o);
        double v = std::max({0.0, q.lipschitz - o.lipschitz_max, o.nondegeneracy_min - q.nondegeneracy,
                             o.c - q.density_min, q.density_max - (1.0 - o.c)});
        c.series[k] = v;
        lip = std::max(lip, q.lipschitz);
        nd = std::min(nd, q.nondegeneracy);
        dmin = std::min(dmin, q.density_min);
        dmax = std::max(dmax, q.density_max);
    }
    finalize(c);
    c.stats["lipschitz_max"] = lip;
    c.stats["nondegeneracy_min"] = nd;
    c.stats["density_min"] = dmin;
    c.stats["density_max"] = dmax;
    return c;
}

void write_certificates_json(const std::string& path, const std::vector<Certificate>& certs,
                             const std::string& series_dir)
{
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& c : certs) {
        nlohmann::json j;
        j["name"] = c.name;
        j["pass"] = c.pass;
        j["vacuous"] = c.vacuous;
        j["tolerance"] = c.tolerance;
        j["worst_residual"] = c.worst_residual;
        j["argmax"] = c.argmax;
        j["stats"] = c.stats;
        if (!c.note.empty())
            j["note"] = c.note;
        if (!series_dir.empty() && !c.series.empty()) {
            std::filesystem::path sp = std::filesystem::path(series_dir) / (c.name + "_series.csv");
            std::ofstream f(sp);
            f << "index,residual\n" << std::setprecision(12);
            for (std::size_t k = 0; k < c.series.size(); ++k)
                f << k << ',' << c.series[k] << '\n';
            j["series"] = sp.filename().string();
        }
        doc.push_back(std::move(j));
    }
    std::ofstream f(path);
    if (!f)
        throw Error("cannot write " + path);
    f << doc.dump(2) << '\n';
}

} // namespace droplet
