#include "droplet/minmove.hpp"

#include "front_stepper.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace droplet {

void Schedule::validate() const
{
    if (times.empty() || times.size() != F.size())
        throw InvalidArgument("schedule needs matching, nonempty time and forcing lists");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(F[i] > 0.0) || !std::isfinite(F[i]))
            throw InvalidArgument("forcing values must be positive");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw InvalidArgument("schedule times must increase strictly");
    }
}

double Schedule::forcing(double t) const
{
    if (t <= times.front())
        return F.front();
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (t <= times[i]) {
            double a = (t - times[i - 1]) / (times[i] - times[i - 1]);
            return F[i - 1] + (F[i] - F[i - 1]) * a;
        }
    }
    return F.back();
}

std::vector<std::pair<double, double>> Schedule::points() const
{
    validate();
    std::vector<std::pair<double, double>> out;
    if (delta <= 0.0) {
        for (std::size_t i = 0; i < times.size(); ++i)
            out.emplace_back(times[i], F[i]);
        return out;
    }
    double t0 = times.front(), t1 = times.back();
    double span = t1 - t0;
    long n = std::lround(span / delta);
    if (std::abs(n * delta - span) > 1e-9 * std::max(1.0, span))
        n = static_cast<long>(std::ceil(span / delta));
    for (long k = 0; k < n; ++k)
        out.emplace_back(t0 + k * delta, forcing(t0 + k * delta));
    out.emplace_back(t1, F.back());
    return out;
}

namespace {

StepResult finish(const Mask& prev, const Mask& m, double F, const Domain& d,
                  const HysteresisParams& p)
{
    StepResult r;
    r.mask = m;
    r.profile = solve_harmonic(d, m, F);
    r.energy = energy_report(r.profile, d);
    r.augmented = r.energy.j_energy + diss(prev, m, d, p);
    return r;
}

} // namespace

StepResult step(const Mask& prev, double F, const Domain& d, const HysteresisParams& p,
                const StepOptions& opt)
{
    p.validate();
    detail::FrontStepper st(d, p, opt);
    st.load(prev, F);
    auto s = st.descend(prev, opt.order);
    StepResult r = finish(prev, st.mask(), F, d, p);
    r.flips = s.flips;
    r.moves = s.moves;
    r.sweeps = s.sweeps;
    return r;
}

StepResult step_from(const Mask& prev, const Mask& start, double F, const Domain& d,
                     const HysteresisParams& p, const StepOptions& opt)
{
    p.validate();
    detail::FrontStepper st(d, p, opt);
    st.load(start, F);
    auto s = st.descend(prev, opt.order);
    StepResult r = finish(prev, st.mask(), F, d, p);
    r.flips = s.flips;
    r.moves = s.moves;
    r.sweeps = s.sweeps;
    return r;
}

Bracket bracket_minimizers(const Mask& prev, double F, const Domain& d, const HysteresisParams& p,
                           const StepOptions& opt)
{
    StepOptions a = opt, b = opt;
    a.order = Order::ShrinkFirst;
    b.order = Order::GrowFirst;
    return {step(prev, F, d, p, a), step(prev, F, d, p, b)};
}

namespace {

// Exhaustive search over the candidate cells in Gray-code order. The inverse
// Laplacian is kept on the candidates and their wet neighbours and updated by
// rank-one corrections, with an exact rebuild every few hundred flips.
class GrayOracle {
public:
    GrayOracle(const Mask& prev, double F, const Domain& d, const HysteresisParams& p,
               const std::vector<int>& cand)
        : d_(d), p_(p), prev_(prev), F_(F), cand_(cand), w_(d.edge_weight()), v_(d.cell_measure())
    {
        base_ = prev;
        for (int c : cand_)
            base_.reset(c);
        int nb[4];
        std::vector<char> in(d.size(), 0);
        for (int c : cand_) {
            if (!in[c]) {
                in[c] = 1;
                tracked_.push_back(c);
            }
            int n = d.neighbors(c, nb);
            for (int q = 0; q < n; ++q) {
                int o = nb[q];
                if (!in[o] && base_.test(o) && d.kind(o) == CellKind::Interior) {
                    in[o] = 1;
                    tracked_.push_back(o);
                }
            }
        }
        std::sort(tracked_.begin(), tracked_.end());
        slot_.assign(d.size(), -1);
        for (std::size_t s = 0; s < tracked_.size(); ++s)
            slot_[tracked_[s]] = static_cast<int>(s);
        for (std::size_t j = 0; j < cand_.size(); ++j)
            cand_slot_.push_back(slot_[cand_[j]]);
    }

    // Exact state for the given candidate code.
    void rebuild(std::uint32_t code)
    {
        mask_ = base_;
        for (std::size_t j = 0; j < cand_.size(); ++j)
            if (code >> j & 1u)
                mask_.set(cand_[j]);
        const Domain& d = d_;
        int n = d.size();
        std::vector<int> uidx(n, -1), cells;
        for (int k = 0; k < n; ++k) {
            if (mask_.test(k) && d.kind(k) == CellKind::Interior) {
                uidx[k] = static_cast<int>(cells.size());
                cells.push_back(k);
            }
        }
        int m = static_cast<int>(cells.size());
        int t = static_cast<int>(tracked_.size());
        G_.setZero(t, t);
        x_.setZero(t);
        std::vector<double> u(n, 0.0);
        for (int k : d.inner_boundary())
            u[k] = F_;
        if (m > 0) {
            int nb[4];
            std::vector<Eigen::Triplet<double>> trip;
            Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
            for (int s = 0; s < m; ++s) {
                int c = d.neighbors(cells[s], nb);
                trip.emplace_back(s, s, w_ * c);
                for (int q = 0; q < c; ++q) {
                    int o = nb[q];
                    if (uidx[o] >= 0)
                        trip.emplace_back(s, uidx[o], -w_);
                    else if (d.kind(o) == CellKind::InnerBoundary)
                        b[s] += w_ * F_;
                }
            }
            Eigen::SparseMatrix<double> A(m, m);
            A.setFromTriplets(trip.begin(), trip.end());
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
            Eigen::VectorXd x = ldlt.solve(b);
            for (int s = 0; s < m; ++s)
                u[cells[s]] = x[s];
            std::vector<int> live;
            for (int s = 0; s < t; ++s)
                if (uidx[tracked_[s]] >= 0)
                    live.push_back(s);
            Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, static_cast<int>(live.size()));
            for (std::size_t j = 0; j < live.size(); ++j)
                rhs(uidx[tracked_[live[j]]], static_cast<int>(j)) = 1.0;
            Eigen::MatrixXd X = ldlt.solve(rhs);
            for (std::size_t j = 0; j < live.size(); ++j)
                for (std::size_t i = 0; i < live.size(); ++i)
                    G_(live[i], live[j]) = X(uidx[tracked_[live[i]]], static_cast<int>(j));
            for (int s : live)
                x_[s] = u[tracked_[s]];
        }
        D_ = dirichlet_energy(u, d);
        count_ = mask_.count();
        dissv_ = diss(prev_, mask_, d, p_);
    }

    double energy() const { return D_ + count_ * v_ + dissv_; }

    void flip(std::size_t j)
    {
        int c = cand_[j];
        int sc = cand_slot_[j];
        bool was_wet = prev_.test(c);
        if (!mask_.test(c)) {
            int nb[4];
            int n = d_.neighbors(c, nb);
            Eigen::VectorXd M = Eigen::VectorXd::Zero(G_.rows());
            double sig = 0.0;
            std::vector<int> ws;
            for (int q = 0; q < n; ++q) {
                int o = nb[q];
                if (!mask_.test(o))
                    continue;
                if (d_.kind(o) == CellKind::InnerBoundary) {
                    sig += F_;
                } else {
                    M -= w_ * G_.col(slot_[o]);
                    sig += x_[slot_[o]];
                    ws.push_back(slot_[o]);
                }
            }
            double S = w_ * n;
            for (int s : ws)
                S += w_ * M[s];
            double r = w_ * sig;
            double xb = r / S;
            D_ -= r * r / S;
            G_.noalias() += M * M.transpose() / S;
            x_ -= M * xb;
            G_.col(sc) = -M / S;
            G_.row(sc) = -M.transpose() / S;
            G_(sc, sc) = 1.0 / S;
            x_[sc] = xb;
            mask_.set(c);
            ++count_;
            dissv_ += v_ * (was_wet ? -p_.mu_minus : p_.mu_plus);
        } else {
            double g = G_(sc, sc);
            double xc = x_[sc];
            D_ += xc * xc / g;
            Eigen::VectorXd col = G_.col(sc);
            G_.noalias() -= col * col.transpose() / g;
            x_ -= col * (xc / g);
            G_.col(sc).setZero();
            G_.row(sc).setZero();
            x_[sc] = 0.0;
            mask_.reset(c);
            --count_;
            dissv_ += v_ * (was_wet ? p_.mu_minus : -p_.mu_plus);
        }
    }

private:
    const Domain& d_;
    const HysteresisParams& p_;
    const Mask& prev_;
    double F_;
    std::vector<int> cand_;
    double w_, v_;
    Mask base_, mask_;
    std::vector<int> tracked_, slot_, cand_slot_;
    Eigen::MatrixXd G_;
    Eigen::VectorXd x_;
    double D_ = 0.0;
    long count_ = 0;
    double dissv_ = 0.0;
};

// Lexicographic rank of a code: candidate 0 (lowest cell index) is most significant.
std::uint32_t lex_key(std::uint32_t code, int n)
{
    std::uint32_t k = 0;
    for (int j = 0; j < n; ++j)
        if (code >> j & 1u)
            k |= 1u << (n - 1 - j);
    return k;
}

} // namespace

StepResult brute_force_step(const Mask& prev, double F, const Domain& d, const HysteresisParams& p,
                            const std::vector<int>& candidates)
{
    p.validate();
    if (!(F > 0.0))
        throw InvalidArgument("forcing must be positive");
    prev.validate(d);
    if (candidates.size() > 22)
        throw InvalidArgument("brute_force_step accepts at most 22 candidates");
    std::vector<int> cand = candidates;
    std::sort(cand.begin(), cand.end());
    if (std::adjacent_find(cand.begin(), cand.end()) != cand.end())
        throw InvalidArgument("duplicate candidate cell");
    for (int c : cand)
        if (c < 0 || c >= d.size() || d.kind(c) != CellKind::Interior)
            throw InvalidArgument("candidate " + std::to_string(c) + " is not an interior cell");
    int n = static_cast<int>(cand.size());
    if (n == 0)
        return finish(prev, prev, F, d, p);

    GrayOracle o(prev, F, d, p, cand);
    o.rebuild(0);
    std::uint32_t code = 0, best = 0;
    double bestE = o.energy();
    std::uint32_t total = 1u << n;
    for (std::uint32_t i = 1; i < total; ++i) {
        int j = std::countr_zero(i);
        code ^= 1u << j;
        if ((i & 255u) == 0)
            o.rebuild(code);
        else
            o.flip(static_cast<std::size_t>(j));
        double e = o.energy();
        double tie = 1e-12 * std::max(1.0, std::abs(bestE));
        if (e < bestE - tie || (e <= bestE + tie && lex_key(code, n) < lex_key(best, n))) {
            bestE = e;
            best = code;
        }
    }
    Mask m = prev;
    for (int j = 0; j < n; ++j)
        m.assign(cand[j], best >> j & 1u);
    StepResult r = finish(prev, m, F, d, p);
    r.flips = count_minus(m, prev) + count_minus(prev, m);
    return r;
}

Profile TraceRecord::profile(const Domain& d) const
{
    Profile p;
    p.mask = mask;
    p.F = F;
    p.values.assign(d.size(), 0.0);
    std::size_t q = 0;
    for (int k = 0; k < d.size(); ++k)
        if (mask.test(k))
            p.values[k] = wet_values[q++];
    return p;
}

TraceRecord make_record(double t, const StepResult& r, const Domain& d)
{
    TraceRecord rec;
    rec.t = t;
    rec.F = r.profile.F;
    rec.mask = r.mask;
    rec.wet_values.reserve(static_cast<std::size_t>(r.mask.count()));
    for (int k = 0; k < d.size(); ++k)
        if (r.mask.test(k))
            rec.wet_values.push_back(r.profile.values[k]);
    rec.energy = r.energy;
    rec.augmented = r.augmented;
    rec.flips = r.flips;
    return rec;
}

Trace run(const Schedule& s, const Mask& init, const Domain& d, const HysteresisParams& p,
          const RunOptions& opt)
{
    p.validate();
    auto pts = s.points();
    Trace tr;
    tr.domain = d;
    tr.params = p;
    init.validate(d);

    detail::FrontStepper main(d, p, opt.step);
    double F0 = pts.front().second;
    main.load(init, F0);
    {
        auto st = main.descend(init, Order::GrowFirst);
        StepResult r = finish(init, main.mask(), F0, d, p);
        r.flips = st.flips;
        r.moves = st.moves;
        r.sweeps = st.sweeps;
        TraceRecord rec = make_record(pts.front().first, r, d);
        rec.diss_increment = diss(init, r.mask, d, p);
        rec.cumulative_dissbar = 0.0;
        tr.settled = st.flips > 0;
        tr.records.push_back(std::move(rec));
    }
    double cum = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        try {
            double F = pts[k].second;
            double Fp = pts[k - 1].second;
            Order ord = F >= Fp ? Order::GrowFirst : Order::ShrinkFirst;
            Mask prev = main.mask();
            detail::FrontStepper other = opt.bracket ? main : detail::FrontStepper(d, p, opt.step);
            main.set_forcing(F);
            auto st = main.descend(prev, ord);
            bool jump = false;
            if (opt.bracket && st.flips > 0) {
                other.set_forcing(F);
                other.descend(prev, ord == Order::GrowFirst ? Order::ShrinkFirst : Order::GrowFirst);
                jump = other.mask() != main.mask();
            }
            StepResult r = finish(prev, main.mask(), F, d, p);
            r.flips = st.flips;
            r.moves = st.moves;
            r.sweeps = st.sweeps;
            TraceRecord rec = make_record(pts[k].first, r, d);
            rec.diss_increment = diss(prev, r.mask, d, p);
            cum += rec.diss_increment;
            rec.cumulative_dissbar = cum;
            rec.jump = jump;
            tr.records.push_back(std::move(rec));
        } catch (const DomainTooSmall& e) {
            throw StepError(std::string(e.what()) + " at step " + std::to_string(k), static_cast<int>(k));
        } catch (const SolverError& e) {
            throw StepError(std::string(e.what()) + " at step " + std::to_string(k), static_cast<int>(k));
        }
    }
    return tr;
}

void write_trace_csv(const std::string& path, const Trace& tr)
{
    std::ofstream f(path);
    if (!f)
        throw Error("cannot write " + path);
    f << "t,F,area,D,J,P,diss_increment,cumulative_dissbar,flips,jump_flag\n";
    f << std::setprecision(15);
    for (const auto& r : tr.records)
        f << r.t << ',' << r.F << ',' << r.energy.volume << ',' << r.energy.dirichlet << ','
          << r.energy.j_energy << ',' << r.energy.pressure << ',' << r.diss_increment << ','
          << r.cumulative_dissbar << ',' << r.flips << ',' << (r.jump ? 1 : 0) << '\n';
}

} // namespace droplet
