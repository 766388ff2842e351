#include "front_stepper.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "droplet/submodular.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace droplet::detail {

namespace {
constexpr int kMaxBlock = 64;
}

FrontStepper::FrontStepper(const Domain& d, const HysteresisParams& p, const StepOptions& o)
    : d_(&d), p_(p), o_(o), w_(d.edge_weight()), cellv_(d.cell_measure())
{
    o_.max_block = std::clamp(o_.max_block, 1, kMaxBlock);
    cand_.assign(d.size(), 0);
    stamp_.assign(d.size(), 0);
}

void FrontStepper::load(const Mask& m, double F)
{
    if (!(F > 0.0))
        throw InvalidArgument("forcing must be positive");
    m.validate(*d_);
    mask_ = m;
    F_ = F;
    const Domain& d = *d_;
    bx0_ = d.nx();
    by0_ = d.ny();
    bx1_ = -1;
    by1_ = -1;
    for (int k = 0; k < d.size(); ++k) {
        if (!m.test(k))
            continue;
        bx0_ = std::min(bx0_, d.ix(k));
        bx1_ = std::max(bx1_, d.ix(k));
        by0_ = std::min(by0_, d.iy(k));
        by1_ = std::max(by1_, d.iy(k));
    }
    refresh();
}

void FrontStepper::set_forcing(double F)
{
    if (!(F > 0.0))
        throw InvalidArgument("forcing must be positive");
    double r = F / F_;
    for (auto& v : u_)
        v *= r;
    for (int k : d_->inner_boundary())
        u_[k] = F;
    F_ = F;
}

void FrontStepper::refresh()
{
    const Domain& d = *d_;
    int n = d.size();
    std::vector<int> uidx(n, -1);
    std::vector<int> cells;
    for (int k = 0; k < n; ++k) {
        if (mask_.test(k) && d.kind(k) == CellKind::Interior) {
            uidx[k] = static_cast<int>(cells.size());
            cells.push_back(k);
        }
    }
    int m = static_cast<int>(cells.size());
    u_.assign(n, 0.0);
    for (int k : d.inner_boundary())
        u_[k] = F_;

    int nb[4];
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    if (m > 0) {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(m) * 5);
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
        ldlt.compute(A);
        if (ldlt.info() != Eigen::Success)
            throw SolverError("factorisation of the masked Laplacian failed", 0.0);
        Eigen::VectorXd x = ldlt.solve(b);
        for (int s = 0; s < m; ++s)
            u_[cells[s]] = x[s];
    }

    // Tracked cells: unknowns within track_depth layers of the front.
    std::vector<int> dist(n, -1);
    std::vector<int> tracked;
    int front = 0;
    for (int s = 0; s < m; ++s) {
        int k = cells[s];
        int c = d.neighbors(k, nb);
        for (int q = 0; q < c; ++q) {
            if (!mask_.test(nb[q]) && !d.is_obstacle(nb[q])) {
                dist[k] = 0;
                tracked.push_back(k);
                ++front;
                break;
            }
        }
    }
    for (std::size_t head = 0; head < tracked.size(); ++head) {
        int k = tracked[head];
        if (dist[k] >= o_.track_depth)
            continue;
        int c = d.neighbors(k, nb);
        for (int q = 0; q < c; ++q) {
            int o = nb[q];
            if (uidx[o] >= 0 && dist[o] < 0) {
                dist[o] = dist[k] + 1;
                tracked.push_back(o);
            }
        }
    }
    std::sort(tracked.begin(), tracked.end());
    int t = static_cast<int>(tracked.size());
    cap_ = t + 2 * front + 4 * o_.max_block + 64;
    G_.setZero(cap_, cap_);
    slot_.assign(n, -1);
    slot_cell_.assign(cap_, -1);
    for (int s = 0; s < t; ++s) {
        slot_[tracked[s]] = s;
        slot_cell_[s] = tracked[s];
    }
    free_.clear();
    for (int s = cap_ - 1; s >= t; --s)
        free_.push_back(s);

    const int chunk = 64;
    for (int c0 = 0; c0 < t; c0 += chunk) {
        int c = std::min(chunk, t - c0);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, c);
        for (int j = 0; j < c; ++j)
            rhs(uidx[tracked[c0 + j]], j) = 1.0;
        Eigen::MatrixXd X = ldlt.solve(rhs);
        for (int j = 0; j < c; ++j)
            for (int s = 0; s < t; ++s)
                G_(s, c0 + j) = X(uidx[tracked[s]], j);
    }
    // Symmetrise to remove solver asymmetry.
    if (t > 0) {
        Eigen::MatrixXd sym = 0.5 * (G_.topLeftCorner(t, t) + G_.topLeftCorner(t, t).transpose());
        G_.topLeftCorner(t, t) = sym;
    }
    since_refresh_ = 0;
    ++refreshes_;
}

int FrontStepper::take_slot()
{
    int s = free_.back();
    free_.pop_back();
    return s;
}

void FrontStepper::mark_candidates(bool grow)
{
    const Domain& d = *d_;
    for (int k : cand_list_)
        cand_[k] = 0;
    cand_list_.clear();
    if (bx1_ < 0)
        return;
    int i0 = std::max(0, bx0_ - 1), i1 = std::min(d.nx() - 1, bx1_ + 1);
    int j0 = std::max(0, by0_ - 1), j1 = std::min(d.ny() - 1, by1_ + 1);
    int nb[4];
    for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
            int k = d.index(i, j);
            if (d.kind(k) != CellKind::Interior || mask_.test(k) == grow)
                continue;
            int c = d.neighbors(k, nb);
            bool ok = false;
            for (int q = 0; q < c && !ok; ++q) {
                int o = nb[q];
                ok = grow ? mask_.test(o) : (!mask_.test(o) && !d.is_obstacle(o));
            }
            if (ok) {
                cand_[k] = 1;
                cand_list_.push_back(k);
            }
        }
    }
}

void FrontStepper::arc(int seed)
{
    const Domain& d = *d_;
    ++stamp_id_;
    arc_.clear();
    queue_.clear();
    queue_.push_back(seed);
    stamp_[seed] = stamp_id_;
    int nb[8];
    for (std::size_t head = 0; head < queue_.size(); ++head) {
        int k = queue_[head];
        arc_.push_back(k);
        if (static_cast<int>(arc_.size()) >= o_.max_block)
            return;
        int c = d.neighbors8(k, nb);
        for (int q = 0; q < c; ++q) {
            int o = nb[q];
            if (cand_[o] && stamp_[o] != stamp_id_) {
                stamp_[o] = stamp_id_;
                queue_.push_back(o);
            }
        }
    }
}

int FrontStepper::wet_slots(int cell, int* out) const
{
    const Domain& d = *d_;
    int nb[4];
    int c = d.neighbors(cell, nb);
    int n = 0;
    for (int q = 0; q < c; ++q) {
        int o = nb[q];
        if (mask_.test(o) && d.kind(o) == CellKind::Interior) {
            if (slot_[o] < 0)
                return -1;
            out[n++] = slot_[o];
        }
    }
    return n;
}

double FrontStepper::sigma(int cell) const
{
    int nb[4];
    int c = d_->neighbors(cell, nb);
    double s = 0.0;
    for (int q = 0; q < c; ++q)
        if (mask_.test(nb[q]))
            s += u_[nb[q]];
    return s;
}

namespace {

bool adjacent(const Domain& d, int a, int b)
{
    int di = std::abs(d.ix(a) - d.ix(b));
    int dj = std::abs(d.iy(a) - d.iy(b));
    return di + dj == 1;
}

} // namespace

void FrontStepper::eval_grow(int seed, const Mask& prev, Move& best)
{
    const Domain& d = *d_;
    arc(seed);
    int L = static_cast<int>(arc_.size());
    int ns[kMaxBlock][4];
    int nc[kMaxBlock];
    double Lc[kMaxBlock][kMaxBlock];
    double y[kMaxBlock];
    double D = 0.0, cost = 0.0;
    double w2 = w_ * w_;
    int tmp[4];
    for (int k = 0; k < L; ++k) {
        int b = arc_[k];
        nc[k] = wet_slots(b, ns[k]);
        if (nc[k] < 0)
            return;
        double acc = 0.0;
        for (int a = 0; a < nc[k]; ++a)
            for (int c = 0; c < nc[k]; ++c)
                acc += G_(ns[k][a], ns[k][c]);
        double skk = w_ * d.neighbors(b, tmp) - w2 * acc;
        for (int j = 0; j < k; ++j) {
            double s = adjacent(d, b, arc_[j]) ? -w_ : 0.0;
            double g = 0.0;
            for (int a = 0; a < nc[k]; ++a)
                for (int c = 0; c < nc[j]; ++c)
                    g += G_(ns[k][a], ns[j][c]);
            s -= w2 * g;
            for (int m = 0; m < j; ++m)
                s -= Lc[k][m] * Lc[j][m];
            Lc[k][j] = s / Lc[j][j];
            skk -= Lc[k][j] * Lc[k][j];
        }
        if (!(skk > 1e-13 * w_))
            return;
        Lc[k][k] = std::sqrt(skk);
        double r = w_ * sigma(b);
        for (int m = 0; m < k; ++m)
            r -= Lc[k][m] * y[m];
        y[k] = r / Lc[k][k];
        D -= y[k] * y[k];
        cost += cellv_ * (1.0 + (prev.test(b) ? -p_.mu_minus : p_.mu_plus));
        double dE = D + cost;
        if (dE < best.dE) {
            best.dE = dE;
            best.cells.assign(arc_.begin(), arc_.begin() + k + 1);
        }
    }
}

void FrontStepper::eval_shrink(int seed, const Mask& prev, Move& best)
{
    arc(seed);
    int L = static_cast<int>(arc_.size());
    int sl[kMaxBlock];
    double Lc[kMaxBlock][kMaxBlock];
    double y[kMaxBlock];
    double D = 0.0, cost = 0.0;
    for (int k = 0; k < L; ++k) {
        int r = arc_[k];
        sl[k] = slot_[r];
        if (sl[k] < 0)
            return;
        double skk = G_(sl[k], sl[k]);
        for (int j = 0; j < k; ++j) {
            double s = G_(sl[k], sl[j]);
            for (int m = 0; m < j; ++m)
                s -= Lc[k][m] * Lc[j][m];
            Lc[k][j] = s / Lc[j][j];
            skk -= Lc[k][j] * Lc[k][j];
        }
        if (!(skk > 1e-13 / w_))
            return;
        Lc[k][k] = std::sqrt(skk);
        double v = u_[r];
        for (int m = 0; m < k; ++m)
            v -= Lc[k][m] * y[m];
        y[k] = v / Lc[k][k];
        D += y[k] * y[k];
        cost += cellv_ * (-1.0 + (prev.test(r) ? p_.mu_minus : -p_.mu_plus));
        double dE = D + cost;
        if (dE < best.dE) {
            best.dE = dE;
            best.cells.assign(arc_.begin(), arc_.begin() + k + 1);
        }
    }
}

bool FrontStepper::collective(bool grow, const Mask& prev, double tol, Move& out)
{
    const Domain& d = *d_;
    mark_candidates(grow);
    std::vector<int> C;
    std::vector<std::array<int, 4>> ns;
    std::vector<int> nc;
    for (int k : cand_list_) {
        std::array<int, 4> sl{};
        int c = 0;
        if (grow) {
            c = wet_slots(k, sl.data());
            if (c < 0)
                continue;
        } else if (slot_[k] < 0) {
            continue;
        }
        C.push_back(k);
        ns.push_back(sl);
        nc.push_back(c);
    }
    int n = static_cast<int>(C.size());
    if (n == 0)
        return false;

    // f(A) = sgn b_A^T K_AA^-1 b_A + sum_A cost: K is the Schur complement of
    // the added cells (grow) or the Green's block of the removed ones (shrink).
    Eigen::MatrixXd K(n, n);
    Eigen::VectorXd b(n), cost(n);
    double sgn = grow ? -1.0 : 1.0;
    int tmp[4];
    for (int i = 0; i < n; ++i) {
        bool was = prev.test(C[i]);
        if (grow) {
            for (int j = 0; j <= i; ++j) {
                double g = 0.0;
                for (int a = 0; a < nc[i]; ++a)
                    for (int c = 0; c < nc[j]; ++c)
                        g += G_(ns[i][a], ns[j][c]);
                double a = i == j ? w_ * d.neighbors(C[i], tmp) : (adjacent(d, C[i], C[j]) ? -w_ : 0.0);
                K(i, j) = K(j, i) = a - w_ * w_ * g;
            }
            b[i] = w_ * sigma(C[i]);
            cost[i] = cellv_ * (1.0 + (was ? -p_.mu_minus : p_.mu_plus));
        } else {
            for (int j = 0; j <= i; ++j)
                K(i, j) = K(j, i) = G_(slot_[C[i]], slot_[C[j]]);
            b[i] = u_[C[i]];
            cost[i] = cellv_ * (-1.0 + (was ? p_.mu_minus : -p_.mu_plus));
        }
    }

    // Drop cells whose marginal is positive even with every other cell
    // present; by submodularity they belong to no minimizer.
    std::vector<int> act(n);
    for (int i = 0; i < n; ++i)
        act[i] = i;
    Eigen::VectorXd marg;
    while (!act.empty()) {
        int m = static_cast<int>(act.size());
        Eigen::MatrixXd Ka(m, m);
        Eigen::VectorXd ba(m);
        for (int i = 0; i < m; ++i) {
            ba[i] = b[act[i]];
            for (int j = 0; j < m; ++j)
                Ka(i, j) = K(act[i], act[j]);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(Ka);
        if (llt.info() != Eigen::Success)
            return false;
        Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
        Eigen::VectorXd x = inv * ba;
        marg.resize(m);
        std::vector<int> keep;
        for (int i = 0; i < m; ++i) {
            marg[i] = cost[act[i]] + sgn * x[i] * x[i] / inv(i, i);
            if (marg[i] <= 0.0)
                keep.push_back(act[i]);
        }
        if (static_cast<int>(keep.size()) == m)
            break;
        act.swap(keep);
    }
    int m = static_cast<int>(act.size());
    if (m == 0)
        return false;

    ChainOracle f = [&](const std::vector<int>& order, std::vector<double>& prefix) {
        Eigen::MatrixXd P(m, m);
        Eigen::VectorXd bp(m);
        for (int i = 0; i < m; ++i) {
            bp[i] = b[act[order[i]]];
            for (int j = 0; j < m; ++j)
                P(i, j) = K(act[order[i]], act[order[j]]);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(P);
        Eigen::VectorXd y = llt.matrixL().solve(bp);
        double acc = 0.0;
        for (int k = 0; k < m; ++k) {
            acc += sgn * y[k] * y[k] + cost[act[order[k]]];
            prefix[k] = acc;
        }
    };
    std::vector<double> hint(marg.data(), marg.data() + m);
    SubmodularResult r = minimize_submodular(m, f, hint, tol);
    if (!(r.value < -tol))
        return false;
    out.dE = r.value;
    out.cells.clear();
    for (int i : r.set)
        out.cells.push_back(C[act[i]]);
    return true;
}

void FrontStepper::apply_grow(const std::vector<int>& B)
{
    const Domain& d = *d_;
    int nb = static_cast<int>(B.size());
    if (static_cast<int>(free_.size()) < nb)
        refresh();
    std::vector<std::array<int, 4>> ns(nb);
    std::vector<int> nc(nb);
    for (int b = 0; b < nb; ++b) {
        nc[b] = wet_slots(B[b], ns[b].data());
        if (nc[b] < 0) {
            refresh();
            b = -1;
        }
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nb, cap_);
    for (int b = 0; b < nb; ++b)
        for (int a = 0; a < nc[b]; ++a)
            M.row(b) -= w_ * G_.row(ns[b][a]);
    Eigen::MatrixXd S(nb, nb);
    Eigen::VectorXd r(nb);
    int tmp[4];
    for (int b = 0; b < nb; ++b) {
        for (int c = 0; c < nb; ++c) {
            double a = b == c ? w_ * d.neighbors(B[b], tmp) : (adjacent(d, B[b], B[c]) ? -w_ : 0.0);
            for (int q = 0; q < nc[c]; ++q)
                a += w_ * M(b, ns[c][q]);
            S(b, c) = a;
        }
        r[b] = w_ * sigma(B[b]);
    }
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    Eigen::MatrixXd Sinv = llt.solve(Eigen::MatrixXd::Identity(nb, nb));
    Eigen::VectorXd xB = Sinv * r;
    Eigen::MatrixXd K = Sinv * M;
    G_.noalias() += M.transpose() * K;
    Eigen::VectorXd v = M.transpose() * xB;
    for (int s = 0; s < cap_; ++s)
        if (slot_cell_[s] >= 0)
            u_[slot_cell_[s]] -= v[s];
    std::vector<int> ns_new(nb);
    for (int b = 0; b < nb; ++b) {
        int s = take_slot();
        ns_new[b] = s;
        G_.col(s) = -K.row(b).transpose();
        G_.row(s) = -K.row(b);
    }
    for (int b = 0; b < nb; ++b) {
        for (int c = 0; c < nb; ++c)
            G_(ns_new[b], ns_new[c]) = Sinv(b, c);
        slot_[B[b]] = ns_new[b];
        slot_cell_[ns_new[b]] = B[b];
        u_[B[b]] = xB[b];
        mask_.set(B[b]);
        bx0_ = std::min(bx0_, d.ix(B[b]));
        bx1_ = std::max(bx1_, d.ix(B[b]));
        by0_ = std::min(by0_, d.iy(B[b]));
        by1_ = std::max(by1_, d.iy(B[b]));
    }
    if (o_.guard_outer) {
        int nbr[4];
        for (int b : B) {
            int c = d.neighbors(b, nbr);
            for (int q = 0; q < c; ++q)
                if (d.kind(nbr[q]) == CellKind::OuterBoundary)
                    throw DomainTooSmall("wet region reached the outer boundary");
        }
    }
    ++since_refresh_;
}

void FrontStepper::apply_shrink(const std::vector<int>& R)
{
    const Domain& d = *d_;
    int nr = static_cast<int>(R.size());
    std::vector<int> sl(nr);
    for (int k = 0; k < nr; ++k)
        sl[k] = slot_[R[k]];
    Eigen::MatrixXd Grr(nr, nr);
    Eigen::MatrixXd GR(nr, cap_);
    Eigen::VectorXd xr(nr);
    for (int a = 0; a < nr; ++a) {
        for (int b = 0; b < nr; ++b)
            Grr(a, b) = G_(sl[a], sl[b]);
        GR.row(a) = G_.row(sl[a]);
        xr[a] = u_[R[a]];
    }
    Grr = 0.5 * (Grr + Grr.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(Grr);
    Eigen::MatrixXd W = llt.solve(GR);
    Eigen::VectorXd z = llt.solve(xr);
    G_.noalias() -= GR.transpose() * W;
    Eigen::VectorXd v = GR.transpose() * z;
    for (int s = 0; s < cap_; ++s)
        if (slot_cell_[s] >= 0)
            u_[slot_cell_[s]] -= v[s];
    for (int a = 0; a < nr; ++a) {
        int s = sl[a];
        G_.row(s).setZero();
        G_.col(s).setZero();
        slot_cell_[s] = -1;
        slot_[R[a]] = -1;
        free_.push_back(s);
        u_[R[a]] = 0.0;
        mask_.reset(R[a]);
    }
    ++since_refresh_;
    // Newly exposed front cells must be tracked.
    int nb[4];
    for (int r : R) {
        int c = d.neighbors(r, nb);
        for (int q = 0; q < c; ++q) {
            int o = nb[q];
            if (mask_.test(o) && d.kind(o) == CellKind::Interior && slot_[o] < 0) {
                refresh();
                return;
            }
        }
    }
}

FrontStepper::Stats FrontStepper::descend(const Mask& prev, Order order)
{
    prev.require_same(mask_);
    Stats st;
    bool grow = order == Order::GrowFirst;
    int idle = 0;
    double tol = o_.tol * F_ * F_;
    while (idle < 2) {
        long accepted = 0;
        ++st.sweeps;
        while (true) {
            mark_candidates(grow);
            Move best;
            best.dE = -tol;
            for (int seed : cand_list_) {
                if (grow)
                    eval_grow(seed, prev, best);
                else
                    eval_shrink(seed, prev, best);
            }
            if (best.cells.empty() && !(o_.collective && collective(grow, prev, tol, best)))
                break;
            if (grow)
                apply_grow(best.cells);
            else
                apply_shrink(best.cells);
            ++accepted;
            ++st.moves;
            st.flips += static_cast<long>(best.cells.size());
            if (since_refresh_ >= o_.refresh_every ||
                static_cast<int>(free_.size()) < o_.max_block)
                refresh();
        }
        idle = accepted ? 0 : idle + 1;
        grow = !grow;
    }
    return st;
}

} // namespace droplet::detail
