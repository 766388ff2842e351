#include "droplet/submodular.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace droplet {

namespace {

std::vector<int> ascending(const Eigen::VectorXd& x)
{
    std::vector<int> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
    return order;
}

} // namespace

SubmodularResult minimize_submodular(int n, const ChainOracle& f, const std::vector<double>& hint,
                                     double gap, int max_iter)
{
    SubmodularResult res;
    if (n <= 0)
        return res;
    if (max_iter <= 0)
        max_iter = 10 * n + 100;

    std::vector<double> prefix(n);
    double best = 0.0;
    std::vector<int> best_order;
    int best_len = 0;

    auto vertex = [&](const std::vector<int>& order) {
        f(order, prefix);
        Eigen::VectorXd q(n);
        double prev = 0.0;
        for (int k = 0; k < n; ++k) {
            q[order[k]] = prefix[k] - prev;
            prev = prefix[k];
            if (prefix[k] < best) {
                best = prefix[k];
                best_order = order;
                best_len = k + 1;
            }
        }
        return q;
    };

    Eigen::VectorXd x0(n);
    for (int i = 0; i < n; ++i)
        x0[i] = i < static_cast<int>(hint.size()) ? hint[i] : 0.0;
    std::vector<Eigen::VectorXd> Q{vertex(ascending(x0))};
    std::vector<double> lam{1.0};
    Eigen::VectorXd x = Q[0];

    auto lower = [&] { return x.cwiseMin(0.0).sum(); };
    double lb = lower();
    int it = 0;
    for (; it < max_iter; ++it) {
        if (best - lb <= gap)
            break;
        Eigen::VectorXd q = vertex(ascending(x));
        double scale = q.squaredNorm();
        for (auto& p : Q)
            scale = std::max(scale, p.squaredNorm());
        if (x.squaredNorm() - x.dot(q) <= 1e-12 * scale)
            break;
        Q.push_back(q);
        lam.push_back(0.0);

        // Minor cycle: move to the affine minimizer, dropping points as needed.
        bool stuck = false;
        while (true) {
            // min |Q a| with sum a = 1: a is proportional to (Q^T Q + 1 1^T)^-1 1.
            int m = static_cast<int>(Q.size());
            Eigen::MatrixXd B(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j <= i; ++j)
                    B(i, j) = B(j, i) = Q[i].dot(Q[j]) + 1.0;
            Eigen::LLT<Eigen::MatrixXd> llt(B);
            Eigen::VectorXd alpha = llt.solve(Eigen::VectorXd::Ones(m));
            if (llt.info() != Eigen::Success || !alpha.allFinite() || !(alpha.sum() > 0.0)) {
                stuck = true;
                break;
            }
            alpha /= alpha.sum();
            if (alpha.minCoeff() > 1e-12) {
                for (int i = 0; i < m; ++i)
                    lam[i] = alpha[i];
                break;
            }
            double theta = 1.0;
            for (int i = 0; i < m; ++i)
                if (alpha[i] <= 1e-12 && lam[i] - alpha[i] > 0.0)
                    theta = std::min(theta, lam[i] / (lam[i] - alpha[i]));
            for (int i = 0; i < m; ++i)
                lam[i] = theta * alpha[i] + (1.0 - theta) * lam[i];
            std::vector<Eigen::VectorXd> Q2;
            std::vector<double> l2;
            for (int i = 0; i < m; ++i) {
                if (lam[i] > 1e-12) {
                    Q2.push_back(Q[i]);
                    l2.push_back(lam[i]);
                }
            }
            if (Q2.size() == Q.size()) {
                stuck = true;
                break;
            }
            double s = std::accumulate(l2.begin(), l2.end(), 0.0);
            for (auto& v : l2)
                v /= s;
            Q.swap(Q2);
            lam.swap(l2);
        }
        x.setZero();
        for (std::size_t i = 0; i < Q.size(); ++i)
            x += lam[i] * Q[i];
        lb = std::max(lb, lower());
        if (stuck)
            break;
    }
    if (best - lb > gap)
        vertex(ascending(x));

    res.iterations = it;
    res.value = best;
    res.lower = lb;
    if (best_len > 0) {
        res.set.assign(best_order.begin(), best_order.begin() + best_len);
        std::sort(res.set.begin(), res.set.end());
    }
    return res;
}

} // namespace droplet
