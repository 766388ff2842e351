#include "droplet/field.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

namespace droplet {

Profile solve_harmonic(const Domain& d, const Mask& mask, double F, const SolveOptions& opt)
{
    if (!(F > 0.0))
        throw InvalidArgument("solve_harmonic requires F > 0");
    mask.validate(d);
    int n = d.size();
    std::vector<int> slot(n, -1);
    std::vector<int> cells;
    for (int k = 0; k < n; ++k) {
        if (mask.test(k) && d.kind(k) == CellKind::Interior) {
            slot[k] = static_cast<int>(cells.size());
            cells.push_back(k);
        }
    }
    Profile p;
    p.mask = mask;
    p.F = F;
    p.values.assign(n, 0.0);
    for (int k : d.inner_boundary())
        p.values[k] = F;
    int m = static_cast<int>(cells.size());
    if (m == 0)
        return p;

    double w = d.edge_weight();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * 5);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    int nb[4];
    for (int s = 0; s < m; ++s) {
        int k = cells[s];
        int c = d.neighbors(k, nb);
        trip.emplace_back(s, s, w * c);
        for (int q = 0; q < c; ++q) {
            int o = nb[q];
            if (slot[o] >= 0)
                trip.emplace_back(s, slot[o], -w);
            else if (d.kind(o) == CellKind::InnerBoundary)
                b[s] += w * F;
        }
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());

    if (b.squaredNorm() == 0.0) {
        p.residual = 0.0;
        return p;
    }
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    cg.setTolerance(opt.tol);
    long cap = opt.max_iter > 0 ? opt.max_iter : 50L * m;
    cg.setMaxIterations(cap);
    cg.compute(A);
    Eigen::VectorXd x = cg.solve(b);
    double res = (b - A * x).norm() / b.norm();
    p.residual = res;
    if (cg.info() != Eigen::Success && res > opt.tol)
        throw SolverError("harmonic solve did not converge", res);
    for (int s = 0; s < m; ++s)
        p.values[cells[s]] = std::max(0.0, x[s]);
    return p;
}

double dirichlet_energy(const std::vector<double>& u, const Domain& d)
{
    double w = d.edge_weight();
    double s = 0.0;
    int nx = d.nx();
    for (int k = 0; k < d.size(); ++k) {
        if (d.is_obstacle(k))
            continue;
        int i = d.ix(k), j = d.iy(k);
        if (i + 1 < nx && !d.is_obstacle(k + 1)) {
            double g = u[k] - u[k + 1];
            s += g * g;
        }
        if (d.dim() == 2 && j + 1 < d.ny() && !d.is_obstacle(k + nx)) {
            double g = u[k] - u[k + nx];
            s += g * g;
        }
    }
    return w * s;
}

EnergyReport energy_report(const Profile& p, const Domain& d)
{
    if (!(p.F > 0.0))
        throw InvalidArgument("energy_report requires F > 0");
    EnergyReport e;
    e.dirichlet = dirichlet_energy(p.values, d);
    e.volume = measure(p.mask, d);
    e.j_energy = e.dirichlet + e.volume;
    e.pressure = e.dirichlet / p.F;
    return e;
}

std::vector<SlopeSample> raw_slope_samples(const Profile& p, const Domain& d)
{
    std::vector<SlopeSample> out;
    const auto& m = p.mask;
    const auto& u = p.values;
    double h = d.h();
    int nx = d.nx();
    auto fb = free_boundary_cells(m, d);
    out.reserve(fb.size());
    for (int k : fb) {
        int i = d.ix(k), j = d.iy(k);
        double s2 = 0.0;
        for (int axis = 0; axis < d.dim(); ++axis) {
            int lo = -1, hi = -1;
            if (axis == 0) {
                if (i > 0)
                    lo = k - 1;
                if (i + 1 < nx)
                    hi = k + 1;
            } else {
                if (j > 0)
                    lo = k - nx;
                if (j + 1 < d.ny())
                    hi = k + nx;
            }
            auto dry = [&](int c) { return c >= 0 && !d.is_obstacle(c) && !m.test(c); };
            auto wet = [&](int c) { return c >= 0 && m.test(c); };
            double g = 0.0;
            if (dry(lo) || dry(hi))
                g = u[k] / h;
            else if (wet(lo) && wet(hi))
                g = (u[hi] - u[lo]) / (2.0 * h);
            else if (wet(lo))
                g = (u[k] - u[lo]) / h;
            else if (wet(hi))
                g = (u[k] - u[hi]) / h;
            s2 += g * g;
        }
        out.push_back({k, std::sqrt(s2)});
    }
    return out;
}

std::vector<SlopeSample> boundary_slope_samples(const Profile& p, const Domain& d,
                                                const SlopeOptions& opt)
{
    auto raw = raw_slope_samples(p, d);
    int rad = static_cast<int>(std::floor(opt.smoothing_cells));
    if (rad <= 0 || raw.empty())
        return raw;
    std::vector<int> at(d.size(), -1);
    for (std::size_t q = 0; q < raw.size(); ++q)
        at[raw[q].cell] = static_cast<int>(q);
    double r2 = opt.smoothing_cells * opt.smoothing_cells;
    std::vector<SlopeSample> out;
    out.reserve(raw.size());
    int nx = d.nx(), ny = d.ny();
    for (const auto& s : raw) {
        int i = d.ix(s.cell), j = d.iy(s.cell);
        double sum = 0.0;
        int cnt = 0;
        int jr = d.dim() == 2 ? rad : 0;
        for (int dj = -jr; dj <= jr; ++dj) {
            for (int di = -rad; di <= rad; ++di) {
                if (di * di + dj * dj > r2)
                    continue;
                int a = i + di, b = j + dj;
                if (a < 0 || b < 0 || a >= nx || b >= ny)
                    continue;
                int q = at[b * nx + a];
                if (q < 0)
                    continue;
                sum += raw[q].slope * raw[q].slope;
                ++cnt;
            }
        }
        out.push_back({s.cell, std::sqrt(sum / cnt)});
    }
    return out;
}

EnergyDifference energy_difference_check(const Profile& v0, const Profile& v1, const Domain& d,
                                         double tol)
{
    v0.mask.require_same(v1.mask);
    double scale = std::max(v0.F, v1.F);
    for (int k = 0; k < d.size(); ++k) {
        if (d.kind(k) == CellKind::InnerBoundary && v0.values[k] != v1.values[k])
            throw InvalidArgument("profiles differ on the inner boundary at cell " + std::to_string(k));
        if (v0.values[k] > v1.values[k] + 1e-9 * scale)
            throw InvalidArgument("ordering v0 <= v1 fails at cell " + std::to_string(k));
    }
    EnergyDifference r;
    r.lhs = dirichlet_energy(v0.values, d) - dirichlet_energy(v1.values, d);
    double w = d.edge_weight();
    int nx = d.nx();
    const auto& m0 = v0.mask;
    const auto& u = v1.values;
    double s = 0.0;
    for (int k = 0; k < d.size(); ++k) {
        if (d.is_obstacle(k) || m0.test(k))
            continue;
        int i = d.ix(k), j = d.iy(k);
        if (i + 1 < nx && !d.is_obstacle(k + 1) && !m0.test(k + 1)) {
            double g = u[k] - u[k + 1];
            s += g * g;
        }
        if (d.dim() == 2 && j + 1 < d.ny() && !d.is_obstacle(k + nx) && !m0.test(k + nx)) {
            double g = u[k] - u[k + nx];
            s += g * g;
        }
    }
    r.rhs = w * s;
    r.ok = r.lhs >= r.rhs - tol * std::max(1.0, scale * scale);
    return r;
}

namespace {

struct Header {
    char magic[4];
    std::int32_t dim;
    std::int32_t nx;
    std::int32_t ny;
    double h;
    double F;
};
static_assert(sizeof(Header) == 32);

} // namespace

void write_profile_binary(const std::string& path, const Profile& p, const Domain& d)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot write " + path);
    Header hd;
    std::memcpy(hd.magic, "PDRP", 4);
    hd.dim = d.dim();
    hd.nx = d.nx();
    hd.ny = d.ny();
    hd.h = d.h();
    hd.F = p.F;
    f.write(reinterpret_cast<const char*>(&hd), sizeof hd);
    f.write(reinterpret_cast<const char*>(p.values.data()),
            static_cast<std::streamsize>(p.values.size() * sizeof(double)));
}

Profile read_profile_binary(const std::string& path, const Domain& d)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot read " + path);
    Header hd;
    f.read(reinterpret_cast<char*>(&hd), sizeof hd);
    if (!f || std::memcmp(hd.magic, "PDRP", 4) != 0)
        throw Error("not a profile snapshot: " + path);
    if (hd.dim != d.dim() || hd.nx != d.nx() || hd.ny != d.ny() || hd.h != d.h())
        throw DomainMismatch("snapshot grid does not match domain");
    Profile p;
    p.F = hd.F;
    p.values.resize(d.size());
    f.read(reinterpret_cast<char*>(p.values.data()),
           static_cast<std::streamsize>(p.values.size() * sizeof(double)));
    if (!f)
        throw Error("truncated profile snapshot: " + path);
    p.mask = Mask::inner_boundary(d);
    for (int k = 0; k < d.size(); ++k)
        if (p.values[k] > 0.0)
            p.mask.set(k);
    return p;
}

void write_profile_csv(const std::string& path, const Profile& p, const Domain& d)
{
    std::ofstream f(path);
    if (!f)
        throw Error("cannot write " + path);
    f << "x,y,u\n" << std::setprecision(12);
    for (int k = 0; k < d.size(); ++k) {
        if (d.is_obstacle(k))
            continue;
        auto c = d.center(k);
        f << c[0] << ',' << c[1] << ',' << p.values[k] << '\n';
    }
}

} // namespace droplet
