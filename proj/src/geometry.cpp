#include "droplet/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace droplet {

void HysteresisParams::validate() const
{
    if (!(mu_plus > 0.0) || !std::isfinite(mu_plus))
        throw InvalidArgument("mu_plus must be positive");
    if (!(mu_minus > 0.0 && mu_minus < 1.0))
        throw InvalidArgument("mu_minus must lie in (0, 1)");
}

namespace {

std::uint64_t fnv(std::uint64_t h, const void* p, std::size_t n)
{
    auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

Domain Domain::from_obstacle(int dim, int nx, int ny, double h, double x0, double y0,
                             const std::vector<bool>& obstacle)
{
    if (dim != 1 && dim != 2)
        throw InvalidArgument("dim must be 1 or 2");
    if (nx < 3 || (dim == 2 && ny < 3) || (dim == 1 && ny != 1))
        throw InvalidArgument("grid too small");
    if (!(h > 0.0))
        throw InvalidArgument("h must be positive");
    if (obstacle.size() != static_cast<std::size_t>(nx) * ny)
        throw InvalidArgument("obstacle size does not match grid");
    Domain d;
    d.dim_ = dim;
    d.nx_ = nx;
    d.ny_ = ny;
    d.h_ = h;
    d.x0_ = x0;
    d.y0_ = y0;
    d.classify(obstacle);
    return d;
}

Domain Domain::halfline(int n, double h)
{
    std::vector<bool> obs(n, false);
    obs[0] = true;
    return from_obstacle(1, n, 1, h, -h, 0.0, obs);
}

Domain Domain::box_with_disks(int nx, int ny, double h, const std::vector<Disk>& disks)
{
    double x0 = -0.5 * (nx - 1) * h;
    double y0 = -0.5 * (ny - 1) * h;
    std::vector<bool> obs(static_cast<std::size_t>(nx) * ny, false);
    // Obstacle cells lie inside the disk shrunk by h/2, so the forced ring
    // straddles the physical circle.
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double x = x0 + i * h, y = y0 + j * h;
            for (const auto& c : disks) {
                double r = c.radius - 0.5 * h;
                double dx = x - c.cx, dy = y - c.cy;
                if (dx * dx + dy * dy <= r * r) {
                    obs[j * nx + i] = true;
                    break;
                }
            }
        }
    }
    Domain d = from_obstacle(2, nx, ny, h, x0, y0, obs);
    d.disks_ = disks;
    return d;
}

void Domain::classify(const std::vector<bool>& obstacle)
{
    int n = size();
    kind_.assign(n, CellKind::Interior);
    inner_.clear();
    int nb[4];
    for (int k = 0; k < n; ++k) {
        if (obstacle[k]) {
            kind_[k] = CellKind::Obstacle;
            continue;
        }
        int c = neighbors(k, nb);
        bool touches = false;
        for (int q = 0; q < c; ++q)
            touches = touches || obstacle[nb[q]];
        if (touches) {
            kind_[k] = CellKind::InnerBoundary;
            inner_.push_back(k);
            continue;
        }
        int i = ix(k), j = iy(k);
        bool edge = i == 0 || i == nx_ - 1 || (dim_ == 2 && (j == 0 || j == ny_ - 1));
        if (edge)
            kind_[k] = CellKind::OuterBoundary;
    }
    std::uint64_t hsh = 1469598103934665603ull;
    hsh = fnv(hsh, &dim_, sizeof dim_);
    hsh = fnv(hsh, &nx_, sizeof nx_);
    hsh = fnv(hsh, &ny_, sizeof ny_);
    hsh = fnv(hsh, &h_, sizeof h_);
    hsh = fnv(hsh, &x0_, sizeof x0_);
    hsh = fnv(hsh, &y0_, sizeof y0_);
    hsh = fnv(hsh, kind_.data(), kind_.size());
    id_ = hsh;
}

std::array<double, 2> Domain::center(int k) const
{
    return {x0_ + ix(k) * h_, y0_ + iy(k) * h_};
}

int Domain::neighbors(int k, int* out) const
{
    int c = 0;
    int i = ix(k), j = iy(k);
    if (i > 0)
        out[c++] = k - 1;
    if (i < nx_ - 1)
        out[c++] = k + 1;
    if (dim_ == 2) {
        if (j > 0)
            out[c++] = k - nx_;
        if (j < ny_ - 1)
            out[c++] = k + nx_;
    }
    return c;
}

int Domain::neighbors8(int k, int* out) const
{
    if (dim_ == 1)
        return neighbors(k, out);
    int c = 0;
    int i = ix(k), j = iy(k);
    for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
            if (di == 0 && dj == 0)
                continue;
            int a = i + di, b = j + dj;
            if (a < 0 || b < 0 || a >= nx_ || b >= ny_)
                continue;
            out[c++] = b * nx_ + a;
        }
    }
    return c;
}

void Domain::require_same(const Domain& other) const
{
    if (id_ != other.id_)
        throw DomainMismatch("domains differ");
}

Mask::Mask(const Domain& d)
    : n_(d.size()), domain_id_(d.id()), bits_((d.size() + 63) / 64, 0)
{
}

Mask Mask::inner_boundary(const Domain& d)
{
    Mask m(d);
    for (int k : d.inner_boundary())
        m.set(k);
    return m;
}

Mask Mask::rasterize(const Domain& d, const std::function<bool(double, double)>& pred)
{
    Mask m = inner_boundary(d);
    for (int k = 0; k < d.size(); ++k) {
        if (d.kind(k) != CellKind::Interior)
            continue;
        auto c = d.center(k);
        if (pred(c[0], c[1]))
            m.set(k);
    }
    return m;
}

Mask Mask::disks(const Domain& d, const std::vector<Disk>& disks)
{
    return rasterize(d, [&](double x, double y) {
        for (const auto& c : disks) {
            double dx = x - c.cx, dy = y - c.cy;
            if (dx * dx + dy * dy < c.radius * c.radius)
                return true;
        }
        return false;
    });
}

long Mask::count() const
{
    long s = 0;
    for (auto w : bits_)
        s += std::popcount(w);
    return s;
}

void Mask::require_same(const Mask& o) const
{
    if (domain_id_ != o.domain_id_ || n_ != o.n_)
        throw DomainMismatch("masks belong to different domains");
}

bool Mask::subset_of(const Mask& o) const
{
    require_same(o);
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] & ~o.bits_[i])
            return false;
    return true;
}

Mask Mask::operator|(const Mask& o) const
{
    require_same(o);
    Mask r = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        r.bits_[i] |= o.bits_[i];
    return r;
}

Mask Mask::operator&(const Mask& o) const
{
    require_same(o);
    Mask r = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        r.bits_[i] &= o.bits_[i];
    return r;
}

Mask Mask::minus(const Mask& o) const
{
    require_same(o);
    Mask r = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        r.bits_[i] &= ~o.bits_[i];
    return r;
}

void Mask::validate(const Domain& d) const
{
    if (domain_id_ != d.id())
        throw DomainMismatch("mask does not belong to domain");
    for (int k = 0; k < n_; ++k) {
        CellKind c = d.kind(k);
        bool w = test(k);
        if (c == CellKind::InnerBoundary && !w)
            throw InvalidArgument("mask misses inner boundary cell " + std::to_string(k));
        if ((c == CellKind::Obstacle || c == CellKind::OuterBoundary) && w)
            throw InvalidArgument("mask contains obstacle or outer boundary cell " + std::to_string(k));
    }
}

long count_minus(const Mask& a, const Mask& b)
{
    a.require_same(b);
    long s = 0;
    const auto& x = a.words();
    const auto& y = b.words();
    for (std::size_t i = 0; i < x.size(); ++i)
        s += std::popcount(x[i] & ~y[i]);
    return s;
}

double measure(const Mask& m, const Domain& d)
{
    if (m.domain_id() != d.id())
        throw DomainMismatch("mask does not belong to domain");
    return static_cast<double>(m.count()) * d.cell_measure();
}

double diss(const Mask& a, const Mask& b, const Domain& d, const HysteresisParams& p)
{
    a.require_same(b);
    if (a.domain_id() != d.id())
        throw DomainMismatch("mask does not belong to domain");
    double v = d.cell_measure();
    return p.mu_plus * count_minus(b, a) * v + p.mu_minus * count_minus(a, b) * v;
}

TriangleResult triangle_defect(const Mask& a, const Mask& b, const Mask& c, const Domain& d,
                               const HysteresisParams& p)
{
    a.require_same(b);
    a.require_same(c);
    TriangleResult r;
    r.lhs_plus_cells = count_minus(b, a) + count_minus(c, b) - count_minus(c, a);
    r.lhs_minus_cells = count_minus(a, b) + count_minus(b, c) - count_minus(a, c);
    const auto& wa = a.words();
    const auto& wb = b.words();
    const auto& wc = c.words();
    long cnt = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        cnt += std::popcount(wb[i] & ~(wa[i] | wc[i]));
        cnt += std::popcount((wa[i] & wc[i]) & ~wb[i]);
    }
    r.rhs_cells = cnt;
    double v = d.cell_measure();
    r.lhs = diss(a, b, d, p) + diss(b, c, d, p) - diss(a, c, d, p);
    r.rhs = (p.mu_plus + p.mu_minus) * static_cast<double>(cnt) * v;
    return r;
}

namespace {

// Exact Euclidean distance transform (in cells, squared) to the set `src`, separable.
std::vector<double> sq_distance(const Mask& src, const Domain& d)
{
    const double inf = std::numeric_limits<double>::infinity();
    int nx = d.nx(), ny = d.ny();
    std::vector<double> g(static_cast<std::size_t>(nx) * ny, inf);
    for (int k = 0; k < d.size(); ++k)
        if (src.test(k))
            g[k] = 0.0;
    auto pass = [&](std::vector<double>& f, int n, int stride, int offset) {
        std::vector<double> in(n), out(n);
        std::vector<int> v(n);
        std::vector<double> z(n + 1);
        for (int q = 0; q < n; ++q)
            in[q] = f[offset + q * stride];
        int k = -1;
        for (int q = 0; q < n; ++q) {
            if (in[q] == inf)
                continue;
            while (true) {
                if (k < 0) {
                    k = 0;
                    v[0] = q;
                    z[0] = -inf;
                    z[1] = inf;
                    break;
                }
                int r = v[k];
                double s = ((in[q] + double(q) * q) - (in[r] + double(r) * r)) / (2.0 * q - 2.0 * r);
                if (s <= z[k]) {
                    --k;
                    continue;
                }
                ++k;
                v[k] = q;
                z[k] = s;
                z[k + 1] = inf;
                break;
            }
        }
        if (k < 0)
            return;
        int j = 0;
        for (int q = 0; q < n; ++q) {
            while (z[j + 1] < q)
                ++j;
            double dq = q - v[j];
            out[q] = dq * dq + in[v[j]];
        }
        for (int q = 0; q < n; ++q)
            f[offset + q * stride] = out[q];
    };
    for (int j = 0; j < ny; ++j)
        pass(g, nx, 1, j * nx);
    if (d.dim() == 2)
        for (int i = 0; i < nx; ++i)
            pass(g, ny, nx, i);
    return g;
}

} // namespace

double hausdorff_distance(const Mask& a, const Mask& b, const Domain& d)
{
    a.require_same(b);
    if (a.count() == 0 || b.count() == 0)
        throw InvalidArgument("hausdorff_distance of an empty mask");
    auto da = sq_distance(a, d);
    auto db = sq_distance(b, d);
    double m = 0.0;
    for (int k = 0; k < d.size(); ++k) {
        if (a.test(k))
            m = std::max(m, db[k]);
        if (b.test(k))
            m = std::max(m, da[k]);
    }
    return std::sqrt(m) * d.h();
}

double perimeter(const Mask& m, const Domain& d)
{
    long faces = 0;
    int nb[4];
    for (int k = 0; k < d.size(); ++k) {
        if (!m.test(k))
            continue;
        int c = d.neighbors(k, nb);
        for (int q = 0; q < c; ++q)
            if (!m.test(nb[q]))
                ++faces;
    }
    return d.dim() == 1 ? static_cast<double>(faces) : faces * d.h();
}

std::vector<Mask> connected_components(const Mask& m, const Domain& d)
{
    std::vector<Mask> out;
    std::vector<char> seen(d.size(), 0);
    std::vector<int> stack;
    int nb[4];
    for (int k = 0; k < d.size(); ++k) {
        if (!m.test(k) || seen[k])
            continue;
        Mask comp(d);
        stack.push_back(k);
        seen[k] = 1;
        while (!stack.empty()) {
            int c = stack.back();
            stack.pop_back();
            comp.set(c);
            int n = d.neighbors(c, nb);
            for (int q = 0; q < n; ++q) {
                if (m.test(nb[q]) && !seen[nb[q]]) {
                    seen[nb[q]] = 1;
                    stack.push_back(nb[q]);
                }
            }
        }
        out.push_back(std::move(comp));
    }
    return out;
}

std::vector<int> free_boundary_cells(const Mask& m, const Domain& d)
{
    std::vector<int> out;
    int nb[4];
    for (int k = 0; k < d.size(); ++k) {
        if (!m.test(k))
            continue;
        int c = d.neighbors(k, nb);
        for (int q = 0; q < c; ++q) {
            if (!m.test(nb[q]) && !d.is_obstacle(nb[q])) {
                out.push_back(k);
                break;
            }
        }
    }
    return out;
}

void write_mask_pgm(const std::string& path, const Mask& m, const Domain& d, double t, double F)
{
    if (m.size() != d.size())
        throw DomainMismatch("mask does not belong to this domain");
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path);
    char buf[96];
    std::snprintf(buf, sizeof buf, "# t=%.17g F=%.17g", t, F);
    out << "P2\n" << buf << "\n" << d.nx() << " " << d.ny() << "\n255\n";
    for (int j = 0; j < d.ny(); ++j) {
        for (int i = 0; i < d.nx(); ++i) {
            int k = d.index(i, j);
            out << (i ? " " : "") << (d.is_obstacle(k) ? 128 : m.test(k) ? 255 : 0);
        }
        out << "\n";
    }
    if (!out)
        throw Error("write failed: " + path);
}

Mask read_mask_pgm(const std::string& path, const Domain& d)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read " + path);
    std::stringstream body;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        body << line.substr(0, hash) << "\n";
    }
    std::string magic;
    int nx = 0, ny = 0, maxv = 0;
    body >> magic >> nx >> ny >> maxv;
    if (magic != "P2" || !body)
        throw InvalidArgument(path + ": not a plain PGM (P2) file");
    if (nx != d.nx() || ny != d.ny())
        throw DomainMismatch(path + ": size " + std::to_string(nx) + "x" + std::to_string(ny) +
                             " does not match the domain");
    Mask m(d);
    for (int k = 0; k < d.size(); ++k) {
        int v = -1;
        if (!(body >> v))
            throw InvalidArgument(path + ": truncated pixel data");
        if (v == 128 && !d.is_obstacle(k))
            throw InvalidArgument(path + ": obstacle pixel at a non-obstacle cell");
        if (v == maxv)
            m.set(k);
        else if (v != 0 && v != 128)
            throw InvalidArgument(path + ": pixel values must be 0, 128 or " + std::to_string(maxv));
    }
    m.validate(d);
    return m;
}

} // namespace droplet
