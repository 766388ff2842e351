#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace droplet {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Masks or profiles built on different grids were combined.
struct DomainMismatch : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct HysteresisParams {
    double mu_plus = 0.0;
    double mu_minus = 0.0;

    double q_plus() const { return 1.0 + mu_plus; }
    double q_minus() const { return 1.0 - mu_minus; }
    void validate() const;
};

enum class CellKind : std::uint8_t { Interior = 0, Obstacle = 1, InnerBoundary = 2, OuterBoundary = 3 };

struct Disk {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 1.0;
};

class Domain {
public:
    Domain() = default;

    // obstacle[k] marks obstacle cells in row-major order (k = j*nx + i).
    static Domain from_obstacle(int dim, int nx, int ny, double h, double x0, double y0,
                                const std::vector<bool>& obstacle);

    // 1d half-line: cell 0 is the obstacle, cell 1 sits at x = 0, cell k at x = (k-1)h.
    static Domain halfline(int n, double h);

    // 2d box of nx*ny cells centred at the origin with disk obstacles.
    static Domain box_with_disks(int nx, int ny, double h, const std::vector<Disk>& disks);

    int dim() const { return dim_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int size() const { return nx_ * ny_; }
    double h() const { return h_; }
    double cell_measure() const { return dim_ == 1 ? h_ : h_ * h_; }
    double edge_weight() const { return dim_ == 1 ? 1.0 / h_ : 1.0; }
    std::uint64_t id() const { return id_; }

    int index(int i, int j) const { return j * nx_ + i; }
    int ix(int k) const { return k % nx_; }
    int iy(int k) const { return k / nx_; }
    std::array<double, 2> center(int k) const;
    CellKind kind(int k) const { return kind_[k]; }
    bool is_obstacle(int k) const { return kind_[k] == CellKind::Obstacle; }

    // 4-neighbours (2 in 1d) inside the box, obstacle cells included. Returns count.
    int neighbors(int k, int* out) const;
    // 8-neighbours (2 in 1d) inside the box.
    int neighbors8(int k, int* out) const;

    const std::vector<int>& inner_boundary() const { return inner_; }
    const std::vector<CellKind>& kinds() const { return kind_; }
    const std::vector<Disk>& disks() const { return disks_; }

    void require_same(const Domain& other) const;

private:
    void classify(const std::vector<bool>& obstacle);

    int dim_ = 2;
    int nx_ = 0;
    int ny_ = 1;
    double h_ = 1.0;
    double x0_ = 0.0;
    double y0_ = 0.0;
    std::vector<CellKind> kind_;
    std::vector<int> inner_;
    std::vector<Disk> disks_;
    std::uint64_t id_ = 0;
};

class Mask {
public:
    Mask() = default;
    explicit Mask(const Domain& d);

    // Inner boundary cells only.
    static Mask inner_boundary(const Domain& d);
    // Inner boundary plus every interior cell whose centre satisfies pred.
    static Mask rasterize(const Domain& d, const std::function<bool(double, double)>& pred);
    // Inner boundary plus interior cells with centre inside any of the given disks (annular droplets).
    static Mask disks(const Domain& d, const std::vector<Disk>& disks);

    bool test(int k) const { return (bits_[k >> 6] >> (k & 63)) & 1u; }
    void set(int k) { bits_[k >> 6] |= (std::uint64_t{1} << (k & 63)); }
    void reset(int k) { bits_[k >> 6] &= ~(std::uint64_t{1} << (k & 63)); }
    void assign(int k, bool v) { v ? set(k) : reset(k); }

    int size() const { return n_; }
    std::uint64_t domain_id() const { return domain_id_; }
    long count() const;
    const std::vector<std::uint64_t>& words() const { return bits_; }

    bool operator==(const Mask& o) const { return domain_id_ == o.domain_id_ && bits_ == o.bits_; }
    bool operator!=(const Mask& o) const { return !(*this == o); }

    bool subset_of(const Mask& o) const;
    Mask operator|(const Mask& o) const;
    Mask operator&(const Mask& o) const;
    Mask minus(const Mask& o) const;

    // Throws InvalidArgument if the mask misses inner boundary cells or touches obstacle/outer cells.
    void validate(const Domain& d) const;

    void require_same(const Mask& o) const;

private:
    int n_ = 0;
    std::uint64_t domain_id_ = 0;
    std::vector<std::uint64_t> bits_;
};

long count_minus(const Mask& a, const Mask& b); // |a \ b| in cells

double measure(const Mask& m, const Domain& d);

// mu_plus |b \ a| + mu_minus |a \ b|
double diss(const Mask& a, const Mask& b, const Domain& d, const HysteresisParams& p);

// lhs = Diss(a,b) + Diss(b,c) - Diss(a,c), rhs = (mu_plus+mu_minus)(|b\(a∪c)| + |(a∩c)\b|) h^d.
// The identity is checked on integer counts: the mu_plus and mu_minus
// coefficients of lhs must each equal rhs_cells.
struct TriangleResult {
    double lhs = 0.0;
    double rhs = 0.0;
    long lhs_plus_cells = 0;
    long lhs_minus_cells = 0;
    long rhs_cells = 0;
    bool exact() const { return lhs_plus_cells == rhs_cells && lhs_minus_cells == rhs_cells; }
};

TriangleResult triangle_defect(const Mask& a, const Mask& b, const Mask& c, const Domain& d,
                               const HysteresisParams& p);

// Symmetric Hausdorff distance between cell-centre sets.
double hausdorff_distance(const Mask& a, const Mask& b, const Domain& d);

// Faces between the mask and its complement inside the box, times h^{d-1}.
double perimeter(const Mask& m, const Domain& d);

// 4-connected components (2-connected in 1d), ordered by smallest cell index.
std::vector<Mask> connected_components(const Mask& m, const Domain& d);

// Free boundary: wet cells with a dry non-obstacle 4-neighbour.
std::vector<int> free_boundary_cells(const Mask& m, const Domain& d);

// Plain PGM (P2), row-major from k = 0: 0 dry, 255 wet, 128 obstacle.
// The comment line carries t and F.
void write_mask_pgm(const std::string& path, const Mask& m, const Domain& d, double t, double F);
Mask read_mask_pgm(const std::string& path, const Domain& d);

} // namespace droplet
