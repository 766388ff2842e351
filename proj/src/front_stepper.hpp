#pragma once

// Local search on masks with exact energy changes. The inverse of the masked
// Laplacian is kept on the cells near the free boundary and updated by Schur
// complements, so a block of cells along the front can be tested in O(L^3).

#include "droplet/minmove.hpp"

#include <Eigen/Dense>

#include <vector>

namespace droplet::detail {

class FrontStepper {
public:
    FrontStepper(const Domain& d, const HysteresisParams& p, const StepOptions& o);

    void load(const Mask& m, double F);
    void set_forcing(double F);

    struct Stats {
        long flips = 0;
        long moves = 0;
        int sweeps = 0;
    };
    Stats descend(const Mask& prev, Order order);

    const Mask& mask() const { return mask_; }
    double forcing() const { return F_; }
    long refreshes() const { return refreshes_; }

private:
    struct Move {
        double dE = 0.0;
        std::vector<int> cells;
    };

    void refresh();
    void mark_candidates(bool grow);
    void arc(int seed);
    void eval_grow(int seed, const Mask& prev, Move& best);
    void eval_shrink(int seed, const Mask& prev, Move& best);
    bool collective(bool grow, const Mask& prev, double tol, Move& out);
    void apply_grow(const std::vector<int>& B);
    void apply_shrink(const std::vector<int>& R);
    bool tracked_front_ok(const std::vector<int>& cells) const;
    int wet_slots(int cell, int* out) const;
    double sigma(int cell) const;
    int take_slot();

    const Domain* d_;
    HysteresisParams p_;
    StepOptions o_;
    double w_ = 1.0;
    double cellv_ = 1.0;

    Mask mask_;
    double F_ = 1.0;
    std::vector<double> u_;
    std::vector<int> slot_;      // cell -> slot or -1
    std::vector<int> slot_cell_; // slot -> cell or -1
    std::vector<int> free_;
    Eigen::MatrixXd G_;
    int cap_ = 0;
    long since_refresh_ = 0;
    long refreshes_ = 0;

    int bx0_ = 0, bx1_ = 0, by0_ = 0, by1_ = 0; // bounding box of wet cells
    std::vector<char> cand_;
    std::vector<int> cand_list_;
    std::vector<int> stamp_;
    int stamp_id_ = 0;
    std::vector<int> arc_;
    std::vector<int> queue_;
};

} // namespace droplet::detail
