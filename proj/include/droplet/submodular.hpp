#pragma once

#include <functional>
#include <vector>

namespace droplet {

// Fills prefix[k] = f({order[0..k]}) for k = 0..n-1, with f(empty) = 0.
using ChainOracle = std::function<void(const std::vector<int>& order, std::vector<double>& prefix)>;

struct SubmodularResult {
    std::vector<int> set;  // sorted element indices
    double value = 0.0;
    double lower = 0.0;    // certified lower bound on min f
    int iterations = 0;
};

// Minimum-norm-point minimization of a submodular function on {0..n-1}.
// The returned set is the best chain prefix seen, so it is never worse than
// the empty set. `hint` orders the first greedy vertex (ascending). Stops once
// the best value is within `gap` of the lower bound sum_i min(x_i, 0).
SubmodularResult minimize_submodular(int n, const ChainOracle& f,
                                     const std::vector<double>& hint = {},
                                     double gap = 0.0, int max_iter = 0);

} // namespace droplet
