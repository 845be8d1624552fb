#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "evdag/dag_model.hpp"
#include "evdag/learners.hpp"

namespace testing {

// Hand-rolled generator: random n in [lo, hi], each forward pair (in a random
// node order) becomes an edge with probability p, capped at `max_in` parents.
// Weights are drawn from `grid` when given, else from +-[0.5, 1].
inline evdag::WeightedDag random_graph(std::mt19937_64& rng, int lo, int hi, double p, int max_in,
                                       const std::vector<double>& grid = {}) {
    std::uniform_int_distribution<int> nd(lo, hi);
    const int n = nd(rng);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::bernoulli_distribution coin(p);
    std::uniform_real_distribution<double> mag(0.5, 1.0);
    std::vector<evdag::Edge> edges;
    for (int j = 1; j < n; ++j) {
        int taken = 0;
        for (int i = 0; i < j && taken < max_in; ++i) {
            if (!coin(rng)) continue;
            double w;
            if (!grid.empty()) {
                w = grid[std::uniform_int_distribution<std::size_t>(0, grid.size() - 1)(rng)];
            } else {
                w = mag(rng) * (coin(rng) ? 1.0 : -1.0);
            }
            edges.push_back({perm[i], perm[j], w});
            ++taken;
        }
    }
    return evdag::validate_and_order(n, edges);
}

// Covariance by explicit general inversion, independent of the library path.
inline Eigen::MatrixXd dense_sigma(const evdag::WeightedDag& g, double sigma2 = 1.0) {
    const int n = g.num_nodes();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges()) B(e.parent, e.child) = e.weight;
    Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(n, n) - B).inverse();
    return sigma2 * inv.transpose() * inv;
}

inline std::set<std::pair<int, int>> edge_set(const evdag::WeightedDag& g) {
    std::set<std::pair<int, int>> s;
    for (const auto& e : g.edges()) s.emplace(e.parent, e.child);
    return s;
}

inline std::set<std::pair<int, int>> edge_set(const evdag::LearnedStructure& l) {
    std::set<std::pair<int, int>> s;
    for (int v = 0; v < l.n; ++v)
        for (const auto& pw : l.parents[v]) s.emplace(pw.first, v);
    return s;
}

}  // namespace testing
