#pragma once

// Weighted DAGs, equal-variance linear Gaussian SEMs, and the population
// quantities defined on them (covariance, precision, tau, condition number,
// conditional variances and regression coefficients).

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace evdag {

struct Edge {
    int parent = 0;
    int child = 0;
    double weight = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// Immutable weighted DAG. Edges are stored sorted by (parent, child); the
// topological order is computed once at construction (Kahn's algorithm with
// smallest-index-first tie-break), so it is stable across runs.
class WeightedDag {
public:
    WeightedDag() = default;

    int num_nodes() const { return n_; }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<int>& topo_order() const { return topo_order_; }

    // Parent indices of `child`, ascending, and the matching weights.
    const std::vector<int>& parents(int child) const { return parents_.at(child); }
    const std::vector<double>& parent_weights(int child) const { return parent_weights_.at(child); }
    std::vector<int> children(int parent) const;

    std::optional<double> weight(int parent, int child) const;
    bool has_edge(int parent, int child) const { return weight(parent, child).has_value(); }

    int max_in_degree() const;
    double min_abs_weight() const;  // +inf for an edge-free graph

    // Position of each node in topo_order().
    std::vector<int> topo_positions() const;

    // B with B(i, j) = weight of i -> j.
    Eigen::MatrixXd weight_matrix() const;

    std::optional<int> degree_bound() const { return degree_bound_; }
    // Returns a copy carrying the in-degree bound d; throws InvalidParams if
    // some node already has more than d parents.
    WeightedDag with_degree_bound(int d) const;

private:
    friend WeightedDag validate_and_order(int n, std::span<const Edge> edges);

    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<double>> parent_weights_;
    std::vector<int> topo_order_;
    std::optional<int> degree_bound_;
};

// Builds a WeightedDag. Throws CycleDetected, DuplicateEdge, SelfLoop,
// ZeroWeight, or InvalidParams (node index out of range, n < 1).
WeightedDag validate_and_order(int n, std::span<const Edge> edges);
inline WeightedDag validate_and_order(int n, std::initializer_list<Edge> edges) {
    return validate_and_order(n, std::span<const Edge>(edges.begin(), edges.size()));
}

// X_i = sum_j b_{j->i} X_j + eps_i with eps_i ~ N(0, sigma2) for every node.
class GaussianSem {
public:
    GaussianSem() = default;
    // Throws InvalidParams if sigma2 <= 0, b_min <= 0, or some edge weight is
    // smaller in magnitude than a declared b_min.
    explicit GaussianSem(WeightedDag dag, double sigma2 = 1.0, std::optional<double> b_min = std::nullopt);

    const WeightedDag& dag() const { return dag_; }
    double sigma2() const { return sigma2_; }
    std::optional<double> b_min() const { return b_min_; }
    int num_nodes() const { return dag_.num_nodes(); }

private:
    WeightedDag dag_;
    double sigma2_ = 1.0;
    std::optional<double> b_min_;
};

struct CovariancePair {
    Eigen::MatrixXd sigma;  // covariance
    Eigen::MatrixXd theta;  // precision
};

// (I - B^T)^{-1}: column c holds the total effect of a unit shock at node c on
// every node. Computed by forward substitution along the topological order.
Eigen::MatrixXd total_effects(const WeightedDag& dag);

// Sigma = sigma2 * (I-B)^{-T} (I-B)^{-1},  Theta = sigma2^{-1} (I-B)(I-B)^T.
CovariancePair covariance(const GaussianSem& sem);

// Covariance of the same linear structure with per-node noise variances.
// Used for unequal-variance counterexamples.
Eigen::MatrixXd covariance_with_noise(const WeightedDag& dag, std::span<const double> noise_variances);

// Precision matrix assembled entry by entry from the edge weights:
//   Theta_ii = 1 + sum_j b_{i->j}^2
//   Theta_ij = -b_{i->j} - b_{j->i} + sum_l b_{i->l} b_{j->l}
// scaled by 1/sigma2.
Eigen::MatrixXd precision_closed_form(const GaussianSem& sem);

// 1 + max_j sum_{l : j->l} b_{jl}^2.
double tau(const WeightedDag& dag);
inline double tau(const GaussianSem& sem) { return tau(sem.dag()); }

struct SpectrumExtremes {
    double min = 0.0;
    double max = 0.0;
};
// Extreme eigenvalues of a symmetric matrix. Throws NumericalFailure.
SpectrumExtremes spectrum_extremes(const Eigen::MatrixXd& symmetric);

// lambda_max / lambda_min of Sigma. Theta has the same ratio; Sigma is used.
double condition_number(const CovariancePair& pair);
double condition_number(const Eigen::MatrixXd& spd);

// max_i Sigma_ii.
double max_variance(const CovariancePair& pair);

// Sigma_ii - Sigma_iJ Sigma_JJ^{-1} Sigma_Ji; J empty gives Sigma_ii.
// Throws SingularSubblock if Sigma_JJ is not positive definite and
// InvalidParams if i is in J or an index is out of range.
double conditional_variance(const CovariancePair& pair, int i, std::span<const int> J);

// Sigma_JJ^{-1} Sigma_Ji, aligned with J.
Eigen::VectorXd population_coefficients(const CovariancePair& pair, int i, std::span<const int> J);

// Edge-list text format:
//   n=<int>
//   <parent> <child> <weight>
// Weights are written with 17 significant digits. Lines starting with '#'
// are comments; blank lines are ignored.
void write_edge_list(std::ostream& out, const WeightedDag& dag);
WeightedDag read_edge_list(std::istream& in);

}  // namespace evdag
