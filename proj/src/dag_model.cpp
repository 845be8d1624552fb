#include "evdag/dag_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <string>

#include "evdag/errors.hpp"

namespace evdag {

namespace {

std::string edge_str(int p, int c) {
    return "(" + std::to_string(p) + "," + std::to_string(c) + ")";
}

void check_node_set(const CovariancePair& pair, int i, std::span<const int> J) {
    const int n = static_cast<int>(pair.sigma.rows());
    if (i < 0 || i >= n) throw InvalidParams("node index " + std::to_string(i) + " out of range");
    for (int j : J) {
        if (j < 0 || j >= n) throw InvalidParams("node index " + std::to_string(j) + " out of range");
        if (j == i) throw InvalidParams("target node " + std::to_string(i) + " is in the conditioning set");
    }
}

Eigen::MatrixXd sub_block(const Eigen::MatrixXd& m, std::span<const int> rows, std::span<const int> cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
    return out;
}

}  // namespace

WeightedDag validate_and_order(int n, std::span<const Edge> edges) {
    if (n < 1) throw InvalidParams("node count must be positive, got " + std::to_string(n));
    WeightedDag g;
    g.n_ = n;
    g.edges_.assign(edges.begin(), edges.end());
    for (const Edge& e : g.edges_) {
        if (e.parent < 0 || e.parent >= n || e.child < 0 || e.child >= n)
            throw InvalidParams("edge " + edge_str(e.parent, e.child) + " has a node outside 0.." +
                                std::to_string(n - 1));
        if (e.parent == e.child) throw SelfLoop("self-loop at node " + std::to_string(e.parent));
        if (e.weight == 0.0 || !std::isfinite(e.weight))
            throw ZeroWeight("edge " + edge_str(e.parent, e.child) + " has zero or non-finite weight");
    }
    std::sort(g.edges_.begin(), g.edges_.end(), [](const Edge& a, const Edge& b) {
        return a.parent != b.parent ? a.parent < b.parent : a.child < b.child;
    });
    for (std::size_t k = 1; k < g.edges_.size(); ++k) {
        if (g.edges_[k].parent == g.edges_[k - 1].parent && g.edges_[k].child == g.edges_[k - 1].child)
            throw DuplicateEdge("duplicate edge " + edge_str(g.edges_[k].parent, g.edges_[k].child));
    }

    g.parents_.assign(n, {});
    g.parent_weights_.assign(n, {});
    std::vector<std::vector<int>> kids(n);
    std::vector<int> indeg(n, 0);
    for (const Edge& e : g.edges_) {
        g.parents_[e.child].push_back(e.parent);
        g.parent_weights_[e.child].push_back(e.weight);
        kids[e.parent].push_back(e.child);
        ++indeg[e.child];
    }
    // Edges are sorted by parent, so each parents_ list is already ascending.

    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) ready.push(v);
    g.topo_order_.reserve(n);
    while (!ready.empty()) {
        int v = ready.top();
        ready.pop();
        g.topo_order_.push_back(v);
        for (int c : kids[v])
            if (--indeg[c] == 0) ready.push(c);
    }
    if (static_cast<int>(g.topo_order_.size()) != n) throw CycleDetected("edge set contains a directed cycle");
    return g;
}

std::vector<int> WeightedDag::children(int parent) const {
    std::vector<int> out;
    for (const Edge& e : edges_)
        if (e.parent == parent) out.push_back(e.child);
    return out;
}

std::optional<double> WeightedDag::weight(int parent, int child) const {
    if (child < 0 || child >= n_) return std::nullopt;
    const auto& ps = parents_[child];
    auto it = std::lower_bound(ps.begin(), ps.end(), parent);
    if (it == ps.end() || *it != parent) return std::nullopt;
    return parent_weights_[child][it - ps.begin()];
}

int WeightedDag::max_in_degree() const {
    int d = 0;
    for (const auto& ps : parents_) d = std::max(d, static_cast<int>(ps.size()));
    return d;
}

double WeightedDag::min_abs_weight() const {
    double w = std::numeric_limits<double>::infinity();
    for (const Edge& e : edges_) w = std::min(w, std::abs(e.weight));
    return w;
}

std::vector<int> WeightedDag::topo_positions() const {
    std::vector<int> pos(n_);
    for (int k = 0; k < n_; ++k) pos[topo_order_[k]] = k;
    return pos;
}

Eigen::MatrixXd WeightedDag::weight_matrix() const {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n_, n_);
    for (const Edge& e : edges_) B(e.parent, e.child) = e.weight;
    return B;
}

WeightedDag WeightedDag::with_degree_bound(int d) const {
    if (d < 0) throw InvalidParams("degree bound must be nonnegative");
    if (max_in_degree() > d)
        throw InvalidParams("max in-degree " + std::to_string(max_in_degree()) + " exceeds bound " +
                            std::to_string(d));
    WeightedDag out = *this;
    out.degree_bound_ = d;
    return out;
}

GaussianSem::GaussianSem(WeightedDag dag, double sigma2, std::optional<double> b_min)
    : dag_(std::move(dag)), sigma2_(sigma2), b_min_(b_min) {
    if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_)) throw InvalidParams("sigma2 must be positive");
    if (b_min_) {
        if (!(*b_min_ > 0.0)) throw InvalidParams("b_min must be positive");
        for (const Edge& e : dag_.edges())
            if (std::abs(e.weight) < *b_min_)
                throw InvalidParams("edge " + edge_str(e.parent, e.child) + " weight below declared b_min");
    }
}

Eigen::MatrixXd total_effects(const WeightedDag& dag) {
    const int n = dag.num_nodes();
    // Row v of M^T is the noise loading of X_v: X_v = eps_v + sum_p b_pv X_p.
    Eigen::MatrixXd Mt = Eigen::MatrixXd::Zero(n, n);
    for (int v : dag.topo_order()) {
        Mt(v, v) = 1.0;
        const auto& ps = dag.parents(v);
        const auto& ws = dag.parent_weights(v);
        for (std::size_t k = 0; k < ps.size(); ++k) Mt.row(v) += ws[k] * Mt.row(ps[k]);
    }
    return Mt;
}

Eigen::MatrixXd covariance_with_noise(const WeightedDag& dag, std::span<const double> noise_variances) {
    if (static_cast<int>(noise_variances.size()) != dag.num_nodes())
        throw SizeMismatch("noise variance vector length differs from node count");
    Eigen::MatrixXd L = total_effects(dag);
    Eigen::VectorXd d(noise_variances.size());
    for (std::size_t k = 0; k < noise_variances.size(); ++k) {
        if (!(noise_variances[k] > 0.0)) throw InvalidParams("noise variances must be positive");
        d[k] = noise_variances[k];
    }
    Eigen::MatrixXd S = L * d.asDiagonal() * L.transpose();
    return 0.5 * (S + S.transpose());
}

CovariancePair covariance(const GaussianSem& sem) {
    const auto& dag = sem.dag();
    const int n = dag.num_nodes();
    Eigen::MatrixXd L = total_effects(dag);
    CovariancePair out;
    out.sigma = sem.sigma2() * (L * L.transpose());
    out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
    Eigen::MatrixXd IB = Eigen::MatrixXd::Identity(n, n) - dag.weight_matrix();
    out.theta = (IB * IB.transpose()) / sem.sigma2();
    out.theta = 0.5 * (out.theta + out.theta.transpose());
    return out;
}

Eigen::MatrixXd precision_closed_form(const GaussianSem& sem) {
    const auto& dag = sem.dag();
    const int n = dag.num_nodes();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) T(i, i) = 1.0;
    for (const Edge& e : dag.edges()) {
        T(e.parent, e.parent) += e.weight * e.weight;
        T(e.parent, e.child) -= e.weight;
        T(e.child, e.parent) -= e.weight;
    }
    // Co-parents of a common child.
    for (int l = 0; l < n; ++l) {
        const auto& ps = dag.parents(l);
        const auto& ws = dag.parent_weights(l);
        for (std::size_t a = 0; a < ps.size(); ++a)
            for (std::size_t b = a + 1; b < ps.size(); ++b) {
                T(ps[a], ps[b]) += ws[a] * ws[b];
                T(ps[b], ps[a]) += ws[a] * ws[b];
            }
    }
    return T / sem.sigma2();
}

double tau(const WeightedDag& dag) {
    std::vector<double> out_sq(dag.num_nodes(), 0.0);
    for (const Edge& e : dag.edges()) out_sq[e.parent] += e.weight * e.weight;
    double best = 0.0;
    for (double s : out_sq) best = std::max(best, s);
    return 1.0 + best;
}

SpectrumExtremes spectrum_extremes(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalFailure("symmetric eigen-solve did not converge");
    const auto& ev = es.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

double condition_number(const Eigen::MatrixXd& spd) {
    auto ex = spectrum_extremes(spd);
    if (!(ex.min > 0.0)) throw NumericalFailure("matrix is not positive definite");
    return ex.max / ex.min;
}

double condition_number(const CovariancePair& pair) { return condition_number(pair.sigma); }

double max_variance(const CovariancePair& pair) { return pair.sigma.diagonal().maxCoeff(); }

double conditional_variance(const CovariancePair& pair, int i, std::span<const int> J) {
    check_node_set(pair, i, J);
    const double sii = pair.sigma(i, i);
    if (J.empty()) return sii;
    Eigen::MatrixXd SJJ = sub_block(pair.sigma, J, J);
    Eigen::VectorXd SJi(J.size());
    for (std::size_t k = 0; k < J.size(); ++k) SJi[k] = pair.sigma(J[k], i);
    Eigen::LLT<Eigen::MatrixXd> llt(SJJ);
    if (llt.info() != Eigen::Success) throw SingularSubblock("Sigma_JJ is not positive definite");
    Eigen::VectorXd half = llt.matrixL().solve(SJi);
    return sii - half.squaredNorm();
}

Eigen::VectorXd population_coefficients(const CovariancePair& pair, int i, std::span<const int> J) {
    check_node_set(pair, i, J);
    if (J.empty()) return Eigen::VectorXd();
    Eigen::MatrixXd SJJ = sub_block(pair.sigma, J, J);
    Eigen::VectorXd SJi(J.size());
    for (std::size_t k = 0; k < J.size(); ++k) SJi[k] = pair.sigma(J[k], i);
    Eigen::LLT<Eigen::MatrixXd> llt(SJJ);
    if (llt.info() != Eigen::Success) throw SingularSubblock("Sigma_JJ is not positive definite");
    return llt.solve(SJi);
}

void write_edge_list(std::ostream& out, const WeightedDag& dag) {
    out << "n=" << dag.num_nodes() << '\n';
    std::ostringstream line;
    line << std::setprecision(17);
    for (const Edge& e : dag.edges()) {
        line.str("");
        line << e.parent << ' ' << e.child << ' ' << e.weight;
        out << line.str() << '\n';
    }
}

WeightedDag read_edge_list(std::istream& in) {
    std::string line;
    std::optional<int> n;
    std::vector<Edge> edges;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        if (!n) {
            if (line.compare(first, 2, "n=") != 0)
                throw ParseError("line " + std::to_string(lineno) + ": expected 'n=<int>' header");
            std::istringstream ss(line.substr(first + 2));
            int v = 0;
            std::string rest;
            if (!(ss >> v) || (ss >> rest)) throw ParseError("line " + std::to_string(lineno) + ": bad node count");
            n = v;
            continue;
        }
        std::istringstream ss(line);
        Edge e;
        std::string rest;
        if (!(ss >> e.parent >> e.child >> e.weight) || (ss >> rest))
            throw ParseError("line " + std::to_string(lineno) + ": expected '<parent> <child> <weight>'");
        edges.push_back(e);
    }
    if (!n) throw ParseError("missing 'n=<int>' header");
    return validate_and_order(*n, edges);
}

}  // namespace evdag
