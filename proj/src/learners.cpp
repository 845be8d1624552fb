#include "evdag/learners.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "evdag/errors.hpp"
#include "evdag/subsets.hpp"

namespace evdag {

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::exhaustive: return "exhaustive";
        case Algorithm::lasso: return "lasso";
        case Algorithm::adaptive: return "adaptive";
        case Algorithm::variance_baseline: return "variance_baseline";
    }
    return "exhaustive";
}

Algorithm parse_algorithm(std::string_view text) {
    if (text == "exhaustive") return Algorithm::exhaustive;
    if (text == "lasso") return Algorithm::lasso;
    if (text == "adaptive") return Algorithm::adaptive;
    if (text == "variance_baseline" || text == "baseline") return Algorithm::variance_baseline;
    throw InvalidParams("unknown algorithm '" + std::string(text) + "'");
}

WeightedDag LearnedStructure::to_dag() const {
    std::vector<Edge> edges;
    for (int v = 0; v < n; ++v)
        for (const auto& [p, w] : parents[v]) edges.push_back({p, v, w});
    return validate_and_order(n, edges);
}

std::vector<int> LearnedStructure::parent_indices(int v) const {
    std::vector<int> out;
    for (const auto& pw : parents.at(v)) out.push_back(pw.first);
    return out;
}

double LambdaMode::resolve(int n, int m, double r_hat) const {
    if (kind == Kind::fixed) return value;
    const double r = R.value_or(r_hat);
    return c * r * std::sqrt(std::log(static_cast<double>(n) / delta) / static_cast<double>(m));
}

double LearnerConfig::mse_cutoff() const {
    const double b = b_min.value();
    return sigma2 * (1.0 + b * b / 2.0);
}

double LearnerConfig::coef_accept() const { return b_min.value() / 2.0; }

double LearnerConfig::baseline_gamma() const {
    if (gamma) return *gamma;
    const double b = b_min.value();
    return sigma2 * b * b / 2.0;
}

void LearnerConfig::validate(Algorithm a) const {
    if (!(sigma2 > 0.0)) throw InvalidParams("sigma2 must be positive");
    if (d && *d < 1) throw InvalidParams("d must be at least 1");
    if (a == Algorithm::adaptive) {
        if (!(c1 > 0.0)) throw InvalidParams("c1 must be positive");
        if (!(b_floor > 0.0 && b_floor <= 1.0)) throw InvalidParams("b_floor must lie in (0, 1]");
        return;
    }
    if (!d) throw InvalidParams("d is required for " + std::string(to_string(a)));
    if (!b_min || !(*b_min > 0.0)) throw InvalidParams("b_min is required and must be positive");
    if (a == Algorithm::lasso) {
        if (lambda.kind == LambdaMode::Kind::fixed && !(lambda.value >= 0.0))
            throw InvalidParams("lambda must be nonnegative");
        if (lambda.kind == LambdaMode::Kind::theoretical &&
            (!(lambda.c > 0.0) || !(lambda.delta > 0.0 && lambda.delta < 1.0) || (lambda.R && !(*lambda.R > 0.0))))
            throw InvalidParams("theoretical lambda needs c > 0, 0 < delta < 1, R > 0");
    }
    if (a == Algorithm::variance_baseline && gamma && !(*gamma >= 0.0)) throw InvalidParams("gamma must be nonnegative");
}

double SampleRegression::variance(int i) const { return empirical_variance(data_.col(i)); }

RegressionResult SampleRegression::regress(int i, std::span<const int> J) const {
    return ols_columns(data_, i, J);
}

RegressionResult PopulationRegression::regress(int i, std::span<const int> J) const {
    RegressionResult r;
    r.columns.assign(J.begin(), J.end());
    r.coefficients = population_coefficients(pair_, i, J);
    r.mse = conditional_variance(pair_, i, J);
    return r;
}

namespace {

std::string set_str(std::span<const int> J) {
    std::string s = "{";
    for (std::size_t k = 0; k < J.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(J[k]);
    }
    return s + "}";
}

RegressionResult regress_ctx(const RegressionSource& src, int i, std::span<const int> J, LearnerDiagnostics& diag) {
    ++diag.regressions;
    try {
        return src.regress(i, J);
    } catch (const RankDeficient& e) {
        throw RankDeficient("regressing node " + std::to_string(i) + " on " + set_str(J) + ": " + e.what());
    }
}

// Per-node memo of regressions keyed by the sorted regressor set.
class NodeCache {
public:
    NodeCache(const RegressionSource& src, int node, LearnerDiagnostics& diag) : src_(src), node_(node), diag_(diag) {}

    const RegressionResult& get(const std::vector<int>& sorted_set) {
        ++diag_.subsets;
        auto it = memo_.find(sorted_set);
        if (it != memo_.end()) return it->second;
        return memo_.emplace(sorted_set, regress_ctx(src_, node_, sorted_set, diag_)).first->second;
    }

private:
    const RegressionSource& src_;
    int node_;
    LearnerDiagnostics& diag_;
    std::map<std::vector<int>, RegressionResult> memo_;
};

std::vector<int> sorted_copy(std::span<const int> v) {
    std::vector<int> out(v.begin(), v.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> set_minus(const std::vector<int>& S, const std::vector<int>& J) {
    std::vector<int> out;
    std::set_difference(S.begin(), S.end(), J.begin(), J.end(), std::back_inserter(out));
    return out;
}

// The J/K search shared by the exhaustive and adaptive Phase 2. `k_fails`
// decides whether a coefficient on a K-node disqualifies J.
template <class Fails>
std::optional<std::vector<int>> find_passing_subset(NodeCache& cache, const std::vector<int>& S, int d, Fails&& k_fails) {
    const std::size_t jsize = std::min<std::size_t>(S.size(), static_cast<std::size_t>(d));
    std::optional<std::vector<int>> chosen;
    for_each_subset(S, jsize, [&](const std::vector<int>& J) {
        const std::vector<int> rest = set_minus(S, J);
        const std::size_t kmax = std::min<std::size_t>(rest.size(), static_cast<std::size_t>(d));
        const bool failed = for_each_subset_upto(rest, 1, kmax, [&](const std::vector<int>& K) {
            std::vector<int> U;
            std::merge(J.begin(), J.end(), K.begin(), K.end(), std::back_inserter(U));
            const RegressionResult& r = cache.get(U);
            for (int k : K) {
                const auto pos = std::lower_bound(U.begin(), U.end(), k) - U.begin();
                if (k_fails(std::abs(r.coefficients[pos]))) return true;
            }
            return false;
        });
        if (!failed) {
            chosen = J;
            return true;
        }
        return false;
    });
    return chosen;
}

std::vector<std::pair<int, double>> strong_parents(const RegressionResult& r, const std::vector<int>& J, double threshold) {
    std::vector<std::pair<int, double>> out;
    for (std::size_t k = 0; k < J.size(); ++k)
        if (std::abs(r.coefficients[k]) >= threshold) out.emplace_back(J[k], r.coefficients[k]);
    return out;
}

LearnedStructure empty_structure(int n, std::span<const int> order, Algorithm a) {
    LearnedStructure s;
    s.n = n;
    s.order.assign(order.begin(), order.end());
    s.parents.assign(n, {});
    s.algorithm = a;
    return s;
}

void check_order(int n, std::span<const int> order) {
    if (static_cast<int>(order.size()) != n) throw SizeMismatch("order length differs from node count");
    std::vector<char> seen(n, 0);
    for (int v : order) {
        if (v < 0 || v >= n || seen[v]) throw InvalidParams("order is not a permutation");
        seen[v] = 1;
    }
}

}  // namespace

std::vector<int> order_exhaustive(const RegressionSource& src, const LearnerConfig& cfg, LearnerDiagnostics* diag_out) {
    cfg.validate(Algorithm::exhaustive);
    LearnerDiagnostics local;
    LearnerDiagnostics& diag = diag_out ? *diag_out : local;
    const int n = src.num_nodes();
    const int d = *cfg.d;
    const double cutoff = cfg.mse_cutoff();

    std::vector<int> T;
    std::vector<char> inT(n, 0);
    for (int v = 0; v < n; ++v)
        if (src.variance(v) <= cutoff) {
            T.push_back(v);
            inT[v] = 1;
        }
    while (static_cast<int>(T.size()) < n) {
        ++diag.order_sweeps;
        bool appended = false;
        for (int i = 0; i < n; ++i) {
            if (inT[i]) continue;
            const std::vector<int> sortedT = sorted_copy(T);
            const std::size_t k = std::min<std::size_t>(sortedT.size(), static_cast<std::size_t>(d));
            const bool found = for_each_subset(sortedT, k, [&](const std::vector<int>& J) {
                ++diag.subsets;
                return regress_ctx(src, i, J, diag).mse <= cutoff;
            });
            if (found) {
                T.push_back(i);
                inT[i] = 1;
                appended = true;
            }
        }
        if (!appended)
            throw OrderStalled("no remaining node passed the MSE test with " + std::to_string(T.size()) + " of " +
                               std::to_string(n) + " nodes ordered");
    }
    return T;
}

std::vector<int> order_exhaustive(const SampleMatrix& data, const LearnerConfig& cfg) {
    return order_exhaustive(SampleRegression(data.data), cfg);
}

LearnedStructure parents_exhaustive(const RegressionSource& src, std::span<const int> order, const LearnerConfig& cfg) {
    cfg.validate(Algorithm::exhaustive);
    const int n = src.num_nodes();
    check_order(n, order);
    const int d = *cfg.d;
    const double thr = cfg.coef_accept();
    LearnedStructure out = empty_structure(n, order, Algorithm::exhaustive);
    for (std::size_t p = 1; p < order.size(); ++p) {
        const int i = order[p];
        const std::vector<int> S = sorted_copy(order.subspan(0, p));
        NodeCache cache(src, i, out.diagnostics);
        auto J = find_passing_subset(cache, S, d, [thr](double c) { return c >= thr; });
        if (!J) throw NoPassingSubset("no candidate parent set passed for node " + std::to_string(i));
        out.parents[i] = strong_parents(cache.get(*J), *J, thr);
    }
    return out;
}

LearnedStructure parents_exhaustive(const SampleMatrix& data, std::span<const int> order, const LearnerConfig& cfg) {
    return parents_exhaustive(SampleRegression(data.data), order, cfg);
}

LearnedStructure learn_exhaustive(const RegressionSource& src, const LearnerConfig& cfg) {
    LearnerDiagnostics phase1;
    std::vector<int> order = order_exhaustive(src, cfg, &phase1);
    LearnedStructure out = parents_exhaustive(src, order, cfg);
    out.diagnostics.regressions += phase1.regressions;
    out.diagnostics.subsets += phase1.subsets;
    out.diagnostics.order_sweeps = phase1.order_sweeps;
    return out;
}

LearnedStructure learn_exhaustive(const SampleMatrix& data, const LearnerConfig& cfg) {
    return learn_exhaustive(SampleRegression(data.data), cfg);
}

LearnedStructure learn_lasso(const SampleMatrix& sample_data, const LearnerConfig& cfg) {
    cfg.validate(Algorithm::lasso);
    const Eigen::MatrixXd& data = sample_data.data;
    const int n = static_cast<int>(data.cols());
    const int m = static_cast<int>(data.rows());
    const int d = *cfg.d;
    const double cutoff = cfg.mse_cutoff();
    const double thr = cfg.coef_accept();

    double r_hat = 0.0;
    for (int v = 0; v < n; ++v) r_hat = std::max(r_hat, std::sqrt(empirical_variance(data.col(v))));
    const double lambda = cfg.lambda.resolve(n, m, r_hat);

    LearnedStructure out = empty_structure(n, {}, Algorithm::lasso);
    LearnerDiagnostics& diag = out.diagnostics;
    std::vector<int> T;
    std::vector<char> inT(n, 0);
    for (int v = 0; v < n; ++v)
        if (empirical_variance(data.col(v)) <= cutoff) {
            T.push_back(v);
            inT[v] = 1;
        }
    while (static_cast<int>(T.size()) < n) {
        ++diag.order_sweeps;
        const Eigen::MatrixXd XT = select_columns(data, T);
        std::vector<int> batch;
        for (int i = 0; i < n; ++i) {
            if (inT[i]) continue;
            LassoResult lr = lasso(XT, data.col(i), lambda, cfg.lasso);
            ++diag.lasso_calls;
            diag.lasso_sweeps += lr.iterations;
            if (!lr.converged) ++diag.lasso_not_converged;
            if (lr.polished) ++diag.lasso_polished;
            std::vector<int> J;
            for (std::size_t k = 0; k < T.size(); ++k)
                if (std::abs(lr.coefficients[static_cast<Eigen::Index>(k)]) >= thr) J.push_back(T[k]);
            if (static_cast<int>(J.size()) > d) continue;
            std::sort(J.begin(), J.end());
            RegressionResult r = regress_ctx(SampleRegression(data), i, J, diag);
            if (r.mse <= cutoff) {
                batch.push_back(i);
                out.parents[i] = strong_parents(r, J, thr);
            }
        }
        if (batch.empty())
            throw OrderStalled("lasso sweep accepted no node with " + std::to_string(T.size()) + " of " +
                               std::to_string(n) + " nodes ordered");
        for (int i : batch) {
            T.push_back(i);
            inT[i] = 1;
        }
    }
    out.order = T;
    return out;
}

LearnedStructure learn_adaptive(const RegressionSource& src, std::optional<int> d_given, const LearnerConfig& cfg) {
    cfg.validate(Algorithm::adaptive);
    const int n = src.num_nodes();
    const int m = src.num_samples();
    if (d_given && *d_given < 1) throw InvalidParams("d must be at least 1");
    LearnedStructure out = empty_structure(n, {}, Algorithm::adaptive);
    LearnerDiagnostics& diag = out.diagnostics;

    int first = 0;
    double s2 = src.variance(0);
    for (int v = 1; v < n; ++v) {
        const double var = src.variance(v);
        if (var < s2) {
            s2 = var;
            first = v;
        }
    }
    diag.sigma2_hat = s2;

    // Phase 1.
    std::vector<int> T{first};
    std::vector<char> inT(n, 0);
    inT[first] = 1;
    int d_hat = 1;
    while (static_cast<int>(T.size()) < n) {
        ++diag.order_sweeps;
        const double slack = m > 0 ? cfg.c1 * std::sqrt(d_hat * std::log(static_cast<double>(n)) / m) : 1e-9;
        const double cutoff = s2 * (1.0 + slack);
        bool found = false;
        for (int i = 0; i < n; ++i) {
            if (inT[i]) continue;
            const std::vector<int> sortedT = sorted_copy(T);
            const bool ok = for_each_subset_upto(sortedT, 0, static_cast<std::size_t>(d_hat), [&](const std::vector<int>& J) {
                ++diag.subsets;
                return regress_ctx(src, i, J, diag).mse <= cutoff;
            });
            if (ok) {
                T.push_back(i);
                inT[i] = 1;
                found = true;
            }
        }
        if (!found) {
            if (d_hat >= n - 1)
                throw OrderStalled("adaptive ordering stalled at d_hat = " + std::to_string(d_hat));
            ++d_hat;
        }
    }
    diag.d_hat = d_hat;
    out.order = T;

    // Phase 2.
    const int d = d_given.value_or(d_hat);
    double b_hat = 1.0;
    for (std::size_t p = 1; p < T.size(); ++p) {
        const int i = T[p];
        const std::vector<int> S = sorted_copy(std::span<const int>(T).subspan(0, p));
        NodeCache cache(src, i, diag);
        while (true) {
            const double hi = b_hat, lo = b_hat / 40.0;
            auto J = find_passing_subset(cache, S, d, [hi, lo](double c) { return c > lo && c < hi; });
            if (J) {
                out.parents[i] = strong_parents(cache.get(*J), *J, b_hat);
                break;
            }
            b_hat /= 2.0;
            if (b_hat < cfg.b_floor)
                throw BMinExhausted("no parent set separated coefficients for node " + std::to_string(i) +
                                    " above b_hat floor");
        }
    }
    diag.b_hat = b_hat;
    return out;
}

LearnedStructure learn_adaptive(const SampleMatrix& data, std::optional<int> d, const LearnerConfig& cfg) {
    return learn_adaptive(SampleRegression(data.data), d, cfg);
}

LearnedStructure parents_variance_baseline(const RegressionSource& src, std::span<const int> order, int d,
                                           double gamma) {
    const int n = src.num_nodes();
    check_order(n, order);
    if (d < 1) throw InvalidParams("d must be at least 1");
    if (!(gamma >= 0.0)) throw InvalidParams("gamma must be nonnegative");
    LearnedStructure out = empty_structure(n, order, Algorithm::variance_baseline);
    for (std::size_t p = 1; p < order.size(); ++p) {
        const int i = order[p];
        const std::vector<int> S = sorted_copy(order.subspan(0, p));
        NodeCache cache(src, i, out.diagnostics);
        const std::size_t k = std::min<std::size_t>(S.size(), static_cast<std::size_t>(d));
        std::vector<int> best;
        double best_mse = 0.0;
        bool have = false;
        for_each_subset(S, k, [&](const std::vector<int>& J) {
            const double mse = cache.get(J).mse;
            if (!have || mse < best_mse) {
                best = J;
                best_mse = mse;
                have = true;
            }
            return false;
        });
        const RegressionResult full = cache.get(best);
        for (std::size_t a = 0; a < best.size(); ++a) {
            std::vector<int> drop = best;
            drop.erase(drop.begin() + static_cast<std::ptrdiff_t>(a));
            if (cache.get(drop).mse - full.mse >= gamma) out.parents[i].emplace_back(best[a], full.coefficients[a]);
        }
    }
    return out;
}

LearnedStructure parents_variance_baseline(const SampleMatrix& data, std::span<const int> order, int d, double gamma) {
    return parents_variance_baseline(SampleRegression(data.data), order, d, gamma);
}

LearnedStructure learn(Algorithm a, const SampleMatrix& data, const LearnerConfig& cfg) {
    switch (a) {
        case Algorithm::exhaustive: return learn_exhaustive(data, cfg);
        case Algorithm::lasso: return learn_lasso(data, cfg);
        case Algorithm::adaptive: return learn_adaptive(data, cfg.d, cfg);
        case Algorithm::variance_baseline: {
            cfg.validate(a);
            SampleRegression src(data.data);
            LearnerDiagnostics phase1;
            std::vector<int> order = order_exhaustive(src, cfg, &phase1);
            LearnedStructure out = parents_variance_baseline(src, order, *cfg.d, cfg.baseline_gamma());
            out.diagnostics.regressions += phase1.regressions;
            out.diagnostics.subsets += phase1.subsets;
            out.diagnostics.order_sweeps = phase1.order_sweeps;
            return out;
        }
    }
    throw InvalidParams("unknown algorithm");
}

void write_learned_structure(std::ostream& out, const LearnedStructure& s) {
    out << "# order=";
    for (std::size_t k = 0; k < s.order.size(); ++k) out << (k ? "," : "") << s.order[k];
    out << '\n' << "# algorithm=" << to_string(s.algorithm) << '\n';
    write_edge_list(out, s.to_dag());
}

LearnedStructure read_learned_structure(std::istream& in) {
    std::stringstream body;
    body << in.rdbuf();
    std::string text = body.str();
    LearnedStructure s;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("# order=", 0) == 0) {
            std::istringstream ss(line.substr(8));
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                try {
                    s.order.push_back(std::stoi(tok));
                } catch (const std::logic_error&) {
                    throw ParseError("bad order entry '" + tok + "'");
                }
            }
        } else if (line.rfind("# algorithm=", 0) == 0) {
            s.algorithm = parse_algorithm(line.substr(12));
        }
    }
    std::istringstream edges(text);
    WeightedDag g = read_edge_list(edges);
    s.n = g.num_nodes();
    s.parents.assign(s.n, {});
    for (const Edge& e : g.edges()) s.parents[e.child].emplace_back(e.parent, e.weight);
    if (s.order.empty()) s.order = g.topo_order();
    check_order(s.n, s.order);
    return s;
}

}  // namespace evdag
