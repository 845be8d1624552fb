#include "evdag/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "evdag/errors.hpp"

namespace evdag {

namespace {

std::set<std::pair<int, int>> edge_set(const WeightedDag& g) {
    std::set<std::pair<int, int>> out;
    for (const Edge& e : g.edges()) out.emplace(e.parent, e.child);
    return out;
}

EdgeConfusion confusion_of(const std::set<std::pair<int, int>>& est, const std::set<std::pair<int, int>>& truth) {
    EdgeConfusion c;
    for (const auto& e : est)
        if (!truth.count(e)) ++c.fp;
    for (const auto& e : truth)
        if (!est.count(e)) ++c.fn;
    return c;
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m, const char* name) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw NotSPD(std::string(name) + " is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NotSPD(std::string(name) + " is not positive definite");
    return llt;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

EdgeConfusion edge_confusion(const WeightedDag& estimate, const WeightedDag& truth) {
    if (estimate.num_nodes() != truth.num_nodes())
        throw SizeMismatch("estimate has " + std::to_string(estimate.num_nodes()) + " nodes, truth has " +
                           std::to_string(truth.num_nodes()));
    return confusion_of(edge_set(estimate), edge_set(truth));
}

EdgeConfusion edge_confusion(const LearnedStructure& estimate, const WeightedDag& truth) {
    if (estimate.n != truth.num_nodes())
        throw SizeMismatch("estimate has " + std::to_string(estimate.n) + " nodes, truth has " +
                           std::to_string(truth.num_nodes()));
    std::set<std::pair<int, int>> est;
    for (int v = 0; v < estimate.n; ++v)
        for (const auto& pw : estimate.parents[v]) est.emplace(pw.first, v);
    return confusion_of(est, edge_set(truth));
}

double log_det_spd(const Eigen::MatrixXd& spd) {
    auto llt = checked_llt(spd, "matrix");
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double gaussian_kl(const Eigen::MatrixXd& sigma_p, const Eigen::MatrixXd& sigma_q) {
    if (sigma_p.rows() != sigma_q.rows() || sigma_p.cols() != sigma_q.cols() || sigma_p.rows() != sigma_p.cols())
        throw SizeMismatch("gaussian_kl: dimensions differ");
    const auto lp = checked_llt(sigma_p, "sigma_p");
    const auto lq = checked_llt(sigma_q, "sigma_q");
    const double k = static_cast<double>(sigma_p.rows());
    Eigen::MatrixXd Lp = lp.matrixL();
    Eigen::MatrixXd W = lq.matrixL().solve(Lp);  // Lq^{-1} Lp
    const double trace = W.squaredNorm();
    const double logdet_p = 2.0 * lp.matrixLLT().diagonal().array().log().sum();
    const double logdet_q = 2.0 * lq.matrixLLT().diagonal().array().log().sum();
    return std::max(0.0, 0.5 * (trace - k + logdet_q - logdet_p));
}

double fano_sample_bound(int family_size, double max_pairwise_kl) {
    if (family_size < 2) throw InvalidParams("family size must be at least 2");
    if (!(max_pairwise_kl > 0.0)) throw InvalidParams("KL must be positive");
    return (std::log(static_cast<double>(family_size)) / 2.0 - std::log(2.0)) / max_pairwise_kl;
}

double matching_kl_closed_form(double b_min) { return std::pow(b_min, 4) / 2.0; }

double triangle_kl_closed_form(double b_min, double B) { return b_min * b_min / (2.0 * (1.0 + B * B)); }

EnsembleReport verify_ensembles(EnsembleFamily family, int n, const EnsembleParams& params) {
    EnsembleReport rep;
    rep.family = family;
    rep.n = n;
    rep.members = ensemble_size(family, n);
    rep.closed_form = family == EnsembleFamily::matching ? matching_kl_closed_form(params.b_min)
                                                         : triangle_kl_closed_form(params.b_min, params.B);
    std::vector<Eigen::MatrixXd> sig;
    for (int k = 0; k < rep.members; ++k) {
        EnsembleSpec spec{family, n, k, params.b_min, params.b1, params.B};
        sig.push_back(covariance(ensemble_member(spec)).sigma);
    }
    const std::string fam = family == EnsembleFamily::matching ? "matching" : "triangle";
    rep.base_pair_kl = gaussian_kl(sig[1], sig[0]);
    if (std::abs(rep.base_pair_kl - rep.closed_form) > 1e-9)
        throw VerificationFailed(fam + " members (1, 0): KL " + fmt(rep.base_pair_kl) + " differs from closed form " +
                                 fmt(rep.closed_form));
    for (int a = 0; a < rep.members; ++a)
        for (int b = 0; b < rep.members; ++b) {
            if (a == b) continue;
            const double kl = gaussian_kl(sig[a], sig[b]);
            rep.max_pairwise_kl = std::max(rep.max_pairwise_kl, kl);
            if (kl > 2.0 * rep.closed_form + 1e-9)
                throw VerificationFailed(fam + " members (" + std::to_string(a) + ", " + std::to_string(b) + "): KL " +
                                         fmt(kl) + " exceeds twice the closed form");
        }
    if (family == EnsembleFamily::triangle) {
        rep.det_base = std::exp(log_det_spd(sig[0]));
        rep.det_perturbed = std::exp(log_det_spd(sig[1]));
        if (std::abs(rep.det_base - 1.0) > 1e-12 || std::abs(rep.det_perturbed - 1.0) > 1e-12)
            throw VerificationFailed("triangle determinants " + fmt(rep.det_base) + ", " + fmt(rep.det_perturbed) +
                                     " are not 1");
    }
    rep.fano_bound = fano_sample_bound(rep.members, rep.max_pairwise_kl);
    return rep;
}

void ExperimentGrid::validate() const {
    if (n_values.empty() || m_values.empty() || algorithms.empty()) throw InvalidParams("grid lists must be nonempty");
    if (trials < 1) throw InvalidParams("trials must be at least 1");
    if (jobs < 1) throw InvalidParams("jobs must be at least 1");
    if (d < 1) throw InvalidParams("d must be at least 1");
    if (!(b_min > 0.0)) throw InvalidParams("b_min must be positive");
    if (!empty_graphs && !(b_min < b_max)) throw InvalidParams("b_min must be below b_max");
    for (int n : n_values)
        if (n < 1 || (!empty_graphs && n > 1 && d >= n)) throw InvalidParams("each n must exceed d");
    for (int m : m_values)
        if (m < 1) throw InvalidParams("m must be positive");
}

std::uint64_t cell_seed(std::uint64_t base_seed, int n, int m, int trial) {
    return mix_seed(base_seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(m),
                                static_cast<std::uint64_t>(trial)});
}

std::uint64_t sample_seed(std::uint64_t graph_seed) { return mix_seed(graph_seed, {0x73616d706c65ull}); }

std::vector<ExperimentRecord> run_grid(const ExperimentGrid& grid) {
    grid.validate();
    struct Cell {
        int n, m, trial;
    };
    std::vector<Cell> cells;
    for (int n : grid.n_values)
        for (int m : grid.m_values)
            for (int t = 0; t < grid.trials; ++t) cells.push_back({n, m, t});

    LearnerConfig cfg;
    cfg.d = grid.d;
    cfg.b_min = grid.b_min;
    cfg.lambda = grid.lambda;

    std::vector<std::vector<ExperimentRecord>> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t c = next++; c < cells.size(); c = next++) {
            const Cell& cell = cells[c];
            const std::uint64_t seed = cell_seed(grid.base_seed, cell.n, cell.m, cell.trial);
            GaussianSem sem = grid.empty_graphs
                                  ? GaussianSem(validate_and_order(cell.n, std::span<const Edge>{}), 1.0, grid.b_min)
                                  : random_dag(cell.n, grid.d, grid.b_min, grid.b_max, seed);
            const CovariancePair pair = covariance(sem);
            const double kappa = condition_number(pair), t = tau(sem), rmax = max_variance(pair);
            const SampleMatrix data = sample(sem, cell.m, sample_seed(seed), grid.noise);
            for (Algorithm a : grid.algorithms) {
                ExperimentRecord r;
                r.n = cell.n;
                r.d = grid.d;
                r.m = cell.m;
                r.trial = cell.trial;
                r.algorithm = a;
                r.seed = seed;
                r.kappa = kappa;
                r.tau = t;
                r.max_var = rmax;
                const auto t0 = std::chrono::steady_clock::now();
                EdgeConfusion ec;
                try {
                    ec = edge_confusion(learn(a, data, cfg), sem.dag());
                } catch (const Error& e) {
                    r.error = e.what();
                    ec.fp = 0;
                    ec.fn = static_cast<int>(sem.dag().num_edges());
                }
                if (grid.timing)
                    r.runtime_ms =
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                r.fp = ec.fp;
                r.fn = ec.fn;
                r.recovered = ec.fp == 0 && ec.fn == 0;
                results[c].push_back(std::move(r));
            }
        }
    };
    const int threads = std::min<int>(grid.jobs, static_cast<int>(cells.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<ExperimentRecord> out;
    for (auto& rs : results)
        for (auto& r : rs) out.push_back(std::move(r));
    std::stable_sort(out.begin(), out.end(), [](const ExperimentRecord& a, const ExperimentRecord& b) {
        return std::tie(a.n, a.m, a.trial, a.algorithm) < std::tie(b.n, b.m, b.trial, b.algorithm);
    });
    return out;
}

void write_results_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
    out << "n,d,m,trial,algorithm,seed,recovered,fp,fn,runtime_ms,kappa,tau,max_var,error\n";
    char rt[40];
    for (const auto& r : records) {
        std::string err = r.error;
        for (char& ch : err)
            if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ch == ',' ? ';' : ' ';
        std::snprintf(rt, sizeof rt, "%.3f", r.runtime_ms);
        out << r.n << ',' << r.d << ',' << r.m << ',' << r.trial << ',' << to_string(r.algorithm) << ',' << r.seed
            << ',' << (r.recovered ? 1 : 0) << ',' << r.fp << ',' << r.fn << ',' << rt << ',' << fmt(r.kappa) << ','
            << fmt(r.tau) << ',' << fmt(r.max_var) << ',' << err << '\n';
    }
}

std::vector<GrowthRow> growth_profile(const std::vector<int>& n_values, int d, double b_min, double b_max,
                                      int graphs_per_n, std::uint64_t base_seed) {
    if (n_values.empty()) throw InvalidParams("n_values must be nonempty");
    if (graphs_per_n < 1) throw InvalidParams("graphs_per_n must be at least 1");
    const bool empty = b_min == 0.0 && b_max == 0.0;
    std::vector<GrowthRow> rows;
    for (int n : n_values) {
        GrowthRow row;
        row.n = n;
        row.graphs = graphs_per_n;
        for (int g = 0; g < graphs_per_n; ++g) {
            GaussianSem sem = empty ? GaussianSem(validate_and_order(n, std::span<const Edge>{}))
                                    : random_dag(n, d, b_min, b_max,
                                                 mix_seed(base_seed, {static_cast<std::uint64_t>(n),
                                                                      static_cast<std::uint64_t>(g)}));
            const CovariancePair pair = covariance(sem);
            row.mean_kappa += condition_number(pair);
            row.mean_tau += tau(sem);
            row.mean_maxvar += max_variance(pair);
        }
        row.mean_kappa /= graphs_per_n;
        row.mean_tau /= graphs_per_n;
        row.mean_maxvar /= graphs_per_n;
        rows.push_back(row);
    }
    return rows;
}

void write_growth_csv(std::ostream& out, const std::vector<GrowthRow>& rows) {
    out << "n,mean_kappa,mean_tau,mean_maxvar,graphs\n";
    for (const auto& r : rows)
        out << r.n << ',' << fmt(r.mean_kappa) << ',' << fmt(r.mean_tau) << ',' << fmt(r.mean_maxvar) << ','
            << r.graphs << '\n';
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidParams("need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidParams("log-log fit needs positive values");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = k * sxx - sx * sx;
    if (den == 0.0) throw InvalidParams("degenerate x values");
    return (k * sxy - sx * sy) / den;
}

}  // namespace evdag
