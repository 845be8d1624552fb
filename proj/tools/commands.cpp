#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "evdag/dag_model.hpp"
#include "evdag/errors.hpp"
#include "evdag/evaluation.hpp"
#include "evdag/learners.hpp"
#include "evdag/regression.hpp"
#include "evdag/synthesis.hpp"

namespace evdag::cli {

namespace {

// A validation failure attributable to one flag.
class UsageError : public std::runtime_error {
public:
    UsageError(const std::string& flag, const std::string& msg) : std::runtime_error(flag + ": " + msg) {}
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::ifstream open_in(const std::string& flag, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError(flag, "cannot open '" + path + "'");
    return in;
}

// Writes to `path`, or to `fallback` when path is empty.
template <class Fn>
void write_out(const std::string& flag, const std::string& path, std::ostream& fallback, Fn&& fn) {
    if (path.empty()) {
        fn(fallback);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError(flag, "cannot write '" + path + "'");
    fn(f);
    if (!f) throw UsageError(flag, "write to '" + path + "' failed");
}

// Options shared by learn and grid.
struct LassoFlags {
    std::string lambda_mode = "fixed";
    double lambda = 0.01;
    double lambda_c = 0.5;
    double delta = 0.05;
    double R = 0.0;  // 0 means estimate from data
    double tol = 1e-7;
    int max_iter = 10000;

    void add(CLI::App* app) {
        app->add_option("--lambda-mode", lambda_mode, "Lasso penalty rule: fixed or theoretical")
            ->check(CLI::IsMember({"fixed", "theoretical"}))
            ->capture_default_str();
        app->add_option("--lambda", lambda, "Fixed Lasso penalty")->capture_default_str();
        app->add_option("--lambda-c", lambda_c, "Constant c in c*R*sqrt(log(n/delta)/m)")->capture_default_str();
        app->add_option("--delta", delta, "Failure probability in the theoretical penalty")->capture_default_str();
        app->add_option("--R", R, "Variance bound R for the theoretical penalty (0: max column std)")
            ->capture_default_str();
        app->add_option("--tol", tol, "Coordinate-descent tolerance")->capture_default_str();
        app->add_option("--max-iter", max_iter, "Coordinate-descent sweep limit")->capture_default_str();
    }

    LambdaMode mode() const {
        LambdaMode lm;
        lm.kind = lambda_mode == "theoretical" ? LambdaMode::Kind::theoretical : LambdaMode::Kind::fixed;
        if (!(lambda >= 0.0)) throw UsageError("--lambda", "must be nonnegative");
        if (!(lambda_c > 0.0)) throw UsageError("--lambda-c", "must be positive");
        if (!(delta > 0.0 && delta < 1.0)) throw UsageError("--delta", "must lie in (0, 1)");
        if (R < 0.0) throw UsageError("--R", "must be nonnegative");
        lm.value = lambda;
        lm.c = lambda_c;
        lm.delta = delta;
        if (R > 0.0) lm.R = R;
        return lm;
    }

    LassoOptions options() const {
        if (!(tol > 0.0)) throw UsageError("--tol", "must be positive");
        if (max_iter < 1) throw UsageError("--max-iter", "must be positive");
        LassoOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        return o;
    }
};

struct GenerateArgs {
    std::string family = "random";
    int n = 10;
    int d = 4;
    double bmin = 0.5;
    double bmax = 1.0;
    double k = 1.2;
    int height = 3;
    double lambda = 0.84;
    double b = 0.5;
    double b1 = 0.5;
    double B = 1.0;
    int index = 0;
    std::uint64_t seed = 0;
    std::string out;
};

struct SampleArgs {
    std::string graph;
    int m = 1000;
    std::uint64_t seed = 0;
    std::string noise = "gaussian";
    double sigma2 = 1.0;
    std::string out;
};

struct LearnArgs {
    std::string data;
    std::string alg = "exhaustive";
    int d = 0;  // 0: unset (adaptive only)
    double bmin = 0.5;
    double sigma2 = 1.0;
    double c1 = 4.0;
    double gamma = -1.0;  // negative: sigma2 * bmin^2 / 2
    std::uint64_t seed = 0;
    LassoFlags lasso;
    std::string out;
};

struct EvalArgs {
    std::string truth;
    std::string estimate;
};

struct GridArgs {
    std::vector<int> n{10, 15, 20, 25};
    std::vector<int> m{200, 400, 600, 800, 1000};
    int d = 4;
    double bmin = 0.5;
    double bmax = 1.0;
    int trials = 45;
    std::vector<std::string> algs{"exhaustive", "lasso", "variance_baseline"};
    std::uint64_t seed = 0;
    std::string noise = "gaussian";
    bool empty_graphs = false;
    bool timing = false;
    int jobs = 1;
    LassoFlags lasso;
    std::string out;
};

struct VerifyArgs {
    std::string suite = "all";
    double bmin = 0.5;
    double b1 = 0.5;
    double B = 1.0;
    int graphs = 1000;
    std::uint64_t seed = 0;
};

struct GrowthArgs {
    std::vector<int> n{10, 15, 20, 25};
    int d = 4;
    double bmin = 0.5;
    double bmax = 1.0;
    int graphs = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

void print_model_summary(std::ostream& out, const GaussianSem& sem) {
    const CovariancePair pair = covariance(sem);
    out << "n=" << sem.num_nodes() << " edges=" << sem.dag().num_edges() << " tau=" << fmt_short(tau(sem))
        << " kappa=" << fmt_short(condition_number(pair)) << " R=" << fmt_short(max_variance(pair)) << '\n';
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    GaussianSem sem;
    const std::string& f = a.family;
    if (f == "random") {
        if (a.n < 1) throw UsageError("--n", "must be at least 1");
        if (a.d < 1 || (a.n > 1 && a.d >= a.n)) throw UsageError("--d", "must satisfy 1 <= d < n");
        if (!(a.bmin > 0.0)) throw UsageError("--bmin", "must be positive");
        if (!(a.bmax > a.bmin)) throw UsageError("--bmax", "must exceed --bmin");
        sem = random_dag(a.n, a.d, a.bmin, a.bmax, a.seed);
    } else if (f == "chain") {
        if (a.n < 2) throw UsageError("--n", "chain needs at least 2 nodes");
        if (a.k == 0.0) throw UsageError("--k", "must be nonzero");
        sem = chain_dag(a.n, a.k);
    } else if (f == "tree") {
        if (a.height < 1 || a.height > 20) throw UsageError("--height", "must lie in 1..20");
        if (!(a.lambda > 1.0 / std::sqrt(2.0) && a.lambda < 1.0)) throw UsageError("--lambda", "must lie in (1/sqrt(2), 1)");
        sem = tree_dag(a.height, a.lambda);
    } else if (f == "matching" || f == "triangle") {
        const bool m = f == "matching";
        if (m ? (a.n < 2 || a.n % 2) : (a.n < 3 || a.n % 3))
            throw UsageError("--n", m ? "must be even" : "must be divisible by 3");
        const int size = ensemble_size(m ? EnsembleFamily::matching : EnsembleFamily::triangle, a.n);
        if (a.index < 0 || a.index >= size) throw UsageError("--index", "must lie in 0.." + std::to_string(size - 1));
        if (!(a.bmin > 0.0)) throw UsageError("--bmin", "must be positive");
        if (!m && a.b1 == 0.0) throw UsageError("--b1", "must be nonzero");
        sem = ensemble_member({m ? EnsembleFamily::matching : EnsembleFamily::triangle, a.n, a.index, a.bmin, a.b1, a.B});
    } else if (f == "nonident") {
        if (!(a.b > 0.0)) throw UsageError("--b", "must be positive");
        sem = nonidentifiable_pair(a.b).equal_variance;
    } else if (f == "cancel") {
        if (a.b == 0.0) throw UsageError("--b", "must be nonzero");
        sem = path_cancellation_triple(a.b);
    }
    write_out("--out", a.out, out, [&](std::ostream& o) { write_edge_list(o, sem.dag()); });
    print_model_summary(out, sem);
    return kOk;
}

int cmd_sample(const SampleArgs& a, std::ostream& out) {
    if (a.m < 1) throw UsageError("--m", "must be at least 1");
    if (!(a.sigma2 > 0.0)) throw UsageError("--sigma2", "must be positive");
    auto in = open_in("--graph", a.graph);
    WeightedDag g;
    try {
        g = read_edge_list(in);
    } catch (const Error& e) {
        throw UsageError("--graph", e.what());
    }
    SampleMatrix s = sample(GaussianSem(g, a.sigma2), a.m, a.seed, parse_noise_kind(a.noise));
    write_out("--out", a.out, out, [&](std::ostream& o) { write_sample_csv(o, s); });
    return kOk;
}

int cmd_learn(const LearnArgs& a, std::ostream& out, std::ostream& err) {
    const Algorithm alg = parse_algorithm(a.alg);
    LearnerConfig cfg;
    if (a.d < 0) throw UsageError("--d", "must be positive");
    if (a.d > 0) cfg.d = a.d;
    else if (alg != Algorithm::adaptive) throw UsageError("--d", "is required for " + a.alg);
    if (!(a.bmin > 0.0)) throw UsageError("--bmin", "must be positive");
    if (!(a.sigma2 > 0.0)) throw UsageError("--sigma2", "must be positive");
    if (!(a.c1 > 0.0)) throw UsageError("--c1", "must be positive");
    cfg.b_min = a.bmin;
    cfg.sigma2 = a.sigma2;
    cfg.c1 = a.c1;
    if (a.gamma >= 0.0) cfg.gamma = a.gamma;
    cfg.lambda = a.lasso.mode();
    cfg.lasso = a.lasso.options();

    auto in = open_in("--data", a.data);
    SampleMatrix s;
    try {
        s = read_sample_csv(in);
    } catch (const Error& e) {
        throw UsageError("--data", e.what());
    }
    if (cfg.d && *cfg.d >= s.num_nodes() && s.num_nodes() > 1) throw UsageError("--d", "must be below the node count");
    LearnedStructure ls = learn(alg, s, cfg);
    write_out("--out", a.out, out, [&](std::ostream& o) { write_learned_structure(o, ls); });
    const auto& dg = ls.diagnostics;
    err << "algorithm=" << to_string(alg) << " regressions=" << dg.regressions << " subsets=" << dg.subsets;
    if (alg == Algorithm::lasso)
        err << " lasso_calls=" << dg.lasso_calls << " lasso_sweeps=" << dg.lasso_sweeps
            << " lasso_not_converged=" << dg.lasso_not_converged << " lasso_polished=" << dg.lasso_polished;
    if (alg == Algorithm::adaptive)
        err << " sigma2_hat=" << fmt_short(dg.sigma2_hat) << " d_hat=" << dg.d_hat << " b_hat=" << fmt_short(dg.b_hat);
    err << '\n';
    return kOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    auto tin = open_in("--truth", a.truth);
    auto ein = open_in("--estimate", a.estimate);
    WeightedDag truth, est;
    try {
        truth = read_edge_list(tin);
    } catch (const Error& e) {
        throw UsageError("--truth", e.what());
    }
    try {
        est = read_edge_list(ein);
    } catch (const Error& e) {
        throw UsageError("--estimate", e.what());
    }
    if (truth.num_nodes() != est.num_nodes()) throw UsageError("--estimate", "node count differs from --truth");
    EdgeConfusion c = edge_confusion(est, truth);
    const CovariancePair pair = covariance(GaussianSem(truth));
    out << "recovered=" << (c.fp == 0 && c.fn == 0 ? 1 : 0) << " fp=" << c.fp << " fn=" << c.fn
        << " kappa=" << fmt_short(condition_number(pair)) << " tau=" << fmt_short(tau(truth))
        << " max_var=" << fmt_short(max_variance(pair)) << '\n';
    return kOk;
}

int cmd_grid(const GridArgs& a, std::ostream& out) {
    ExperimentGrid g;
    g.n_values = a.n;
    g.m_values = a.m;
    g.d = a.d;
    g.b_min = a.bmin;
    g.b_max = a.bmax;
    g.trials = a.trials;
    g.algorithms.clear();
    for (const auto& s : a.algs) {
        try {
            g.algorithms.push_back(parse_algorithm(s));
        } catch (const Error& e) {
            throw UsageError("--algs", e.what());
        }
    }
    g.base_seed = a.seed;
    g.noise = parse_noise_kind(a.noise);
    g.lambda = a.lasso.mode();
    g.empty_graphs = a.empty_graphs;
    g.jobs = a.jobs;
    g.timing = a.timing;
    if (a.trials < 1) throw UsageError("--trials", "must be at least 1");
    if (a.jobs < 1) throw UsageError("--jobs", "must be at least 1");
    if (a.d < 1) throw UsageError("--d", "must be at least 1");
    if (!(a.bmin > 0.0)) throw UsageError("--bmin", "must be positive");
    if (!a.empty_graphs && !(a.bmax > a.bmin)) throw UsageError("--bmax", "must exceed --bmin");
    for (int n : a.n)
        if (n < 1 || (!a.empty_graphs && n > 1 && a.d >= n)) throw UsageError("--n", "every value must exceed --d");
    for (int m : a.m)
        if (m < 1) throw UsageError("--m", "every value must be positive");
    auto records = run_grid(g);
    write_out("--out", a.out, out, [&](std::ostream& o) { write_results_csv(o, records); });
    return kOk;
}

int cmd_growth(const GrowthArgs& a, std::ostream& out) {
    const bool empty = a.bmin == 0.0 && a.bmax == 0.0;
    if (a.graphs < 1) throw UsageError("--graphs", "must be at least 1");
    if (!empty && !(a.bmin > 0.0)) throw UsageError("--bmin", "must be positive");
    if (!empty && !(a.bmax > a.bmin)) throw UsageError("--bmax", "must exceed --bmin");
    for (int n : a.n)
        if (n < 1 || (!empty && n > 1 && a.d >= n)) throw UsageError("--n", "every value must exceed --d");
    auto rows = growth_profile(a.n, a.d, a.bmin, a.bmax, a.graphs, a.seed);
    write_out("--out", a.out, out, [&](std::ostream& o) { write_growth_csv(o, rows); });
    return kOk;
}

// Property-oracle battery. Each check prints one PASS/FAIL line.
class Battery {
public:
    explicit Battery(std::ostream& out) : out_(out) {}

    void report(const std::string& name, bool ok, const std::string& detail) {
        out_ << (ok ? "PASS " : "FAIL ") << name << (detail.empty() ? "" : " " + detail) << '\n';
        if (!ok) ++failures_;
    }
    int failures() const { return failures_; }

private:
    std::ostream& out_;
    int failures_ = 0;
};

GaussianSem battery_sem(std::uint64_t seed, int max_n, int g) {
    const std::uint64_t s = mix_seed(seed, {static_cast<std::uint64_t>(g)});
    const int n = 2 + static_cast<int>(splitmix64(s) % static_cast<std::uint64_t>(max_n - 1));
    const int d = 1 + static_cast<int>(splitmix64(s + 1) % static_cast<std::uint64_t>(std::min(3, n - 1)));
    return random_dag(n, d, 0.5, 1.0, s);
}

void verify_theta(Battery& b, const VerifyArgs& a) {
    double worst = 0.0;
    for (int g = 0; g < a.graphs; ++g) {
        GaussianSem sem = battery_sem(a.seed, 10, g);
        worst = std::max(worst, (precision_closed_form(sem) - covariance(sem).theta).cwiseAbs().maxCoeff());
    }
    b.report("theta-closed-form", worst <= 1e-8, "max_abs_err=" + fmt_short(worst) + " graphs=" + std::to_string(a.graphs));
}

void verify_tau(Battery& b, const VerifyArgs& a) {
    double worst_tau = -1e300, worst_eig = -1e300;
    for (int g = 0; g < a.graphs; ++g) {
        GaussianSem sem = battery_sem(a.seed ^ 0x7461ull, 12, g);
        const CovariancePair pair = covariance(sem);
        const double t = tau(sem);
        const int d = sem.dag().max_in_degree();
        worst_tau = std::max(worst_tau, t - condition_number(pair));
        worst_eig = std::max(worst_eig, 1.0 / ((d + 1) * t) - spectrum_extremes(pair.sigma).min);
    }
    b.report("tau-le-kappa", worst_tau <= 1e-9, "max(tau-kappa)=" + fmt_short(worst_tau));
    b.report("min-eigenvalue-bound", worst_eig <= 1e-9, "max(bound-lambda_min)=" + fmt_short(worst_eig));
}

void verify_kl(Battery& b, const VerifyArgs& a, std::ostream& out) {
    const double bm = a.bmin;
    const double mkl = gaussian_kl(covariance(ensemble_member({EnsembleFamily::matching, 2, 1, bm})).sigma,
                                   covariance(ensemble_member({EnsembleFamily::matching, 2, 0, bm})).sigma);
    out << "matching-KL = " << fmt_short(mkl) << '\n';
    b.report("matching-kl", std::abs(mkl - matching_kl_closed_form(bm)) <= 1e-9,
             "closed_form=" + fmt_short(matching_kl_closed_form(bm)));
    const double tkl =
        gaussian_kl(covariance(ensemble_member({EnsembleFamily::triangle, 3, 1, bm, a.b1, a.B})).sigma,
                    covariance(ensemble_member({EnsembleFamily::triangle, 3, 0, bm, a.b1, a.B})).sigma);
    out << "triangle-KL = " << fmt_short(tkl) << '\n';
    b.report("triangle-kl", std::abs(tkl - triangle_kl_closed_form(bm, a.B)) <= 1e-9,
             "closed_form=" + fmt_short(triangle_kl_closed_form(bm, a.B)));
    for (auto [fam, n, name] : {std::tuple{EnsembleFamily::matching, 8, "matching-ensemble"},
                                std::tuple{EnsembleFamily::triangle, 9, "triangle-ensemble"}}) {
        try {
            auto rep = verify_ensembles(fam, n, {bm, a.b1, a.B});
            b.report(name, true, "members=" + std::to_string(rep.members) + " fano_bound=" + fmt_short(rep.fano_bound));
        } catch (const VerificationFailed& e) {
            b.report(name, false, e.what());
        }
    }
}

void verify_nonident(Battery& b) {
    double worst = 0.0, worst_kl = 0.0;
    for (double bb : {0.1, 0.3, 0.5}) {
        auto p = nonidentifiable_pair(bb);
        const Eigen::MatrixXd s1 = covariance(p.equal_variance).sigma;
        worst = std::max(worst, (s1 - p.unequal_sigma).cwiseAbs().maxCoeff());
        worst_kl = std::max(worst_kl, gaussian_kl(s1, p.unequal_sigma));
    }
    b.report("nonidentifiable-covariance", worst <= 1e-12, "max_abs_diff=" + fmt_short(worst));
    b.report("nonidentifiable-kl", worst_kl <= 1e-10, "max_kl=" + fmt_short(worst_kl));
}

void verify_cancel(Battery& b) {
    double worst = 0.0;
    for (double bb : {0.3, 0.5, 1.5}) worst = std::max(worst, std::abs(covariance(path_cancellation_triple(bb)).sigma(0, 2)));
    b.report("path-cancellation", worst <= 1e-12, "max|cov(X,Z)|=" + fmt_short(worst));
}

void verify_tree(Battery& b) {
    const double lam = std::pow(2.0, -0.25);
    double worst_rel = 0.0;
    bool var_ok = true;
    for (int h = 1; h <= 7; ++h) {
        GaussianSem sem = tree_dag(h, lam);
        const CovariancePair pair = covariance(sem);
        const auto leaves = tree_leaves(h);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(sem.num_nodes());
        for (int v : leaves) w[v] = 1.0 / std::sqrt(std::ldexp(1.0, h));
        const double quad = w.dot(pair.sigma * w);
        double series = 0.0;
        for (int i = 0; i <= h; ++i) series += std::pow(2.0 * lam * lam, i);
        worst_rel = std::max(worst_rel, std::abs(quad - series) / series);
        var_ok = var_ok && max_variance(pair) <= 1.0 / (1.0 - lam * lam);
    }
    b.report("tree-leaf-sum-variance", worst_rel <= 1e-6, "max_rel_err=" + fmt_short(worst_rel));
    b.report("tree-max-variance", var_ok, "bound=" + fmt_short(1.0 / (1.0 - lam * lam)));
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    if (!(a.bmin > 0.0)) throw UsageError("--bmin", "must be positive");
    if (a.b1 == 0.0) throw UsageError("--b1", "must be nonzero");
    if (a.graphs < 1) throw UsageError("--graphs", "must be at least 1");
    Battery b(out);
    const std::string& s = a.suite;
    if (s == "all" || s == "theta") verify_theta(b, a);
    if (s == "all" || s == "tau") verify_tau(b, a);
    if (s == "all" || s == "kl") verify_kl(b, a, out);
    if (s == "all" || s == "nonident") verify_nonident(b);
    if (s == "all" || s == "cancel") verify_cancel(b);
    if (s == "all" || s == "tree") verify_tree(b);
    return b.failures() == 0 ? kOk : kVerifyFailed;
}

// Splices config tokens in after the subcommand, skipping keys that the
// command line sets itself so that flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    if (args.size() < 2) return args;
    std::vector<std::string> rest;
    std::string config;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config", "expects a path");
            config = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    std::vector<std::string> out{args[0], args[1]};
    if (!config.empty()) {
        std::vector<std::string> tokens;
        try {
            tokens = read_config_tokens(config);
        } catch (const Error& e) {
            throw UsageError("--config", e.what());
        }
        for (const auto& tok : tokens) {
            const std::string key = tok.substr(0, tok.find('='));
            const bool on_cli = std::any_of(rest.begin(), rest.end(), [&](const std::string& r) {
                return r == key || r.rfind(key + "=", 0) == 0;
            });
            if (on_cli) continue;
            const std::string value = tok.substr(key.size() + 1);
            if (value == "true") out.push_back(key);
            else if (value != "false") out.push_back(tok);
        }
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

}  // namespace

std::vector<std::string> read_config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError(path + ":" + std::to_string(lineno) + ": empty key");
        std::replace(key.begin(), key.end(), '_', '-');
        tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Structure learning for equal-variance linear Gaussian DAG models"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");

    std::string config_help;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_help, "File of 'key = value' lines; command-line flags override it");
    };

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "Write a ground-truth graph as an edge list");
    gen->add_option("--family", ga.family, "Graph family")
        ->check(CLI::IsMember({"random", "chain", "tree", "matching", "triangle", "nonident", "cancel"}))
        ->capture_default_str();
    gen->add_option("--n", ga.n, "Node count (random, chain, matching, triangle)")->capture_default_str();
    gen->add_option("--d", ga.d, "In-degree cap (random)")->capture_default_str();
    gen->add_option("--bmin", ga.bmin, "Minimum edge magnitude (random, matching, triangle)")->capture_default_str();
    gen->add_option("--bmax", ga.bmax, "Maximum edge magnitude (random)")->capture_default_str();
    gen->add_option("--k", ga.k, "Chain weight")->capture_default_str();
    gen->add_option("--height", ga.height, "Tree height")->capture_default_str();
    gen->add_option("--lambda", ga.lambda, "Tree edge weight, in (1/sqrt(2), 1)")->capture_default_str();
    gen->add_option("--b", ga.b, "Edge weight (nonident, cancel)")->capture_default_str();
    gen->add_option("--b1", ga.b1, "Triangle Y->Z weight")->capture_default_str();
    gen->add_option("--B", ga.B, "Triangle X->Y weight")->capture_default_str();
    gen->add_option("--index", ga.index, "Ensemble member (0 is the base graph)")->capture_default_str();
    gen->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
    gen->add_option("--out", ga.out, "Output edge-list path")->required();
    add_config(gen);

    SampleArgs sa;
    auto* smp = app.add_subcommand("sample", "Draw observations from an edge-list SEM");
    smp->add_option("--graph", sa.graph, "Edge-list file")->required();
    smp->add_option("--m", sa.m, "Number of samples")->capture_default_str();
    smp->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
    smp->add_option("--noise", sa.noise, "Noise distribution")
        ->check(CLI::IsMember({"gaussian", "rademacher", "uniform"}))
        ->capture_default_str();
    smp->add_option("--sigma2", sa.sigma2, "Noise variance")->capture_default_str();
    smp->add_option("--out", sa.out, "Output CSV path (default: stdout)");
    add_config(smp);

    LearnArgs la;
    auto* lrn = app.add_subcommand("learn", "Learn a DAG from a sample CSV");
    lrn->add_option("--data", la.data, "Sample CSV")->required();
    lrn->add_option("--alg", la.alg, "Learner")
        ->check(CLI::IsMember({"exhaustive", "lasso", "adaptive", "variance_baseline"}))
        ->capture_default_str();
    lrn->add_option("--d", la.d, "In-degree bound (optional for adaptive)");
    lrn->add_option("--bmin", la.bmin, "Minimum edge magnitude")->capture_default_str();
    lrn->add_option("--sigma2", la.sigma2, "Known noise variance")->capture_default_str();
    lrn->add_option("--c1", la.c1, "Adaptive phase-1 gap constant")->capture_default_str();
    lrn->add_option("--gamma", la.gamma, "Baseline MSE-increase threshold (default sigma2*bmin^2/2)");
    lrn->add_option("--seed", la.seed, "Accepted for uniformity; learners are deterministic");
    la.lasso.add(lrn);
    lrn->add_option("--out", la.out, "Output path (default: stdout)");
    add_config(lrn);

    EvalArgs ea;
    auto* evl = app.add_subcommand("eval", "Compare an estimated graph against the truth");
    evl->add_option("--truth", ea.truth, "Ground-truth edge list")->required();
    evl->add_option("--estimate", ea.estimate, "Estimated edge list or learned structure")->required();
    add_config(evl);

    GridArgs gra;
    auto* grd = app.add_subcommand("grid", "Run a recovery experiment grid and write the results CSV");
    grd->add_option("--n", gra.n, "Node counts")->delimiter(',')->capture_default_str();
    grd->add_option("--m", gra.m, "Sample sizes")->delimiter(',')->capture_default_str();
    grd->add_option("--d", gra.d, "In-degree cap")->capture_default_str();
    grd->add_option("--bmin", gra.bmin, "Minimum edge magnitude")->capture_default_str();
    grd->add_option("--bmax", gra.bmax, "Maximum edge magnitude")->capture_default_str();
    grd->add_option("--trials", gra.trials, "Graphs per (n, m) cell")->capture_default_str();
    grd->add_option("--algs", gra.algs, "Learners")->delimiter(',')->capture_default_str();
    grd->add_option("--seed", gra.seed, "Base seed")->capture_default_str();
    grd->add_option("--noise", gra.noise, "Noise distribution")
        ->check(CLI::IsMember({"gaussian", "rademacher", "uniform"}))
        ->capture_default_str();
    grd->add_flag("--empty-graphs", gra.empty_graphs, "Use edge-free ground truths");
    grd->add_flag("--timing", gra.timing, "Record wall-clock runtime (output is then not reproducible)");
    grd->add_option("--jobs", gra.jobs, "Worker threads")->capture_default_str();
    gra.lasso.add(grd);
    grd->add_option("--out", gra.out, "Output CSV path (default: stdout)");
    add_config(grd);

    VerifyArgs va;
    auto* ver = app.add_subcommand("verify", "Run the closed-form oracle checks");
    ver->add_option("--suite", va.suite, "Which checks")
        ->check(CLI::IsMember({"all", "theta", "tau", "kl", "nonident", "cancel", "tree"}))
        ->capture_default_str();
    ver->add_option("--bmin", va.bmin, "Ensemble b_min")->capture_default_str();
    ver->add_option("--b1", va.b1, "Triangle Y->Z weight")->capture_default_str();
    ver->add_option("--B", va.B, "Triangle X->Y weight")->capture_default_str();
    ver->add_option("--graphs", va.graphs, "Random SEMs for the theta and tau checks")->capture_default_str();
    ver->add_option("--seed", va.seed, "Seed for the random SEMs")->capture_default_str();
    add_config(ver);

    GrowthArgs gwa;
    auto* gro = app.add_subcommand("growth", "Average kappa, tau and max variance of random graphs per n");
    gro->add_option("--n", gwa.n, "Node counts")->delimiter(',')->capture_default_str();
    gro->add_option("--d", gwa.d, "In-degree cap")->capture_default_str();
    gro->add_option("--bmin", gwa.bmin, "Minimum edge magnitude (0 with --bmax 0: empty graphs)")->capture_default_str();
    gro->add_option("--bmax", gwa.bmax, "Maximum edge magnitude")->capture_default_str();
    gro->add_option("--graphs", gwa.graphs, "Graphs per n")->capture_default_str();
    gro->add_option("--seed", gwa.seed, "Base seed")->capture_default_str();
    gro->add_option("--out", gwa.out, "Output CSV path (default: stdout)");
    add_config(gro);

    try {
        std::vector<std::string> args = expand_config(raw_args);
        std::vector<char*> argv;
        for (auto& s : args) argv.push_back(s.data());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*gen) return cmd_generate(ga, out);
        if (*smp) return cmd_sample(sa, out);
        if (*lrn) return cmd_learn(la, out, err);
        if (*evl) return cmd_eval(ea, out);
        if (*grd) return cmd_grid(gra, out);
        if (*ver) return cmd_verify(va, out);
        if (*gro) return cmd_growth(gwa, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const LearnerError& e) {
        err << "learner error: " << e.what() << '\n';
        return kLearnerError;
    } catch (const RankDeficient& e) {
        err << "learner error: " << e.what() << '\n';
        return kLearnerError;
    } catch (const VerificationFailed& e) {
        err << "verification failed: " << e.what() << '\n';
        return kVerifyFailed;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace evdag::cli
