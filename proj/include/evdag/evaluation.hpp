#pragma once

// Recovery metrics, Gaussian KL and the lower-bound ensembles, and the
// experiment runners that produce the results and growth CSVs.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evdag/dag_model.hpp"
#include "evdag/learners.hpp"
#include "evdag/synthesis.hpp"

namespace evdag {

struct EdgeConfusion {
    int fp = 0;  // reported, not in truth
    int fn = 0;  // in truth, not reported
};

// Directed edge set differences; weights are ignored. Throws SizeMismatch.
EdgeConfusion edge_confusion(const WeightedDag& estimate, const WeightedDag& truth);
EdgeConfusion edge_confusion(const LearnedStructure& estimate, const WeightedDag& truth);

// KL(N(0, sigma_p) || N(0, sigma_q)) = 1/2 (tr(sigma_q^-1 sigma_p) - k + log|sigma_q|/|sigma_p|),
// evaluated with Cholesky factors. Throws NotSPD or SizeMismatch.
double gaussian_kl(const Eigen::MatrixXd& sigma_p, const Eigen::MatrixXd& sigma_q);

// log det of an SPD matrix via Cholesky. Throws NotSPD.
double log_det_spd(const Eigen::MatrixXd& spd);

// (log(family_size)/2 - log 2) / max_pairwise_kl. Throws InvalidParams.
double fano_sample_bound(int family_size, double max_pairwise_kl);

// KL between the base member and member 1 of each ensemble.
double matching_kl_closed_form(double b_min);                // b^4 / 2
double triangle_kl_closed_form(double b_min, double B);      // b^2 / (2 (1 + B^2))

struct EnsembleParams {
    double b_min = 0.5;
    double b1 = 0.5;  // triangle only
    double B = 1.0;   // triangle only
};

struct EnsembleReport {
    EnsembleFamily family = EnsembleFamily::matching;
    int n = 0;
    int members = 0;
    double closed_form = 0.0;
    double base_pair_kl = 0.0;    // KL(member 1 || base)
    double max_pairwise_kl = 0.0; // over ordered pairs of distinct members
    double fano_bound = 0.0;
    double det_base = 1.0;        // triangle: |Sigma| of base and member 1
    double det_perturbed = 1.0;
};

// Builds every member, checks each pairwise KL against 2x the closed form
// (+1e-9), the base pair against the closed form (1e-9) and, for the
// triangle family, |Sigma| = 1 for the base and perturbed members (1e-12).
// Throws VerificationFailed naming the offending pair.
EnsembleReport verify_ensembles(EnsembleFamily family, int n, const EnsembleParams& params);

struct ExperimentRecord {
    int n = 0;
    int d = 0;
    int m = 0;
    int trial = 0;
    Algorithm algorithm = Algorithm::exhaustive;
    std::uint64_t seed = 0;
    bool recovered = false;
    int fp = 0;
    int fn = 0;
    double runtime_ms = 0.0;
    double kappa = 0.0;
    double tau = 0.0;
    double max_var = 0.0;
    std::string error;  // empty on success
};

struct ExperimentGrid {
    std::vector<int> n_values;
    std::vector<int> m_values;
    int d = 4;
    double b_min = 0.5;
    double b_max = 1.0;
    int trials = 45;
    std::vector<Algorithm> algorithms{Algorithm::exhaustive, Algorithm::lasso, Algorithm::variance_baseline};
    std::uint64_t base_seed = 0;
    NoiseKind noise = NoiseKind::gaussian;
    LambdaMode lambda;
    bool empty_graphs = false;  // ground truth has no edges
    int jobs = 1;
    bool timing = false;        // runtime_ms stays 0 unless enabled, so output is reproducible

    void validate() const;  // throws InvalidParams
};

// Graph seed of a cell; the sample seed is derived from it.
std::uint64_t cell_seed(std::uint64_t base_seed, int n, int m, int trial);
std::uint64_t sample_seed(std::uint64_t graph_seed);

// One record per (n, m, trial, algorithm), sorted in that key order. Learner
// failures are recorded in `error` and scored as an empty estimate.
std::vector<ExperimentRecord> run_grid(const ExperimentGrid& grid);

void write_results_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);

struct GrowthRow {
    int n = 0;
    double mean_kappa = 0.0;
    double mean_tau = 0.0;
    double mean_maxvar = 0.0;
    int graphs = 0;
};

// Averages over graphs_per_n random SEMs per n. b_min = b_max = 0 means
// edge-free graphs.
std::vector<GrowthRow> growth_profile(const std::vector<int>& n_values, int d, double b_min, double b_max,
                                      int graphs_per_n, std::uint64_t base_seed);

void write_growth_csv(std::ostream& out, const std::vector<GrowthRow>& rows);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace evdag
