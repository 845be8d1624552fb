#pragma once

// Structure learners: the exhaustive two-phase algorithm, the Lasso-based
// algorithm, the adaptive variant for unknown sigma^2 / d / b_min, and the
// variance-gap parent baseline.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "evdag/dag_model.hpp"
#include "evdag/regression.hpp"
#include "evdag/synthesis.hpp"

namespace evdag {

enum class Algorithm { exhaustive, lasso, adaptive, variance_baseline };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);  // throws InvalidParams

struct LearnerDiagnostics {
    long regressions = 0;       // regressions actually computed (cache misses)
    long subsets = 0;           // candidate subsets examined, cached or not
    long lasso_calls = 0;
    long lasso_sweeps = 0;
    long lasso_not_converged = 0;
    long lasso_polished = 0;
    int order_sweeps = 0;
    double sigma2_hat = 0.0;  // adaptive only
    int d_hat = 0;            // adaptive only
    double b_hat = 0.0;       // adaptive only
};

struct LearnedStructure {
    int n = 0;
    std::vector<int> order;
    // parents[v] sorted by parent index, with the final OLS coefficient.
    std::vector<std::vector<std::pair<int, double>>> parents;
    Algorithm algorithm = Algorithm::exhaustive;
    LearnerDiagnostics diagnostics;

    WeightedDag to_dag() const;
    std::vector<int> parent_indices(int v) const;
};

struct LambdaMode {
    enum class Kind { fixed, theoretical };
    Kind kind = Kind::fixed;
    double value = 0.01;  // fixed
    // theoretical: lambda = c * R * sqrt(log(n / delta) / m); R defaults to
    // the largest uncentered column standard deviation of the data.
    double c = 0.5;
    double delta = 0.05;
    std::optional<double> R;

    double resolve(int n, int m, double r_hat) const;
};

struct LearnerConfig {
    std::optional<int> d;
    std::optional<double> b_min;
    double sigma2 = 1.0;
    LambdaMode lambda;
    LassoOptions lasso;
    double c1 = 4.0;                    // adaptive phase-1 gap constant
    double b_floor = 1.0 / 1048576.0;   // adaptive b-hat floor, 2^-20
    std::optional<double> gamma;        // baseline; default sigma2 * b_min^2 / 2

    double mse_cutoff() const;   // sigma2 * (1 + b_min^2 / 2)
    double coef_accept() const;  // b_min / 2
    double coef_reject() const { return coef_accept(); }
    double baseline_gamma() const;

    // Throws InvalidParams on nonpositive or missing values the named
    // algorithm needs.
    void validate(Algorithm a) const;
};

// Where learners get regressions from: OLS on sample columns, or the exact
// population quantities of a known covariance.
class RegressionSource {
public:
    virtual ~RegressionSource() = default;
    virtual int num_nodes() const = 0;
    virtual int num_samples() const = 0;  // 0 for the population oracle
    virtual double variance(int i) const = 0;
    // Regress node i on J. Coefficients align with J.
    virtual RegressionResult regress(int i, std::span<const int> J) const = 0;
};

class SampleRegression final : public RegressionSource {
public:
    explicit SampleRegression(const Eigen::MatrixXd& data) : data_(data) {}
    int num_nodes() const override { return static_cast<int>(data_.cols()); }
    int num_samples() const override { return static_cast<int>(data_.rows()); }
    double variance(int i) const override;
    RegressionResult regress(int i, std::span<const int> J) const override;
    const Eigen::MatrixXd& data() const { return data_; }

private:
    const Eigen::MatrixXd& data_;
};

class PopulationRegression final : public RegressionSource {
public:
    explicit PopulationRegression(CovariancePair pair) : pair_(std::move(pair)) {}
    int num_nodes() const override { return static_cast<int>(pair_.sigma.rows()); }
    int num_samples() const override { return 0; }
    double variance(int i) const override { return pair_.sigma(i, i); }
    RegressionResult regress(int i, std::span<const int> J) const override;

private:
    CovariancePair pair_;
};

// Phase 1 of the exhaustive algorithm. Throws OrderStalled.
std::vector<int> order_exhaustive(const RegressionSource& src, const LearnerConfig& cfg,
                                  LearnerDiagnostics* diag = nullptr);
std::vector<int> order_exhaustive(const SampleMatrix& data, const LearnerConfig& cfg);

// Phase 2 of the exhaustive algorithm. Throws NoPassingSubset.
LearnedStructure parents_exhaustive(const RegressionSource& src, std::span<const int> order,
                                    const LearnerConfig& cfg);
LearnedStructure parents_exhaustive(const SampleMatrix& data, std::span<const int> order,
                                    const LearnerConfig& cfg);

LearnedStructure learn_exhaustive(const RegressionSource& src, const LearnerConfig& cfg);
LearnedStructure learn_exhaustive(const SampleMatrix& data, const LearnerConfig& cfg);

// Lasso screening, OLS refit, batch acceptance per sweep. Throws OrderStalled.
LearnedStructure learn_lasso(const SampleMatrix& data, const LearnerConfig& cfg);

// Unknown sigma^2 and b_min; d optional (Phase 1 estimate used otherwise).
// Throws BMinExhausted or OrderStalled.
LearnedStructure learn_adaptive(const RegressionSource& src, std::optional<int> d, const LearnerConfig& cfg = {});
LearnedStructure learn_adaptive(const SampleMatrix& data, std::optional<int> d, const LearnerConfig& cfg = {});

// Best-MSE superset of size min(|S|, d), then keep j if dropping it raises
// the MSE by at least gamma.
LearnedStructure parents_variance_baseline(const RegressionSource& src, std::span<const int> order, int d,
                                           double gamma);
LearnedStructure parents_variance_baseline(const SampleMatrix& data, std::span<const int> order, int d,
                                           double gamma);

// Dispatch by algorithm. The baseline takes its order from Phase 1 of the
// exhaustive algorithm.
LearnedStructure learn(Algorithm a, const SampleMatrix& data, const LearnerConfig& cfg);

// Edge-list format with a leading "# order=v0,v1,..." line.
void write_learned_structure(std::ostream& out, const LearnedStructure& s);
LearnedStructure read_learned_structure(std::istream& in);

}  // namespace evdag
