#pragma once

// Estimation primitives shared by the learners.

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace evdag {

struct RegressionResult {
    std::vector<int> columns;  // node indices, aligned with coefficients
    Eigen::VectorXd coefficients;
    double mse = 0.0;
};

struct MseDecomposition {
    double variance_error = 0.0;
    double beta_error = 0.0;
    double cross = 0.0;
};

// (1/m) sum y^2. The model is zero-mean, so this is not centered.
double empirical_variance(const Eigen::Ref<const Eigen::VectorXd>& y);

// Least squares without intercept via column-pivoted QR. k = 0 returns the
// empirical variance as mse. Throws RankDeficient if m < k or the smallest
// singular value of X is below 1e-10 times the largest.
RegressionResult ols(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y);

// Regresses data column `target` on data columns `columns`.
RegressionResult ols_columns(const Eigen::MatrixXd& data, int target, std::span<const int> columns);

// VE = (1/m) sum (y - X b*)^2, BE = (1/m) sum (X (bh - b*))^2,
// cross = -(2/m) sum (y - X b*) X (bh - b*). VE + BE + cross is the MSE of bh.
MseDecomposition mse_decomposition(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& y,
                                   const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                                   const Eigen::Ref<const Eigen::VectorXd>& beta_star);

struct LassoOptions {
    double tol = 1e-7;
    int max_iter = 10000;  // full coordinate sweeps
    bool record_objective = false;
    // When cyclic descent stalls, finish with an exact active-set solve.
    bool polish = true;
};

struct LassoResult : RegressionResult {
    bool converged = false;  // false corresponds to NotConverged
    bool polished = false;   // the active-set solve produced the answer
    int iterations = 0;      // coordinate sweeps
    double kkt_residual = 0.0;
    std::vector<double> objective_trace;  // after each sweep, if recorded
};

// argmin (1/2N) ||y - X b||^2 + lambda ||b||_1 by cyclic coordinate descent
// from zero, ascending coordinate order. Converged when the largest
// coefficient change in a sweep is below tol and the KKT residual is at most
// 10 tol. The KKT residual of coordinate k is measured relative to
// max(1, sqrt(G_kk * y'y/N)) with G = X'X/N, which is 1 on standardized data.
LassoResult lasso(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                  double lambda, const LassoOptions& opts = {});

double lasso_objective(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& beta, double lambda);

// Scaled KKT residual as used by lasso().
double lasso_kkt_residual(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                          const Eigen::Ref<const Eigen::VectorXd>& beta, double lambda);

// Copies the listed data columns into a new matrix.
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& data, std::span<const int> columns);

}  // namespace evdag
