#include <cmath>
#include <random>

#include "doctest.h"
#include "evdag/dag_model.hpp"
#include "evdag/errors.hpp"
#include "evdag/regression.hpp"
#include "evdag/synthesis.hpp"

using namespace evdag;

namespace {

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd x(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) x(i, j) = nd(rng);
    return x;
}

// Subgradient optimality of the 1/(2N)-scaled objective. With `scaled`, each
// coordinate is divided by max(1, |x_k| |y| / N) so the check is unit-free.
double kkt_violation(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta, double lambda,
                     bool scaled = false) {
    const double N = static_cast<double>(x.rows());
    const Eigen::VectorXd g = x.transpose() * (y - x * beta) / N;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < beta.size(); ++k) {
        const double v = beta(k) != 0.0 ? std::abs(g(k) - lambda * (beta(k) > 0 ? 1.0 : -1.0))
                                        : std::max(0.0, std::abs(g(k)) - lambda);
        const double unit = scaled ? std::max(1.0, x.col(k).norm() * y.norm() / N) : 1.0;
        worst = std::max(worst, v / unit);
    }
    return worst;
}

}  // namespace

TEST_CASE("empirical variance examples") {
    Eigen::VectorXd y(4);
    y << 1, -1, 1, -1;
    CHECK(empirical_variance(y) == 1.0);
    CHECK(empirical_variance(Eigen::VectorXd::Zero(5)) == 0.0);
    Eigen::VectorXd z = gaussian_matrix(100000, 1, 3).col(0) * std::sqrt(1.25);
    CHECK(std::abs(empirical_variance(z) - 1.25) < 0.02);
}

TEST_CASE("ols examples") {
    Eigen::MatrixXd x = gaussian_matrix(50, 1, 1);
    RegressionResult r = ols(x, 2.0 * x.col(0));
    CHECK(r.coefficients(0) == doctest::Approx(2.0));
    CHECK(r.mse == doctest::Approx(0.0).epsilon(1e-12));

    Eigen::VectorXd y = Eigen::VectorXd::Constant(10, std::sqrt(1.3));
    CHECK(ols(Eigen::MatrixXd(10, 0), y).mse == doctest::Approx(1.3));

    SampleMatrix s = sample(GaussianSem(validate_and_order(2, {{0, 1, 0.5}})), 100000, 9);
    const std::vector<int> cols{0};
    RegressionResult c = ols_columns(s.data, 1, cols);
    CHECK(c.columns == cols);
    CHECK(std::abs(c.coefficients(0) - 0.5) < 0.02);
    CHECK(std::abs(c.mse - 1.0) < 0.02);
}

TEST_CASE("ols residuals are orthogonal and the mse is recomputable") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const int k = 1 + static_cast<int>(s % 6);
        Eigen::MatrixXd x = gaussian_matrix(200, k, s);
        Eigen::VectorXd y = gaussian_matrix(200, 1, s + 1000).col(0) + x.rowwise().sum();
        RegressionResult r = ols(x, y);
        CHECK(r.coefficients.size() == k);
        const Eigen::VectorXd resid = y - x * r.coefficients;
        CHECK((x.transpose() * resid).cwiseAbs().maxCoeff() <= 1e-8 * x.norm() * y.norm());
        CHECK(r.mse == doctest::Approx(resid.squaredNorm() / 200).epsilon(1e-10));
    }
}

TEST_CASE("ols rejects rank-deficient designs") {
    Eigen::MatrixXd x = gaussian_matrix(30, 2, 5);
    x.col(1) = 3.0 * x.col(0);
    CHECK_THROWS_AS(ols(x, x.col(0)), RankDeficient);
    CHECK_THROWS_AS(ols(gaussian_matrix(2, 3, 6), Eigen::VectorXd::Ones(2)), RankDeficient);
    CHECK_THROWS_AS(ols(gaussian_matrix(5, 2, 6), Eigen::VectorXd::Ones(4)), SizeMismatch);
}

TEST_CASE("mse decomposition") {
    Eigen::MatrixXd x = gaussian_matrix(300, 3, 7);
    Eigen::VectorXd beta_star(3);
    beta_star << 0.5, -1.0, 0.8;
    Eigen::VectorXd y = x * beta_star + gaussian_matrix(300, 1, 8).col(0);

    MseDecomposition same = mse_decomposition(x, y, beta_star, beta_star);
    CHECK(same.beta_error == 0.0);
    CHECK(same.cross == 0.0);
    MseDecomposition exact = mse_decomposition(x, x * beta_star, ols(x, y).coefficients, beta_star);
    CHECK(exact.variance_error == doctest::Approx(0.0));

    for (std::uint64_t s = 0; s < 100; ++s) {
        Eigen::VectorXd bh = beta_star + 0.3 * gaussian_matrix(3, 1, s + 50).col(0);
        MseDecomposition dcmp = mse_decomposition(x, y, bh, beta_star);
        const double total = (y - x * bh).squaredNorm() / 300;
        CHECK(dcmp.variance_error + dcmp.beta_error + dcmp.cross == doctest::Approx(total).epsilon(1e-9));
        CHECK(std::abs(dcmp.cross) <= 2 * std::sqrt(dcmp.variance_error * dcmp.beta_error) + 1e-9);
    }
}

TEST_CASE("lasso on one unit-scaled column soft-thresholds") {
    Eigen::MatrixXd x = gaussian_matrix(400, 1, 11);
    x /= std::sqrt(x.squaredNorm() / 400);
    for (double scale : {-2.0, -0.3, 0.05, 0.4, 1.5}) {
        Eigen::VectorXd y = scale * x.col(0) + 0.5 * gaussian_matrix(400, 1, 12).col(0);
        const double z = x.col(0).dot(y) / 400;
        for (double lambda : {0.0, 0.1, 0.3, 1.0}) {
            LassoResult r = lasso(x, y, lambda);
            const double expect = (z > 0 ? 1.0 : -1.0) * std::max(std::abs(z) - lambda, 0.0);
            CHECK(r.coefficients(0) == doctest::Approx(expect).epsilon(1e-9));
            CHECK(kkt_violation(x, y, r.coefficients, lambda) < 1e-6);
        }
    }
}

TEST_CASE("lasso limits") {
    Eigen::MatrixXd x = gaussian_matrix(500, 4, 13);
    Eigen::VectorXd y = x * Eigen::Vector4d(1.0, -0.5, 0.0, 0.25) + gaussian_matrix(500, 1, 14).col(0);
    LassoResult zero = lasso(x, y, 0.0);
    CHECK((zero.coefficients - ols(x, y).coefficients).cwiseAbs().maxCoeff() < 1e-6);
    LassoResult big = lasso(x, y, 1e6);
    CHECK(big.coefficients.isZero(0.0));
    CHECK(big.mse == doctest::Approx(empirical_variance(y)));
    CHECK_THROWS_AS(lasso(x, y, -1.0), InvalidParams);
}

TEST_CASE("lasso satisfies KKT and never increases its objective") {
    for (std::uint64_t s = 0; s < 60; ++s) {
        const int k = 2 + static_cast<int>(s % 7);
        Eigen::MatrixXd x = gaussian_matrix(150, k, 100 + s);
        // correlated columns make coordinate descent work for it
        for (int j = 1; j < k; ++j) x.col(j) += 0.8 * x.col(j - 1);
        Eigen::VectorXd y = x.col(0) - 0.7 * x.col(k - 1) + gaussian_matrix(150, 1, 200 + s).col(0);
        LassoOptions opts;
        opts.record_objective = true;
        const double lambda = 0.01 * static_cast<double>(s % 5 + 1);
        LassoResult r = lasso(x, y, lambda, opts);
        REQUIRE(r.converged);
        CHECK(kkt_violation(x, y, r.coefficients, lambda, true) <= 10 * opts.tol);
        CHECK(r.kkt_residual == doctest::Approx(lasso_kkt_residual(x, y, r.coefficients, lambda)));
        for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
            CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] + 1e-12);
        CHECK(lasso_objective(x, y, r.coefficients, lambda) <= lasso_objective(x, y, Eigen::VectorXd::Zero(k), lambda));
    }
}

TEST_CASE("regressing on a superset of the parents leaves the noise; a missing parent adds b^2") {
    GaussianSem sem(validate_and_order(5, {{0, 2, 0.6}, {1, 2, -0.8}, {0, 1, 0.5}, {2, 3, 0.7}, {4, 3, 0.9}}));
    SampleMatrix s = sample(sem, 100000, 31);
    const std::vector<int> full{0, 1};
    const std::vector<int> super{0, 1, 4};
    CHECK(std::abs(ols_columns(s.data, 2, full).mse - 1.0) < 0.05);
    CHECK(std::abs(ols_columns(s.data, 2, super).mse - 1.0) < 0.05);
    const std::vector<int> missing{0};
    CHECK(ols_columns(s.data, 2, missing).mse >= 1 + 0.6 * 0.6 - 0.05);
    const std::vector<int> none{};
    CHECK(ols_columns(s.data, 3, none).mse >= 1 + 0.7 * 0.7 - 0.05);
}
