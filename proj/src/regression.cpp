#include "evdag/regression.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evdag/errors.hpp"

namespace evdag {

namespace {

double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct LassoProblem {
    const Eigen::Ref<const Eigen::MatrixXd>& X;
    const Eigen::Ref<const Eigen::VectorXd>& y;
    double lambda;
    double N;
    Eigen::VectorXd scale;

    LassoProblem(const Eigen::Ref<const Eigen::MatrixXd>& X_, const Eigen::Ref<const Eigen::VectorXd>& y_, double lam)
        : X(X_), y(y_), lambda(lam), N(static_cast<double>(X_.rows())) {
        const double yy = y.squaredNorm() / N;
        scale.resize(X.cols());
        for (Eigen::Index k = 0; k < X.cols(); ++k)
            scale[k] = std::max(1.0, std::sqrt(X.col(k).squaredNorm() / N * yy));
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const {
        return X.transpose() * (y - X * beta) / N;
    }

    double objective(const Eigen::VectorXd& beta) const {
        return 0.5 * (y - X * beta).squaredNorm() / N + lambda * beta.lpNorm<1>();
    }

    double kkt(const Eigen::VectorXd& beta) const {
        Eigen::VectorXd g = gradient(beta);
        double worst = 0.0;
        for (Eigen::Index k = 0; k < beta.size(); ++k) {
            double r = beta[k] != 0.0 ? std::abs(g[k] - lambda * sign_of(beta[k]))
                                      : std::max(std::abs(g[k]) - lambda, 0.0);
            worst = std::max(worst, r / scale[k]);
        }
        return worst;
    }
};

// Feature-sign search: exact for the l1-penalized quadratic, used when cyclic
// coordinate descent makes no progress on strongly correlated columns.
Eigen::VectorXd active_set_solve(const LassoProblem& P) {
    const Eigen::Index k = P.X.cols();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
    const double opt_tol = 1e-12;
    const int max_steps = static_cast<int>(50 * k + 100);
    for (int step = 0; step < max_steps; ++step) {
        Eigen::VectorXd g = P.gradient(beta);
        bool active_optimal = true;
        for (Eigen::Index j = 0; j < k; ++j)
            if (theta[j] != 0.0 && std::abs(g[j] - P.lambda * theta[j]) > opt_tol * P.scale[j]) active_optimal = false;
        if (active_optimal) {
            Eigen::Index best = -1;
            double best_g = P.lambda;
            for (Eigen::Index j = 0; j < k; ++j)
                if (theta[j] == 0.0 && std::abs(g[j]) > best_g * (1.0 + opt_tol)) {
                    best_g = std::abs(g[j]);
                    best = j;
                }
            if (best < 0) break;
            theta[best] = sign_of(g[best]);
        }

        std::vector<Eigen::Index> A;
        for (Eigen::Index j = 0; j < k; ++j)
            if (theta[j] != 0.0) A.push_back(j);
        Eigen::MatrixXd XA(P.X.rows(), static_cast<Eigen::Index>(A.size()));
        Eigen::VectorXd thA(A.size()), bA(A.size());
        for (std::size_t a = 0; a < A.size(); ++a) {
            XA.col(a) = P.X.col(A[a]);
            thA[a] = theta[A[a]];
            bA[a] = beta[A[a]];
        }
        // (XA'XA/N) x = XA'y/N - lambda theta, solved through XA = QR.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(XA);
        const Eigen::Index a = XA.cols();
        Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(a, a).triangularView<Eigen::Upper>();
        Eigen::VectorXd qty = (qr.householderQ().transpose() * P.y).head(a);
        Eigen::VectorXd w = R.transpose().triangularView<Eigen::Lower>().solve(thA);
        Eigen::VectorXd x = R.triangularView<Eigen::Upper>().solve(qty - P.N * P.lambda * w);
        if (!x.allFinite()) break;

        // Line search over x and every sign change on the segment.
        auto embed = [&](const Eigen::VectorXd& v) {
            Eigen::VectorXd full = beta;
            for (std::size_t j = 0; j < A.size(); ++j) full[A[j]] = v[j];
            return full;
        };
        Eigen::VectorXd best_full = embed(x);
        double best_obj = P.objective(best_full);
        for (Eigen::Index j = 0; j < a; ++j) {
            if (bA[j] != 0.0 && sign_of(bA[j]) != sign_of(x[j])) {
                const double t = bA[j] / (bA[j] - x[j]);
                Eigen::VectorXd v = bA + t * (x - bA);
                v[j] = 0.0;
                Eigen::VectorXd full = embed(v);
                const double obj = P.objective(full);
                if (obj < best_obj) {
                    best_obj = obj;
                    best_full = full;
                }
            }
        }
        beta = best_full;
        for (Eigen::Index j = 0; j < k; ++j) theta[j] = sign_of(beta[j]);
    }
    return beta;
}

}  // namespace

double empirical_variance(const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (y.size() == 0) throw InvalidParams("empirical variance of an empty vector");
    return y.squaredNorm() / static_cast<double>(y.size());
}

RegressionResult ols(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y) {
    const Eigen::Index m = X.rows(), k = X.cols();
    if (y.size() != m) throw SizeMismatch("ols: X has " + std::to_string(m) + " rows, y has " + std::to_string(y.size()));
    RegressionResult out;
    if (k == 0) {
        out.mse = empirical_variance(y);
        return out;
    }
    if (m < k) throw RankDeficient("ols: fewer samples than columns");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
    const auto& sv = svd.singularValues();
    if (!(sv[k - 1] >= 1e-10 * sv[0]) || sv[0] == 0.0)
        throw RankDeficient("ols: design is numerically singular (sigma_min/sigma_max = " +
                            std::to_string(sv[0] > 0 ? sv[k - 1] / sv[0] : 0.0) + ")");
    out.coefficients = qr.solve(y);
    out.mse = (y - X * out.coefficients).squaredNorm() / static_cast<double>(m);
    return out;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& data, std::span<const int> columns) {
    Eigen::MatrixXd X(data.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) X.col(c) = data.col(columns[c]);
    return X;
}

RegressionResult ols_columns(const Eigen::MatrixXd& data, int target, std::span<const int> columns) {
    RegressionResult out = ols(select_columns(data, columns), data.col(target));
    out.columns.assign(columns.begin(), columns.end());
    return out;
}

MseDecomposition mse_decomposition(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& y,
                                   const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                                   const Eigen::Ref<const Eigen::VectorXd>& beta_star) {
    if (y.size() != X.rows() || beta_hat.size() != X.cols() || beta_star.size() != X.cols())
        throw SizeMismatch("mse_decomposition: shapes disagree");
    if (X.rows() == 0) throw InvalidParams("mse_decomposition: no samples");
    const double m = static_cast<double>(X.rows());
    Eigen::VectorXd r_star = y - X * beta_star;
    Eigen::VectorXd shift = X * (beta_hat - beta_star);
    MseDecomposition d;
    d.variance_error = r_star.squaredNorm() / m;
    d.beta_error = shift.squaredNorm() / m;
    d.cross = -2.0 * r_star.dot(shift) / m;
    return d;
}

double lasso_objective(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& beta, double lambda) {
    return 0.5 * (y - X * beta).squaredNorm() / static_cast<double>(X.rows()) + lambda * beta.lpNorm<1>();
}

double lasso_kkt_residual(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                          const Eigen::Ref<const Eigen::VectorXd>& beta, double lambda) {
    return LassoProblem(X, y, lambda).kkt(beta);
}

LassoResult lasso(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                  double lambda, const LassoOptions& opts) {
    const Eigen::Index m = X.rows(), k = X.cols();
    if (m < 1) throw InvalidParams("lasso: no samples");
    if (y.size() != m) throw SizeMismatch("lasso: X and y row counts differ");
    if (!(lambda >= 0.0)) throw InvalidParams("lasso: lambda must be nonnegative");
    if (!(opts.tol > 0.0) || opts.max_iter < 1) throw InvalidParams("lasso: tol and max_iter must be positive");

    LassoResult out;
    out.coefficients = Eigen::VectorXd::Zero(k);
    if (k == 0) {
        out.converged = true;
        out.mse = empirical_variance(y);
        return out;
    }

    LassoProblem P(X, y, lambda);
    const double N = static_cast<double>(m);
    Eigen::MatrixXd G = X.transpose() * X / N;
    Eigen::VectorXd grad = X.transpose() * y / N;  // c - G beta, kept incrementally
    Eigen::VectorXd& beta = out.coefficients;
    const double kkt_limit = 10.0 * opts.tol;

    for (int it = 1; it <= opts.max_iter; ++it) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double gjj = G(j, j);
            if (gjj <= 0.0) continue;
            const double old = beta[j];
            const double updated = soft_threshold(grad[j] + gjj * old, lambda) / gjj;
            const double delta = updated - old;
            if (delta != 0.0) {
                grad.noalias() -= G.col(j) * delta;
                beta[j] = updated;
            }
            max_change = std::max(max_change, std::abs(delta));
        }
        out.iterations = it;
        if (opts.record_objective) out.objective_trace.push_back(P.objective(beta));
        if (max_change < opts.tol) {
            grad = P.gradient(beta);
            out.kkt_residual = P.kkt(beta);
            if (out.kkt_residual <= kkt_limit) {
                out.converged = true;
                break;
            }
        }
    }
    if (!out.converged) out.kkt_residual = P.kkt(beta);

    if (!out.converged && opts.polish) {
        Eigen::VectorXd exact = active_set_solve(P);
        const double r = P.kkt(exact);
        if (r <= kkt_limit || P.objective(exact) < P.objective(beta)) {
            beta = exact;
            out.kkt_residual = r;
            out.polished = true;
            out.converged = r <= kkt_limit;
        }
    }
    out.mse = (y - X * beta).squaredNorm() / N;
    return out;
}

}  // namespace evdag
