#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "deconfound/dataset.hpp"
#include "deconfound/errors.hpp"

namespace deconfound {

struct LinearWeights {
    Vector beta_hat;  // no intercept; centered-data convention
};

struct LogisticWeights {
    double intercept = 0.0;
    Vector beta_hat;
    bool converged = false;
    bool separation = false;
    int iterations = 0;
};

namespace detail {

// Rank-revealing least squares used by both the predictive models and the
// adjustment fit. Relative pivot cutoff 1e-10 marks the design singular.
inline Matrix solve_least_squares(const Matrix& design, const Matrix& rhs, const char* op) {
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols())
        throw SingularDesignError(std::string(op) + ": design is rank-deficient (rank " +
                                  std::to_string(qr.rank()) + " of " +
                                  std::to_string(design.cols()) + " columns)");
    return qr.solve(rhs);
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + exp(z)) without overflow.
inline double log1pexp(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace detail

// Least-squares fit of y on the columns of x, no intercept. QR keeps the
// conditioning honest; the explicit normal-equation solve exists only as a
// test oracle.
inline LinearWeights fit_ols(const Matrix& x, const Vector& y) {
    if (x.rows() != y.size()) throw ValidationError("fit_ols: row count mismatch");
    if (x.rows() <= x.cols())
        throw ValidationError("fit_ols: need more samples than features (n=" +
                              std::to_string(x.rows()) + ", p=" + std::to_string(x.cols()) + ")");
    LinearWeights w;
    w.beta_hat = detail::solve_least_squares(x, y, "fit_ols");
    return w;
}

inline Vector predict_linear(const Matrix& x, const LinearWeights& w) {
    if (x.cols() != w.beta_hat.size())
        throw ValidationError("predict_linear: feature count mismatch");
    return x * w.beta_hat;
}

// Logistic regression with intercept, fit by iteratively reweighted least
// squares with step halving (the log-likelihood never decreases across
// iterations). Convergence: max-norm of the score vector <= tol. Runs that
// drive the weight norm past 30 without converging are flagged as separated
// and returned with the weights capped at that norm.
inline LogisticWeights fit_logistic(const Matrix& x, const Vector& y, int max_iter = 100,
                                    double tol = 1e-8) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (n != y.size()) throw ValidationError("fit_logistic: row count mismatch");
    if (n <= p + 1)
        throw ValidationError("fit_logistic: need more samples than parameters");
    Index ones = 0;
    for (Index i = 0; i < n; ++i) {
        if (!is_binary01(y(i))) throw ValidationError("fit_logistic: labels must be 0/1");
        ones += static_cast<Index>(y(i));
    }
    if (ones == 0 || ones == n)
        throw DegenerateLabelsError("fit_logistic: labels contain a single class");

    Matrix design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = x;

    Vector w = Vector::Zero(p + 1);
    auto log_lik = [&](const Vector& weights) {
        const Vector eta = design * weights;
        double ll = 0.0;
        for (Index i = 0; i < n; ++i) ll += y(i) * eta(i) - detail::log1pexp(eta(i));
        return ll;
    };

    LogisticWeights out;
    double ll = log_lik(w);
    constexpr double kWeightCap = 30.0;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        const Vector eta = design * w;
        Vector mu(n), irls_w(n);
        for (Index i = 0; i < n; ++i) {
            mu(i) = detail::sigmoid(eta(i));
            irls_w(i) = mu(i) * (1.0 - mu(i));
        }
        const Vector score = design.transpose() * (y - mu);
        if (score.lpNorm<Eigen::Infinity>() <= tol) {
            out.converged = true;
            break;
        }
        Matrix hessian = design.transpose() * irls_w.asDiagonal() * design;
        Eigen::LDLT<Matrix> ldlt(hessian);
        if (ldlt.info() != Eigen::Success)
            hessian.diagonal().array() += 1e-10;  // flat-curvature fallback
        Vector step = Eigen::LDLT<Matrix>(hessian).solve(score);

        double scale = 1.0;
        Vector trial = w + step;
        double trial_ll = log_lik(trial);
        int halvings = 0;
        while (trial_ll < ll && halvings < 40) {
            scale *= 0.5;
            trial = w + scale * step;
            trial_ll = log_lik(trial);
            ++halvings;
        }
        if (trial_ll < ll) break;  // no ascent direction left
        w = trial;
        ll = trial_ll;
        if (w.norm() > kWeightCap) {
            w *= kWeightCap / w.norm();
            out.separation = true;
            break;
        }
    }
    out.iterations = iter;
    out.intercept = w(0);
    out.beta_hat = w.tail(p);
    return out;
}

inline Vector predict_proba(const Matrix& x, const LogisticWeights& w) {
    if (x.cols() != w.beta_hat.size())
        throw ValidationError("predict_proba: feature count mismatch");
    Vector out = (x * w.beta_hat).array() + w.intercept;
    for (Index i = 0; i < out.size(); ++i) out(i) = detail::sigmoid(out(i));
    return out;
}

}  // namespace deconfound
