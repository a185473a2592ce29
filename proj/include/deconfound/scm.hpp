#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "deconfound/dataset.hpp"
#include "deconfound/errors.hpp"
#include "deconfound/rng.hpp"
#include "deconfound/selection.hpp"

namespace deconfound {

// Path coefficients of the linear anticausal structural model
//   C = U_C,  Y = beta_yc . C + U_Y,  X_j = beta_xy_j Y + sum_i beta_xc_ji C_i + U_Xj
// with AR(1)-correlated feature noise: Cov(U_Xi, U_Xj) = sigma2_x * rho^|i-j|.
struct RegressionScmParams {
    Vector beta_xy;   // length p
    Matrix beta_xc;   // p x m
    Vector beta_yc;   // length m
    double rho = 0.0;
    double sigma2_x = 1.0;

    Index p() const { return beta_xy.size(); }
    Index m() const { return beta_xc.cols(); }
};

// Same feature equation, but C ~ Bernoulli(1/2) and Y ~ Bernoulli(sigmoid(beta_yc . C)).
struct ClassificationScmParams {
    Vector beta_xy;
    Matrix beta_xc;
    Vector beta_yc;
    double rho = 0.0;
    double sigma2_x = 1.0;

    Index p() const { return beta_xy.size(); }
    Index m() const { return beta_xc.cols(); }
};

template <typename Params>
void validate_params(const Params& params) {
    if (params.p() < 1 || params.m() < 1)
        throw InvalidParameterError("scm params: need p >= 1 and m >= 1");
    if (params.beta_xc.rows() != params.p())
        throw InvalidParameterError("scm params: beta_xc must be p x m");
    if (params.beta_yc.size() != params.m())
        throw InvalidParameterError("scm params: beta_yc must have length m");
    if (!(std::abs(params.rho) < 1.0))
        throw InvalidParameterError("scm params: |rho| must be < 1");
    if (!(params.sigma2_x > 0.0))
        throw InvalidParameterError("scm params: sigma2_x must be positive");
    if (!params.beta_xy.allFinite() || !params.beta_xc.allFinite() || !params.beta_yc.allFinite())
        throw InvalidParameterError("scm params: coefficients must be finite");
}

// Target second moments of one environment: either Gaussian (Var(C),
// Cov(Y,C), Var(Y)) for regression tasks or selection cell probabilities for
// classification tasks.
struct GaussianTargets {
    double var_c = 1.0;
    double cov_cy = 0.0;
    double var_y = 1.0;
};

using EnvironmentMoments = std::variant<GaussianTargets, CellProbs>;

// Covariance of the (U_C, U_Y) error pair.
struct ErrorMoments {
    double phi_cc = 1.0;
    double phi_cy = 0.0;
    double phi_yy = 1.0;
};

// AR(1) correlation matrix: unit diagonal, entry (i,j) = rho^|i-j|.
inline Matrix ar1_covariance(double rho, Index p) {
    if (!(std::abs(rho) < 1.0))
        throw InvalidParameterError("ar1_covariance: |rho| must be < 1, got " + std::to_string(rho));
    if (p < 1) throw InvalidParameterError("ar1_covariance: p must be >= 1");
    Matrix cov(p, p);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j)
            cov(i, j) = std::pow(rho, static_cast<double>(i > j ? i - j : j - i));
    return cov;
}

// Solve for the error covariance that makes the simulated (C, Y) hit the
// requested Var(C), Cov(Y,C), Var(Y) given the structural coefficient
// beta_yc. Inverts the identities
//   Var(C)   = phi_cc
//   Cov(Y,C) = beta_yc * phi_cc + phi_cy
//   Var(Y)   = beta_yc^2 * phi_cc + phi_yy + 2 * beta_yc * phi_cy
// so simulating with the result reproduces the targets in expectation. The
// targets are infeasible exactly when their own 2x2 covariance is not PSD:
// the solved determinant phi_cc*phi_yy - phi_cy^2 equals var_c*var_y - cov_cy^2.
inline ErrorMoments solve_error_moments(double var_c, double cov_cy, double var_y,
                                        double beta_yc) {
    if (!(var_c > 0.0) || !(var_y > 0.0))
        throw InvalidParameterError("solve_error_moments: var_c and var_y must be positive");
    ErrorMoments phi;
    phi.phi_cc = var_c;
    phi.phi_cy = cov_cy - beta_yc * var_c;
    phi.phi_yy = var_y - beta_yc * beta_yc * phi.phi_cc - 2.0 * beta_yc * phi.phi_cy;
    const double det = phi.phi_cc * phi.phi_yy - phi.phi_cy * phi.phi_cy;
    if (phi.phi_yy <= 0.0 || det < -1e-12 * std::max(1.0, phi.phi_cc * phi.phi_yy))
        throw InfeasibleMomentsError(
            "solve_error_moments: no valid error covariance for targets var_c=" +
            std::to_string(var_c) + " cov_cy=" + std::to_string(cov_cy) +
            " var_y=" + std::to_string(var_y) + " with beta_yc=" + std::to_string(beta_yc) +
            " (phi_cc=" + std::to_string(phi.phi_cc) + " phi_cy=" + std::to_string(phi.phi_cy) +
            " phi_yy=" + std::to_string(phi.phi_yy) +
            "); targets must satisfy cov_cy^2 <= var_c*var_y");
    return phi;
}

// Zero-mean Gaussian draws with the given covariance, n x k. Uses the pivoted
// LDL^T factorization so rank-deficient PSD covariances emit their
// zero-variance components as exact zeros. Draw order is row-major.
inline Matrix sample_mvn(const Matrix& cov, Index n, RngStream& rng) {
    const Index k = cov.rows();
    if (cov.cols() != k) throw InvalidParameterError("sample_mvn: covariance must be square");
    if (!cov.isApprox(cov.transpose(), 1e-10))
        throw InvalidParameterError("sample_mvn: covariance must be symmetric");

    Eigen::LDLT<Matrix> ldlt(cov);
    Vector d = ldlt.vectorD();
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    for (Index i = 0; i < k; ++i) {
        if (d(i) < -1e-9 * scale)
            throw InvalidParameterError("sample_mvn: covariance is not positive semi-definite");
        d(i) = std::max(d(i), 0.0);
    }
    // cov = P^T L D L^T P  =>  draw = P^T L sqrt(D) z
    Matrix factor = ldlt.matrixL();
    factor = ldlt.transpositionsP().transpose() * Matrix(factor * d.cwiseSqrt().asDiagonal());

    Matrix z(n, k);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j) z(i, j) = rng.gaussian();
    return z * factor.transpose();
}

// Simulate one regression environment: (U_C, U_Y) are bivariate normal with
// the solved error covariance, then C = U_C, Y = beta_yc*C + U_Y, and the
// features follow the structural equation with AR(1) noise. Everything is
// zero-mean by construction; no intercepts, no centering pass.
inline Dataset simulate_regression(const RegressionScmParams& params, const GaussianTargets& env,
                                   Index n, RngStream& rng) {
    validate_params(params);
    if (params.m() != 1)
        throw InvalidParameterError("simulate_regression: moment targeting requires m == 1");
    if (n < 0) throw InvalidParameterError("simulate_regression: negative sample size");
    const double beta_yc = params.beta_yc(0);
    const ErrorMoments phi = solve_error_moments(env.var_c, env.cov_cy, env.var_y, beta_yc);

    Dataset data;
    data.task = Task::Regression;
    if (n == 0) {
        data.x.resize(0, params.p());
        data.c.resize(0, 1);
        data.y.resize(0);
        return data;
    }

    Matrix cy_cov(2, 2);
    cy_cov << phi.phi_cc, phi.phi_cy, phi.phi_cy, phi.phi_yy;
    const Matrix u_cy = sample_mvn(cy_cov, n, rng);
    data.c = u_cy.col(0);
    data.y = beta_yc * u_cy.col(0) + u_cy.col(1);

    const Matrix u_x = sample_mvn(params.sigma2_x * ar1_covariance(params.rho, params.p()), n, rng);
    data.x = data.y * params.beta_xy.transpose() + data.c * params.beta_xc.transpose() + u_x;
    return data;
}

// Simulate the classification population: C ~ Bernoulli(1/2),
// Y | C ~ Bernoulli(sigmoid(beta_yc * C)), features as in the regression
// model with binary C and Y entering numerically as 0/1. Selection-biased
// training and test sets are carved out of this population afterwards.
inline Dataset simulate_classification_population(const ClassificationScmParams& params, Index n,
                                                  RngStream& rng) {
    validate_params(params);
    if (params.m() != 1)
        throw InvalidParameterError("simulate_classification_population: requires m == 1");
    if (n < 1) throw InvalidParameterError("simulate_classification_population: need n >= 1");

    Dataset data;
    data.task = Task::Classification;
    data.c.resize(n, 1);
    data.y.resize(n);
    const double beta_yc = params.beta_yc(0);
    for (Index i = 0; i < n; ++i) {
        const double c = rng.bernoulli(0.5) ? 1.0 : 0.0;
        const double p_y = 1.0 / (1.0 + std::exp(-beta_yc * c));
        data.c(i, 0) = c;
        data.y(i) = rng.bernoulli(p_y) ? 1.0 : 0.0;
    }
    const Matrix u_x = sample_mvn(params.sigma2_x * ar1_covariance(params.rho, params.p()), n, rng);
    data.x = data.y * params.beta_xy.transpose() + data.c * params.beta_xc.transpose() + u_x;
    return data;
}

namespace detail {

constexpr int kDrawBudget = 10000;

template <typename Params>
void fill_coefficients(Params& params, Index p, Index m, RngStream& rng) {
    params.beta_xy.resize(p);
    params.beta_xc.resize(p, m);
    params.beta_yc.resize(m);
    for (Index j = 0; j < p; ++j) params.beta_xy(j) = rng.uniform(-1.0, 1.0);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < m; ++i) params.beta_xc(j, i) = rng.uniform(-1.0, 1.0);
    for (Index i = 0; i < m; ++i) params.beta_yc(i) = rng.uniform(-1.0, 1.0);
    params.rho = rng.uniform(-0.5, 0.5);
}

}  // namespace detail

// Coefficients ~ U(-1,1), rho ~ U(-0.5,0.5), rejected until the error-moment
// solve is feasible for every listed environment, so one draw serves the
// training environment and all test environments alike.
inline RegressionScmParams draw_regression_params(Index p, Index m,
                                                  const std::vector<GaussianTargets>& env_targets,
                                                  RngStream& rng) {
    if (p < 1 || m != 1)
        throw InvalidParameterError("draw_regression_params: need p >= 1 and m == 1");
    for (int attempt = 0; attempt < detail::kDrawBudget; ++attempt) {
        RegressionScmParams params;
        detail::fill_coefficients(params, p, m, rng);
        bool feasible = true;
        for (const auto& env : env_targets) {
            try {
                solve_error_moments(env.var_c, env.cov_cy, env.var_y, params.beta_yc(0));
            } catch (const InfeasibleMomentsError&) {
                feasible = false;
                break;
            }
        }
        if (feasible) return params;
    }
    throw InfeasibleConfigurationError(
        "draw_regression_params: no feasible coefficient draw in " +
        std::to_string(detail::kDrawBudget) + " attempts; check the environment targets");
}

inline ClassificationScmParams draw_classification_params(Index p, Index m, RngStream& rng) {
    if (p < 1 || m != 1)
        throw InvalidParameterError("draw_classification_params: need p >= 1 and m == 1");
    ClassificationScmParams params;
    detail::fill_coefficients(params, p, m, rng);
    return params;
}

}  // namespace deconfound
