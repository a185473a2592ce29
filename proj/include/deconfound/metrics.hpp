#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "deconfound/dataset.hpp"
#include "deconfound/errors.hpp"
#include "deconfound/models.hpp"
#include "deconfound/scm.hpp"

namespace deconfound {

inline double mse(const Vector& y_true, const Vector& y_pred) {
    if (y_true.size() != y_pred.size()) throw ValidationError("mse: length mismatch");
    if (y_true.size() == 0) throw ValidationError("mse: empty input");
    return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

// Area under the ROC curve as the Mann-Whitney statistic: the probability
// that a uniformly random positive outscores a uniformly random negative,
// ties counted 1/2. Computed from average ranks in O(n log n); the exhaustive
// pair count survives only as a small-n test oracle.
inline double auroc(const Vector& labels, const Vector& scores) {
    const Index n = labels.size();
    if (scores.size() != n) throw ValidationError("auroc: length mismatch");
    Index positives = 0;
    for (Index i = 0; i < n; ++i) {
        if (!is_binary01(labels(i))) throw ValidationError("auroc: labels must be 0/1");
        positives += static_cast<Index>(labels(i));
    }
    if (positives == 0 || positives == n)
        throw UndefinedMetricError("auroc: needs both classes, got " + std::to_string(positives) +
                                   " positives of " + std::to_string(n));

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(),
              [&](Index a, Index b) { return scores(a) < scores(b); });

    double positive_rank_sum = 0.0;
    Index i = 0;
    while (i < n) {
        Index j = i;
        while (j + 1 < n && scores(order[static_cast<std::size_t>(j + 1)]) ==
                                scores(order[static_cast<std::size_t>(i)]))
            ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
        for (Index k = i; k <= j; ++k)
            if (labels(order[static_cast<std::size_t>(k)]) == 1.0) positive_rank_sum += avg_rank;
        i = j + 1;
    }
    const double n1 = static_cast<double>(positives);
    const double n0 = static_cast<double>(n - positives);
    const double u = positive_rank_sum - n1 * (n1 + 1.0) / 2.0;
    return u / (n1 * n0);
}

struct StabilityReport {
    Vector per_env_mean;      // over replications, per environment
    Vector per_env_sd;
    double stability_error = 0.0;  // mean over replications of the per-replication
                                   // sd of the metric across environments
};

// metric_values is replications x environments.
inline StabilityReport stability_error(const Matrix& metric_values) {
    const Index reps = metric_values.rows();
    const Index envs = metric_values.cols();
    if (envs < 2) throw ValidationError("stability_error: need at least 2 environments");
    if (reps < 1) throw ValidationError("stability_error: need at least 1 replication");

    StabilityReport report;
    report.per_env_mean = metric_values.colwise().mean().transpose();
    report.per_env_sd.resize(envs);
    for (Index e = 0; e < envs; ++e) {
        if (reps > 1) {
            const double mean = report.per_env_mean(e);
            report.per_env_sd(e) = std::sqrt(
                (metric_values.col(e).array() - mean).square().sum() / static_cast<double>(reps - 1));
        } else {
            report.per_env_sd(e) = 0.0;
        }
    }
    double total = 0.0;
    for (Index r = 0; r < reps; ++r) {
        const double mean = metric_values.row(r).mean();
        total += std::sqrt((metric_values.row(r).array() - mean).square().sum() /
                           static_cast<double>(envs - 1));
    }
    report.stability_error = total / static_cast<double>(reps);
    return report;
}

// Second moments of a test environment for the analytic oracle.
struct TestMoments {
    double var_y = 1.0;
    Vector var_c;    // m
    Matrix cov_cc;   // m x m, diagonal must equal var_c
    Vector cov_yc;   // m

    static TestMoments single_confounder(double var_y, double var_c, double cov_yc) {
        TestMoments env;
        env.var_y = var_y;
        env.var_c = Vector::Constant(1, var_c);
        env.cov_cc = Matrix::Constant(1, 1, var_c);
        env.cov_yc = Vector::Constant(1, cov_yc);
        return env;
    }

    static TestMoments from_targets(const GaussianTargets& t) {
        return single_confounder(t.var_y, t.var_c, t.cov_cy);
    }
};

// Closed-form feature second moments under a test environment, holding the
// structural coefficients fixed. With adjusted = false these follow the raw
// feature equation and depend on Cov(Y,C), Var(C), and Cov(C,C'); with
// adjusted = true they follow the deconfounded equation X*_j = b_xy_j Y + U_Xj
// and read nothing from the environment except Var(Y) -- the instability the
// adjustment removes is exactly the dependence that drops out here.
inline std::pair<Matrix, Vector> analytic_feature_moments(const RegressionScmParams& params,
                                                          const TestMoments& env, bool adjusted) {
    validate_params(params);
    if (!(env.var_y > 0.0))
        throw InvalidParameterError("analytic_feature_moments: var_y must be positive");
    const Matrix noise_cov = params.sigma2_x * ar1_covariance(params.rho, params.p());

    if (adjusted) {
        Matrix v = params.beta_xy * params.beta_xy.transpose() * env.var_y + noise_cov;
        Vector c = params.beta_xy * env.var_y;
        return {std::move(v), std::move(c)};
    }

    const Index m = params.m();
    if (env.var_c.size() != m || env.cov_yc.size() != m || env.cov_cc.rows() != m ||
        env.cov_cc.cols() != m)
        throw InvalidParameterError("analytic_feature_moments: environment dimensions must match m");
    if (!env.cov_cc.isApprox(env.cov_cc.transpose(), 1e-9) ||
        !env.cov_cc.diagonal().isApprox(env.var_c, 1e-9))
        throw InvalidParameterError(
            "analytic_feature_moments: cov_cc must be symmetric with diagonal var_c");

    const Vector confounder_channel = params.beta_xc * env.cov_yc;  // p
    Matrix v = params.beta_xy * params.beta_xy.transpose() * env.var_y +
               params.beta_xy * confounder_channel.transpose() +
               confounder_channel * params.beta_xy.transpose() +
               params.beta_xc * env.cov_cc * params.beta_xc.transpose() + noise_cov;
    Vector c = params.beta_xy * env.var_y + confounder_channel;
    return {std::move(v), std::move(c)};
}

// Expected test-set MSE of a fixed linear predictor under the environment's
// second moments: Var(Y) + b' V b - 2 b' c with (V, c) the feature moments
// above. The trained weights are treated as constants, so the same formula
// serves any fitted model.
inline double analytic_expected_mse(const RegressionScmParams& params, const TestMoments& env,
                                    const LinearWeights& weights, bool adjusted) {
    if (weights.beta_hat.size() != params.p())
        throw ValidationError("analytic_expected_mse: weight length must equal p");
    const auto [v, c] = analytic_feature_moments(params, env, adjusted);
    return env.var_y + weights.beta_hat.dot(v * weights.beta_hat) -
           2.0 * weights.beta_hat.dot(c);
}

}  // namespace deconfound
