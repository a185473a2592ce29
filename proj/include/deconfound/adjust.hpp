#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "deconfound/dataset.hpp"
#include "deconfound/errors.hpp"
#include "deconfound/models.hpp"
#include "deconfound/selection.hpp"

namespace deconfound {

// Fitted confounder path coefficients: the reusable train-to-test transform.
// b_xc_hat[j,k] is the coefficient of confounder k in the regression of
// feature j on (Y, C); b_xy_hat keeps the outcome coefficients for
// diagnostics. Applying the model never needs labels, which is what makes
// unlabeled test-set deconfounding possible. The transform is linear, so
// confounder values outside the training support extrapolate linearly.
struct AdjustmentModel {
    Matrix b_xc_hat;      // p x m
    Vector b_xy_hat;      // p
    Vector intercept;     // p, all zero unless fitted with an intercept
    Index fitted_on = 0;  // training sample count
};

// The adjustment strategy roster compared by the experiments.
enum class Strategy { CausalityAware, PoorMans, Matching, ApproxIPW, NoAdjustment };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::CausalityAware: return "causality_aware";
        case Strategy::PoorMans: return "poor_mans";
        case Strategy::Matching: return "matching";
        case Strategy::ApproxIPW: return "approx_ipw";
        case Strategy::NoAdjustment: return "no_adjustment";
    }
    return "unknown";
}

inline Strategy strategy_from_string(const std::string& name) {
    if (name == "causality_aware") return Strategy::CausalityAware;
    if (name == "poor_mans") return Strategy::PoorMans;
    if (name == "matching") return Strategy::Matching;
    if (name == "approx_ipw") return Strategy::ApproxIPW;
    if (name == "no_adjustment") return Strategy::NoAdjustment;
    throw ValidationError("unknown strategy '" + name + "'");
}

// Least-squares fit of each feature on the joint design (Y, C_1..C_m), no
// intercept under the centered-data convention (set intercept=true for
// non-centered external data; the transform still subtracts only the C
// contribution). Each feature is a separate regression sharing one design
// factorization. Residuals are orthogonal to the design columns.
inline AdjustmentModel fit_adjustment(const Dataset& train, bool intercept = false) {
    validate(train);
    const Index n = train.n();
    const Index m = train.m();
    const Index cols = 1 + m + (intercept ? 1 : 0);
    if (n <= cols)
        throw ValidationError("fit_adjustment: need n > " + std::to_string(cols) +
                              " samples, got " + std::to_string(n));

    Matrix design(n, cols);
    design.col(0) = train.y;
    design.middleCols(1, m) = train.c;
    if (intercept) design.col(cols - 1).setOnes();

    const Matrix coef = detail::solve_least_squares(design, train.x, "fit_adjustment");

    AdjustmentModel model;
    model.b_xy_hat = coef.row(0).transpose();
    model.b_xc_hat = coef.middleRows(1, m).transpose();
    model.intercept = intercept ? Vector(coef.row(cols - 1).transpose()) : Vector(Vector::Zero(train.p()));
    model.fitted_on = n;
    return model;
}

// Subtract the estimated confounder contribution from every feature:
// out[i,j] = features[i,j] - sum_k b_xc_hat[j,k] * confounders[i,k].
// Reads no labels.
inline Matrix transform(const Matrix& features, const Matrix& confounders,
                        const AdjustmentModel& model) {
    if (features.cols() != model.b_xc_hat.rows())
        throw ValidationError("transform: feature count does not match the model");
    if (confounders.cols() != model.b_xc_hat.cols())
        throw ValidationError("transform: confounder count does not match the model");
    if (features.rows() != confounders.rows())
        throw ValidationError("transform: row count mismatch");
    return features - confounders * model.b_xc_hat.transpose();
}

inline Dataset transform_dataset(const Dataset& data, const AdjustmentModel& model) {
    Dataset out = data;
    out.x = transform(data.x, data.c, model);
    return out;
}

struct PreparedData {
    Dataset train;
    std::vector<Dataset> tests;
};

// Apply one adjustment strategy to a training set and a family of test sets.
//   CausalityAware: fit on train, deconfound train and every test set.
//   PoorMans:       deconfound train only; test sets pass through untouched.
//   Matching:       balanced undersample of train only.
//   ApproxIPW:      balanced oversample of train only.
//   NoAdjustment:   everything passes through untouched.
// A counterfactual-normalization strategy is not listed separately: for this
// model family it coincides with CausalityAware (train+test) or PoorMans
// (train only).
inline PreparedData prepare(const Dataset& train, const std::vector<Dataset>& tests,
                            Strategy strategy, RngStream& rng) {
    PreparedData out;
    switch (strategy) {
        case Strategy::CausalityAware: {
            const AdjustmentModel model = fit_adjustment(train);
            out.train = transform_dataset(train, model);
            out.tests.reserve(tests.size());
            for (const auto& t : tests) out.tests.push_back(transform_dataset(t, model));
            return out;
        }
        case Strategy::PoorMans: {
            const AdjustmentModel model = fit_adjustment(train);
            out.train = transform_dataset(train, model);
            out.tests = tests;
            return out;
        }
        case Strategy::Matching:
            out.train = match_undersample(train, rng);
            out.tests = tests;
            return out;
        case Strategy::ApproxIPW:
            out.train = ipw_oversample(train, rng);
            out.tests = tests;
            return out;
        case Strategy::NoAdjustment:
            out.train = train;
            out.tests = tests;
            return out;
    }
    throw ValidationError("prepare: unhandled strategy");
}

}  // namespace deconfound
