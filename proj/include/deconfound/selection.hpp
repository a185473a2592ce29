#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "deconfound/dataset.hpp"
#include "deconfound/errors.hpp"
#include "deconfound/models.hpp"
#include "deconfound/rng.hpp"

namespace deconfound {

// Joint selection probabilities p_ij = P(C = i, Y = j) over the four cells of
// a binary confounder/outcome pair. Cell order throughout is 00, 01, 10, 11
// (first index C, second index Y).
struct CellProbs {
    double p00 = 0.25;
    double p01 = 0.25;
    double p10 = 0.25;
    double p11 = 0.25;

    std::array<double, 4> as_array() const { return {p00, p01, p10, p11}; }
};

inline void validate(const CellProbs& probs) {
    const auto a = probs.as_array();
    double sum = 0.0;
    for (double v : a) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("cell probability must be a finite nonnegative number");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ValidationError("cell probabilities must sum to 1, got " + std::to_string(sum));
}

// Second moments of the bivariate Bernoulli law defined by CellProbs.
// P(C=1) = p10 + p11, P(Y=1) = p01 + p11, Cov(C,Y) = p11*p00 - p01*p10.
struct BernoulliMoments {
    double var_c = 0.0;
    double var_y = 0.0;
    double cov_cy = 0.0;
    double cor_cy = 0.0;
    bool cor_defined = true;  // false when a marginal has zero variance
};

inline BernoulliMoments bernoulli_moments(const CellProbs& probs) {
    validate(probs);
    BernoulliMoments m;
    const double pc1 = probs.p10 + probs.p11;
    const double py1 = probs.p01 + probs.p11;
    m.var_c = pc1 * (1.0 - pc1);
    m.var_y = py1 * (1.0 - py1);
    m.cov_cy = probs.p11 * probs.p00 - probs.p01 * probs.p10;
    if (m.var_c > 0.0 && m.var_y > 0.0) {
        m.cor_cy = m.cov_cy / std::sqrt(m.var_c * m.var_y);
    } else {
        m.cor_cy = std::numeric_limits<double>::quiet_NaN();
        m.cor_defined = false;
    }
    return m;
}

namespace detail {

inline int cell_of(double c, double y) { return 2 * static_cast<int>(c) + static_cast<int>(y); }

inline const char* cell_name(int cell) {
    static const char* names[4] = {"C=0,Y=0", "C=0,Y=1", "C=1,Y=0", "C=1,Y=1"};
    return names[cell];
}

inline void require_binary_cells(const Dataset& d, const char* op) {
    if (!has_binary_cells(d))
        throw ValidationError(std::string(op) +
                              " requires a single binary confounder and a binary outcome");
}

inline std::array<std::vector<Index>, 4> cell_members(const Dataset& d) {
    std::array<std::vector<Index>, 4> cells;
    for (Index i = 0; i < d.n(); ++i) cells[static_cast<std::size_t>(cell_of(d.c(i, 0), d.y(i)))].push_back(i);
    return cells;
}

// First k entries of a uniformly random k-subset (partial Fisher-Yates on a
// copy of the pool).
inline std::vector<Index> sample_without_replacement(std::vector<Index> pool, std::size_t k,
                                                     RngStream& rng) {
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace detail

inline std::array<Index, 4> cell_counts(const Dataset& d) {
    detail::require_binary_cells(d, "cell_counts");
    std::array<Index, 4> counts{0, 0, 0, 0};
    for (Index i = 0; i < d.n(); ++i) ++counts[static_cast<std::size_t>(detail::cell_of(d.c(i, 0), d.y(i)))];
    return counts;
}

// Draw n rows without replacement from a binary-cell population: each draw
// first samples its cell i.i.d. from probs, then takes a uniformly random
// unused row of that cell. Expected output cell frequencies equal probs; an
// exhausted cell is a hard error so the sampling law is never silently bent.
inline Dataset biased_subsample(const Dataset& population, const CellProbs& probs, Index n,
                                RngStream& rng) {
    detail::require_binary_cells(population, "biased_subsample");
    validate(probs);
    if (n < 0) throw ValidationError("biased_subsample: negative sample size");
    if (n > population.n())
        throw ValidationError("biased_subsample: requested " + std::to_string(n) +
                              " rows from a population of " + std::to_string(population.n()));

    auto cells = detail::cell_members(population);
    const auto p = probs.as_array();
    std::vector<Index> picked;
    picked.reserve(static_cast<std::size_t>(n));
    for (Index t = 0; t < n; ++t) {
        const double u = rng.u01();
        int cell = 3;
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) {
            acc += p[static_cast<std::size_t>(k)];
            if (u < acc) {
                cell = k;
                break;
            }
        }
        auto& pool = cells[static_cast<std::size_t>(cell)];
        if (pool.empty())
            throw CellExhaustedError("biased_subsample: cell {" + std::string(detail::cell_name(cell)) +
                                     "} exhausted after " + std::to_string(t) + " of " +
                                     std::to_string(n) + " draws");
        const std::size_t j = static_cast<std::size_t>(rng.uniform_below(pool.size()));
        picked.push_back(pool[j]);
        pool[j] = pool.back();
        pool.pop_back();
    }
    return population.select_rows(picked);
}

// Perfectly balanced undersample: every (C,Y) cell is cut to the minimum cell
// count, so the empirical Cov(C,Y) of the result is exactly zero. Output rows
// are a subset of the input, in original row order.
inline Dataset match_undersample(const Dataset& data, RngStream& rng) {
    detail::require_binary_cells(data, "match_undersample");
    auto cells = detail::cell_members(data);
    std::size_t k = std::numeric_limits<std::size_t>::max();
    for (int cell = 0; cell < 4; ++cell) {
        if (cells[static_cast<std::size_t>(cell)].empty())
            throw UnmatchableError("match_undersample: empty cell {" +
                                   std::string(detail::cell_name(cell)) + "}");
        k = std::min(k, cells[static_cast<std::size_t>(cell)].size());
    }
    std::vector<Index> picked;
    picked.reserve(4 * k);
    for (auto& pool : cells) {
        auto chosen = detail::sample_without_replacement(std::move(pool), k, rng);
        picked.insert(picked.end(), chosen.begin(), chosen.end());
    }
    std::sort(picked.begin(), picked.end());
    return data.select_rows(picked);
}

// Approximate inverse probability weighting for the saturated binary case:
// every cell is resampled with replacement up to the maximum cell count
// (inverse-frequency weights collapse to uniform within a cell), giving an
// exactly balanced joint. Rows are copies of input rows, grouped by cell.
inline Dataset ipw_oversample_saturated(const Dataset& data, RngStream& rng) {
    detail::require_binary_cells(data, "ipw_oversample");
    auto cells = detail::cell_members(data);
    std::size_t big = 0;
    for (int cell = 0; cell < 4; ++cell) {
        if (cells[static_cast<std::size_t>(cell)].empty())
            throw UnweightableError("ipw_oversample: empty cell {" +
                                    std::string(detail::cell_name(cell)) + "}");
        big = std::max(big, cells[static_cast<std::size_t>(cell)].size());
    }
    std::vector<Index> picked;
    picked.reserve(4 * big);
    for (const auto& pool : cells)
        for (std::size_t t = 0; t < big; ++t)
            picked.push_back(pool[static_cast<std::size_t>(rng.uniform_below(pool.size()))]);
    return data.select_rows(picked);
}

// General fallback when the confounders are not a single binary column:
// propensities P(Y=1 | C) come from a logistic fit and rows are resampled
// with replacement (at input size) with probability inverse to the estimated
// probability of their own label, neutralizing the C-Y association
// approximately instead of exactly.
inline Dataset ipw_oversample_propensity(const Dataset& data, RngStream& rng) {
    validate(data);
    const auto w = fit_logistic(data.c, data.y);
    const Vector proba = predict_proba(data.c, w);
    std::vector<double> cumulative(static_cast<std::size_t>(data.n()));
    double total = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        const double own = data.y(i) == 1.0 ? proba(i) : 1.0 - proba(i);
        total += 1.0 / std::max(own, 1e-12);
        cumulative[static_cast<std::size_t>(i)] = total;
    }
    std::vector<Index> picked;
    picked.reserve(static_cast<std::size_t>(data.n()));
    for (Index t = 0; t < data.n(); ++t) {
        const double u = rng.u01() * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        picked.push_back(static_cast<Index>(it - cumulative.begin()));
    }
    return data.select_rows(picked);
}

// For one binary confounder the fitted propensity model is saturated and
// equals the cell frequencies, so the exact-cell route applies; anything
// else falls back to the fitted-propensity route.
inline Dataset ipw_oversample(const Dataset& data, RngStream& rng) {
    return has_binary_cells(data) ? ipw_oversample_saturated(data, rng)
                                  : ipw_oversample_propensity(data, rng);
}

// Rebalance toward a known target joint by undersampling (output capped so no
// cell exceeds its available rows) or oversampling with replacement at input
// size. Fractional cell counts are settled by largest-remainder apportionment
// with ties broken in cell order 00, 01, 10, 11.
enum class RebalanceMode { Undersample, Oversample };

namespace detail {

inline std::array<Index, 4> apportion(const std::array<double, 4>& share, Index total) {
    std::array<Index, 4> out{0, 0, 0, 0};
    std::array<double, 4> remainder{};
    Index assigned = 0;
    for (int k = 0; k < 4; ++k) {
        const double quota = share[static_cast<std::size_t>(k)] * static_cast<double>(total);
        out[static_cast<std::size_t>(k)] = static_cast<Index>(std::floor(quota));
        remainder[static_cast<std::size_t>(k)] = quota - std::floor(quota);
        assigned += out[static_cast<std::size_t>(k)];
    }
    std::array<int, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return remainder[static_cast<std::size_t>(a)] > remainder[static_cast<std::size_t>(b)];
    });
    for (Index left = total - assigned; left > 0; --left)
        ++out[static_cast<std::size_t>(order[static_cast<std::size_t>(total - assigned - left)])];
    return out;
}

}  // namespace detail

inline Dataset rebalance_to_target(const Dataset& data, const CellProbs& target,
                                   RebalanceMode mode, RngStream& rng) {
    detail::require_binary_cells(data, "rebalance_to_target");
    validate(target);
    auto cells = detail::cell_members(data);
    const auto share = target.as_array();
    for (int k = 0; k < 4; ++k)
        if (share[static_cast<std::size_t>(k)] > 0.0 && cells[static_cast<std::size_t>(k)].empty())
            throw UnreachableTargetError("rebalance_to_target: target needs cell {" +
                                         std::string(detail::cell_name(k)) +
                                         "} but the data has none");

    std::vector<Index> picked;
    if (mode == RebalanceMode::Undersample) {
        Index size = data.n();
        for (int k = 0; k < 4; ++k)
            if (share[static_cast<std::size_t>(k)] > 0.0)
                size = std::min(size, static_cast<Index>(std::floor(
                                          static_cast<double>(cells[static_cast<std::size_t>(k)].size()) /
                                          share[static_cast<std::size_t>(k)])));
        auto want = detail::apportion(share, size);
        while (size > 0) {
            bool fits = true;
            for (int k = 0; k < 4; ++k)
                fits = fits && want[static_cast<std::size_t>(k)] <=
                                   static_cast<Index>(cells[static_cast<std::size_t>(k)].size());
            if (fits) break;
            want = detail::apportion(share, --size);
        }
        for (int k = 0; k < 4; ++k) {
            auto chosen = detail::sample_without_replacement(
                cells[static_cast<std::size_t>(k)],
                static_cast<std::size_t>(want[static_cast<std::size_t>(k)]), rng);
            picked.insert(picked.end(), chosen.begin(), chosen.end());
        }
        std::sort(picked.begin(), picked.end());
    } else {
        const auto want = detail::apportion(share, data.n());
        for (int k = 0; k < 4; ++k) {
            const auto& pool = cells[static_cast<std::size_t>(k)];
            for (Index t = 0; t < want[static_cast<std::size_t>(k)]; ++t)
                picked.push_back(pool[static_cast<std::size_t>(rng.uniform_below(pool.size()))]);
        }
    }
    return data.select_rows(picked);
}

}  // namespace deconfound
