#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "deconfound/errors.hpp"

namespace deconfound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Task { Regression, Classification };

inline const char* to_string(Task t) {
    return t == Task::Regression ? "regression" : "classification";
}

// One sample table: features X (n x p), confounders C (n x m), outcome Y (n).
// Binary variables are stored as real 0/1 so they can enter linear equations
// directly.
struct Dataset {
    Matrix x;
    Matrix c;
    Vector y;
    Task task = Task::Regression;

    Index n() const { return x.rows(); }
    Index p() const { return x.cols(); }
    Index m() const { return c.cols(); }

    Dataset select_rows(const std::vector<Index>& rows) const {
        Dataset out;
        out.task = task;
        out.x.resize(static_cast<Index>(rows.size()), x.cols());
        out.c.resize(static_cast<Index>(rows.size()), c.cols());
        out.y.resize(static_cast<Index>(rows.size()));
        for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
            out.x.row(i) = x.row(rows[static_cast<std::size_t>(i)]);
            out.c.row(i) = c.row(rows[static_cast<std::size_t>(i)]);
            out.y(i) = y(rows[static_cast<std::size_t>(i)]);
        }
        return out;
    }
};

inline bool is_binary01(double v) { return v == 0.0 || v == 1.0; }

inline void validate(const Dataset& d) {
    if (d.c.rows() != d.n() || d.y.size() != d.n())
        throw ValidationError("dataset row counts differ (x=" + std::to_string(d.n()) +
                              ", c=" + std::to_string(d.c.rows()) +
                              ", y=" + std::to_string(d.y.size()) + ")");
    if (!d.x.allFinite() || !d.c.allFinite() || !d.y.allFinite())
        throw ValidationError("dataset contains non-finite entries");
    if (d.task == Task::Classification) {
        for (Index i = 0; i < d.n(); ++i)
            if (!is_binary01(d.y(i)))
                throw ValidationError("classification outcome must be 0/1, got " +
                                      std::to_string(d.y(i)));
    }
}

// True when the dataset has exactly one confounder column and both C and Y
// take only 0/1 values; the cell-based selection operations require this.
inline bool has_binary_cells(const Dataset& d) {
    if (d.m() != 1) return false;
    for (Index i = 0; i < d.n(); ++i)
        if (!is_binary01(d.c(i, 0)) || !is_binary01(d.y(i))) return false;
    return true;
}

}  // namespace deconfound
