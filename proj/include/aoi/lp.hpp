#pragma once

// Small general-purpose linear programming support:
//   minimize c'x  subject to  rows (<=, =, >=),  x >= 0.

#include <utility>
#include <vector>

namespace aoi::lp {

enum class Sense { LessEqual, Equal, GreaterEqual };

struct SparseRow {
    std::vector<std::pair<int, double>> terms;  // (variable index, coefficient)
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

struct LinearProgram {
    int num_vars = 0;
    std::vector<double> cost;
    std::vector<SparseRow> rows;

    int num_rows() const { return static_cast<int>(rows.size()); }
    /// Largest violation of any row or sign constraint at x.
    double max_violation(const std::vector<double>& x) const;
    double evaluate(const std::vector<double>& x) const;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
    Status status = Status::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    int pivots = 0;
};

/// Two-phase dense tableau simplex with Bland's rule. Intended for instances
/// of a few hundred rows and columns.
Result solve_dense(const LinearProgram& program);

}  // namespace aoi::lp
