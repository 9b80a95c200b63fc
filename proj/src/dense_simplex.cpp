#include "aoi/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aoi::lp {

double LinearProgram::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (double v : x) worst = std::max(worst, -v);
    for (const auto& row : rows) {
        double lhs = 0.0;
        for (auto [j, a] : row.terms) lhs += a * x[j];
        switch (row.sense) {
            case Sense::LessEqual: worst = std::max(worst, lhs - row.rhs); break;
            case Sense::GreaterEqual: worst = std::max(worst, row.rhs - lhs); break;
            case Sense::Equal: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
        }
    }
    return worst;
}

double LinearProgram::evaluate(const std::vector<double>& x) const {
    double v = 0.0;
    for (int j = 0; j < num_vars; ++j) v += cost[j] * x[j];
    return v;
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;

class Tableau {
public:
    Tableau(int rows, int cols) : m_(rows), n_(cols), a_((rows + 1) * (cols + 1), 0.0), basis_(rows, -1) {}

    double& at(int r, int c) { return a_[r * (n_ + 1) + c]; }
    double& rhs(int r) { return at(r, n_); }
    double& obj(int c) { return at(m_, c); }

    void pivot(int r, int c) {
        const double p = at(r, c);
        for (int j = 0; j <= n_; ++j) at(r, j) /= p;
        for (int i = 0; i <= m_; ++i) {
            if (i == r) continue;
            const double f = at(i, c);
            if (f == 0.0) continue;
            for (int j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
            at(i, c) = 0.0;
        }
        basis_[r] = c;
    }

    // Bland's rule over columns [0, allowed). Returns false if unbounded.
    bool optimize(int allowed, int& pivots) {
        for (;;) {
            int enter = -1;
            for (int j = 0; j < allowed; ++j) {
                if (obj(j) < -kCostTol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m_; ++i) {
                const double a = at(i, enter);
                if (a <= kPivotTol) continue;
                const double ratio = rhs(i) / a;
                if (ratio < best - 1e-14 ||
                    (ratio <= best + 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
                    best = std::min(best, ratio);
                    leave = i;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
            ++pivots;
        }
    }

    int m_, n_;
    std::vector<double> a_;
    std::vector<int> basis_;
};

}  // namespace

Result solve_dense(const LinearProgram& program) {
    const int m = program.num_rows();
    const int nv = program.num_vars;

    // Column layout: structural | slack/surplus (one per inequality) | artificial.
    std::vector<int> slack_col(m, -1), art_col(m, -1);
    int cols = nv;
    for (int i = 0; i < m; ++i)
        if (program.rows[i].sense != Sense::Equal) slack_col[i] = cols++;
    const int first_art = cols;
    std::vector<double> sign(m, 1.0);
    for (int i = 0; i < m; ++i) {
        const auto& row = program.rows[i];
        if (row.rhs < 0.0) sign[i] = -1.0;
        // A <= row with rhs >= 0 starts basic on its slack.
        const bool slack_basic =
            (row.sense == Sense::LessEqual && sign[i] > 0) || (row.sense == Sense::GreaterEqual && sign[i] < 0);
        if (!slack_basic) art_col[i] = cols++;
    }

    Tableau t(m, cols);
    for (int i = 0; i < m; ++i) {
        const auto& row = program.rows[i];
        for (auto [j, a] : row.terms) t.at(i, j) += sign[i] * a;
        if (slack_col[i] >= 0) t.at(i, slack_col[i]) = sign[i] * (row.sense == Sense::LessEqual ? 1.0 : -1.0);
        t.rhs(i) = sign[i] * row.rhs;
        if (art_col[i] >= 0) {
            t.at(i, art_col[i]) = 1.0;
            t.basis_[i] = art_col[i];
        } else {
            t.basis_[i] = slack_col[i];
        }
    }

    Result result;
    // Phase 1: minimize the sum of artificials.
    for (int i = 0; i < m; ++i) {
        if (art_col[i] < 0) continue;
        for (int j = 0; j <= cols; ++j)
            if (j < first_art || j == cols) t.obj(j) -= t.at(i, j);
    }
    t.optimize(cols, result.pivots);
    if (-t.obj(cols) > 1e-9) {
        result.status = Status::Infeasible;
        return result;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
        if (t.basis_[i] < first_art) continue;
        for (int j = 0; j < first_art; ++j) {
            if (std::abs(t.at(i, j)) > 1e-9) {
                t.pivot(i, j);
                ++result.pivots;
                break;
            }
        }
    }

    // Phase 2 objective row.
    for (int j = 0; j <= cols; ++j) t.obj(j) = 0.0;
    for (int j = 0; j < nv; ++j) t.obj(j) = program.cost[j];
    for (int i = 0; i < m; ++i) {
        const int b = t.basis_[i];
        if (b < nv && program.cost[b] != 0.0) {
            const double f = program.cost[b];
            for (int j = 0; j <= cols; ++j) t.obj(j) -= f * t.at(i, j);
        }
    }
    if (!t.optimize(first_art, result.pivots)) {
        result.status = Status::Unbounded;
        return result;
    }

    result.status = Status::Optimal;
    result.x.assign(nv, 0.0);
    for (int i = 0; i < m; ++i)
        if (t.basis_[i] < nv) result.x[t.basis_[i]] = std::max(0.0, t.rhs(i));
    result.objective = program.evaluate(result.x);
    return result;
}

}  // namespace aoi::lp
