#include "ray_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace aoi {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kHarrisTol = 1e-12;
constexpr int kReinvertEvery = 100;
// Consecutive degenerate pivots before switching to Bland's rule.
constexpr int kDegenerateStreak = 200;
constexpr int kMaxPivots = 2'000'000;

}  // namespace

RaySimplex::RaySimplex(const LpInstance& inst)
    : channel_(inst.channel), x_max_(inst.x_max), q_(inst.num_states()), m_(inst.x_max + 2), W_(inst.W) {
    if (q_ > 63) throw ValidationError("ray simplex supports at most 63 channel states");
    power_row_ = x_max_ + 1;
    mu_cost_.resize(x_max_);
    mu_col_.resize(x_max_);
    y_col_.resize(static_cast<std::size_t>(x_max_) * q_);
    for (int x = 1; x <= x_max_; ++x) mu_cost_[x - 1] = inst.program.cost[inst.mu_var(x)];

    // Compact row k for every non-box row of the instance.
    std::vector<std::pair<int, int>> kept;  // (instance row, compact row)
    for (int x = 1; x <= x_max_; ++x) kept.emplace_back(inst.flow_row(x), x - 1);
    kept.emplace_back(inst.normalization_row(), x_max_);
    kept.emplace_back(inst.power_row(), power_row_);

    b_ = Eigen::VectorXd::Zero(m_);
    for (auto [r, k] : kept) {
        const auto& row = inst.program.rows[r];
        b_[k] = row.rhs;
        for (auto [var, a] : row.terms) {
            if (var < x_max_) {
                mu_col_[var].push_back({k, a});
            } else {
                y_col_[var - x_max_].push_back({k, a});
            }
        }
    }

    basis_.resize(m_);
    reset();
}

void RaySimplex::set_price(double W) { W_ = W; }

double RaySimplex::column_cost(const Column& c) const {
    if (phase_one_) return c.kind == Column::Artificial ? 1.0 : 0.0;
    if (c.kind != Column::Ray) return 0.0;
    double cost = mu_cost_[c.x - 1];
    for (int q = 1; q <= q_; ++q)
        if (c.mask >> (q - 1) & 1U) cost += channel_.eta(q) * W_;
    return cost;
}

Eigen::VectorXd RaySimplex::dense_column(const Column& c) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
    switch (c.kind) {
        case Column::Slack: a[power_row_] = 1.0; break;
        case Column::Artificial: a[c.row] = 1.0; break;
        case Column::Ray:
            for (const auto& e : mu_col_[c.x - 1]) a[e.row] += e.coef;
            for (int q = 1; q <= q_; ++q) {
                if (!(c.mask >> (q - 1) & 1U)) continue;
                for (const auto& e : y_col_[(c.x - 1) * q_ + (q - 1)]) a[e.row] += channel_.eta(q) * e.coef;
            }
            break;
    }
    return a;
}

void RaySimplex::reinvert() {
    Eigen::MatrixXd B(m_, m_);
    for (int i = 0; i < m_; ++i) B.col(i) = dense_column(basis_[i]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    if (!(lu.rcond() > 1e-15)) throw SingularBasis{};
    binv_ = lu.inverse();
    xb_ = binv_ * b_;
    since_reinvert_ = 0;
}

bool RaySimplex::price(const Eigen::RowVectorXd& pi, Column& enter, double& best) const {
    const double tol = 1e-10 * std::max(1.0, static_cast<double>(x_max_) + std::abs(W_));
    best = -tol;
    bool found = false;
    const double y_cost = phase_one_ ? 0.0 : W_;
    const double slack_d = -pi[power_row_];
    if (slack_d < best) {
        best = slack_d;
        enter = Column{Column::Slack, 0, 0, 0};
        found = true;
    }
    for (int x = 1; x <= x_max_; ++x) {
        double d = phase_one_ ? 0.0 : mu_cost_[x - 1];
        for (const auto& e : mu_col_[x - 1]) d -= pi[e.row] * e.coef;
        std::uint64_t mask = 0;
        for (int q = 1; q <= q_; ++q) {
            const double eta = channel_.eta(q);
            if (eta <= 0.0) continue;
            double dq = y_cost;
            for (const auto& e : y_col_[(x - 1) * q_ + (q - 1)]) dq -= pi[e.row] * e.coef;
            dq *= eta;
            if (dq < -tol) {
                d += dq;
                mask |= std::uint64_t{1} << (q - 1);
            }
        }
        if (d < best) {
            best = d;
            enter = Column{Column::Ray, x, mask, 0};
            found = true;
        }
    }
    return found;
}

// First improving column in the fixed order: slack, then rays by (x, mask).
bool RaySimplex::price_bland(const Eigen::RowVectorXd& pi, Column& enter) const {
    const double tol = 1e-10 * std::max(1.0, static_cast<double>(x_max_) + std::abs(W_));
    if (-pi[power_row_] < -tol) {
        enter = Column{Column::Slack, 0, 0, 0};
        return true;
    }
    const double y_cost = phase_one_ ? 0.0 : W_;
    std::vector<double> dq(q_);
    for (int x = 1; x <= x_max_; ++x) {
        double dmu = phase_one_ ? 0.0 : mu_cost_[x - 1];
        for (const auto& e : mu_col_[x - 1]) dmu -= pi[e.row] * e.coef;
        for (int q = 1; q <= q_; ++q) {
            double d = y_cost;
            for (const auto& e : y_col_[(x - 1) * q_ + (q - 1)]) d -= pi[e.row] * e.coef;
            dq[q - 1] = channel_.eta(q) * d;
        }
        if (q_ <= 16) {
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << q_); ++mask) {
                double d = dmu;
                for (int q = 0; q < q_; ++q)
                    if (mask >> q & 1U) d += dq[q];
                if (d < -tol) {
                    enter = Column{Column::Ray, x, mask, 0};
                    return true;
                }
            }
        } else {
            std::uint64_t mask = 0;
            double d = dmu;
            for (int q = 0; q < q_; ++q)
                if (dq[q] < -tol) {
                    d += dq[q];
                    mask |= std::uint64_t{1} << q;
                }
            if (d < -tol) {
                enter = Column{Column::Ray, x, mask, 0};
                return true;
            }
        }
    }
    return false;
}

bool RaySimplex::run_phase() {
    auto order_key = [](const Column& c) { return std::make_tuple(static_cast<int>(c.kind), c.x, c.mask, c.row); };
    int degenerate = 0;
    for (;;) {
        if (since_reinvert_ >= kReinvertEvery) reinvert();
        if (pivots_ > kMaxPivots) throw SolverError("ray simplex: pivot limit exceeded");

        Eigen::VectorXd cb(m_);
        for (int i = 0; i < m_; ++i) cb[i] = column_cost(basis_[i]);
        const Eigen::RowVectorXd pi = cb.transpose() * binv_;

        Column enter;
        const bool bland = degenerate >= kDegenerateStreak;
        bool found;
        if (bland) {
            found = price_bland(pi, enter);
        } else {
            double best;
            found = price(pi, enter, best);
        }
        if (!found) return true;

        const Eigen::VectorXd alpha = binv_ * dense_column(enter);

        int leave = -1;
        bool pinned = false;
        // Outside phase one, artificials are held at zero and leave as soon as the entering column touches them.
        if (!phase_one_) {
            double biggest = kPivotTol;
            for (int i = 0; i < m_; ++i)
                if (basis_[i].kind == Column::Artificial && std::abs(alpha[i]) > biggest) {
                    biggest = std::abs(alpha[i]);
                    leave = i;
                }
            pinned = leave >= 0;
        }
        auto eligible = [&](int i) {
            return alpha[i] > kPivotTol && (phase_one_ || basis_[i].kind != Column::Artificial);
        };
        if (!pinned && bland) {
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m_; ++i) {
                if (!eligible(i)) continue;
                const double ratio = std::max(0.0, xb_[i]) / alpha[i];
                if (ratio < best_ratio - 1e-13 ||
                    (ratio <= best_ratio + 1e-13 && order_key(basis_[i]) < order_key(basis_[leave]))) {
                    best_ratio = std::min(best_ratio, ratio);
                    leave = i;
                }
            }
        } else if (!pinned) {
            // Harris: bound the step with relaxed ratios, then take the largest pivot within it.
            double bound = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m_; ++i)
                if (eligible(i)) bound = std::min(bound, (std::max(0.0, xb_[i]) + kHarrisTol) / alpha[i]);
            double biggest = 0.0;
            for (int i = 0; i < m_; ++i)
                if (eligible(i) && std::max(0.0, xb_[i]) / alpha[i] <= bound && alpha[i] > biggest) {
                    biggest = alpha[i];
                    leave = i;
                }
        }
        if (leave < 0) return false;

        const double theta = pinned ? 0.0 : std::max(0.0, xb_[leave]) / alpha[leave];
        xb_ -= theta * alpha;
        xb_[leave] = theta;
        const double piv = alpha[leave];
        binv_.row(leave) /= piv;
        const Eigen::RowVectorXd pivot_row = binv_.row(leave);
        for (int i = 0; i < m_; ++i) {
            if (i == leave || alpha[i] == 0.0) continue;
            binv_.row(i).noalias() -= alpha[i] * pivot_row;
        }
        basis_[leave] = enter;
        ++pivots_;
        ++since_reinvert_;
        degenerate = theta <= 1e-14 ? degenerate + 1 : 0;
    }
}

void RaySimplex::reset() {
    for (int i = 0; i < m_; ++i) {
        basis_[i] = Column{};
        basis_[i].kind = i == power_row_ ? Column::Slack : Column::Artificial;
        basis_[i].row = i;
    }
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    xb_ = b_;
    phase_one_ = true;
    feasible_ = false;
    since_reinvert_ = 0;
}

bool RaySimplex::solve() {
    try {
        return solve_from_basis();
    } catch (const SingularBasis&) {
        reset();
    }
    try {
        return solve_from_basis();
    } catch (const SingularBasis&) {
        throw SolverError("ray simplex: basis became singular after a cold restart");
    }
}

bool RaySimplex::solve_from_basis() {
    if (phase_one_) {
        if (!run_phase()) throw SolverError("ray simplex: phase one unbounded");
        reinvert();
        double infeasibility = 0.0;
        for (int i = 0; i < m_; ++i)
            if (basis_[i].kind == Column::Artificial) infeasibility += std::abs(xb_[i]);
        if (infeasibility > 1e-9) return false;
        phase_one_ = false;
        feasible_ = true;
    }
    if (!feasible_) return false;
    if (!run_phase()) throw SolverError("ray simplex: LP unbounded");

    // Accept the basis only if x_B still fits the rows; otherwise refresh and re-price.
    Eigen::VectorXd residual = b_;
    for (int i = 0; i < m_; ++i) residual -= dense_column(basis_[i]) * xb_[i];
    if (residual.lpNorm<Eigen::Infinity>() > 1e-11) {
        reinvert();
        if (!run_phase()) throw SolverError("ray simplex: LP unbounded");
    }
    return true;
}

OccupancySolution RaySimplex::solution() const {
    OccupancySolution sol;
    sol.W = W_;
    sol.x_max = x_max_;
    sol.mu.assign(x_max_, 0.0);
    sol.y = AgeStateGrid(x_max_, q_);
    for (int i = 0; i < m_; ++i) {
        const Column& c = basis_[i];
        if (c.kind != Column::Ray) continue;
        const double lambda = xb_[i];
        if (lambda <= 1e-14) continue;
        sol.mu[c.x - 1] += lambda;
        for (int q = 1; q <= q_; ++q)
            if (c.mask >> (q - 1) & 1U) sol.y(c.x, q) += lambda * channel_.eta(q);
    }
    sol.refresh(channel_);
    return sol;
}

}  // namespace aoi
