#include "aoi/single_user_lp.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "aoi/csv.hpp"
#include "ray_simplex.hpp"

namespace aoi {

namespace {

constexpr double kZeroMass = 1e-13;
constexpr double kStructureTol = 1e-9;

}  // namespace

double AgeStateGrid::row_sum(int x) const {
    double s = 0.0;
    for (int q = 1; q <= q_; ++q) s += (*this)(x, q);
    return s;
}

double AgeStateGrid::total() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
}

int OccupancySolution::support() const {
    for (int x = x_max; x >= 1; --x)
        if (mu[x - 1] > 1e-12) return x;
    return 0;
}

void OccupancySolution::refresh(const ChannelModel& channel) {
    avg_aoi = activation = avg_power = 0.0;
    for (int x = 1; x <= x_max; ++x) {
        avg_aoi += x * mu[x - 1];
        for (int q = 1; q <= y.num_states(); ++q) {
            activation += y(x, q);
            avg_power += y(x, q) * channel.omega(q);
        }
    }
    objective = avg_aoi + W * activation;
}

OccupancySolution OccupancySolution::padded(int new_x_max) const {
    if (new_x_max <= x_max) return *this;
    OccupancySolution out = *this;
    out.x_max = new_x_max;
    out.mu.resize(new_x_max, 0.0);
    out.y = AgeStateGrid(new_x_max, y.num_states());
    for (int x = 1; x <= x_max; ++x)
        for (int q = 1; q <= y.num_states(); ++q) out.y(x, q) = y(x, q);
    return out;
}

LpInstance build_lp(const UserSpec& user, double W, int x_max) {
    if (x_max < 2) throw ValidationError("build_lp: X_max must be at least 2");
    if (!(W >= 0.0) || !std::isfinite(W)) throw ValidationError("build_lp: W must be finite and >= 0");
    if (!(user.energy_budget > 0.0))
        throw ValidationError("build_lp: energy budget must be positive; no recurrent policy exists at E = 0");

    const ChannelModel& ch = user.channel;
    LpInstance inst{ch, W, x_max, std::isinf(user.energy_budget) ? ch.mean_cost() : user.energy_budget, {}};
    const int Q = ch.num_states();
    auto& prog = inst.program;
    prog.num_vars = x_max * (Q + 1);
    prog.cost.assign(prog.num_vars, 0.0);
    for (int x = 1; x <= x_max; ++x) {
        prog.cost[inst.mu_var(x)] = x;
        for (int q = 1; q <= Q; ++q) prog.cost[inst.y_var(x, q)] = W;
    }

    prog.rows.resize(static_cast<std::size_t>(inst.power_row()) + 1);
    {
        auto& row = prog.rows[inst.flow_row(1)];
        row.sense = lp::Sense::Equal;
        row.terms.emplace_back(inst.mu_var(1), 1.0);
        for (int x = 1; x <= x_max; ++x)
            for (int q = 1; q <= Q; ++q) row.terms.emplace_back(inst.y_var(x, q), -1.0);
    }
    for (int x = 2; x <= x_max; ++x) {
        auto& row = prog.rows[inst.flow_row(x)];
        row.sense = lp::Sense::Equal;
        row.terms.emplace_back(inst.mu_var(x), 1.0);
        row.terms.emplace_back(inst.mu_var(x - 1), -1.0);
        for (int q = 1; q <= Q; ++q) row.terms.emplace_back(inst.y_var(x - 1, q), 1.0);
    }
    {
        auto& row = prog.rows[inst.normalization_row()];
        row.sense = lp::Sense::Equal;
        row.rhs = 1.0;
        for (int x = 1; x <= x_max; ++x) row.terms.emplace_back(inst.mu_var(x), 1.0);
    }
    for (int x = 1; x <= x_max; ++x) {
        for (int q = 1; q <= Q; ++q) {
            auto& row = prog.rows[inst.box_row(x, q)];
            row.sense = lp::Sense::LessEqual;
            row.terms.emplace_back(inst.y_var(x, q), 1.0);
            row.terms.emplace_back(inst.mu_var(x), -ch.eta(q));
        }
    }
    {
        auto& row = prog.rows[inst.power_row()];
        row.sense = lp::Sense::LessEqual;
        row.rhs = inst.budget;
        for (int x = 1; x <= x_max; ++x)
            for (int q = 1; q <= Q; ++q) row.terms.emplace_back(inst.y_var(x, q), ch.omega(q));
    }
    return inst;
}

OccupancySolution solve_lp(const LpInstance& instance) {
    RaySimplex simplex(instance);
    if (!simplex.solve())
        throw SolverError("solve_lp: infeasible at X_max=" + std::to_string(instance.x_max) +
                          " (budget too small for this truncation)");
    return simplex.solution();
}

OccupancySolution solve_lp_dense(const LpInstance& instance) {
    const auto result = lp::solve_dense(instance.program);
    if (result.status == lp::Status::Infeasible) throw SolverError("solve_lp_dense: infeasible");
    if (result.status == lp::Status::Unbounded) throw SolverError("solve_lp_dense: unbounded");
    OccupancySolution sol;
    sol.W = instance.W;
    sol.x_max = instance.x_max;
    sol.mu.resize(instance.x_max);
    sol.y = AgeStateGrid(instance.x_max, instance.num_states());
    for (int x = 1; x <= instance.x_max; ++x) {
        sol.mu[x - 1] = result.x[instance.mu_var(x)];
        for (int q = 1; q <= instance.num_states(); ++q) sol.y(x, q) = result.x[instance.y_var(x, q)];
    }
    sol.refresh(instance.channel);
    return sol;
}

RandomizedPolicy extract_policy(const OccupancySolution& sol, const ChannelModel& channel) {
    const int X = sol.x_max;
    const int Q = channel.num_states();
    RandomizedPolicy policy{X, AgeStateGrid(X, Q)};
    auto& xi = policy.xi;
    for (int x = 1; x <= X; ++x) {
        const double mu = sol.mu[x - 1];
        for (int q = 1; q <= Q; ++q) {
            double v;
            if (x >= X || (x > 1 && xi(x - 1, q) == 1.0) || mu <= kZeroMass) {
                v = 1.0;
            } else if (channel.eta(q) <= 0.0) {
                // The state never occurs; copy the better neighbour so the table stays monotone.
                v = q > 1 ? xi(x, q - 1) : 0.0;
            } else {
                v = std::clamp(sol.y(x, q) / (mu * channel.eta(q)), 0.0, 1.0);
                if (v < 1e-10) v = 0.0;
                if (v > 1.0 - 1e-10) v = 1.0;
            }
            xi(x, q) = v;
        }
    }
    return policy;
}

ThresholdInfo thresholds(const RandomizedPolicy& policy) {
    const int X = policy.x_max;
    const int Q = policy.xi.num_states();
    ThresholdInfo info;
    info.tau.assign(Q, X);
    info.structured = true;
    for (int q = 1; q <= Q; ++q) {
        int tau = X;
        for (int x = 1; x <= X; ++x) {
            if (policy.xi(x, q) > kStructureTol) {
                tau = x;
                break;
            }
        }
        info.tau[q - 1] = tau;
        for (int x = tau + 1; x <= X; ++x)
            if (policy.xi(x, q) < 1.0 - kStructureTol) info.structured = false;
        if (q > 1 && info.tau[q - 1] < info.tau[q - 2]) info.structured = false;
    }
    return info;
}

int fractional_count(const RandomizedPolicy& policy, double tol) {
    int count = 0;
    for (int x = 1; x <= policy.x_max; ++x)
        for (int q = 1; q <= policy.xi.num_states(); ++q) {
            const double v = policy.xi(x, q);
            if (v > tol && v < 1.0 - tol) ++count;
        }
    return count;
}

std::vector<double> steady_state(const RandomizedPolicy& policy, const ChannelModel& channel) {
    const int X = policy.x_max;
    const int Q = channel.num_states();
    std::vector<double> alpha(X), beta(X);
    for (int x = 1; x <= X; ++x) {
        double a = 0.0, b = 0.0;
        for (int q = 1; q <= Q; ++q) {
            a += channel.eta(q) * (1.0 - policy.xi(x, q));
            b += channel.eta(q) * policy.xi(x, q);
        }
        alpha[x - 1] = a;
        beta[x - 1] = b;
    }
    if (alpha[X - 1] > 1.0 - 1e-12) throw SolverError("steady_state: policy never schedules at X_max");

    // Rows of [Q - I; 1'] mu = [0; 1]. Idling at X_max keeps the age there.
    // The first balance row (mass returning to age 1) is implied by the
    // others, so it is replaced by the normalization and checked afterwards.
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> entries;
    entries.reserve(3 * static_cast<std::size_t>(X));
    for (int x = 1; x < X; ++x) {
        entries.emplace_back(x, x - 1, alpha[x - 1]);  // mu_{x+1} = alpha_x mu_x
        entries.emplace_back(x, x, x + 1 == X ? alpha[X - 1] - 1.0 : -1.0);
    }
    for (int x = 0; x < X; ++x) entries.emplace_back(0, x, 1.0);
    Eigen::SparseMatrix<double> A(X, X);
    A.setFromTriplets(entries.begin(), entries.end());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(X);
    rhs[0] = 1.0;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw SolverError("steady_state: singular transition system");
    const Eigen::VectorXd mu = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw SolverError("steady_state: solve failed");

    double returning = 0.0;
    for (int x = 0; x < X; ++x) returning += beta[x] * mu[x];
    if (std::abs(returning - mu[0]) > 1e-9) throw SolverError("steady_state: balance at age 1 violated");
    return {mu.data(), mu.data() + X};
}

bool truncation_valid(const OccupancySolution& sol, const RandomizedPolicy& policy) {
    if (sol.mu[sol.x_max - 1] > 1e-9) return false;
    for (int q = 1; q <= policy.xi.num_states(); ++q)
        if (policy.xi(sol.x_max - 1, q) < 1.0 - kStructureTol) return false;
    return true;
}

int default_x_max(const UserSpec& user) {
    const double full = user.channel.mean_cost();
    const double relative = std::min(user.energy_budget, full) / full;
    if (!(relative > 0.0)) throw ValidationError("energy budget must be positive");
    const double guess = std::ceil(3.0 / relative);
    return static_cast<int>(std::clamp(guess, 50.0, static_cast<double>(kMaxTruncation)));
}

UserLpSolver::UserLpSolver(UserSpec user, std::optional<int> fixed_x_max)
    : user_(std::move(user)), fixed_(fixed_x_max), x_max_(fixed_x_max ? *fixed_x_max : default_x_max(user_)) {}

UserLpSolver::~UserLpSolver() = default;
UserLpSolver::UserLpSolver(UserLpSolver&&) noexcept = default;
UserLpSolver& UserLpSolver::operator=(UserLpSolver&&) noexcept = default;

long UserLpSolver::total_pivots() const { return simplex_ ? simplex_->pivots() : 0; }

OccupancySolution UserLpSolver::solve(double W) {
    for (;;) {
        if (!simplex_) {
            simplex_ = std::make_unique<RaySimplex>(build_lp(user_, W, x_max_));
        } else {
            if (!(W >= 0.0) || !std::isfinite(W)) throw ValidationError("W must be finite and >= 0");
            simplex_->set_price(W);
        }
        if (simplex_->solve()) {
            OccupancySolution sol = simplex_->solution();
            if (fixed_ || truncation_valid(sol, extract_policy(sol, user_.channel))) return sol;
        } else if (fixed_) {
            throw SolverError("user " + std::to_string(user_.id) + ": LP infeasible at X_max=" +
                              std::to_string(x_max_));
        }
        if (x_max_ >= kMaxTruncation)
            throw SolverError("user " + std::to_string(user_.id) + ": truncation age cap " +
                              std::to_string(kMaxTruncation) + " reached");
        x_max_ = std::min(2 * x_max_, kMaxTruncation);
        simplex_.reset();
    }
}

OccupancySolution solve_user(const UserSpec& user, double W) { return UserLpSolver(user).solve(W); }

void write_solution_csv(std::ostream& out, const OccupancySolution& sol, const RandomizedPolicy& policy) {
    CsvWriter csv(out, {"x", "q", "mu", "y", "xi"});
    for (int x = 1; x <= sol.x_max; ++x)
        for (int q = 1; q <= sol.y.num_states(); ++q) {
            csv << x << q << sol.mu[x - 1] << sol.y(x, q) << policy.xi(x, q);
            csv.end_row();
        }
}

}  // namespace aoi
