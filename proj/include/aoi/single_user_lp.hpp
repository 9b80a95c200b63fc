#pragma once

// Occupancy-measure LP for one user at a fixed bandwidth price W.
//
// Variables: mu_x (probability the age is x) and y_{x,q} (probability of
// being in (x, q) and transmitting), for x = 1..X_max, q = 1..Q.
//
//   minimize   sum_x x mu_x + W sum_{x,q} y_{x,q}
//   subject to mu_1 = sum_{x,q} y_{x,q}
//              mu_x = mu_{x-1} - sum_q y_{x-1,q}        x = 2..X_max
//              sum_x mu_x = 1
//              y_{x,q} <= eta_q mu_x
//              sum_{x,q} omega(q) y_{x,q} <= E
//              mu, y >= 0

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "aoi/lp.hpp"
#include "aoi/model.hpp"

namespace aoi {

/// Dense X_max-by-Q table indexed with 1-based (x, q).
class AgeStateGrid {
public:
    AgeStateGrid() = default;
    AgeStateGrid(int x_max, int num_states, double fill = 0.0)
        : x_max_(x_max), q_(num_states), data_(static_cast<std::size_t>(x_max) * num_states, fill) {}

    int x_max() const { return x_max_; }
    int num_states() const { return q_; }
    double& operator()(int x, int q) { return data_[index(x, q)]; }
    double operator()(int x, int q) const { return data_[index(x, q)]; }
    double row_sum(int x) const;
    double total() const;
    bool operator==(const AgeStateGrid&) const = default;

private:
    std::size_t index(int x, int q) const { return static_cast<std::size_t>(x - 1) * q_ + (q - 1); }
    int x_max_ = 0;
    int q_ = 0;
    std::vector<double> data_;
};

/// The literal LP plus the bookkeeping needed to read its variables back.
struct LpInstance {
    ChannelModel channel;
    double W = 0.0;
    int x_max = 0;
    /// Budget used in the power row. Infinite budgets are replaced by the
    /// largest achievable power, sum_q eta_q omega(q), which leaves the
    /// feasible set unchanged.
    double budget = 0.0;
    lp::LinearProgram program;

    int num_states() const { return channel.num_states(); }
    int mu_var(int x) const { return x - 1; }
    int y_var(int x, int q) const { return x_max + (x - 1) * num_states() + (q - 1); }

    // Row layout: flow rows (mu_1 balance first, then x = 2..X_max), the
    // normalization row, X_max*Q box rows, and the power row.
    int flow_row(int x) const { return x - 1; }
    int normalization_row() const { return x_max; }
    int box_row(int x, int q) const { return x_max + 1 + (x - 1) * num_states() + (q - 1); }
    int power_row() const { return x_max + 1 + x_max * num_states(); }
};

struct OccupancySolution {
    double W = 0.0;
    int x_max = 0;
    std::vector<double> mu;  // mu[x-1]
    AgeStateGrid y;
    double objective = 0.0;
    double avg_aoi = 0.0;
    double activation = 0.0;
    double avg_power = 0.0;

    double mu_at(int x) const { return x <= x_max ? mu[x - 1] : 0.0; }
    /// Last age carrying probability mass (> 1e-12).
    int support() const;
    /// Recompute avg_aoi, activation, avg_power and objective from mu and y.
    void refresh(const ChannelModel& channel);
    /// Copy padded with zero mass up to a larger truncation age.
    OccupancySolution padded(int new_x_max) const;
};

struct RandomizedPolicy {
    int x_max = 0;
    AgeStateGrid xi;

    /// Scheduling probability at (x, q); ages beyond X_max use the X_max row.
    double at(int x, int q) const { return xi(x < x_max ? x : x_max, q); }
};

struct ThresholdInfo {
    std::vector<int> tau;  // tau[q-1]
    bool structured = false;
};

LpInstance build_lp(const UserSpec& user, double W, int x_max);

/// Exact optimum of the instance; throws SolverError if infeasible.
OccupancySolution solve_lp(const LpInstance& instance);

/// Same LP solved over its literal rows with the generic dense simplex.
/// Only practical for small instances; used to cross-check solve_lp.
OccupancySolution solve_lp_dense(const LpInstance& instance);

RandomizedPolicy extract_policy(const OccupancySolution& solution, const ChannelModel& channel);
ThresholdInfo thresholds(const RandomizedPolicy& policy);
/// Number of entries strictly inside (tol, 1 - tol).
int fractional_count(const RandomizedPolicy& policy, double tol = 1e-9);
/// Stationary age distribution of the chain induced by the policy. Idling at
/// X_max leaves the age at X_max.
std::vector<double> steady_state(const RandomizedPolicy& policy, const ChannelModel& channel);

/// True when the last age carries no mass and every state schedules at X_max - 1.
bool truncation_valid(const OccupancySolution& solution, const RandomizedPolicy& policy);

/// Starting truncation age for a user: max(50, ceil(3 / E_hat)) with
/// E_hat = E / sum_q eta_q omega(q), capped at kMaxTruncation.
int default_x_max(const UserSpec& user);
inline constexpr int kMaxTruncation = 1 << 14;

class RaySimplex;

/// Solves one user's LP for a sequence of prices, warm-starting each solve
/// from the previous optimal basis. Unless X_max is fixed by the caller, the
/// truncation age is chosen by default_x_max and doubled until the solution
/// passes truncation_valid.
class UserLpSolver {
public:
    explicit UserLpSolver(UserSpec user, std::optional<int> fixed_x_max = std::nullopt);
    ~UserLpSolver();
    UserLpSolver(UserLpSolver&&) noexcept;
    UserLpSolver& operator=(UserLpSolver&&) noexcept;

    OccupancySolution solve(double W);
    const UserSpec& user() const { return user_; }
    int x_max() const { return x_max_; }
    long total_pivots() const;

private:
    UserSpec user_;
    std::optional<int> fixed_;
    int x_max_;
    std::unique_ptr<RaySimplex> simplex_;
};

/// One-shot solve with automatic truncation.
OccupancySolution solve_user(const UserSpec& user, double W);

/// CSV with header x,q,mu,y,xi, one row per (x, q).
void write_solution_csv(std::ostream& out, const OccupancySolution& solution, const RandomizedPolicy& policy);

}  // namespace aoi
