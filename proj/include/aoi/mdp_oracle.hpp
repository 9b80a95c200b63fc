#pragma once

// Value-iteration route to the single-user problem, independent of the LP.
//
// One-step cost of action s in state (x, q): x + W s + lambda omega(q) s.
// Idling moves the age to x + 1 (clamped at X_max), scheduling resets it to 1;
// the next channel state is drawn from eta either way.

#include "aoi/model.hpp"
#include "aoi/single_user_lp.hpp"

namespace aoi {

struct MdpSpec {
    ChannelModel channel;
    double W = 0.0;
    double lambda = 0.0;  // power multiplier
    int x_max = 2;
};

struct ValueFunction {
    AgeStateGrid V;
    /// Average cost (relative value iteration); unused when discounted.
    double gamma = 0.0;
    /// Discount factor; 0 for the average-cost solution.
    double alpha = 0.0;
    int iterations = 0;
};

/// Binary scheduling table; stored in the RandomizedPolicy layout so the
/// LP-side helpers (thresholds, steady_state) apply unchanged.
using DeterministicPolicy = RandomizedPolicy;

struct RviResult {
    ValueFunction value;
    DeterministicPolicy policy;
    double gamma = 0.0;
};

/// Relative value iteration with reference state (1, 1). Uses the
/// aperiodicity transform V <- (V + T V) / 2, which leaves the relative
/// values and greedy policies unchanged. Stops when the span of successive
/// differences is at most tol. `warm` seeds the iteration when non-null.
RviResult solve_rvi(const MdpSpec& spec, double tol = 1e-10, const AgeStateGrid* warm = nullptr);

/// Discounted value iteration; stops when the sup-norm fixed-point residual is at most tol.
ValueFunction solve_discounted(const MdpSpec& spec, double alpha, double tol = 1e-10);

/// Greedy policy for a value function (discounted when vf.alpha > 0). Ties go to idling.
DeterministicPolicy greedy_policy(const MdpSpec& spec, const ValueFunction& vf);

/// Largest |T V - V - gamma| over states for an average-cost solution.
double bellman_residual(const MdpSpec& spec, const ValueFunction& vf);

/// Strictly increasing in x for every q and non-decreasing in q for every x.
bool check_monotone(const AgeStateGrid& V);

/// Long-run statistics of a stationary policy.
struct PolicyEvaluation {
    std::vector<double> mu;
    double avg_aoi = 0.0;
    double activation = 0.0;
    double avg_power = 0.0;
};
PolicyEvaluation evaluate_policy(const RandomizedPolicy& policy, const ChannelModel& channel);

struct CmdpResult {
    double lambda_star = 0.0;
    /// gamma(lambda*) - lambda* E.
    double dual_value = 0.0;
    /// Cost (avg AoI + W activation) of the mixture of the two bracketing
    /// deterministic policies that spends exactly the budget.
    double mixed_cost = 0.0;
    double mix_weight = 1.0;  // weight on the power-hungry policy
    DeterministicPolicy policy_low, policy_high;  // greedy at the lower / upper bracket
    PolicyEvaluation eval_low, eval_high;
};

/// Bisection on the power multiplier of the single-user constrained problem.
CmdpResult cmdp_by_bisection(const UserSpec& user, double W, int x_max, double tol = 1e-10);

}  // namespace aoi
