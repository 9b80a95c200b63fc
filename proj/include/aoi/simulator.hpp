#pragma once

// Slot-level simulation of N users sharing M channels.
//
// Each slot t: every user's channel state is drawn, the policy picks at most M
// users, and ages advance (reset to 1 after a delivery). The age recorded for
// slot t is the one seen when the decision is made.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/model.hpp"
#include "aoi/single_user_lp.hpp"

namespace aoi {

enum class PolicyKind { Truncated, Greedy, RoundRobin };

std::string_view policy_name(PolicyKind kind);
/// Accepts "truncated", "greedy", "round_robin"; throws ValidationError otherwise.
PolicyKind parse_policy(std::string_view name);

struct SimConfig {
    NetworkSpec network;
    long long horizon = 100000;
    std::uint64_t seed = 0;
    PolicyKind kind = PolicyKind::Truncated;
    /// One per user; required for the truncated policy only.
    std::vector<RandomizedPolicy> policies;
    /// Namespace for the random streams; lets unrelated experiments draw independently.
    std::uint64_t experiment = 0;
    /// Record per-user age histograms with this many bins (ages above lumped into the last).
    int histogram_bins = 0;
    /// Optional per-slot trace with header slot,user,x,q,s,u.
    std::ostream* trace = nullptr;
};

struct SimReport {
    PolicyKind kind = PolicyKind::Truncated;
    std::uint64_t seed = 0;
    long long horizon = 0;
    int num_users = 0;
    int bandwidth = 0;

    std::vector<double> per_user_avg_aoi;
    std::vector<double> per_user_avg_power;
    std::vector<double> per_user_activation;
    /// Batch-means standard errors (20 batches).
    std::vector<double> per_user_power_se;
    double network_avg_aoi = 0.0;
    double network_aoi_se = 0.0;

    /// Slots in which more than M users were eager.
    long long slots_truncated = 0;
    /// Largest number of users served in one slot.
    int max_scheduled = 0;
    /// Slots that served more than M users. The run aborts on the first one, so a
    /// returned report always carries 0.
    long long bandwidth_violations = 0;

    /// histogram[n][x-1]: slots in which user n had age x (only if requested).
    std::vector<std::vector<long long>> aoi_histogram;
};

SimReport run_truncated(const SimConfig& config);
SimReport run_greedy(const SimConfig& config);
SimReport run_round_robin(const SimConfig& config);
/// Dispatch on config.kind.
SimReport simulate(const SimConfig& config);

/// Uniformly random M-subset of `eager` (partial Fisher-Yates), in ascending order.
/// Returns `eager` unchanged when it has at most M members.
std::vector<int> select_subset(std::vector<int> eager, int M, Rng& rng);

/// Total-variation distance between an age histogram and a distribution mu (mu[x-1]).
double total_variation(const std::vector<long long>& histogram, const std::vector<double>& mu);

/// One row per report: seed,policy,N,M,T,network_avg_aoi,network_aoi_se,
/// slots_truncated, then aoi_<n> and power_<n> for every user.
void write_report_csv(std::ostream& out, const std::vector<SimReport>& reports);

}  // namespace aoi
