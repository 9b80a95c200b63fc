#pragma once

// Domain types and slot dynamics shared by the solver, oracle and simulator.
//
// Channel states and ages follow the model notation: q in 1..Q, x in 1..X.
// Storage is 0-based; every accessor taking (x, q) expects the 1-based
// values and performs the -1 shift itself.

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoi {

/// Input that violates a documented invariant. Mapped to exit code 2 by the CLI.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure (infeasible/unbounded LP, non-convergence). Mapped to exit code 3.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-user i.i.d. Q-state fading channel: state probabilities and the
/// energy spent by one transmission in each state.
class ChannelModel {
public:
    ChannelModel(std::vector<double> eta, std::vector<double> omega);

    int num_states() const { return static_cast<int>(eta_.size()); }
    /// Probability of state q (1-based).
    double eta(int q) const { return eta_[q - 1]; }
    /// Energy cost of transmitting in state q (1-based).
    double omega(int q) const { return omega_[q - 1]; }
    const std::vector<double>& eta() const { return eta_; }
    const std::vector<double>& omega() const { return omega_; }

    /// Expected energy of a transmission in a random slot, sum_q eta_q omega(q).
    double mean_cost() const;

    bool operator==(const ChannelModel&) const = default;

private:
    std::vector<double> eta_;
    std::vector<double> omega_;
};

struct UserSpec {
    int id = 0;
    ChannelModel channel;
    /// Time-average energy budget per slot. May be +infinity (unconstrained).
    double energy_budget = 0.0;

    UserSpec(int id_, ChannelModel channel_, double budget);
    bool operator==(const UserSpec&) const = default;
};

struct NetworkSpec {
    std::vector<UserSpec> users;
    int bandwidth = 1;

    NetworkSpec(std::vector<UserSpec> users_, int bandwidth_);
    int num_users() const { return static_cast<int>(users.size()); }
};

struct AoIState {
    int x = 1;
    int q = 1;
};

/// Age after one slot: reset to 1 on delivery, otherwise one slot older.
inline int advance_aoi(int x, bool scheduled) { return scheduled ? 1 : x + 1; }

/// Energy consumed in a slot spent in state q.
inline double slot_energy(const ChannelModel& channel, int q, bool scheduled) {
    return scheduled ? channel.omega(q) : 0.0;
}

/// Budget a user needs to follow round-robin: (M/N) sum_q eta_q omega(q).
double rr_min_power(const ChannelModel& channel, int bandwidth, int num_users);

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t z);

/// Seed for stream `stream` of replication `seed` in experiment `experiment`.
std::uint64_t stream_seed(std::uint64_t experiment, std::uint64_t seed, std::uint64_t stream);

/// Seeded random source. The engine sequence is fixed by the standard; the
/// mappings to doubles and bounded integers are defined here rather than via
/// <random> distributions, whose algorithms vary between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, n), n > 0 (rejection on the top of the range).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

/// Draw a channel state (1-based) with probability eta_q.
int sample_channel(const ChannelModel& channel, Rng& rng);

}  // namespace aoi
