#pragma once

// Experiment configuration: a JSON document with a versioned schema.
//
// {
//   "schema": 1,
//   "channel": {"eta": [...], "omega": [...]},        // default for every user
//   "users": [{"rho": 0.5}, {"energy_budget": 0.3, "channel": {...}}],
//   "rho_ramp": {"start": 0.2, "span": 1.4},           // alternative to "users"
//   "N": [10, 20],                                      // ramp populations
//   "M": 2 | [2, 5],  or  "theta": 0.2,
//   "T": 100000, "seeds": [0, 1], "x_max": 200,
//   "policies": ["truncated", "greedy", "round_robin"],
//   "solver": {"eps": 1e-4, "max_iter": 500, "step0": 1.0},
//   "threads": 0, "output_dir": "results"
// }
//
// With a ramp, user n (1-based) of an N-user cell gets
// rho_n = start + span * (n - 1) / N. Budgets given as rho are converted with
// the round-robin budget of the cell, so they depend on (N, M).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aoi/model.hpp"
#include "aoi/simulator.hpp"

namespace aoi {

struct UserEntry {
    /// Exactly one of rho and energy_budget is set.
    std::optional<double> rho;
    std::optional<double> energy_budget;
    /// Falls back to the document-level channel.
    std::optional<ChannelModel> channel;

    bool operator==(const UserEntry&) const = default;
};

struct RhoRamp {
    double start = 0.2;
    double span = 1.4;

    bool operator==(const RhoRamp&) const = default;
};

struct SolverSettings {
    double eps = 1e-4;
    int max_iter = 500;
    double step0 = 1.0;

    bool operator==(const SolverSettings&) const = default;
};

struct ExperimentConfig {
    std::optional<ChannelModel> channel;
    std::vector<UserEntry> users;
    std::optional<RhoRamp> rho_ramp;
    /// Population sizes; a single entry equal to users.size() for explicit users.
    std::vector<int> populations;
    /// Bandwidths crossed with every population (ignored when theta is set).
    std::vector<int> bandwidths{1};
    std::optional<double> theta;
    long long horizon = 100000;
    std::vector<std::uint64_t> seeds{0};
    std::optional<int> x_max;
    std::vector<PolicyKind> policies{PolicyKind::Truncated, PolicyKind::Greedy, PolicyKind::RoundRobin};
    SolverSettings solver;
    /// Worker threads for sweep cells; 0 picks the hardware concurrency.
    int threads = 0;
    std::string output_dir = "results";

    bool operator==(const ExperimentConfig&) const = default;
};

struct Cell {
    int N = 0;
    int M = 0;
    auto operator<=>(const Cell&) const = default;
};

/// Throws ValidationError naming the field at fault.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);

/// (N, M) pairs of the sweep in ascending order.
std::vector<Cell> sweep_cells(const ExperimentConfig& config);
/// Users of one cell with their budgets resolved.
NetworkSpec build_network(const ExperimentConfig& config, const Cell& cell);

}  // namespace aoi
