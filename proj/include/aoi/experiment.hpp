#pragma once

// Sweep orchestration: per (N, M) cell, dual search, mixture and lower bound,
// then one simulation per (policy, seed).

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "aoi/config.hpp"
#include "aoi/dual.hpp"
#include "aoi/simulator.hpp"

namespace aoi {

struct CellSolution {
    Cell cell;
    SearchResult search;
    MixedSolution mixed;
};

/// Dual search and mixture for one cell. Errors keep their type and gain a
/// "N=.., M=..: <stage>:" prefix.
CellSolution solve_cell(const ExperimentConfig& config, const Cell& cell);

struct ExperimentRow {
    Cell cell;
    PolicyKind policy = PolicyKind::Truncated;
    std::uint64_t seed = 0;
    long long horizon = 0;
    double lower_bound = 0.0;
    SimReport report;
};

struct SummaryRow {
    Cell cell;
    PolicyKind policy = PolicyKind::Truncated;
    int num_seeds = 0;
    double mean_aoi = 0.0;
    /// Standard error of mean_aoi: sqrt(sum of squared per-seed SEs) / seeds.
    double pooled_se = 0.0;
    double lower_bound = 0.0;
    double W_l = 0.0, W_u = 0.0, mix_weight = 1.0;
    int dual_iterations = 0;

    double ratio() const { return mean_aoi / lower_bound; }
    /// Relative gap to the lower bound and its standard error.
    double gap() const { return (mean_aoi - lower_bound) / lower_bound; }
    double gap_se() const { return pooled_se / lower_bound; }
};

struct ExperimentResult {
    std::vector<CellSolution> cells;
    /// Sorted by (N, M, policy order in the config, seed order in the config).
    std::vector<ExperimentRow> rows;
    std::vector<SummaryRow> summary;
};

/// Stream namespace shared by every policy and seed of a cell, so policies
/// compared on one seed see the same channel realizations.
std::uint64_t cell_stream(const Cell& cell);

/// Runs every cell on a pool of config.threads workers (0: hardware concurrency).
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Columns N,M,policy,seed,T,aoi,aoi_se,lower_bound,aoi_over_lb,slots_truncated,max_scheduled.
void write_experiment_csv(std::ostream& out, const ExperimentResult& result);
/// Columns N,M,policy,seeds,mean_aoi,pooled_se,lower_bound,aoi_over_lb,gap,gap_se,W_l,W_u,mix_weight,dual_iterations.
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
/// experiment.csv and summary.csv in dir (created if needed).
void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

/// Heatmap of a policy: rows x = 1..X_eff, columns q = 1..Q, cell xi(x, q),
/// followed by a row "tau" with the thresholds. X_eff is one past the last age
/// with some xi < 1, capped at the policy's x_max.
void write_policy_heatmap(std::ostream& out, const RandomizedPolicy& policy);
int heatmap_rows(const RandomizedPolicy& policy);

}  // namespace aoi
