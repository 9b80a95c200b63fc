#pragma once

// Subgradient search on the bandwidth price W and the two-point mixture that
// meets the time-averaged bandwidth constraint sum_n A_n = M.

#include <iosfwd>
#include <optional>
#include <vector>

#include "aoi/model.hpp"
#include "aoi/single_user_lp.hpp"

namespace aoi {

struct DualIterate {
    int k = 0;  // 1-based iteration index
    double W = 0.0;
    std::vector<double> per_user_activation;
    std::vector<double> per_user_aoi;
    /// sum_n per_user_activation - M.
    double subgradient = 0.0;
    /// Step used to leave this iterate (0 for the last one).
    double step = 0.0;
    double g = 0.0;

    double total_activation() const;
};

/// Per-user LP solvers kept warm across prices.
class NetworkDual {
public:
    NetworkDual(const NetworkSpec& network, std::optional<int> x_max = std::nullopt, int threads = 1);

    struct Evaluation {
        DualIterate iterate;
        std::vector<OccupancySolution> solutions;
    };
    /// Solve every user's LP at W; g(W) = (1/N) sum_n (AoI_n + W A_n) - W M.
    Evaluation evaluate(double W);

    const NetworkSpec& network() const { return network_; }

private:
    NetworkSpec network_;
    std::vector<UserLpSolver> solvers_;
    int threads_;
};

/// One-shot dual evaluation.
DualIterate dual_value(double W, const NetworkSpec& network, std::optional<int> x_max = std::nullopt);

struct SearchOptions {
    double eps = 1e-4;
    int max_iter = 500;
    double step0 = 1.0;
    std::optional<int> x_max;
    int threads = 1;
};

struct SearchResult {
    std::vector<DualIterate> history;
    double W_l = 0.0, W_u = 0.0;
    std::vector<OccupancySolution> sol_l, sol_u;
    /// Bandwidth was slack at W = 0; the single W = 0 solution is returned.
    bool slack = false;
};

/// W_{k+1} = max(0, W_k + step_k * subgradient_k), starting from W_1 = 0,
/// until |W_{k+1} - W_k| < eps or max_iter iterates. The step is step0 * 2^(k-1)
/// until the subgradient first turns non-positive; from then on it is
/// base / j with base the last doubled step and j counting the iterates since
/// that crossing. W_l maximizes total
/// activation among iterates at or below M, W_u minimizes it among iterates at
/// or above M, both over the full history.
SearchResult subgradient_search(const NetworkSpec& network, const SearchOptions& options = {});

struct MixedSolution {
    double W_l = 0.0, W_u = 0.0;
    /// Weight on the W_l solutions.
    double mix_weight = 1.0;
    std::vector<OccupancySolution> occupancy;
    std::vector<RandomizedPolicy> policies;
    double total_activation = 0.0;
    double lower_bound = 0.0;
};

/// Convex combination weight (M_u - M) / (M_u - M_l) applied user by user.
/// Throws SolverError when M_l = M_u != M (unless the bandwidth is slack at
/// W_l = W_u = 0) and ValidationError when M is outside [M_l, M_u].
MixedSolution mix_solutions(const NetworkSpec& network, const std::vector<OccupancySolution>& sol_l,
                            const std::vector<OccupancySolution>& sol_u, double W_l, double W_u);

MixedSolution mix_solutions(const NetworkSpec& network, const SearchResult& search);

/// (1/N) sum_n sum_x x mu*_{n,x}.
double lower_bound(const MixedSolution& mixed);

/// Convergence trace with header k,W,sum_activation,g.
void write_trace_csv(std::ostream& out, const std::vector<DualIterate>& history);

}  // namespace aoi
