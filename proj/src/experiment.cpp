#include "aoi/experiment.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "aoi/csv.hpp"
#include "aoi/parallel.hpp"

namespace aoi {

namespace {

std::string cell_prefix(const Cell& cell) {
    return "N=" + std::to_string(cell.N) + ", M=" + std::to_string(cell.M) + ": ";
}

template <class Fn>
auto staged(const std::string& prefix, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(prefix + e.what());
    } catch (const SolverError& e) {
        throw SolverError(prefix + e.what());
    }
}

std::string cell_tag(const Cell& cell) { return "N" + std::to_string(cell.N) + "_M" + std::to_string(cell.M); }

void write_file(const std::filesystem::path& path, const auto& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    writer(out);
    if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

}  // namespace

std::uint64_t cell_stream(const Cell& cell) {
    return mix64((static_cast<std::uint64_t>(cell.N) << 32) | static_cast<std::uint32_t>(cell.M));
}

CellSolution solve_cell(const ExperimentConfig& config, const Cell& cell) {
    const std::string prefix = cell_prefix(cell);
    CellSolution out;
    out.cell = cell;
    const auto network = staged(prefix + "network: ", [&] { return build_network(config, cell); });
    SearchOptions opt;
    opt.eps = config.solver.eps;
    opt.max_iter = config.solver.max_iter;
    opt.step0 = config.solver.step0;
    opt.x_max = config.x_max;
    out.search = staged(prefix + "dual search: ", [&] { return subgradient_search(network, opt); });
    out.mixed = staged(prefix + "mixture: ", [&] { return mix_solutions(network, out.search); });
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const int threads = config.threads > 0 ? config.threads : default_threads();
    const auto cells = sweep_cells(config);
    ExperimentResult result;
    result.cells.resize(cells.size());
    parallel_for(static_cast<int>(cells.size()), threads,
                 [&](int i) { result.cells[i] = solve_cell(config, cells[i]); });

    const int P = static_cast<int>(config.policies.size());
    const int S = static_cast<int>(config.seeds.size());
    const int jobs = static_cast<int>(cells.size()) * P * S;
    result.rows.resize(jobs);
    parallel_for(jobs, threads, [&](int j) {
        const auto& cs = result.cells[j / (P * S)];
        const PolicyKind kind = config.policies[(j / S) % P];
        const std::uint64_t seed = config.seeds[j % S];
        auto& row = result.rows[j];
        row.cell = cs.cell;
        row.policy = kind;
        row.seed = seed;
        row.horizon = config.horizon;
        row.lower_bound = cs.mixed.lower_bound;
        SimConfig sim{build_network(config, cs.cell), config.horizon, seed, kind, {}, cell_stream(cs.cell), 0, nullptr};
        if (kind == PolicyKind::Truncated) sim.policies = cs.mixed.policies;
        row.report = staged(cell_prefix(cs.cell) + "simulate " + std::string(policy_name(kind)) + ": ",
                            [&] { return simulate(sim); });
    });

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& cs = result.cells[c];
        for (int p = 0; p < P; ++p) {
            SummaryRow s;
            s.cell = cs.cell;
            s.policy = config.policies[p];
            s.num_seeds = S;
            s.lower_bound = cs.mixed.lower_bound;
            s.W_l = cs.mixed.W_l;
            s.W_u = cs.mixed.W_u;
            s.mix_weight = cs.mixed.mix_weight;
            s.dual_iterations = static_cast<int>(cs.search.history.size());
            double sum = 0.0, var = 0.0;
            for (int k = 0; k < S; ++k) {
                const auto& r = result.rows[(c * P + p) * S + k].report;
                sum += r.network_avg_aoi;
                var += r.network_aoi_se * r.network_aoi_se;
            }
            s.mean_aoi = sum / S;
            s.pooled_se = std::sqrt(var) / S;
            result.summary.push_back(s);
        }
    }
    return result;
}

void write_experiment_csv(std::ostream& out, const ExperimentResult& result) {
    CsvWriter csv(out, {"N", "M", "policy", "seed", "T", "aoi", "aoi_se", "lower_bound", "aoi_over_lb",
                        "slots_truncated", "max_scheduled"});
    for (const auto& r : result.rows) {
        csv << r.cell.N << r.cell.M << policy_name(r.policy) << static_cast<unsigned long long>(r.seed) << r.horizon
            << r.report.network_avg_aoi << r.report.network_aoi_se << r.lower_bound
            << r.report.network_avg_aoi / r.lower_bound << r.report.slots_truncated << r.report.max_scheduled;
        csv.end_row();
    }
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
    CsvWriter csv(out, {"N", "M", "policy", "seeds", "mean_aoi", "pooled_se", "lower_bound", "aoi_over_lb", "gap",
                        "gap_se", "W_l", "W_u", "mix_weight", "dual_iterations"});
    for (const auto& s : result.summary) {
        csv << s.cell.N << s.cell.M << policy_name(s.policy) << s.num_seeds << s.mean_aoi << s.pooled_se
            << s.lower_bound << s.ratio() << s.gap() << s.gap_se() << s.W_l << s.W_u << s.mix_weight
            << s.dual_iterations;
        csv.end_row();
    }
}

void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + dir.string() + "': " + ec.message());
    write_file(dir / "experiment.csv", [&](std::ostream& o) { write_experiment_csv(o, result); });
    write_file(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, result); });
    for (const auto& cs : result.cells) {
        const std::string tag = cell_tag(cs.cell);
        write_file(dir / ("dual_" + tag + ".csv"), [&](std::ostream& o) { write_trace_csv(o, cs.search.history); });
        std::vector<SimReport> reports;
        for (const auto& r : result.rows)
            if (r.cell == cs.cell) reports.push_back(r.report);
        write_file(dir / ("runs_" + tag + ".csv"), [&](std::ostream& o) { write_report_csv(o, reports); });
    }
}

int heatmap_rows(const RandomizedPolicy& policy) {
    int last = 0;
    for (int x = 1; x <= policy.x_max; ++x)
        for (int q = 1; q <= policy.xi.num_states(); ++q)
            if (policy.xi(x, q) < 1.0 - 1e-12) last = x;
    return std::min(last + 1, policy.x_max);
}

void write_policy_heatmap(std::ostream& out, const RandomizedPolicy& policy) {
    const int Q = policy.xi.num_states();
    std::vector<std::string> header{"x"};
    for (int q = 1; q <= Q; ++q) header.push_back("q" + std::to_string(q));
    CsvWriter csv(out, header);
    const int rows = heatmap_rows(policy);
    for (int x = 1; x <= rows; ++x) {
        csv << x;
        for (int q = 1; q <= Q; ++q) csv << policy.xi(x, q);
        csv.end_row();
    }
    const auto info = thresholds(policy);
    csv << std::string_view("tau");
    for (int q = 1; q <= Q; ++q) csv << info.tau[q - 1];
    csv.end_row();
}

}  // namespace aoi
