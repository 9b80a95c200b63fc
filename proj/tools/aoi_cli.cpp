// Command-line front end: solve, dual, simulate, experiment, heatmap.
//
// Exit codes: 0 success, 2 invalid input, 3 solver failure, 1 anything else.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "aoi/config.hpp"
#include "aoi/csv.hpp"
#include "aoi/experiment.hpp"

namespace fs = std::filesystem;
using namespace aoi;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool full = false;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "Experiment configuration (JSON)")->required();
    cmd->add_option("--seed", c.seed, "Run this seed instead of the configured list");
    cmd->add_option("--out", c.out, "Output directory (overrides output_dir)");
    cmd->add_flag("--full", c.full, "Use T = 1e6 slots");
    cmd->add_option("--threads", c.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
}

ExperimentConfig load(const Common& c) {
    auto cfg = load_config(c.config_path);
    if (c.seed) cfg.seeds = {*c.seed};
    if (c.out) cfg.output_dir = *c.out;
    if (c.full) cfg.horizon = 1000000;
    if (c.threads) cfg.threads = *c.threads;
    return cfg;
}

fs::path output_dir(const ExperimentConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    return out;
}

std::string tag(const Cell& cell) { return "N" + std::to_string(cell.N) + "_M" + std::to_string(cell.M); }

std::vector<int> selected_users(std::optional<int> user, int N) {
    if (!user) {
        std::vector<int> all(N);
        for (int n = 0; n < N; ++n) all[n] = n;
        return all;
    }
    if (*user < 0 || *user >= N)
        throw ValidationError("--user " + std::to_string(*user) + " out of range [0, " + std::to_string(N) + ")");
    return {*user};
}

int cmd_solve(const Common& common, double W, std::optional<int> user) {
    const auto cfg = load(common);
    if (!(W >= 0.0)) throw ValidationError("--W must be >= 0");
    const auto dir = output_dir(cfg);
    std::printf("cell,user,x_max,objective,avg_aoi,activation,avg_power,budget,fractional,structured\n");
    for (const auto& cell : sweep_cells(cfg)) {
        const auto net = build_network(cfg, cell);
        for (int n : selected_users(user, cell.N)) {
            const auto& u = net.users[n];
            const auto sol = cfg.x_max ? solve_lp(build_lp(u, W, *cfg.x_max)) : solve_user(u, W);
            const auto policy = extract_policy(sol, u.channel);
            auto out = open_out(dir / ("solution_" + tag(cell) + "_u" + std::to_string(n) + ".csv"));
            write_solution_csv(out, sol, policy);
            std::printf("%s,%d,%d,%s,%s,%s,%s,%s,%d,%d\n", tag(cell).c_str(), n, sol.x_max,
                        format_double(sol.objective).c_str(), format_double(sol.avg_aoi).c_str(),
                        format_double(sol.activation).c_str(), format_double(sol.avg_power).c_str(),
                        format_double(u.energy_budget).c_str(), fractional_count(policy),
                        thresholds(policy).structured ? 1 : 0);
        }
    }
    return 0;
}

int cmd_dual(const Common& common) {
    const auto cfg = load(common);
    const auto dir = output_dir(cfg);
    std::printf("cell,iterations,W_l,W_u,mix_weight,total_activation,lower_bound\n");
    for (const auto& cell : sweep_cells(cfg)) {
        const auto cs = solve_cell(cfg, cell);
        auto out = open_out(dir / ("dual_" + tag(cell) + ".csv"));
        write_trace_csv(out, cs.search.history);
        std::printf("%s,%zu,%s,%s,%s,%s,%s\n", tag(cell).c_str(), cs.search.history.size(),
                    format_double(cs.mixed.W_l).c_str(), format_double(cs.mixed.W_u).c_str(),
                    format_double(cs.mixed.mix_weight).c_str(), format_double(cs.mixed.total_activation).c_str(),
                    format_double(cs.mixed.lower_bound).c_str());
    }
    return 0;
}

int cmd_simulate(const Common& common, std::optional<std::string> policy, std::optional<std::string> trace_path) {
    auto cfg = load(common);
    if (policy) cfg.policies = {parse_policy(*policy)};
    const auto cells = sweep_cells(cfg);
    if (trace_path && (cells.size() != 1 || cfg.policies.size() != 1 || cfg.seeds.size() != 1))
        throw ValidationError("--trace needs a single cell, policy and seed (use --seed and --policy)");
    const auto dir = output_dir(cfg);
    std::optional<std::ofstream> trace;
    if (trace_path) trace = open_out(*trace_path);

    std::printf("cell,policy,seed,T,network_avg_aoi,network_aoi_se,slots_truncated,lower_bound\n");
    for (const auto& cell : cells) {
        const bool need_policies =
            std::find(cfg.policies.begin(), cfg.policies.end(), PolicyKind::Truncated) != cfg.policies.end();
        std::optional<CellSolution> cs;
        if (need_policies) cs = solve_cell(cfg, cell);
        std::vector<SimReport> reports;
        for (PolicyKind kind : cfg.policies)
            for (std::uint64_t seed : cfg.seeds) {
                SimConfig sim{build_network(cfg, cell), cfg.horizon, seed, kind, {}, cell_stream(cell), 0, nullptr};
                if (kind == PolicyKind::Truncated) sim.policies = cs->mixed.policies;
                if (trace) sim.trace = &*trace;
                reports.push_back(simulate(sim));
                const auto& r = reports.back();
                std::printf("%s,%s,%llu,%lld,%s,%s,%lld,%s\n", tag(cell).c_str(), std::string(policy_name(kind)).c_str(),
                            static_cast<unsigned long long>(seed), r.horizon, format_double(r.network_avg_aoi).c_str(),
                            format_double(r.network_aoi_se).c_str(), r.slots_truncated,
                            cs ? format_double(cs->mixed.lower_bound).c_str() : "");
            }
        auto out = open_out(dir / ("runs_" + tag(cell) + ".csv"));
        write_report_csv(out, reports);
    }
    return 0;
}

int cmd_experiment(const Common& common) {
    const auto cfg = load(common);
    const auto result = run_experiment(cfg);
    const auto dir = output_dir(cfg);
    write_experiment_outputs(result, dir);
    write_summary_csv(std::cout, result);
    return 0;
}

int cmd_heatmap(const Common& common, std::optional<int> user) {
    const auto cfg = load(common);
    const auto dir = output_dir(cfg);
    for (const auto& cell : sweep_cells(cfg)) {
        const auto cs = solve_cell(cfg, cell);
        for (int n : selected_users(user, cell.N)) {
            const fs::path path = dir / ("heatmap_" + tag(cell) + "_u" + std::to_string(n) + ".csv");
            auto out = open_out(path);
            write_policy_heatmap(out, cs.mixed.policies[n]);
            std::printf("%s\n", path.string().c_str());
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Age-of-information scheduling: policy synthesis and simulation"};
    app.require_subcommand(1);

    Common solve_c, dual_c, sim_c, exp_c, heat_c;
    double W = 0.0;
    std::optional<int> solve_user_id, heat_user;
    std::optional<std::string> policy, trace;

    auto* solve = app.add_subcommand("solve", "Single-user LP at a fixed bandwidth price");
    add_common(solve, solve_c);
    solve->add_option("--W", W, "Bandwidth price")->required();
    solve->add_option("--user", solve_user_id, "Only this user (0-based)");

    auto* dual = app.add_subcommand("dual", "Subgradient search and mixture per cell");
    add_common(dual, dual_c);

    auto* sim = app.add_subcommand("simulate", "Simulate the configured policies");
    add_common(sim, sim_c);
    sim->add_option("--policy", policy, "truncated, greedy or round_robin");
    sim->add_option("--trace", trace, "Per-slot trace CSV (single run only)");

    auto* exp = app.add_subcommand("experiment", "Full sweep: synthesis, simulation, comparison");
    add_common(exp, exp_c);

    auto* heat = app.add_subcommand("heatmap", "Scheduling probabilities of the mixed policies");
    add_common(heat, heat_c);
    heat->add_option("--user", heat_user, "Only this user (0-based)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*solve) return cmd_solve(solve_c, W, solve_user_id);
        if (*dual) return cmd_dual(dual_c);
        if (*sim) return cmd_simulate(sim_c, policy, trace);
        if (*exp) return cmd_experiment(exp_c);
        if (*heat) return cmd_heatmap(heat_c, heat_user);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
