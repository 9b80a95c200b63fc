#include "aoi/dual.hpp"

#include <cmath>
#include <ostream>

#include "aoi/csv.hpp"
#include "aoi/parallel.hpp"

namespace aoi {

double DualIterate::total_activation() const {
    double s = 0.0;
    for (double a : per_user_activation) s += a;
    return s;
}

NetworkDual::NetworkDual(const NetworkSpec& network, std::optional<int> x_max, int threads)
    : network_(network), threads_(threads) {
    solvers_.reserve(network.users.size());
    for (const auto& u : network.users) solvers_.emplace_back(u, x_max);
}

NetworkDual::Evaluation NetworkDual::evaluate(double W) {
    if (!(W >= 0.0) || !std::isfinite(W)) throw ValidationError("dual: W must be finite and >= 0");
    const int N = network_.num_users();
    Evaluation ev;
    ev.solutions.resize(N);
    parallel_for(N, threads_, [&](int n) {
        try {
            ev.solutions[n] = solvers_[n].solve(W);
        } catch (const ValidationError& e) {
            throw ValidationError("user " + std::to_string(network_.users[n].id) + ": " + e.what());
        } catch (const SolverError& e) {
            throw SolverError("user " + std::to_string(network_.users[n].id) + ": " + e.what());
        }
    });
    auto& it = ev.iterate;
    it.W = W;
    double sum_g = 0.0;
    for (const auto& s : ev.solutions) {
        it.per_user_activation.push_back(s.activation);
        it.per_user_aoi.push_back(s.avg_aoi);
        sum_g += s.avg_aoi + W * s.activation;
    }
    it.subgradient = it.total_activation() - network_.bandwidth;
    it.g = sum_g / N - W * network_.bandwidth;
    return ev;
}

DualIterate dual_value(double W, const NetworkSpec& network, std::optional<int> x_max) {
    return NetworkDual(network, x_max).evaluate(W).iterate;
}

SearchResult subgradient_search(const NetworkSpec& network, const SearchOptions& opt) {
    if (!(opt.eps > 0.0)) throw ValidationError("subgradient_search: eps must be positive");
    if (opt.max_iter < 1) throw ValidationError("subgradient_search: max_iter must be at least 1");
    if (!(opt.step0 > 0.0)) throw ValidationError("subgradient_search: step0 must be positive");

    NetworkDual dual(network, opt.x_max, opt.threads);
    const double M = network.bandwidth;
    SearchResult out;
    // The first iterate exceeds M unless the search returns early, so W_u always exists.
    bool have_l = false, have_u = false;
    double best_l = 0.0, best_u = 0.0;

    // Expansion: the step doubles while the subgradient keeps the sign it had
    // at W = 0. From the first sign change on it decays as base / j.
    bool expanding = true;
    double scale = opt.step0;
    int j = 0;

    double W = 0.0;
    for (int k = 1; k <= opt.max_iter; ++k) {
        auto ev = dual.evaluate(W);
        ev.iterate.k = k;
        const double total = ev.iterate.total_activation();
        if (total <= M && (!have_l || total > best_l)) {
            have_l = true;
            best_l = total;
            out.W_l = W;
            out.sol_l = ev.solutions;
        }
        if (total >= M && (!have_u || total < best_u)) {
            have_u = true;
            best_u = total;
            out.W_u = W;
            out.sol_u = ev.solutions;
        }
        if (k == 1 && total <= M) {
            out.slack = total < M;
            out.W_u = out.W_l;
            out.sol_u = out.sol_l;
            out.history.push_back(std::move(ev.iterate));
            return out;
        }
        if (expanding && ev.iterate.subgradient <= 0.0 && k > 1) {
            expanding = false;
            scale /= 2.0;  // the step that crossed
        }
        double step;
        if (expanding) {
            step = scale;
            scale *= 2.0;
        } else {
            step = scale / ++j;
        }
        const double next = std::max(0.0, W + step * ev.iterate.subgradient);
        ev.iterate.step = k < opt.max_iter ? step : 0.0;
        out.history.push_back(std::move(ev.iterate));
        if (std::abs(next - W) < opt.eps) break;
        W = next;
    }
    if (!have_l)
        throw SolverError("subgradient_search: no iterate met the bandwidth constraint after " +
                          std::to_string(out.history.size()) + " iterations");
    return out;
}

MixedSolution mix_solutions(const NetworkSpec& network, const std::vector<OccupancySolution>& sol_l,
                            const std::vector<OccupancySolution>& sol_u, double W_l, double W_u) {
    const int N = network.num_users();
    if (static_cast<int>(sol_l.size()) != N || static_cast<int>(sol_u.size()) != N)
        throw ValidationError("mix_solutions: need one solution per user at each price");
    const double M = network.bandwidth;
    double M_l = 0.0, M_u = 0.0;
    for (int n = 0; n < N; ++n) {
        M_l += sol_l[n].activation;
        M_u += sol_u[n].activation;
    }
    constexpr double tol = 1e-9;
    MixedSolution mixed;
    mixed.W_l = W_l;
    mixed.W_u = W_u;
    if (std::abs(M_u - M_l) <= tol) {
        const bool slack = W_l == 0.0 && W_u == 0.0 && M_u <= M + tol;
        if (std::abs(M_l - M) > 1e-6 && !slack)
            throw SolverError("mix_solutions: search did not bracket M (M_l = M_u = " + format_double(M_l) + ")");
        mixed.mix_weight = 1.0;
    } else {
        if (M_l > M + tol || M_u < M - tol)
            throw ValidationError("mix_solutions: need M_l <= M <= M_u (M_l = " + format_double(M_l) +
                                  ", M_u = " + format_double(M_u) + ")");
        mixed.mix_weight = std::clamp((M_u - M) / (M_u - M_l), 0.0, 1.0);
    }

    const double w = mixed.mix_weight;
    for (int n = 0; n < N; ++n) {
        const int X = std::max(sol_l[n].x_max, sol_u[n].x_max);
        const auto a = sol_l[n].padded(X), b = sol_u[n].padded(X);
        OccupancySolution m = a;
        m.W = w * a.W + (1 - w) * b.W;
        for (int x = 1; x <= X; ++x) {
            m.mu[x - 1] = w * a.mu[x - 1] + (1 - w) * b.mu[x - 1];
            for (int q = 1; q <= m.y.num_states(); ++q) m.y(x, q) = w * a.y(x, q) + (1 - w) * b.y(x, q);
        }
        m.refresh(network.users[n].channel);
        mixed.total_activation += m.activation;
        mixed.policies.push_back(extract_policy(m, network.users[n].channel));
        mixed.occupancy.push_back(std::move(m));
    }
    mixed.lower_bound = lower_bound(mixed);
    return mixed;
}

MixedSolution mix_solutions(const NetworkSpec& network, const SearchResult& search) {
    return mix_solutions(network, search.sol_l, search.sol_u, search.W_l, search.W_u);
}

double lower_bound(const MixedSolution& mixed) {
    if (mixed.occupancy.empty()) return 0.0;
    double s = 0.0;
    for (const auto& o : mixed.occupancy)
        for (int x = 1; x <= o.x_max; ++x) s += x * o.mu[x - 1];
    return s / static_cast<double>(mixed.occupancy.size());
}

void write_trace_csv(std::ostream& out, const std::vector<DualIterate>& history) {
    CsvWriter csv(out, {"k", "W", "sum_activation", "g"});
    for (const auto& it : history) {
        csv << it.k << it.W << it.total_activation() << it.g;
        csv.end_row();
    }
}

}  // namespace aoi
