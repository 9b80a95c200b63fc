#include "aoi/mdp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aoi {

namespace {

constexpr int kIterationCap = 1'000'000;

// Expected value over the next channel state at age x.
std::vector<double> expected_by_age(const AgeStateGrid& V, const ChannelModel& ch) {
    std::vector<double> ev(V.x_max(), 0.0);
    for (int x = 1; x <= V.x_max(); ++x)
        for (int q = 1; q <= ch.num_states(); ++q) ev[x - 1] += ch.eta(q) * V(x, q);
    return ev;
}

struct ActionValues {
    double idle;
    double schedule;
};

ActionValues action_values(const MdpSpec& s, const std::vector<double>& ev, double discount, int x, int q) {
    const int next = std::min(x + 1, s.x_max);
    return {x + discount * ev[next - 1], x + s.W + s.lambda * s.channel.omega(q) + discount * ev[0]};
}

void validate(const MdpSpec& s) {
    if (s.x_max < 2) throw ValidationError("mdp: X_max must be at least 2");
    if (!(s.W >= 0.0) || !(s.lambda >= 0.0)) throw ValidationError("mdp: W and lambda must be >= 0");
}

void require_schedules_at_cap(const DeterministicPolicy& pol) {
    for (int q = 1; q <= pol.xi.num_states(); ++q)
        if (pol.xi(pol.x_max, q) != 1.0)
            throw SolverError("greedy policy idles at X_max (q=" + std::to_string(q) + "); increase X_max");
}

RviResult rvi_unchecked(const MdpSpec& spec, double tol, const AgeStateGrid* warm) {
    validate(spec);
    if (!(tol > 0.0)) throw ValidationError("solve_rvi: tol must be positive");
    const int X = spec.x_max;
    const int Q = spec.channel.num_states();
    AgeStateGrid h = warm && warm->x_max() == X && warm->num_states() == Q ? *warm : AgeStateGrid(X, Q);
    AgeStateGrid next(X, Q);

    RviResult out;
    int it = 0;
    for (;; ++it) {
        if (it >= kIterationCap)
            throw SolverError("solve_rvi: no convergence after " + std::to_string(kIterationCap) +
                              " iterations; try a larger X_max");
        const auto ev = expected_by_age(h, spec.channel);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int x = 1; x <= X; ++x)
            for (int q = 1; q <= Q; ++q) {
                const auto a = action_values(spec, ev, 1.0, x, q);
                const double t = 0.5 * h(x, q) + 0.5 * std::min(a.idle, a.schedule);
                next(x, q) = t;
                const double diff = t - h(x, q);
                lo = std::min(lo, diff);
                hi = std::max(hi, diff);
            }
        const double ref = next(1, 1);
        for (int x = 1; x <= X; ++x)
            for (int q = 1; q <= Q; ++q) h(x, q) = next(x, q) - ref;
        if (hi - lo <= tol) {
            // Transformed average cost lies in [lo, hi]; undo the 1/2 scaling.
            out.gamma = (lo + hi);
            break;
        }
    }
    out.value.V = h;
    out.value.gamma = out.gamma;
    out.value.iterations = it + 1;
    out.policy = greedy_policy(spec, out.value);
    return out;
}

}  // namespace

RviResult solve_rvi(const MdpSpec& spec, double tol, const AgeStateGrid* warm) {
    RviResult out = rvi_unchecked(spec, tol, warm);
    require_schedules_at_cap(out.policy);
    return out;
}

ValueFunction solve_discounted(const MdpSpec& spec, double alpha, double tol) {
    validate(spec);
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("solve_discounted: alpha must lie in (0, 1)");
    const int X = spec.x_max;
    const int Q = spec.channel.num_states();
    ValueFunction vf;
    vf.alpha = alpha;
    vf.V = AgeStateGrid(X, Q);
    AgeStateGrid next(X, Q);
    for (int it = 0;; ++it) {
        if (it >= kIterationCap) throw SolverError("solve_discounted: iteration cap reached");
        const auto ev = expected_by_age(vf.V, spec.channel);
        double change = 0.0;
        for (int x = 1; x <= X; ++x)
            for (int q = 1; q <= Q; ++q) {
                const auto a = action_values(spec, ev, alpha, x, q);
                next(x, q) = std::min(a.idle, a.schedule);
                change = std::max(change, std::abs(next(x, q) - vf.V(x, q)));
            }
        std::swap(vf.V, next);
        if (change <= tol) {
            vf.iterations = it + 1;
            return vf;
        }
    }
}

DeterministicPolicy greedy_policy(const MdpSpec& spec, const ValueFunction& vf) {
    const double discount = vf.alpha > 0.0 ? vf.alpha : 1.0;
    const auto ev = expected_by_age(vf.V, spec.channel);
    DeterministicPolicy pol{spec.x_max, AgeStateGrid(spec.x_max, spec.channel.num_states())};
    for (int x = 1; x <= spec.x_max; ++x)
        for (int q = 1; q <= spec.channel.num_states(); ++q) {
            const auto a = action_values(spec, ev, discount, x, q);
            pol.xi(x, q) = a.schedule < a.idle ? 1.0 : 0.0;
        }
    return pol;
}

double bellman_residual(const MdpSpec& spec, const ValueFunction& vf) {
    const auto ev = expected_by_age(vf.V, spec.channel);
    double worst = 0.0;
    for (int x = 1; x <= spec.x_max; ++x)
        for (int q = 1; q <= spec.channel.num_states(); ++q) {
            const auto a = action_values(spec, ev, 1.0, x, q);
            worst = std::max(worst, std::abs(std::min(a.idle, a.schedule) - vf.V(x, q) - vf.gamma));
        }
    return worst;
}

bool check_monotone(const AgeStateGrid& V) {
    for (int q = 1; q <= V.num_states(); ++q)
        for (int x = 1; x < V.x_max(); ++x)
            if (!(V(x, q) < V(x + 1, q))) return false;
    for (int x = 1; x <= V.x_max(); ++x)
        for (int q = 1; q < V.num_states(); ++q)
            if (V(x, q) > V(x, q + 1) + 1e-12 * (1.0 + std::abs(V(x, q + 1)))) return false;
    return true;
}

PolicyEvaluation evaluate_policy(const RandomizedPolicy& policy, const ChannelModel& channel) {
    PolicyEvaluation e;
    e.mu = steady_state(policy, channel);
    for (int x = 1; x <= policy.x_max; ++x) {
        const double m = e.mu[x - 1];
        e.avg_aoi += x * m;
        for (int q = 1; q <= channel.num_states(); ++q) {
            const double y = m * channel.eta(q) * policy.xi(x, q);
            e.activation += y;
            e.avg_power += y * channel.omega(q);
        }
    }
    return e;
}

CmdpResult cmdp_by_bisection(const UserSpec& user, double W, int x_max, double tol) {
    const double budget = std::isinf(user.energy_budget) ? user.channel.mean_cost() : user.energy_budget;
    if (!(budget > 0.0)) throw ValidationError("cmdp_by_bisection: energy budget must be positive");

    MdpSpec spec{user.channel, W, 0.0, x_max};
    AgeStateGrid warm;
    struct Probe {
        RviResult rvi;
        PolicyEvaluation eval;
    };
    auto probe = [&](double lambda) {
        spec.lambda = lambda;
        // Probes far from lambda* may idle at X_max; only the final bracket is checked.
        Probe p{rvi_unchecked(spec, tol, warm.x_max() ? &warm : nullptr), {}};
        warm = p.rvi.value.V;
        p.eval = evaluate_policy(p.rvi.policy, user.channel);
        return p;
    };
    auto cost = [W](const PolicyEvaluation& e) { return e.avg_aoi + W * e.activation; };

    CmdpResult out;
    Probe low = probe(0.0);
    if (low.eval.avg_power <= budget) {
        require_schedules_at_cap(low.rvi.policy);
        out.lambda_star = 0.0;
        out.dual_value = low.rvi.gamma;
        out.mixed_cost = cost(low.eval);
        out.mix_weight = 1.0;
        out.policy_low = out.policy_high = low.rvi.policy;
        out.eval_low = out.eval_high = low.eval;
        return out;
    }

    double lo = 0.0;
    double hi = 2.0 * x_max / user.channel.omega(1);
    Probe high = probe(hi);
    for (int k = 0; high.eval.avg_power > budget; ++k) {
        if (k >= 60) throw SolverError("cmdp_by_bisection: could not bracket the power multiplier");
        lo = hi;
        low = std::move(high);
        hi *= 2.0;
        high = probe(hi);
    }
    for (int k = 0; k < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++k) {
        const double mid = 0.5 * (lo + hi);
        Probe p = probe(mid);
        if (p.eval.avg_power > budget) {
            lo = mid;
            low = std::move(p);
        } else {
            hi = mid;
            high = std::move(p);
        }
    }

    require_schedules_at_cap(low.rvi.policy);
    require_schedules_at_cap(high.rvi.policy);
    const double p_lo = low.eval.avg_power, p_hi = high.eval.avg_power;
    out.lambda_star = hi;
    out.dual_value = high.rvi.gamma - hi * budget;
    out.mix_weight = (budget - p_hi) / (p_lo - p_hi);
    out.mixed_cost = out.mix_weight * cost(low.eval) + (1.0 - out.mix_weight) * cost(high.eval);
    out.policy_low = low.rvi.policy;
    out.policy_high = high.rvi.policy;
    out.eval_low = low.eval;
    out.eval_high = high.eval;
    return out;
}

}  // namespace aoi
