#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "aoi/mdp_oracle.hpp"

using namespace aoi;

namespace {

const ChannelModel kSingle({1.0}, {1.0});
const ChannelModel kFourState({0.135, 0.239, 0.232, 0.394}, {1, 2, 3, 4});

ChannelModel random_channel(Rng& rng, int Q) {
    std::vector<double> eta(Q), omega(Q);
    double total = 0.0;
    for (auto& e : eta) total += (e = 0.05 + rng.uniform());
    double head = 0.0;
    for (int q = 0; q < Q - 1; ++q) head += (eta[q] /= total);
    eta[Q - 1] = 1.0 - head;
    double w = 0.0;
    for (auto& o : omega) o = (w += 0.2 + 2 * rng.uniform());
    return ChannelModel(eta, omega);
}

// Periodic schedules on an ideal channel: deliver every tau slots.
double best_period_cost(double W) {
    double best = 1e300;
    for (int tau = 1; tau < 200; ++tau) best = std::min(best, (tau + 1) / 2.0 + W / tau);
    return best;
}

}  // namespace

TEST_CASE("free transmissions pin the age at 1") {
    const auto r = solve_rvi({kSingle, 0.0, 0.0, 10});
    CHECK(r.gamma == doctest::Approx(1.0).epsilon(1e-9));
    for (int x = 1; x <= 10; ++x) CHECK(r.policy.xi(x, 1) == 1.0);
}

TEST_CASE("unit price on an ideal channel costs 2") {
    const auto r = solve_rvi({kSingle, 1.0, 0.0, 10});
    CHECK(r.gamma == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r.gamma == doctest::Approx(best_period_cost(1.0)).epsilon(1e-9));
}

TEST_CASE("RVI matches periodic enumeration for a range of prices") {
    for (double W : {0.3, 2.5, 4.0, 7.7, 20.0}) {
        const auto r = solve_rvi({kSingle, W, 0.0, 40});
        CAPTURE(W);
        CHECK(r.gamma == doctest::Approx(best_period_cost(W)).epsilon(1e-8));
    }
}

TEST_CASE("discounted closed form at alpha 0.5") {
    const auto vf = solve_discounted({kSingle, 0.0, 0.0, 10}, 0.5);
    CHECK(vf.V(1, 1) == doctest::Approx(2.0).epsilon(1e-9));
    for (int x = 2; x <= 10; ++x) CHECK(vf.V(x, 1) == doctest::Approx(x + 1.0).epsilon(1e-9));
    CHECK(check_monotone(vf.V));
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(solve_rvi({kSingle, 0.0, 0.0, 10}, 0.0), ValidationError);
    CHECK_THROWS_AS(solve_rvi({kSingle, -1.0, 0.0, 10}), ValidationError);
    CHECK_THROWS_AS(solve_discounted({kSingle, 0.0, 0.0, 10}, 1.0), ValidationError);
    CHECK_THROWS_AS(solve_discounted({kSingle, 0.0, 0.0, 10}, 0.0), ValidationError);
    CHECK_THROWS_AS(cmdp_by_bisection(UserSpec(0, kSingle, 0.0), 0.0, 10), ValidationError);
}

TEST_CASE("truncation too short for the policy is reported") {
    // At W = 50 the best period is 10, longer than the truncation.
    CHECK_THROWS_AS(solve_rvi({kSingle, 50.0, 0.0, 5}), SolverError);
}

TEST_CASE("check_monotone accepts increasing tables and rejects inversions") {
    AgeStateGrid V(5, 1);
    for (int x = 1; x <= 5; ++x) V(x, 1) = x + 1.0;
    CHECK(check_monotone(V));
    V(3, 1) = V(4, 1) + 0.5;
    CHECK_FALSE(check_monotone(V));

    AgeStateGrid two(3, 2);
    for (int x = 1; x <= 3; ++x) two(x, 1) = two(x, 2) = x;
    CHECK(check_monotone(two));
    two(2, 1) = 2.5;  // better channel worth more than a worse one
    CHECK_FALSE(check_monotone(two));
}

TEST_CASE("RVI solutions: Bellman residual, structure, monotonicity") {
    Rng rng(314);
    for (int trial = 0; trial < 30; ++trial) {
        const auto ch = random_channel(rng, 1 + static_cast<int>(rng.below(3)));
        const MdpSpec spec{ch, 3.0 * rng.uniform(), 2.0 * rng.uniform(), 60};
        const double tol = 1e-10;
        const auto r = solve_rvi(spec, tol);
        CAPTURE(trial);
        CHECK(bellman_residual(spec, r.value) <= 10 * tol);
        const auto th = thresholds(r.policy);
        CHECK(th.structured);
        CHECK(std::is_sorted(th.tau.begin(), th.tau.end()));
        CHECK(fractional_count(r.policy) == 0);
        CHECK(check_monotone(r.value.V));
    }
}

TEST_CASE("discounted values are monotone for random specs") {
    Rng rng(2718);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ch = random_channel(rng, 1 + static_cast<int>(rng.below(4)));
        const MdpSpec spec{ch, 3.0 * rng.uniform(), 2.0 * rng.uniform(), 40};
        const double alpha = 0.5 + 0.49 * rng.uniform();
        CHECK(check_monotone(solve_discounted(spec, alpha).V));
    }
}

TEST_CASE("discounted thresholds approach the average-cost thresholds") {
    const MdpSpec spec{kFourState, 1.0, 1.5, 60};
    const auto target = thresholds(solve_rvi(spec).policy).tau;
    std::vector<int> distance;
    for (double alpha : {0.9, 0.99, 0.999}) {
        const auto vf = solve_discounted(spec, alpha, 1e-9);
        const auto tau = thresholds(greedy_policy(spec, vf)).tau;
        int d = 0;
        for (std::size_t q = 0; q < tau.size(); ++q) d += std::abs(tau[q] - target[q]);
        distance.push_back(d);
    }
    CHECK(std::is_sorted(distance.rbegin(), distance.rend()));
    CHECK(distance.back() == 0);
}

TEST_CASE("greedy power is non-increasing in the multiplier") {
    const auto ch = kFourState;
    double prev = 1e300;
    for (double lambda = 0.0; lambda <= 30.0; lambda += 1.5) {
        const auto r = solve_rvi({ch, 0.5, lambda, 200});
        const double p = evaluate_policy(r.policy, ch).avg_power;
        CAPTURE(lambda);
        CHECK(p <= prev + 1e-12);
        prev = p;
    }
}

TEST_CASE("bisection: slack budget returns the unconstrained optimum") {
    const auto r = cmdp_by_bisection(UserSpec(0, kFourState, kFourState.mean_cost()), 0.0, 20);
    CHECK(r.lambda_star == 0.0);
    CHECK(r.mixed_cost == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bisection: budget 0.4 on an ideal channel") {
    const UserSpec user(0, kSingle, 0.4);
    const auto r = cmdp_by_bisection(user, 0.0, 30);
    CHECK(r.mixed_cost == doctest::Approx(1.8).epsilon(1e-9));
    CHECK(r.dual_value <= 1.8 + 1e-8);
    CHECK(r.dual_value == doctest::Approx(1.8).epsilon(1e-6));
    // The mixture spends the budget exactly.
    const double power = r.mix_weight * r.eval_low.avg_power + (1 - r.mix_weight) * r.eval_high.avg_power;
    CHECK(power == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(r.mixed_cost == doctest::Approx(solve_user(user, 0.0).objective).epsilon(1e-9));
}

TEST_CASE("bisection agrees with the LP on random instances") {
    Rng rng(8128);
    for (int trial = 0; trial < 12; ++trial) {
        const auto ch = random_channel(rng, 1 + static_cast<int>(rng.below(3)));
        const UserSpec user(0, ch, ch.mean_cost() * (0.2 + 0.7 * rng.uniform()));
        const double W = 2.0 * rng.uniform();
        const auto lp = solve_lp(build_lp(user, W, 30));
        const auto r = cmdp_by_bisection(user, W, 30);
        CAPTURE(trial);
        CHECK(std::abs(r.mixed_cost - lp.objective) <= 1e-6 * lp.objective);
        CHECK(r.dual_value <= lp.objective + 1e-8);
        CHECK(std::abs(r.dual_value - lp.objective) <= 1e-6 * lp.objective);
    }
}
