#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "aoi/dual.hpp"

using namespace aoi;

namespace {

const ChannelModel kSingle({1.0}, {1.0});
const ChannelModel kFourState({0.135, 0.239, 0.232, 0.394}, {1, 2, 3, 4});
constexpr double kInf = std::numeric_limits<double>::infinity();

NetworkSpec identical(int N, int M, const ChannelModel& ch, double budget) {
    std::vector<UserSpec> users;
    for (int n = 0; n < N; ++n) users.emplace_back(n, ch, budget);
    return NetworkSpec(users, M);
}

NetworkSpec ramp(int N, int M) {
    std::vector<UserSpec> users;
    for (int n = 0; n < N; ++n)
        users.emplace_back(n, kFourState, (0.2 + 1.4 * n / N) * rr_min_power(kFourState, M, N));
    return NetworkSpec(users, M);
}

// Ideal-channel user with activation a in [1/2, 1]: mu = (a, 1 - a).
OccupancySolution two_age(double a) {
    OccupancySolution s;
    s.x_max = 2;
    s.mu = {a, 1 - a};
    s.y = AgeStateGrid(2, 1);
    s.y(1, 1) = 2 * a - 1;
    s.y(2, 1) = 1 - a;
    s.refresh(kSingle);
    return s;
}

void check_feasible(const UserSpec& user, const OccupancySolution& s) {
    const auto inst = build_lp(user, 0.0, s.x_max);
    std::vector<double> x(inst.program.num_vars, 0.0);
    for (int a = 1; a <= s.x_max; ++a) {
        x[inst.mu_var(a)] = s.mu[a - 1];
        for (int q = 1; q <= inst.num_states(); ++q) x[inst.y_var(a, q)] = s.y(a, q);
    }
    CHECK(inst.program.max_violation(x) < 1e-9);
}

}  // namespace

TEST_CASE("zero price with unconstrained users: everyone transmits") {
    const auto net = identical(6, 2, kFourState, kInf);
    const auto it = dual_value(0.0, net);
    for (double a : it.per_user_activation) CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(it.subgradient == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(it.subgradient == it.total_activation() - 2);
    CHECK(it.g == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dual function formula") {
    const auto net = ramp(6, 2);
    const double W = 1.3;
    const auto it = dual_value(W, net);
    double sum = 0.0;
    for (int n = 0; n < 6; ++n) {
        const auto s = solve_user(net.users[n], W);
        CHECK(it.per_user_aoi[n] == doctest::Approx(s.avg_aoi).epsilon(1e-10));
        CHECK(it.per_user_activation[n] == doctest::Approx(s.activation).epsilon(1e-10));
        sum += s.avg_aoi + W * s.activation;
    }
    CHECK(it.g == doctest::Approx(sum / 6 - W * 2).epsilon(1e-10));
    CHECK_THROWS_AS(dual_value(-1.0, net), ValidationError);
}

TEST_CASE("slack bandwidth stops at W = 0") {
    // Each user can afford only a fraction of the slots, well under M/N.
    const auto net = identical(4, 3, kSingle, 0.3);
    const auto r = subgradient_search(net);
    REQUIRE(r.history.size() == 1);
    CHECK(r.W_l == 0.0);
    CHECK(r.W_u == 0.0);
    CHECK(r.slack);
    const auto mixed = mix_solutions(net, r);
    CHECK(mixed.mix_weight == 1.0);
    CHECK(mixed.total_activation == doctest::Approx(1.2).epsilon(1e-10));
    // Each user runs its own optimum: 1/E = 3.33 gaps, renewal cost 2.2.
    CHECK(mixed.lower_bound == doctest::Approx(solve_user(net.users[0], 0.0).objective).epsilon(1e-10));
}

TEST_CASE("symmetric ideal-channel network converges to the round-robin value") {
    // N/M = 5: period-5 schedules cost (5 + 1) / 2 = 3 per user.
    const auto net = identical(10, 2, kSingle, kInf);
    const auto r = subgradient_search(net);
    const auto mixed = mix_solutions(net, r);
    CHECK(mixed.total_activation == doctest::Approx(2.0).epsilon(1e-9));
    for (const auto& o : mixed.occupancy) CHECK(o.activation == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(mixed.lower_bound == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("two-user binding instance brackets M") {
    const auto net = identical(2, 1, kFourState, kInf);
    const auto r = subgradient_search(net);
    double M_l = 0.0, M_u = 0.0;
    for (const auto& s : r.sol_l) M_l += s.activation;
    for (const auto& s : r.sol_u) M_u += s.activation;
    CHECK(M_l <= 1.0 + 1e-12);
    CHECK(M_u >= 1.0 - 1e-12);
    const auto mixed = mix_solutions(net, r);
    CHECK(mixed.total_activation == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("search iterates stay bounded and improve on the first subgradient") {
    const auto net = ramp(12, 3);
    const auto r = subgradient_search(net);
    double W_max = 0.0, best = std::abs(r.history.front().subgradient);
    for (const auto& it : r.history) {
        W_max = std::max(W_max, it.W);
        CHECK(it.W >= 0.0);
        CHECK(it.subgradient == doctest::Approx(it.total_activation() - 3).epsilon(1e-12));
    }
    for (const auto& it : r.history) best = std::min(best, std::abs(it.subgradient));
    CHECK(std::isfinite(W_max));
    CHECK(W_max < 1e4);
    CHECK(best <= std::abs(r.history.front().subgradient));
    // After the doubling stage the steps only shrink.
    bool decaying = false;
    double prev_step = 0.0;
    for (std::size_t i = 0; i + 1 < r.history.size(); ++i) {
        const double step = r.history[i].step;
        if (decaying) CHECK(step <= prev_step);
        if (i > 0 && step < prev_step) decaying = true;
        prev_step = step;
    }
}

TEST_CASE("mixture weight from the bandwidth totals") {
    // Three users at activation 0.6 (M_l = 1.8) and 0.8 (M_u = 2.4), M = 2.
    const auto net = identical(3, 2, kSingle, kInf);
    std::vector<OccupancySolution> lo(3, two_age(0.6)), hi(3, two_age(0.8));
    const auto mixed = mix_solutions(net, lo, hi, 5.0, 4.0);
    CHECK(mixed.mix_weight == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(mixed.total_activation == doctest::Approx(2.0).epsilon(1e-12));
    for (const auto& o : mixed.occupancy) check_feasible(net.users[0], o);
}

TEST_CASE("mixture endpoints") {
    const auto net = identical(3, 2, kSingle, kInf);
    std::vector<OccupancySolution> at_m(3, two_age(2.0 / 3.0)), hi(3, two_age(0.8)), lo(3, two_age(0.6));
    const auto left = mix_solutions(net, at_m, hi, 5.0, 4.0);
    CHECK(left.mix_weight == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(left.occupancy[0].mu[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    const auto right = mix_solutions(net, lo, at_m, 5.0, 4.0);
    CHECK(right.mix_weight == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(mix_solutions(net, lo, lo, 5.0, 4.0), SolverError);
    CHECK_THROWS_AS(mix_solutions(net, hi, hi, 5.0, 4.0), SolverError);
    CHECK_THROWS_AS(mix_solutions(net, hi, lo, 5.0, 4.0), ValidationError);
}

TEST_CASE("lower bound of pinned and single-user mixtures") {
    MixedSolution pinned;
    for (int n = 0; n < 4; ++n) pinned.occupancy.push_back(two_age(1.0));
    CHECK(lower_bound(pinned) == 1.0);

    const UserSpec user(0, kSingle, 0.4);
    MixedSolution single;
    single.occupancy.push_back(solve_user(user, 0.0));
    CHECK(lower_bound(single) == doctest::Approx(1.8).epsilon(1e-10));
}

TEST_CASE("dual properties on a power-limited network") {
    const auto net = ramp(8, 2);
    NetworkDual dual(net);
    std::vector<double> Ws, gs;
    std::vector<std::vector<double>> acts;
    for (double W = 0.0; W <= 24.0; W += 1.5) {
        const auto ev = dual.evaluate(W).iterate;
        Ws.push_back(W);
        gs.push_back(ev.g);
        acts.push_back(ev.per_user_activation);
    }
    for (std::size_t i = 1; i + 1 < Ws.size(); ++i) CHECK(gs[i] >= 0.5 * (gs[i - 1] + gs[i + 1]) - 1e-8);
    for (std::size_t i = 1; i < Ws.size(); ++i)
        for (int n = 0; n < 8; ++n) CHECK(acts[i][n] <= acts[i - 1][n] + 1e-9);

    const auto r = subgradient_search(net);
    const auto mixed = mix_solutions(net, r);
    CHECK(mixed.total_activation == doctest::Approx(2.0).epsilon(1e-6));
    for (const auto& it : r.history) CHECK(mixed.lower_bound >= it.g - 1e-9);
    for (int n = 0; n < 8; ++n) check_feasible(net.users[n], mixed.occupancy[n]);
}

TEST_CASE("trace CSV has a header and one row per iterate") {
    const auto r = subgradient_search(ramp(5, 1));
    std::ostringstream out;
    write_trace_csv(out, r.history);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "k,W,sum_activation,g");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == r.history.size());
}

TEST_CASE("concurrent per-user solves give the same iterates") {
    const auto net = ramp(9, 2);
    SearchOptions serial, threaded;
    threaded.threads = 3;
    const auto a = subgradient_search(net, serial);
    const auto b = subgradient_search(net, threaded);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].W == b.history[i].W);
}

TEST_CASE("search option validation") {
    const auto net = ramp(4, 1);
    SearchOptions bad;
    bad.eps = 0.0;
    CHECK_THROWS_AS(subgradient_search(net, bad), ValidationError);
    bad = {};
    bad.max_iter = 0;
    CHECK_THROWS_AS(subgradient_search(net, bad), ValidationError);
}
