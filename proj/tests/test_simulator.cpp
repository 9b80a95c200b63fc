#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "aoi/dual.hpp"
#include "aoi/simulator.hpp"

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

RandomizedPolicy always(int Q) { return {2, AgeStateGrid(2, Q, 1.0)}; }

// Long-run average age of a user served at fixed slot offsets in a cycle of
// length P: each gap L between deliveries contributes ages 1..L.
double cyclic_average(const std::vector<int>& offsets, int P) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        const int next = i + 1 < offsets.size() ? offsets[i + 1] : offsets[0] + P;
        const int L = next - offsets[i];
        num += L * (L + 1) / 2.0;
        den += L;
    }
    return num / den;
}

// Network average for the cyclic round-robin schedule, by enumerating one period.
double round_robin_oracle(int N, int M) {
    const int P = N / std::gcd(N, M);  // the start index returns to 0 after P slots
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        std::vector<int> offsets;
        for (int t = 0; t < P; ++t)
            for (int j = 0; j < M; ++j)
                if ((t * M + j) % N == n) offsets.push_back(t);
        total += cyclic_average(offsets, P);
    }
    return total / N;
}

SimConfig config(NetworkSpec net, long long T, std::uint64_t seed, PolicyKind kind,
                 std::vector<RandomizedPolicy> policies = {}) {
    return {std::move(net), T, seed, kind, std::move(policies), 0, 0, nullptr};
}

std::string report_csv(const SimReport& r) {
    std::ostringstream out;
    write_report_csv(out, {r});
    return out.str();
}

}  // namespace

TEST_CASE("always-eager single user keeps age 1") {
    auto cfg = config(identical(1, 1, kSingle, kInf), 100, 0, PolicyKind::Truncated, {always(1)});
    const auto r = run_truncated(cfg);
    CHECK(r.network_avg_aoi == 1.0);
    CHECK(r.slots_truncated == 0);
    CHECK(r.per_user_avg_power[0] == 1.0);
}

TEST_CASE("single user with the budget-0.4 LP policy") {
    const UserSpec user(0, kSingle, 0.4);
    const auto sol = solve_user(user, 0.0);
    auto cfg = config(NetworkSpec({user}, 1), 1000000, 7, PolicyKind::Truncated, {extract_policy(sol, kSingle)});
    cfg.histogram_bins = 10;
    const auto r = run_truncated(cfg);
    CHECK(std::abs(r.network_avg_aoi - 1.8) <= 0.01);
    CHECK(std::abs(r.per_user_avg_power[0] - 0.4) <= 0.005);
    CHECK(r.slots_truncated == 0);
    CHECK(total_variation(r.aoi_histogram[0], sol.mu) <= 0.02);
}

TEST_CASE("greedy with ample bandwidth and energy serves everyone") {
    auto cfg = config(identical(4, 4, kFourState, kFourState.omega(4)), 5000, 1, PolicyKind::Greedy);
    const auto r = run_greedy(cfg);
    CHECK(r.network_avg_aoi == 1.0);
}

TEST_CASE("greedy alternates between two unconstrained users") {
    auto cfg = config(identical(2, 1, kSingle, kInf), 10000, 1, PolicyKind::Greedy);
    const auto r = run_greedy(cfg);
    CHECK(r.per_user_avg_aoi[0] == doctest::Approx(1.5).epsilon(1e-3));
    CHECK(r.per_user_avg_aoi[1] == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("greedy ties go to the lower user id") {
    std::ostringstream trace;
    auto cfg = config(identical(3, 1, kSingle, kInf), 1, 0, PolicyKind::Greedy);
    cfg.trace = &trace;
    run_greedy(cfg);
    CHECK(trace.str() == "slot,user,x,q,s,u\n0,0,1,1,1,1\n0,1,1,1,1,0\n0,2,1,1,1,0\n");
}

TEST_CASE("greedy stays within the energy ledger") {
    const auto net = ramp(10, 3);
    const long long T = 20000;
    const auto r = run_greedy(config(net, T, 3, PolicyKind::Greedy));
    for (int n = 0; n < 10; ++n) {
        // Eligibility allows at most one transmission beyond the budget.
        CHECK(r.per_user_avg_power[n] * T <= net.users[n].energy_budget * T + kFourState.omega(4) + 1e-9);
    }
}

TEST_CASE("round robin closed form and its cyclic extension") {
    const auto r = run_round_robin(config(identical(8, 2, kFourState, 0.0), 10000, 0, PolicyKind::RoundRobin));
    CHECK(std::abs(r.network_avg_aoi - 2.5) <= 0.01);
    CHECK(round_robin_oracle(8, 2) == 2.5);

    const auto full = run_round_robin(config(identical(3, 3, kFourState, 0.0), 1000, 0, PolicyKind::RoundRobin));
    CHECK(full.network_avg_aoi == 1.0);

    // N = 5, M = 2: gaps alternate between 2 and 3 slots.
    const double oracle = round_robin_oracle(5, 2);
    CHECK(oracle == doctest::Approx(1.8).epsilon(1e-12));
    const auto five = run_round_robin(config(identical(5, 2, kFourState, 0.0), 100000, 0, PolicyKind::RoundRobin));
    CHECK(std::abs(five.network_avg_aoi - oracle) <= 0.01);
}

TEST_CASE("select_subset marginals are uniform") {
    Rng rng(123);
    std::vector<int> counts(5, 0);
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        const auto s = select_subset({0, 1, 2, 3, 4}, 2, rng);
        REQUIRE(s.size() == 2);
        REQUIRE(s[0] < s[1]);
        for (int v : s) ++counts[v];
    }
    for (int c : counts) CHECK(std::abs(c / static_cast<double>(trials) - 0.4) <= 0.01);
    CHECK(select_subset({3, 9}, 2, rng) == std::vector<int>{3, 9});
    CHECK(select_subset({3, 9, 11}, 0, rng).empty());
}

TEST_CASE("select_subset picks every pair equally often") {
    Rng rng(321);
    std::vector<int> pair_counts(25, 0);
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        const auto s = select_subset({0, 1, 2, 3, 4}, 2, rng);
        ++pair_counts[s[0] * 5 + s[1]];
    }
    double chi2 = 0.0;
    for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b) {
            const double e = trials / 10.0;
            chi2 += (pair_counts[a * 5 + b] - e) * (pair_counts[a * 5 + b] - e) / e;
        }
    CHECK(chi2 < 27.88);  // 0.999 quantile, 9 degrees of freedom
}

TEST_CASE("reports are reproducible and seed-dependent") {
    const auto net = ramp(12, 3);
    const auto mixed = mix_solutions(net, subgradient_search(net));
    auto cfg = config(net, 20000, 5, PolicyKind::Truncated, mixed.policies);
    const auto a = run_truncated(cfg), b = run_truncated(cfg);
    CHECK(report_csv(a) == report_csv(b));
    cfg.seed = 6;
    const auto c = run_truncated(cfg);
    CHECK(report_csv(a) != report_csv(c));
    // 99% intervals overlap.
    const double z = 2.576;
    CHECK(std::abs(a.network_avg_aoi - c.network_avg_aoi) <= z * (a.network_aoi_se + c.network_aoi_se));
}

TEST_CASE("mixed policies meet their budgets without truncation") {
    const auto net = ramp(10, 2);
    const auto mixed = mix_solutions(net, subgradient_search(net));
    // Same users with room for everyone: each follows its own randomized policy.
    const auto r = run_truncated(config(NetworkSpec(net.users, 10), 200000, 4, PolicyKind::Truncated, mixed.policies));
    CHECK(r.slots_truncated == 0);
    for (int n = 0; n < 10; ++n) {
        CAPTURE(n);
        CHECK(r.per_user_avg_power[n] <= net.users[n].energy_budget + 3 * r.per_user_power_se[n]);
        CHECK(std::abs(r.per_user_avg_power[n] - mixed.occupancy[n].avg_power) <= 4 * r.per_user_power_se[n]);
    }
}

TEST_CASE("bandwidth is never exceeded under heavy contention") {
    const auto net = identical(30, 2, kFourState, kInf);
    std::vector<RandomizedPolicy> eager(30, always(4));
    const auto r = run_truncated(config(net, 5000, 2, PolicyKind::Truncated, eager));
    CHECK(r.max_scheduled == 2);
    CHECK(r.slots_truncated == 5000);
    // Each user is served with probability 2/30 per slot: geometric ages with mean 15.
    CHECK(r.network_avg_aoi == doctest::Approx(15.0).epsilon(0.03));
}

TEST_CASE("ages beyond the policy table use its last row") {
    RandomizedPolicy p{2, AgeStateGrid(2, 1)};
    p.xi(2, 1) = 1.0;
    CHECK(p.at(5, 1) == 1.0);
    CHECK(p.at(1, 1) == 0.0);
}

TEST_CASE("trace rows cover every user and slot") {
    std::ostringstream trace;
    auto cfg = config(ramp(4, 1), 25, 0, PolicyKind::RoundRobin);
    cfg.trace = &trace;
    run_round_robin(cfg);
    std::istringstream in(trace.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "slot,user,x,q,s,u");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 100);
}

TEST_CASE("run CSV header") {
    const auto r = run_round_robin(config(ramp(2, 1), 10, 4, PolicyKind::RoundRobin));
    const auto text = report_csv(r);
    CHECK(text.rfind("seed,policy,N,M,T,network_avg_aoi,network_aoi_se,slots_truncated,aoi_0,aoi_1,power_0,power_1\n4,round_robin,2,1,10,", 0) == 0);
}

TEST_CASE("configuration errors") {
    CHECK_THROWS_AS(run_truncated(config(ramp(3, 1), 10, 0, PolicyKind::Truncated)), ValidationError);
    CHECK_THROWS_AS(run_round_robin(config(ramp(3, 1), 0, 0, PolicyKind::RoundRobin)), ValidationError);
    CHECK_THROWS_AS(parse_policy("optimal"), ValidationError);
    CHECK(parse_policy("round_robin") == PolicyKind::RoundRobin);
    CHECK(policy_name(PolicyKind::Greedy) == "greedy");
}
