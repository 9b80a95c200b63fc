#include "aoi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "aoi/csv.hpp"

namespace aoi {

namespace {

constexpr int kBatches = 20;
constexpr std::uint64_t kNetworkStream = std::uint64_t{1} << 40;

void validate(const SimConfig& cfg) {
    if (cfg.horizon < 1) throw ValidationError("simulate: horizon T must be at least 1");
    if (cfg.histogram_bins < 0) throw ValidationError("simulate: histogram_bins must be >= 0");
    if (cfg.kind == PolicyKind::Truncated) {
        if (static_cast<int>(cfg.policies.size()) != cfg.network.num_users())
            throw ValidationError("simulate: truncated policy needs one RandomizedPolicy per user");
        for (int n = 0; n < cfg.network.num_users(); ++n)
            if (cfg.policies[n].xi.num_states() != cfg.network.users[n].channel.num_states() ||
                cfg.policies[n].x_max < 1)
                throw ValidationError("simulate: policy of user " + std::to_string(n) +
                                      " does not match its channel");
    }
}

double batch_se(const std::vector<double>& means) {
    const int B = static_cast<int>(means.size());
    if (B < 2) return 0.0;
    double m = 0.0;
    for (double v : means) m += v;
    m /= B;
    double ss = 0.0;
    for (double v : means) ss += (v - m) * (v - m);
    return std::sqrt(ss / (static_cast<double>(B) * (B - 1)));
}

// Shared slot loop. `decide(t, x, q, energy, served, flag, report)` fills
// served[n] and the trace flag for slot t, given ages x, channel states q and
// the energy used before slot t.
template <class Decide>
SimReport run(const SimConfig& cfg, Decide&& decide) {
    validate(cfg);
    const auto& users = cfg.network.users;
    const int N = cfg.network.num_users();
    const int M = cfg.network.bandwidth;
    const long long T = cfg.horizon;
    const int B = static_cast<int>(std::min<long long>(kBatches, T));

    std::vector<Rng> channel_rng;
    channel_rng.reserve(N);
    for (int n = 0; n < N; ++n) channel_rng.emplace_back(stream_seed(cfg.experiment, cfg.seed, 2 * std::uint64_t(n)));

    std::vector<int> x(N, 1), q(N, 1);
    std::vector<char> served(N), flag(N);
    std::vector<double> energy(N, 0.0);
    std::vector<long long> age_sum(N, 0), deliveries(N, 0);
    std::vector<double> batch_aoi(B, 0.0);
    std::vector<std::vector<double>> batch_power(N, std::vector<double>(B, 0.0));
    std::vector<long long> batch_len(B, 0);

    SimReport rep;
    rep.kind = cfg.kind;
    rep.seed = cfg.seed;
    rep.horizon = T;
    rep.num_users = N;
    rep.bandwidth = M;
    if (cfg.histogram_bins > 0) rep.aoi_histogram.assign(N, std::vector<long long>(cfg.histogram_bins, 0));

    std::optional<CsvWriter> trace;
    if (cfg.trace) trace.emplace(*cfg.trace, std::vector<std::string>{"slot", "user", "x", "q", "s", "u"});

    for (long long t = 0; t < T; ++t) {
        const int b = static_cast<int>(t * B / T);
        ++batch_len[b];
        long long slot_age = 0;
        for (int n = 0; n < N; ++n) {
            q[n] = sample_channel(users[n].channel, channel_rng[n]);
            age_sum[n] += x[n];
            slot_age += x[n];
            if (cfg.histogram_bins > 0) ++rep.aoi_histogram[n][std::min(x[n], cfg.histogram_bins) - 1];
        }
        batch_aoi[b] += static_cast<double>(slot_age) / N;

        std::fill(served.begin(), served.end(), 0);
        std::fill(flag.begin(), flag.end(), 0);
        decide(t, x, q, energy, served, flag, rep);

        int count = 0;
        for (int n = 0; n < N; ++n) count += served[n] != 0;
        if (count > M) {
            // Hard per-slot bandwidth limit: checked on every slot in every build type.
            throw std::logic_error("bandwidth violated in slot " + std::to_string(t) + ": " + std::to_string(count) +
                                   " users served, M = " + std::to_string(M));
        }
        rep.max_scheduled = std::max(rep.max_scheduled, count);

        for (int n = 0; n < N; ++n) {
            if (trace) {
                *trace << t << n << x[n] << q[n] << int(flag[n]) << int(served[n]);
                trace->end_row();
            }
            const double e = slot_energy(users[n].channel, q[n], served[n]);
            energy[n] += e;
            batch_power[n][b] += e;
            deliveries[n] += served[n] != 0;
            x[n] = advance_aoi(x[n], served[n]);
        }
    }

    rep.per_user_avg_aoi.resize(N);
    rep.per_user_avg_power.resize(N);
    rep.per_user_activation.resize(N);
    rep.per_user_power_se.resize(N);
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        rep.per_user_avg_aoi[n] = static_cast<double>(age_sum[n]) / T;
        rep.per_user_avg_power[n] = energy[n] / T;
        rep.per_user_activation[n] = static_cast<double>(deliveries[n]) / T;
        std::vector<double> means(B);
        for (int k = 0; k < B; ++k) means[k] = batch_power[n][k] / batch_len[k];
        rep.per_user_power_se[n] = batch_se(means);
        total += rep.per_user_avg_aoi[n];
    }
    rep.network_avg_aoi = total / N;
    std::vector<double> means(B);
    for (int k = 0; k < B; ++k) means[k] = batch_aoi[k] / batch_len[k];
    rep.network_aoi_se = batch_se(means);
    return rep;
}

}  // namespace

std::string_view policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Truncated: return "truncated";
        case PolicyKind::Greedy: return "greedy";
        case PolicyKind::RoundRobin: return "round_robin";
    }
    return "unknown";
}

PolicyKind parse_policy(std::string_view name) {
    if (name == "truncated") return PolicyKind::Truncated;
    if (name == "greedy") return PolicyKind::Greedy;
    if (name == "round_robin") return PolicyKind::RoundRobin;
    throw ValidationError("unknown policy '" + std::string(name) + "' (expected truncated, greedy or round_robin)");
}

std::vector<int> select_subset(std::vector<int> eager, int M, Rng& rng) {
    const int n = static_cast<int>(eager.size());
    if (M <= 0) return {};
    if (n <= M) return eager;
    for (int i = 0; i < M; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(eager[i], eager[j]);
    }
    eager.resize(M);
    std::sort(eager.begin(), eager.end());
    return eager;
}

SimReport run_truncated(const SimConfig& config) {
    SimConfig cfg = config;
    cfg.kind = PolicyKind::Truncated;
    const int N = cfg.network.num_users();
    const int M = cfg.network.bandwidth;
    std::vector<Rng> eager_rng;
    eager_rng.reserve(N);
    for (int n = 0; n < N; ++n) eager_rng.emplace_back(stream_seed(cfg.experiment, cfg.seed, 2 * std::uint64_t(n) + 1));
    Rng network_rng(stream_seed(cfg.experiment, cfg.seed, kNetworkStream));
    std::vector<int> eager;
    eager.reserve(N);

    return run(cfg, [&](long long, const std::vector<int>& x, const std::vector<int>& q, const std::vector<double>&,
                        std::vector<char>& served, std::vector<char>& flag, SimReport& rep) {
        eager.clear();
        for (int n = 0; n < N; ++n) {
            const double u = eager_rng[n].uniform();  // drawn for every user in every slot
            if (u < cfg.policies[n].at(x[n], q[n])) {
                eager.push_back(n);
                flag[n] = 1;
            }
        }
        if (static_cast<int>(eager.size()) > M) {
            ++rep.slots_truncated;
            for (int n : select_subset(eager, M, network_rng)) served[n] = 1;
        } else {
            for (int n : eager) served[n] = 1;
        }
    });
}

SimReport run_greedy(const SimConfig& cfg) {
    SimConfig c = cfg;
    c.kind = PolicyKind::Greedy;
    c.policies.clear();
    const auto& users = c.network.users;
    const int N = c.network.num_users();
    const int M = c.network.bandwidth;
    std::vector<int> eligible;
    eligible.reserve(N);

    return run(c, [&](long long t, const std::vector<int>& x, const std::vector<int>&, const std::vector<double>& used,
                      std::vector<char>& served, std::vector<char>& flag, SimReport&) {
        eligible.clear();
        const double slots = static_cast<double>(t + 1);
        for (int n = 0; n < N; ++n)
            if (users[n].energy_budget * slots - used[n] >= 0.0) {
                eligible.push_back(n);
                flag[n] = 1;
            }
        const int k = std::min<int>(M, static_cast<int>(eligible.size()));
        std::partial_sort(eligible.begin(), eligible.begin() + k, eligible.end(), [&](int a, int b) {
            if (x[a] != x[b]) return x[a] > x[b];
            if (users[a].id != users[b].id) return users[a].id < users[b].id;
            return a < b;
        });
        for (int i = 0; i < k; ++i) served[eligible[i]] = 1;
    });
}

SimReport run_round_robin(const SimConfig& cfg) {
    SimConfig c = cfg;
    c.kind = PolicyKind::RoundRobin;
    c.policies.clear();
    const int N = c.network.num_users();
    const int M = c.network.bandwidth;
    return run(c, [&](long long t, const std::vector<int>&, const std::vector<int>&, const std::vector<double>&,
                      std::vector<char>& served, std::vector<char>& flag, SimReport&) {
        const long long start = (t % N) * M;
        for (int j = 0; j < M; ++j) {
            const int n = static_cast<int>((start + j) % N);
            served[n] = flag[n] = 1;
        }
    });
}

SimReport simulate(const SimConfig& cfg) {
    switch (cfg.kind) {
        case PolicyKind::Truncated: return run_truncated(cfg);
        case PolicyKind::Greedy: return run_greedy(cfg);
        case PolicyKind::RoundRobin: return run_round_robin(cfg);
    }
    throw ValidationError("simulate: unknown policy kind");
}

double total_variation(const std::vector<long long>& histogram, const std::vector<double>& mu) {
    long long total = 0;
    for (long long c : histogram) total += c;
    if (total == 0) throw ValidationError("total_variation: empty histogram");
    const std::size_t n = std::max(histogram.size(), mu.size());
    double tv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = i < histogram.size() ? static_cast<double>(histogram[i]) / total : 0.0;
        const double m = i < mu.size() ? mu[i] : 0.0;
        tv += std::abs(p - m);
    }
    return 0.5 * tv;
}

void write_report_csv(std::ostream& out, const std::vector<SimReport>& reports) {
    int N = 0;
    for (const auto& r : reports) N = std::max(N, r.num_users);
    std::vector<std::string> header{"seed", "policy", "N", "M", "T", "network_avg_aoi", "network_aoi_se",
                                    "slots_truncated"};
    for (int n = 0; n < N; ++n) header.push_back("aoi_" + std::to_string(n));
    for (int n = 0; n < N; ++n) header.push_back("power_" + std::to_string(n));
    CsvWriter csv(out, header);
    for (const auto& r : reports) {
        csv << static_cast<unsigned long long>(r.seed) << policy_name(r.kind) << r.num_users << r.bandwidth
            << r.horizon << r.network_avg_aoi << r.network_aoi_se << r.slots_truncated;
        for (int n = 0; n < N; ++n) csv << (n < r.num_users ? r.per_user_avg_aoi[n] : std::nan(""));
        for (int n = 0; n < N; ++n) csv << (n < r.num_users ? r.per_user_avg_power[n] : std::nan(""));
        csv.end_row();
    }
}

}  // namespace aoi
