#include "aoi/model.hpp"

#include <cmath>
#include <numeric>

namespace aoi {

ChannelModel::ChannelModel(std::vector<double> eta, std::vector<double> omega)
    : eta_(std::move(eta)), omega_(std::move(omega)) {
    if (eta_.empty()) throw ValidationError("channel: Q must be at least 1");
    if (eta_.size() != omega_.size())
        throw ValidationError("channel: eta and omega must have the same length");
    double total = 0.0;
    for (double p : eta_) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("channel: eta entries must lie in [0, 1]");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ValidationError("channel: eta must sum to 1 (got " + std::to_string(total) + ")");
    for (std::size_t q = 0; q < omega_.size(); ++q) {
        if (!(omega_[q] > 0.0)) throw ValidationError("channel: omega entries must be positive");
        if (q > 0 && !(omega_[q] > omega_[q - 1]))
            throw ValidationError("channel: omega must be strictly increasing");
    }
}

double ChannelModel::mean_cost() const {
    return std::inner_product(eta_.begin(), eta_.end(), omega_.begin(), 0.0);
}

UserSpec::UserSpec(int id_, ChannelModel channel_, double budget)
    : id(id_), channel(std::move(channel_)), energy_budget(budget) {
    if (!(energy_budget >= 0.0)) throw ValidationError("user: energy_budget must be >= 0");
}

NetworkSpec::NetworkSpec(std::vector<UserSpec> users_, int bandwidth_)
    : users(std::move(users_)), bandwidth(bandwidth_) {
    if (users.empty()) throw ValidationError("network: N must be at least 1");
    if (bandwidth < 1) throw ValidationError("network: M must be at least 1");
    if (bandwidth > num_users()) throw ValidationError("network: M must not exceed N");
}

double rr_min_power(const ChannelModel& channel, int bandwidth, int num_users) {
    if (bandwidth < 1 || bandwidth > num_users)
        throw ValidationError("rr_min_power: requires 1 <= M <= N");
    return static_cast<double>(bandwidth) / num_users * channel.mean_cost();
}

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t experiment, std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(mix64(experiment) ^ seed) ^ stream);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Largest multiple of n that fits; values at or above it are redrawn.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

int sample_channel(const ChannelModel& channel, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    int last = 1;
    for (int q = 1; q <= channel.num_states(); ++q) {
        if (channel.eta(q) <= 0.0) continue;
        acc += channel.eta(q);
        last = q;
        if (u < acc) return q;
    }
    // Rounding left acc just below 1.
    return last;
}

}  // namespace aoi
