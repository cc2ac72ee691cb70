#pragma once

#include <cstdint>
#include <random>

namespace mcarma {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    StreamKey child(std::uint64_t tag) const { return {seed, splitmix64(stream ^ splitmix64(tag + 0x51ED27ULL))}; }
    bool operator==(const StreamKey&) const = default;
};

/// Deterministic variate stream fixed by (seed, stream id); the n-th draw depends only on those and n.
class RngStream {
public:
    explicit RngStream(StreamKey key) : key_(key) {
        std::seed_seq seq{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32),
                          static_cast<std::uint32_t>(key.stream), static_cast<std::uint32_t>(key.stream >> 32),
                          static_cast<std::uint32_t>(splitmix64(key.seed ^ splitmix64(key.stream)))};
        engine_.seed(seq);
    }
    RngStream(std::uint64_t seed, std::uint64_t stream) : RngStream(StreamKey{seed, stream}) {}

    const StreamKey& key() const { return key_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    double gamma(double shape, double rate) { return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_); }
    long poisson(double mean) { return mean > 0.0 ? std::poisson_distribution<long>(mean)(engine_) : 0L; }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    StreamKey key_;
    std::mt19937_64 engine_;
};

}  // namespace mcarma
