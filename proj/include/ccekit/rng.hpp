#pragma once

#include <cstdint>
#include <random>

namespace ccekit {

/// Portable pseudo-random stream: std::mt19937_64 (bit-exact across standard
/// libraries) with in-house uniform and normal transforms, since the
/// std:: distributions are implementation-defined.
class RngStream {
public:
    static constexpr const char* kAlgorithm = "mt19937_64+polar";

    explicit RngStream(std::uint64_t seed);

    /// Child stream for (master, cell, replication).
    static RngStream derive(std::uint64_t master_seed, std::uint64_t cell_index,
                            std::uint64_t rep_index);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal (Marsaglia polar method, cached pair).
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Order-sensitive hash of (master, cell, rep) used to seed replications.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t cell_index,
                          std::uint64_t rep_index);

}  // namespace ccekit
