#include "ccekit/rng.hpp"

#include <cmath>

namespace ccekit {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t cell_index,
                          std::uint64_t rep_index) {
    std::uint64_t h = mix64(master_seed);
    h = mix64(h ^ mix64(cell_index + 0x632BE59BD9B4E019ULL));
    h = mix64(h ^ mix64(rep_index + 0x8CB92BA72F3D8DD7ULL));
    return h;
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
    // Expand the 64-bit seed through SplitMix64 so nearby seeds give
    // unrelated engine states.
    std::uint64_t s = seed;
    std::seed_seq::result_type words[8];
    for (auto& w : words) {
        s = mix64(s);
        w = static_cast<std::seed_seq::result_type>(s & 0xFFFFFFFFULL);
    }
    std::seed_seq seq(std::begin(words), std::end(words));
    engine_.seed(seq);
}

RngStream RngStream::derive(std::uint64_t master_seed, std::uint64_t cell_index,
                            std::uint64_t rep_index) {
    return RngStream(derive_seed(master_seed, cell_index, rep_index));
}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

}  // namespace ccekit
