#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mdn {

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard; the distribution mappings here are spelled out explicitly instead
// of using std::*_distribution, whose algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n >= 1.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // Standard normal via Box-Muller; generates pairs, caches the second.
    double normal();

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Mixes a run seed with a stream name so that independent parts of a run
// (data, init, batches, meta-batches) draw from unrelated streams.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

inline Rng substream(std::uint64_t seed, std::string_view name) {
    return Rng(substream_seed(seed, name));
}

}  // namespace mdn
