#pragma once

// Reproducible random streams.
//
// Every random quantity in the library is drawn from an Rng obtained through
// derive_stream(master_seed, stream_id). The engine is std::mt19937_64, whose
// output sequence is fixed by the standard, and the derivation is
//
//     engine_seed = splitmix64(master_seed ^ splitmix64(stream_id + 0x9E3779B97F4A7C15))
//
// Uniform reals and bounded integers are produced here rather than through
// <random> distributions, whose algorithms are implementation-defined.

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace clicknet {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t stream_id) noexcept {
    return splitmix64(master_seed ^ splitmix64(stream_id + 0x9E3779B97F4A7C15ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t engine_seed) : engine_(engine_seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound) without modulo bias (Lemire's method).
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        unsigned __int128 product = static_cast<unsigned __int128>(engine_()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = -bound % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>(engine_()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    return Rng(stream_seed(master_seed, stream_id));
}

/// Packs a purpose tag and two indices into one stream id:
/// bits 56..63 purpose, 32..55 group, 0..31 index.
constexpr std::uint64_t stream_key(std::uint8_t purpose, std::uint64_t group, std::uint64_t index) noexcept {
    return (static_cast<std::uint64_t>(purpose) << 56) | ((group & 0xFFFFFFULL) << 32) | (index & 0xFFFFFFFFULL);
}

namespace purpose {
inline constexpr std::uint8_t histogram = 1;
inline constexpr std::uint8_t bootstrap = 2;
inline constexpr std::uint8_t nbar_draw = 3;
inline constexpr std::uint8_t split = 4;
inline constexpr std::uint8_t init = 5;
inline constexpr std::uint8_t batches = 6;
}  // namespace purpose

}  // namespace clicknet
