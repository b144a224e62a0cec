#pragma once

// Seeded randomness with a fixed bit-level contract. The std distributions
// are implementation-defined, so everything that must be reproducible across
// toolchains goes through these helpers instead.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace dosekit {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Independent substream seed for (root, stream). Order of derivation does
// not matter, so parallel consumers get the same seeds as serial ones.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return splitmix64(splitmix64(root) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    return derive_seed(root, fnv1a64(tag));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound), unbiased (Lemire's method).
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(engine_()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::size_t>(below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

    // Index drawn from a cumulative distribution (last entry ~ 1).
    std::size_t categorical(std::span<const double> cumulative) {
        const double u = uniform01() * cumulative.back();
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (u < cumulative[mid]) hi = mid; else lo = mid + 1;
        }
        return lo;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dosekit
