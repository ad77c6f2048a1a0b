#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace dwnn {

namespace detail {

// Stafford variant 13 finalizer, also the core of splitmix64.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct SplitMix64 {
    std::uint64_t state;
    explicit constexpr SplitMix64(std::uint64_t s) : state(s) {}
    constexpr std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

// 64-bit FNV-1a, used to turn string tags into substream ids.
inline constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// Splittable counter-seeded generator (xoshiro256++ core). The sequence is a
// pure function of (seed, stream): bit-identical across runs, platforms and
// thread schedules. Substreams derived from distinct tags are independent and
// may be created in any order without touching the parent's state.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {
        detail::SplitMix64 sm(detail::mix64(seed) ^ detail::mix64(stream ^ 0x6a09e667f3bcc909ULL));
        for (auto& word : state_) word = sm.next();
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    SeededRng substream(std::uint64_t tag) const {
        return SeededRng(seed_, detail::mix64(stream_ ^ detail::mix64(tag)));
    }
    SeededRng substream(std::string_view tag) const { return substream(detail::fnv1a(tag)); }
    SeededRng substream(std::string_view tag, std::uint64_t index) const {
        return substream(detail::fnv1a(tag)).substream(index);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller; the second deviate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<std::uint32_t> permutation(std::uint32_t n) {
        std::vector<std::uint32_t> p(n);
        for (std::uint32_t i = 0; i < n; ++i) p[i] = i;
        for (std::uint32_t i = n; i > 1; --i) {
            const auto j = static_cast<std::uint32_t>(uniform_below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_;
    std::uint64_t stream_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dwnn
