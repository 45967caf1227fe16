#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

// Deterministic hashing and random draws. Every stochastic decision in the
// pipeline is a pure function of a seed plus stable identifiers, so runs are
// reproducible across platforms and resumable without saved generator state.
namespace mrcd::det {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

constexpr std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix(a ^ splitmix(b));
}

inline std::uint64_t mix(std::uint64_t seed, std::string_view tag) {
    return mix(seed, fnv1a(tag));
}

inline std::uint64_t mix(std::uint64_t seed, std::string_view tag, std::uint64_t extra) {
    return mix(mix(seed, fnv1a(tag)), extra);
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double unit(std::uint64_t h) {
    return static_cast<double>(splitmix(h) >> 11) * 0x1.0p-53;
}

// Counter-based stream for places that need several draws per key.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n). Modulo bias is negligible for the small n used here.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
    std::uint64_t state_;
};

// Fisher-Yates with an explicit stream; std::shuffle is implementation-defined.
template <typename Vec>
void shuffle(Vec& v, Stream& s) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(s.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

inline std::string hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace mrcd::det
