#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace feedlab {

// 64-bit FNV-1a. Stable across platforms and runs; used for content hashes
// and for deriving child seeds from string keys.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic PRNG (xoshiro256**). All sampling helpers are implemented
// here rather than with <random> distributions so streams are reproducible
// independent of the standard library.
class Rng {
  public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t x = seed;
        for (auto& word : state_) word = x = splitmix64(x);
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1).
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = uint64_t(hi - lo) + 1;
        return lo + int64_t(bounded(span));
    }

    // Uniform index in [0, n).
    size_t index(size_t n) { return size_t(bounded(uint64_t(n))); }

    bool bernoulli(double p) { return uniform01() < p; }

    double normal(double mu = 0.0, double sd = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mu + sd * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return mu + sd * u * m;
    }

    // Geometric number of failures before first success, support {0,1,...}.
    int64_t geometric(double p) {
        double u = uniform01();
        if (p >= 1.0) return 0;
        return int64_t(std::floor(std::log1p(-u) / std::log1p(-p)));
    }

    int64_t poisson(double lambda) {
        // Inversion; fine for the small rates used here.
        double l = std::exp(-lambda), p = 1.0;
        int64_t k = 0;
        do {
            ++k;
            p *= uniform01();
        } while (p > l);
        return k - 1;
    }

    Rng fork(uint64_t salt) { return Rng(splitmix64(next() ^ salt)); }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    // Lemire-style rejection sampling for an unbiased bounded draw.
    uint64_t bounded(uint64_t n) {
        if (n == 0) return 0;
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    uint64_t state_[4] = {};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Child seed for a named stream, e.g. per (participant, load_seq).
inline uint64_t derive_seed(uint64_t master, std::string_view name, uint64_t n = 0) {
    return splitmix64(fnv1a64(name, splitmix64(master)) ^ splitmix64(n * 0x9e3779b97f4a7c15ULL + 1));
}

} // namespace feedlab
