#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace tournsim {

// splitmix64: tiny, portable, identical output on every platform. Used for
// setup permutations, fuzz schedules and commitment material. Not a CSPRNG;
// the simulator only needs reproducibility.
class Prng {
public:
    explicit Prng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased-enough for simulation purposes (modulo over 64 bits).
    uint64_t below(uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::vector<uint32_t> permutation(uint32_t n) {
        std::vector<uint32_t> p(n);
        std::iota(p.begin(), p.end(), 0u);
        for (uint32_t i = n; i > 1; --i) {
            uint32_t j = static_cast<uint32_t>(below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    uint64_t state_;
};

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    Prng p(a ^ (b * 0x9e3779b97f4a7c15ULL + 0x100000001b3ULL));
    return p.next();
}

// FNV-1a, used for transaction ids and trace digests.
class Fnv1a {
public:
    void add(const void* data, size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void add_u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h_ ^= (v >> (8 * i)) & 0xff;
            h_ *= 0x100000001b3ULL;
        }
    }
    uint64_t digest() const { return h_; }

private:
    uint64_t h_ = 0xcbf29ce484222325ULL;
};

} // namespace tournsim
