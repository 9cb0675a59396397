#pragma once

#include <cstdint>
#include <vector>

namespace meshcnn {

// splitmix64 generator. Deterministic across platforms, unlike the standard
// library distributions, which is what makes seeded runs reproducible bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Multiply-shift; bias is below 2^-64.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Stable derivation of sub-seeds (per mesh, per split) from a master seed.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
        Rng r(seed ^ (0xa0761d6478bd642fULL * (stream + 1)));
        r.next_u64();
        return r.next_u64() + 0x8bb84b93962eacc9ULL * index;
    }

private:
    std::uint64_t state_;
};

} // namespace meshcnn
