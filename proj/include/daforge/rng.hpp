#pragma once

#include <cstdint>

namespace daforge {

// splitmix64: tiny, statistically solid, and fully portable.  Every stochastic
// routine in the library derives its stream from (seed, stream, index) so the
// results are independent of thread count and platform.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t s) : state(s) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform double in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    SplitMix64 s(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    std::uint64_t a = s.next();
    SplitMix64 t(a ^ (0xd1b54a32d192ed03ULL * (index + 1)));
    return t.next();
}

} // namespace daforge
