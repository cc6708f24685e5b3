#pragma once

#include <cstdint>

namespace dtpt {

// Counter-based generator built on the splitmix64 finalizer. Pure 64-bit
// integer arithmetic, so the draw sequence for a given (seed, stream) pair is
// identical on every platform, and substreams can be consumed in any order —
// sample s of an ensemble always sees the same numbers whether the sweep runs
// serially or not. The identifier below is recorded in every output header.
inline constexpr const char* rng_id = "splitmix64-ctr-v1";

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed + golden) ^ (golden * (stream + 1))), ctr_(0) {}

    std::uint64_t next_u64() { return mix(key_ + (++ctr_) * golden); }

    // 53-bit mantissa uniform in [0, 1)
    double next_u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_u01(); }

private:
    static constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30; z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27; z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t ctr_;
};

}
