#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace freematrix {

/// Counter-based random stream. Every variate is a pure function of
/// (seed, stream, counter), so parallel and serial draws agree bitwise and
/// substreams can be split without coordination.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed) ^ 0x9e3779b97f4a7c15ull ^ mix(stream))) {}

    /// Independent substream, e.g. one per trial or per coefficient.
    CounterRng substream(std::uint64_t index) const {
        CounterRng r(0);
        r.key_ = mix(key_ ^ mix(index + 0x517cc1b727220a95ull));
        r.counter_ = 0;
        return r;
    }

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * (++counter_)); }

    /// Uniform in (0, 1); never returns 0 or 1.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes two counter slots.
    double next_normal() {
        double u1 = next_uniform();
        double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace freematrix
