#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace contractlab {

// Deterministic 64-bit-seeded generator. All randomness in a run flows
// through one instance, so a seed fully determines the run. Draws are not
// guaranteed to match other implementations bit for bit, only to be stable
// within this one.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Multiply-shift bounding; bias is O(n/2^64).
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::bounded: n must be positive");
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

}  // namespace contractlab
