#include "forge/rng.hpp"

#include <cmath>

namespace forge {

namespace {
constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

inline uint64_t finalize(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace

uint64_t Rng::next_u64() {
    state_ += kGamma;
    return finalize(state_);
}

double Rng::next_double() {
    return (double)(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

uint64_t Rng::next_below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

double Rng::normal() {
    // Box-Muller; u1 is kept away from 0 so the log is finite
    double u1 = next_double();
    const double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
}

uint64_t mix64(uint64_t x) {
    return finalize(x + kGamma);
}

uint64_t derive_seed(uint64_t base, uint64_t tag) {
    return mix64(base ^ mix64(tag));
}

uint64_t derive_seed(uint64_t base, uint64_t tag1, uint64_t tag2) {
    return derive_seed(derive_seed(base, tag1), tag2);
}

uint64_t derive_seed(uint64_t base, uint64_t tag1, uint64_t tag2, uint64_t tag3) {
    return derive_seed(derive_seed(base, tag1, tag2), tag3);
}

}  // namespace forge
