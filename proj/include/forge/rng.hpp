#pragma once

#include <cstdint>

namespace forge {

// Counter-based 64-bit PRNG (splitmix64). The full update rule, so any
// implementation can reproduce the stream from a seed:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Doubles are built as (z >> 11) * 2^-53, giving uniforms in [0, 1).
// normal() draws two uniforms and applies Box-Muller (no cached spare).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64();
    double next_double();                       // [0, 1)
    double uniform(double lo, double hi);       // [lo, hi)
    uint64_t next_below(uint64_t n);            // [0, n), unbiased by rejection
    double normal();                            // N(0, 1)

    uint64_t state() const { return state_; }

private:
    uint64_t state_;
};

// One splitmix64 output step applied to x (stateless hash).
uint64_t mix64(uint64_t x);

// Stable seed derivation for named substreams: folds each tag into the base
// seed with mix64 so substreams are independent of draw order.
uint64_t derive_seed(uint64_t base, uint64_t tag);
uint64_t derive_seed(uint64_t base, uint64_t tag1, uint64_t tag2);
uint64_t derive_seed(uint64_t base, uint64_t tag1, uint64_t tag2, uint64_t tag3);

}  // namespace forge
