#pragma once

// Seeded instance generators for property tests and verification suites.
// Output depends only on the seed (no platform-specific distributions).

#include <algorithm>
#include <cstdint>
#include <random>

#include "bmo/construct.hpp"
#include "bmo/measure.hpp"

namespace bmo {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }  // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform on {lo, ..., hi}.
    long integer(long lo, long hi) {
        const long span = hi - lo + 1;
        return lo + std::min(span - 1, static_cast<long>(uniform() * static_cast<double>(span)));
    }

private:
    std::mt19937_64 gen_;
};

// `pieces` cells of random lengths with values in [lo, hi).
StepFunction random_step_function(Rng& rng, int pieces, const DomainShape& domain, double lo = -1.0, double hi = 1.0);

// Random distribution with `atoms` atoms.
Distribution random_distribution(Rng& rng, int atoms, double lo = -1.0, double hi = 1.0);

// Random construction of the given depth over random leaves and constants.
ExprPtr random_expr(Rng& rng, int depth);

}  // namespace bmo
