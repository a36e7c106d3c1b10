#pragma once

// Closed-form sharp constants and envelopes.

#include <utility>

namespace bmo {

// (p/e (Gamma(p) - int_0^1 t^{p-1} e^t dt) + 1)^{1/p}, p >= 1.
double c3p(double p);

// Adaptive quadrature of int_0^1 t^{p-1} e^t dt (exposed for cross-checks).
double c3p_integral(double p);

// (p/2 Gamma(p))^{1/p}, p > 2.
double lp_equiv_constant(double p);

// Sharp bound for |{|phi - <phi>| > lambda}| / |I| when ||phi||_2 = 1.
double jn_weak_envelope(double lambda);

struct ClassicConstants {
    double c1;  // 1/2 e^{4/e}
    double c2;  // 2/e
};
ClassicConstants classic_jn_constants();

struct BellmanProblem {
    enum class Kind { lp_moment, weak_type };
    Kind kind;
    double param;  // p for lp_moment, lambda for weak_type

    static BellmanProblem lp_moment(double p) { return {Kind::lp_moment, p}; }
    static BellmanProblem weak_type(double lambda) { return {Kind::weak_type, lambda}; }
};

// Value at the point (0, 1).
double bellman_value(const BellmanProblem& problem);

}  // namespace bmo
