#include "bmo/constants.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>

#include "bmo/errors.hpp"

namespace bmo {

double c3p_integral(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("c3p: p must be >= 1");
    auto f = [p](double t) { return std::pow(t, p - 1.0) * std::exp(t); };
    // Double-exponential rule: the t^{p-1} endpoint behaviour costs nothing extra.
    thread_local boost::math::quadrature::tanh_sinh<double> rule;
    return rule.integrate(f, 0.0, 1.0, 1e-14);
}

double c3p(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("c3p: p must be >= 1");
    const double inner = p / std::numbers::e * (std::tgamma(p) - c3p_integral(p)) + 1.0;
    return std::pow(inner, 1.0 / p);
}

double lp_equiv_constant(double p) {
    if (!(p > 2.0) || !std::isfinite(p)) throw InputError("lp_equiv: p must be > 2");
    return std::pow(p / 2.0 * std::tgamma(p), 1.0 / p);
}

double jn_weak_envelope(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("jn envelope: lambda must be > 0");
    if (lambda <= 1.0) return 1.0;
    if (lambda <= 2.0) return 1.0 / (lambda * lambda);
    return std::exp(2.0 - lambda) / 4.0;
}

ClassicConstants classic_jn_constants() {
    return {0.5 * std::exp(4.0 / std::numbers::e), 2.0 / std::numbers::e};
}

double bellman_value(const BellmanProblem& problem) {
    const double x = problem.param;
    if (!std::isfinite(x)) throw InputError("bellman: parameter must be finite");
    switch (problem.kind) {
        case BellmanProblem::Kind::lp_moment:
            if (!(x >= 1.0)) throw InputError("bellman lp_moment: p must be >= 1");
            return x / 2.0 * std::tgamma(x);
        case BellmanProblem::Kind::weak_type:
            if (!(x >= 1.0)) throw InputError("bellman weak_type: lambda must be >= 1");
            return jn_weak_envelope(x);
    }
    throw InternalError("unknown Bellman problem");
}

}  // namespace bmo
