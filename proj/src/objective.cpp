#include <algorithm>
#include <cmath>

#include "bmo/errors.hpp"
#include "bmo/search.hpp"

namespace bmo {

void SearchConfig::validate() const {
    if (grid < 2) throw InputError("config: grid must be >= 2");
    if (refine < 0) throw InputError("config: refine must be >= 0");
    if (!(tol > 0.0 && tol <= 0.1)) throw InputError("config: tol must lie in (0, 0.1]");
    if (r_long < 1) throw InputError("config: r_long must be >= 1");
    if (max_periods < 1) throw InputError("config: max_periods must be >= 1");
    if (threads < 1) throw InputError("config: threads must be >= 1");
}

Objective Objective::bmo(double p) { return {Kind::bmo, p}; }
Objective Objective::ap(double p) { return {Kind::ap, p}; }
Objective Objective::a_inf() { return {Kind::a_inf, 0.0}; }

void Objective::validate() const {
    if (kind == Kind::bmo && !(p >= 1.0)) throw InputError("p must be >= 1");
    if (kind == Kind::ap && !(p > 1.0)) throw InputError("p must be > 1 for A_p");
    if ((kind != Kind::a_inf) && !std::isfinite(p)) throw InputError("p must be finite");
}

std::string Objective::name() const {
    switch (kind) {
        case Kind::bmo: return "bmo";
        case Kind::ap: return "ap";
        case Kind::a_inf: return "a_inf";
    }
    return "?";
}

double Objective::value(std::span<const double> values, std::span<const double> weights) const {
    switch (kind) {
        case Kind::bmo: {
            const double m = evaluate(Functional::central_moment(p), values, weights);
            return p == 1.0 ? m : std::pow(m, 1.0 / p);
        }
        case Kind::ap:
            return evaluate(Functional::ap_form(p), values, weights);
        case Kind::a_inf:
            return evaluate(Functional::a_inf_form(), values, weights);
    }
    throw InternalError("unknown objective");
}

double Objective::range_bound(double lo, double hi) const {
    if (kind == Kind::bmo) {
        const double d = hi - lo;
        // E|X - EX|^p <= (E|X - EX|^2)^{p/2} <= (D/2)^p for p <= 2, and
        // E|X - EX|^p <= D^{p-1} E|X - EX| <= D^p / 2 otherwise.
        return p <= 2.0 ? d / 2.0 : d * std::pow(0.5, 1.0 / p);
    }
    return hi / lo;
}

double objective_on(const StepFunction& f, const Objective& obj, const Interval& j) {
    obj.validate();
    if (obj.needs_positive() && !f.is_positive()) throw InputError("weight must be positive-valued");
    const auto lengths = f.overlap_lengths(j);
    return obj.value(f.values(), lengths);
}

double objective_on(const Expr& e, const Objective& obj, const Interval& j) {
    obj.validate();
    const auto acc = accumulate(e, j);
    return obj.value(e.atoms(), acc.weights);
}

double weak_distribution(const StepFunction& f, const Interval& i, double lambda) {
    if (!(lambda > 0.0)) throw InputError("weak: lambda must be > 0");
    const auto lengths = f.overlap_lengths(i);
    return evaluate(Functional::tail_mass(lambda), f.values(), lengths);
}

double exp_integral(const StepFunction& f, const Interval& i, double c) {
    if (!std::isfinite(c)) throw InputError("expint: C must be finite");
    const auto lengths = f.overlap_lengths(i);
    double s = 0.0;
    for (std::size_t k = 0; k < lengths.size(); ++k)
        if (lengths[k] > 0.0) s += lengths[k] * std::exp(c * f.values()[k]);
    return s;
}

double exp_integral(const StepFunction& f, double c) { return exp_integral(f, {f.start(), f.end()}, c); }

double exp_integral(const Expr& e, const Interval& i, double c) {
    if (!std::isfinite(c)) throw InputError("expint: C must be finite");
    const auto acc = accumulate(e, i);
    double s = 0.0;
    for (std::size_t k = 0; k < acc.weights.size(); ++k)
        if (acc.weights[k] > 0.0) s += acc.weights[k] * std::exp(c * e.atoms()[k]);
    return s;
}

double exp_integral(const Expr& e, double c) {
    if (!std::isfinite(c)) throw InputError("expint: C must be finite");
    // One carrier carries the node distribution exactly.
    double s = 0.0;
    for (std::size_t k = 0; k < e.atoms().size(); ++k) s += e.weights()[k] * std::exp(c * e.atoms()[k]);
    return s * e.carrier().length();
}

double reverse_holder_ratio(const StepFunction& w, const Interval& i, double q) {
    if (!(q > 1.0)) throw InputError("rh: q must be > 1");
    if (!w.is_positive()) throw InputError("rh: weight must be positive-valued");
    const auto lengths = w.overlap_lengths(i);
    return evaluate(Functional::power_mean(q), w.values(), lengths) /
           evaluate(Functional::barycenter(), w.values(), lengths);
}

}  // namespace bmo
