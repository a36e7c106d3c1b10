#include "bmo/random.hpp"

#include <algorithm>

#include "bmo/errors.hpp"

namespace bmo {

StepFunction random_step_function(Rng& rng, int pieces, const DomainShape& domain, double lo, double hi) {
    if (pieces < 1) throw InputError("random: pieces must be >= 1");
    const double a = domain.is_circle() ? rng.uniform(-0.5, 0.5) : domain.a();
    const double b = domain.is_circle() ? a + 1.0 : domain.b();
    std::vector<double> cuts;
    for (int i = 0; i + 1 < pieces; ++i) cuts.push_back(rng.uniform(0.05, 1.0));
    std::vector<double> bp{a};
    double total = 1.0;
    for (double c : cuts) total += c;
    double acc = 0.0;
    for (double c : cuts) {
        acc += c;
        bp.push_back(a + (b - a) * acc / total);
    }
    bp.push_back(b);
    std::vector<double> values;
    for (int i = 0; i < pieces; ++i) values.push_back(rng.uniform(lo, hi));
    return {domain, std::move(bp), std::move(values)};
}

Distribution random_distribution(Rng& rng, int atoms, double lo, double hi) {
    if (atoms < 1) throw InputError("random: atoms must be >= 1");
    std::vector<Atom> out;
    for (int i = 0; i < atoms; ++i) out.push_back({rng.uniform(lo, hi), rng.uniform(0.05, 1.0)});
    return Distribution::from_atoms(std::move(out));
}

ExprPtr random_expr(Rng& rng, int depth) {
    if (depth <= 0) {
        if (rng.uniform() < 0.3) return constant(rng.uniform(-1.0, 1.0));
        const int pieces = static_cast<int>(rng.integer(1, 5));
        const auto domain = rng.uniform() < 0.5 ? DomainShape::interval(-0.5, 0.5) : DomainShape::circle();
        return leaf(random_step_function(rng, pieces, domain));
    }
    const double lam = rng.uniform(0.3, 0.95);
    const int levels = static_cast<int>(rng.integer(1, 6));
    const double u = rng.uniform();
    if (u < 0.4) {
        // Draw in a fixed order; argument evaluation order is unspecified.
        auto e0 = random_expr(rng, depth - 1);
        auto e1 = random_expr(rng, depth - 1);
        const double alpha = rng.uniform(0.1, 0.9);
        return glue_node(std::move(e0), std::move(e1), alpha, lam, levels);
    }
    if (u < 0.8) return hom_node(random_expr(rng, depth - 1), lam, levels);
    return periodize(random_expr(rng, depth - 1));
}

}  // namespace bmo
