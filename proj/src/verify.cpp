#include "bmo/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bmo/constants.hpp"
#include "bmo/errors.hpp"
#include "bmo/random.hpp"

namespace bmo {
namespace {

// Searched norms are lower bounds; comparisons between two of them get this
// much room on top of the floating-point tolerance.
constexpr double kSearchSlack = 1e-6;
constexpr double kFloatTol = 1e-9;

const char* relation_name(Check::Relation r) {
    switch (r) {
        case Check::Relation::eq: return "eq";
        case Check::Relation::le: return "le";
        case Check::Relation::ge: return "ge";
        case Check::Relation::lt: return "lt";
        case Check::Relation::gt: return "gt";
    }
    return "?";
}

StepFunction scaled(const StepFunction& f, double s) {
    std::vector<double> v = f.values();
    for (auto& x : v) x *= s;
    return {f.domain(), f.breakpoints(), std::move(v)};
}

Interval random_subinterval(Rng& rng, const StepFunction& f) {
    double a = rng.uniform(f.start(), f.end()), b = rng.uniform(f.start(), f.end());
    if (a > b) std::swap(a, b);
    if (b - a < 1e-3) b = std::min(f.end(), a + 1e-3), a = b - 1e-3;
    return {a, b};
}

MonotoneMap random_monotone_map(Rng& rng) {
    std::vector<double> xs, ys;
    double x = rng.uniform(-1.5, -0.5), y = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < 4; ++i) {
        xs.push_back(x);
        ys.push_back(y);
        const double dx = rng.uniform(0.2, 1.0);
        x += dx;
        y += rng.uniform(0.0, 1.5) * dx;
    }
    return {std::move(xs), std::move(ys)};
}

struct Worst {
    double value = -std::numeric_limits<double>::infinity();
    void take(double v) { value = std::max(value, v); }
};

}  // namespace

Check Check::make(std::string name, double expected, double observed, double tolerance, Relation rel) {
    Check c{std::move(name), expected, observed, tolerance, rel, false};
    switch (rel) {
        case Relation::eq: c.pass = std::abs(observed - expected) <= tolerance; break;
        case Relation::le: c.pass = observed <= expected + tolerance; break;
        case Relation::ge: c.pass = observed >= expected - tolerance; break;
        case Relation::lt: c.pass = observed < expected; break;
        case Relation::gt: c.pass = observed > expected; break;
    }
    if (!std::isfinite(observed)) c.pass = false;
    return c;
}

bool VerifyReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Json to_json(const VerifyReport& r) {
    Json checks = Json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"expected", c.expected},
                          {"observed", c.observed},
                          {"tolerance", c.tolerance},
                          {"relation", relation_name(c.relation)},
                          {"pass", c.pass}});
    return {{"pass", r.pass()}, {"checks", checks}};
}

std::vector<StepFunction> random_corpus(std::uint64_t seed, int count) {
    if (count < 1) throw InputError("corpus: count must be >= 1");
    Rng rng(seed);
    std::vector<StepFunction> out;
    for (int i = 0; i < count; ++i) {
        const int pieces = static_cast<int>(rng.integer(2, 10));
        out.push_back(random_step_function(rng, pieces, DomainShape::interval(0.0, 1.0)));
    }
    return out;
}

StepFunction restrict_to(const StepFunction& f, const Interval& j) {
    if (f.is_circle()) throw InputError("restrict: interval-domain function expected");
    f.check_query(j);
    const double l = std::max(j.left, f.start()), r = std::min(j.right, f.end());
    std::vector<double> bp{l}, v;
    for (std::size_t i = 0; i < f.pieces(); ++i) {
        const double a = std::max(l, f.breakpoints()[i]), b = std::min(r, f.breakpoints()[i + 1]);
        if (!(b > a)) continue;
        bp.push_back(b);
        v.push_back(f.values()[i]);
    }
    return {DomainShape::interval(l, r), std::move(bp), std::move(v)};
}

JnOutcome verify_jn(const JnOptions& opt) {
    if (!(opt.delta > 0.0) || !std::isfinite(opt.delta)) throw InputError("verify-jn: delta must be > 0");
    if (!(opt.m > 0.0) || !std::isfinite(opt.m)) throw InputError("verify-jn: m must be > 0");
    if (opt.max_depth < 1) throw InputError("verify-jn: max depth must be >= 1");
    JnOutcome out;
    const double two_e = 2.0 / std::numbers::e;
    out.lambda = std::exp(opt.delta / 5.0);
    out.c = two_e / (two_e + opt.delta);

    // phi = log(1/x) is the negated staircase; exp(c phi) = exp(-c v).
    std::optional<Staircase> st;
    for (int n = 1; n <= opt.max_depth; ++n) {
        Staircase s = log_staircase(out.lambda, n);
        double sum = 0.0;
        for (const auto& a : std::get<Distribution>(s.martingale.root().value).atoms())
            sum += a.weight * std::exp(-out.c * a.value);
        out.depth = n;
        out.atom_sum = sum;
        st = std::move(s);
        if (sum > opt.m) break;
    }
    auto& rep = out.report;
    rep.add(Check::make("exp_atom_sum_exceeds_m", opt.m, out.atom_sum, 0.0, Check::Relation::gt));
    rep.add(Check::make("depth_within_limit", opt.max_depth, out.depth, 0.0, Check::Relation::le));

    const auto& m0 = std::get<Distribution>(st->martingale.root().value);
    rep.add(Check::make("staircase_distribution_tv", 0.0, tv_distance(distribution(st->function), m0), 1e-12,
                        Check::Relation::le));

    const auto val = validate_membership(st->martingale, MembershipDomain::bmo_p(1.0, two_e + opt.delta), opt.search);
    rep.add(Check::make("membership_worst_margin", 0.0, val.worst_margin, 0.0, Check::Relation::lt));

    const ExprPtr expr = compile_to_circle(st->martingale, opt.schedule);
    rep.add(Check::make("compiled_distribution_tv", 0.0, tv_distance(expr->distribution(), m0), 1e-12,
                        Check::Relation::le));
    rep.add(Check::make("exp_integral_identity", out.atom_sum, exp_integral(*expr, -out.c), 1e-12,
                        Check::Relation::eq));

    SearchConfig cfg = opt.search;
    cfg.certify = true;
    out.norm = circle_bmo_norm(*expr, 1.0, cfg);
    rep.add(Check::make("circle_bmo1_upper", two_e + opt.delta + 0.05, out.norm.upper.value_or(HUGE_VAL), 0.0,
                        Check::Relation::le));
    rep.add(Check::make("circle_bmo1_bracket_ordered", *out.norm.upper, out.norm.lower, 0.0, Check::Relation::le));
    return out;
}

VerifyReport verify_weak(const CorpusOptions& opt) {
    VerifyReport rep;
    Rng rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
    Worst excess;
    for (const auto& f : random_corpus(opt.seed, opt.count)) {
        const auto r2 = bmo_norm(f, 2.0, opt.search);
        if (!(r2.lower > 0.0)) continue;
        const StepFunction g = scaled(f, 1.0 / r2.lower);
        std::vector<Interval> js{{g.start(), g.end()}, r2.witness};
        for (int k = 0; k < 8; ++k) js.push_back(random_subinterval(rng, g));
        for (const auto& j : js)
            for (int k = 1; k <= 50; ++k) {
                const double lam = 0.1 * k;
                excess.take(weak_distribution(g, j, lam) - jn_weak_envelope(lam));
            }
    }
    rep.add(Check::make("weak_envelope_worst_excess", 0.0, excess.value, kFloatTol + kSearchSlack,
                        Check::Relation::le));
    return rep;
}

VerifyReport verify_lp(const CorpusOptions& opt) {
    VerifyReport rep;
    const double ps[] = {1.0, 1.5, 3.0, 4.0};
    Worst upper[4], lower_gap[4];
    for (const auto& f : random_corpus(opt.seed, opt.count)) {
        const auto r2 = bmo_norm(f, 2.0, opt.search);
        if (!(r2.lower > 0.0)) continue;
        const StepFunction g = scaled(f, 1.0 / r2.lower);
        for (int i = 0; i < 4; ++i) {
            const double p = ps[i];
            const double lp = bmo_norm(g, p, opt.search, {r2.witness}).lower;
            if (p <= 2.0) {
                upper[i].take(lp - 1.0);
            } else {
                upper[i].take(lp - lp_equiv_constant(p));
                lower_gap[i].take(1.0 - lp);
            }
        }
    }
    for (int i = 0; i < 4; ++i) {
        const std::string p = std::to_string(ps[i]).substr(0, 3);
        const double tol = kFloatTol + kSearchSlack;
        if (ps[i] <= 2.0) {
            rep.add(Check::make("norm_p" + p + "_minus_norm_2", 0.0, upper[i].value, tol, Check::Relation::le));
        } else {
            rep.add(Check::make("norm_2_minus_norm_p" + p, 0.0, lower_gap[i].value, tol, Check::Relation::le));
            rep.add(Check::make("norm_p" + p + "_minus_sharp_bound", 0.0, upper[i].value, tol, Check::Relation::le));
        }
    }
    return rep;
}

VerifyReport verify_monotone(const CorpusOptions& opt) {
    VerifyReport rep;
    Rng rng(opt.seed ^ 0xd1b54a32d192ed03ULL);
    Worst comp[2], trunc[2], rearr[2], restr[2];
    for (const auto& f : random_corpus(opt.seed, opt.count)) {
        const MonotoneMap g = random_monotone_map(rng);
        const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
        const double level = rng.uniform(*lo, *hi);
        const Interval j = random_subinterval(rng, f);
        const StepFunction fg = compose_monotone(f, g);
        const StepFunction ft = compose_monotone(f, MonotoneMap::truncation(level));
        const StepFunction fr = monotone_rearrangement(f);
        const StepFunction fj = restrict_to(f, j);
        for (int i = 0; i < 2; ++i) {
            const double p = i == 0 ? 1.0 : 2.0;
            const double before = bmo_norm(f, p, opt.search).lower;
            comp[i].take(bmo_norm(fg, p, opt.search).lower - g.lipschitz() * before);
            trunc[i].take(bmo_norm(ft, p, opt.search).lower - before);
            rearr[i].take(bmo_norm(fr, p, opt.search).lower - before);
            restr[i].take(bmo_norm(fj, p, opt.search).lower - before);
        }
    }
    const double tol = kFloatTol + kSearchSlack;
    for (int i = 0; i < 2; ++i) {
        const std::string p = i == 0 ? "1" : "2";
        rep.add(Check::make("lipschitz_composition_p" + p, 0.0, comp[i].value, tol, Check::Relation::le));
        rep.add(Check::make("truncation_p" + p, 0.0, trunc[i].value, tol, Check::Relation::le));
        rep.add(Check::make("rearrangement_p" + p, 0.0, rearr[i].value, tol, Check::Relation::le));
        rep.add(Check::make("restriction_p" + p, 0.0, restr[i].value, tol, Check::Relation::le));
    }
    return rep;
}

VerifyReport verify_rh(double q, std::optional<double> reference, const CorpusOptions& opt) {
    if (!(q > 1.0) || !std::isfinite(q)) throw InputError("verify-rh: q must be > 1");
    VerifyReport rep;
    const auto st = power_staircase(0.5, 2.0, 1.01, 1500);
    const double expected = std::pow(1.0 / (q / 2.0 + 1.0), 1.0 / q) / (2.0 / 3.0);
    rep.add(Check::make("sqrt_staircase_ratio", expected, reverse_holder_ratio(st.function, {0.0, 1.0}, q), 1e-3,
                        Check::Relation::eq));

    Rng rng(opt.seed ^ 0x94d049bb133111ebULL);
    double lowest = std::numeric_limits<double>::infinity();
    Worst highest;
    for (const auto& f : random_corpus(opt.seed, opt.count)) {
        std::vector<double> v = f.values();
        for (auto& x : v) x = std::exp(x);
        const StepFunction w(f.domain(), f.breakpoints(), std::move(v));
        for (int k = 0; k < 8; ++k) {
            const double r = reverse_holder_ratio(w, random_subinterval(rng, w), q);
            lowest = std::min(lowest, r);
            highest.take(r);
        }
    }
    rep.add(Check::make("ratio_at_least_one", 1.0, lowest, 1e-12, Check::Relation::ge));
    if (reference)
        rep.add(Check::make("ratio_within_reference", *reference, highest.value, kFloatTol, Check::Relation::le));
    return rep;
}

}  // namespace bmo
