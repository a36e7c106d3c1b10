// One line per acceptance criterion: "criterion N: PASS|FAIL (seconds) detail".
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "bmo/constants.hpp"
#include "bmo/martingale.hpp"
#include "bmo/random.hpp"
#include "bmo/search.hpp"
#include "bmo/verify.hpp"
#include "oracles.hpp"

using namespace bmo;

namespace {

constexpr double kInvE2 = 2.0 / std::numbers::e;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

bool run_criterion(int id, double time_limit, const std::function<void(Outcome&)>& body) {
    Outcome o;
    o.detail.precision(10);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > time_limit) {
        o.pass = false;
        o.detail << " [over time limit " << time_limit << " s]";
    }
    std::printf("criterion %d: %s (%.2f s)%s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.str().c_str());
    std::fflush(stdout);
    return o.pass;
}

StepFunction sign_step() { return {DomainShape::interval(-1, 1), {-1, 0, 1}, {-1, 1}}; }

void exactness(Outcome& o) {
    const auto f = sign_step();
    for (double p : {1.0, 2.0, 3.0}) {
        const double v = bmo_norm(f, p, {}).lower;
        o.detail << " p=" << p << ":" << v;
        o.require(std::abs(v - 1.0) < 1e-12, "bmo_norm = 1");
    }
    const double w = weak_distribution(f, {-1, 1}, 1.0);
    o.detail << " weak(1)=" << w;
    o.require(std::abs(w - 1.0) < 1e-12, "weak_distribution = 1");
}

void interior_optimum(Outcome& o) {
    const StepFunction f(DomainShape::interval(0, 1), {0, 0.75, 1}, {0, 1});
    for (double p : {1.0, 2.0}) {
        const auto r = bmo_norm(f, p, {});
        o.detail << " p=" << p << ":" << r.lower << " |J|=" << r.witness.length();
        o.require(std::abs(r.lower - 0.5) < 1e-6, "lower = 0.5");
        o.require(std::abs(r.witness.length() - 0.5) < 1e-5, "witness length 1/2");
    }
    const double bp = oracle::breakpoint_scan(f, 1.0);
    o.detail << " breakpoint-pairs(p=1)=" << bp;
    o.require(std::abs(bp - 0.375) < 1e-12, "breakpoint scan = 0.375");
}

void constant_formulas(Outcome& o) {
    o.detail << " c3p(1)=" << c3p(1) << " c3p(2)=" << c3p(2) << " lp(4)=" << lp_equiv_constant(4);
    o.require(std::abs(c3p(1) - kInvE2) < 1e-12, "c3p(1) = 2/e");
    o.require(std::abs(c3p(2) - 1.0) < 1e-10, "c3p(2) = 1");
    o.require(std::abs(lp_equiv_constant(4) - std::pow(12.0, 0.25)) < 1e-12, "lp_equiv(4) = 12^(1/4)");
    for (double at : {1.0, 2.0}) {
        const double gap = std::abs(jn_weak_envelope(std::nextafter(at, 0.0)) - jn_weak_envelope(std::nextafter(at, 3.0)));
        o.detail << " jump@" << at << "=" << gap;
        o.require(gap < 1e-12, "envelope continuity");
    }
}

void staircase(Outcome& o) {
    const auto st = log_staircase(1.02, 400);
    const double v = bmo_norm(st.function, 1.0, {}).lower;
    const double grid = oracle::log_oscillation_grid(100000);
    o.detail << " norm=" << v << " oracle=" << grid << " 2/e=" << kInvE2;
    o.require(std::abs(v - kInvE2) < 0.02, "staircase within 0.02 of 2/e");
    o.require(std::abs(grid - kInvE2) < 1e-4, "grid oracle within 1e-4 of 2/e");
    o.require(v <= grid + 1e-9, "staircase does not exceed the log oscillation");
}

void gluing(Outcome& o) {
    Rng rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto e0 = random_expr(rng, static_cast<int>(rng.integer(0, 2)));
        const auto e1 = random_expr(rng, static_cast<int>(rng.integer(0, 2)));
        const double alpha = rng.uniform(0.05, 0.95), lam = rng.uniform(0.3, 0.95);
        const int k = static_cast<int>(rng.integer(1, 12));
        const auto g = glue_node(e0, e1, alpha, lam, k);
        const auto h = hom_node(e0, lam, k);
        const auto mix = dist_mix(e0->distribution(), e1->distribution(), alpha);
        worst = std::max({worst, tv_distance(query_distribution(*g, g->carrier()), mix), tv_distance(g->distribution(), mix),
                          tv_distance(query_distribution(*h, h->carrier()), e0->distribution())});
    }
    o.detail << " worst TV=" << worst;
    o.require(worst < 1e-12, "TV = 0 on 100 instances");

    const StepFunction s(DomainShape::interval(-0.5, 0.5), {-0.5, 0, 0.5}, {-1, 1});
    double prev = INFINITY;
    for (double lam : {0.5, 0.9, 0.99}) {
        const auto e = periodize(hom_node(leaf(s), lam, default_levels(lam)));
        const double v = circle_bmo_norm(*e, 2, {}).lower;
        o.detail << " lambda_hom=" << lam << ":" << v;
        o.require(v <= prev + 1e-12, "non-increasing in lambda_hom");
        prev = v;
    }
    o.require(prev <= 1.1, "<= 1.1 at 0.99");
}

void membership(Outcome& o) {
    const MartingaleTree m(make_node(Distribution::from_atoms({{-1, 0.5}, {1, 0.5}}),
                                     {{0.5, make_node(Distribution::delta(-1))}, {0.5, make_node(Distribution::delta(1))}}));
    for (double eps : {0.8, 1.0, 1.0 + 1e-6, 1.05, 1.3}) {
        const auto r = validate_membership(m, MembershipDomain::bmo_p(2, eps), {});
        const double slack = -r.worst_margin;
        o.detail << " eps=" << eps << ":" << (r.pass ? "pass" : "fail") << " slack=" << slack;
        o.require(r.pass == (eps > 1.0), "pass iff eps > 1");
        o.require(std::abs(slack - (eps * eps - 1.0)) < 1e-9, "slack = eps^2 - 1");
    }
}

void ap_suite(Outcome& o) {
    const StepFunction w(DomainShape::interval(0, 1), {0, 0.5, 1}, {2, 0.5});
    const double a2 = ap_constant(w, 2, {}).lower;
    o.detail << " two-step=" << a2;
    o.require(std::abs(a2 - 25.0 / 16.0) < 1e-9, "two-step A2 = 25/16");

    const auto ps = power_staircase(0.5, 2.0, 1.05, 200);
    const double stair = ap_constant(ps.function, 2, {}).lower;
    o.detail << " staircase=" << stair;
    o.require(std::abs(stair / (4.0 / 3.0) - 1.0) < 0.02, "staircase A2 within 2% of 4/3");

    const auto fine = power_staircase(0.5, 2.0, 1.01, 1500);
    const double rh = reverse_holder_ratio(fine.function, {fine.function.start(), fine.function.end()}, 2.0);
    const double closed = std::sqrt(1.0 / (1.0 + 2.0 * 0.5)) * (1.0 + 0.5);
    o.detail << " rh=" << rh << " closed=" << closed;
    o.require(std::abs(rh - 1.06066) < 1e-3, "reverse Hoelder ratio within 1e-3 of 1.06066");
}

void transference(Outcome& o) {
    JnOptions jo;
    jo.delta = 0.3;
    jo.m = 2.0;
    const auto r = verify_jn(jo);
    o.detail << " N=" << r.depth << " lambda=" << r.lambda << " c=" << r.c << " atom_sum=" << r.atom_sum
             << " bracket=[" << r.norm.lower << "," << r.norm.upper.value_or(NAN) << "]";
    o.require(std::abs(r.lambda - std::exp(0.3 / 5.0)) < 1e-15, "lambda = e^(delta/5)");
    o.require(std::abs(r.c - kInvE2 / (kInvE2 + 0.3)) < 1e-15, "c = (2/e)/(2/e + delta)");
    for (const auto& c : r.report.checks) {
        o.require(c.pass, c.name);
    }
    o.require(r.depth <= 60, "N <= 60");
    o.require(r.atom_sum > 2.0, "atom sum > 2");
    o.require(r.norm.upper && *r.norm.upper <= kInvE2 + 0.3 + 0.05, "certified upper <= 2/e + delta + 0.05");
}

void inequality_suites(Outcome& o) {
    CorpusOptions co;
    co.seed = 0;
    co.count = 100;
    for (const auto& [name, rep] : {std::pair{"weak", verify_weak(co)}, std::pair{"lp", verify_lp(co)},
                                    std::pair{"monotone", verify_monotone(co)}}) {
        int failed = 0;
        for (const auto& c : rep.checks) failed += !c.pass;
        o.detail << " " << name << ":" << rep.checks.size() - static_cast<std::size_t>(failed) << "/" << rep.checks.size();
        o.require(rep.pass(), std::string(name) + " suite");
    }
    // Envelope constants the weak suite compares against, from their formulas.
    for (double lam : {0.5, 1.5, 2.0, 4.0}) {
        const double direct = lam <= 1 ? 1.0 : lam <= 2 ? 1.0 / (lam * lam) : std::exp(2.0) / 4.0 * std::exp(-lam);
        o.require(std::abs(jn_weak_envelope(lam) - direct) < 1e-15, "envelope formula");
    }
    o.require(std::abs(lp_equiv_constant(3) - std::cbrt(3.0)) < 1e-12, "lp_equiv(3) = 3^(1/3)");
}

}  // namespace

int main() {
    bool ok = true;
    ok &= run_criterion(1, 1.0, exactness);
    ok &= run_criterion(2, 1.0, interior_optimum);
    ok &= run_criterion(3, 1.0, constant_formulas);
    ok &= run_criterion(4, 120.0, staircase);
    ok &= run_criterion(5, 300.0, gluing);
    ok &= run_criterion(6, 1.0, membership);
    ok &= run_criterion(7, 120.0, ap_suite);
    ok &= run_criterion(8, 1800.0, transference);
    ok &= run_criterion(9, 600.0, inequality_suites);
    return ok ? 0 : 1;
}
