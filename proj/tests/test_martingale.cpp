#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bmo/errors.hpp"
#include "bmo/martingale.hpp"
#include "bmo/random.hpp"
#include "oracles.hpp"

using namespace bmo;

namespace {

MartingaleTree two_leaf() {
    return MartingaleTree(make_node(Distribution::from_atoms({{-1, 0.5}, {1, 0.5}}),
                                    {{0.5, make_node(Distribution::delta(-1))}, {0.5, make_node(Distribution::delta(1))}}));
}

MartingaleTree two_leaf_points() {
    return MartingaleTree(make_node(PlanePoint{0, 1}, {{0.5, make_node(PlanePoint{-1, 1})}, {0.5, make_node(PlanePoint{1, 1})}}));
}

// Random point martingale with leaves on the parabola, built bottom-up.
MartingaleNodePtr random_point_node(Rng& rng, int depth) {
    if (depth == 0) {
        const double u = rng.uniform(-2, 2);
        return make_node(PlanePoint{u, u * u});
    }
    const int k = static_cast<int>(rng.integer(2, 3));
    std::vector<Branch> kids;
    std::vector<double> w;
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += w.emplace_back(rng.uniform(0.1, 1.0));
    PlanePoint bar{0, 0};
    for (int i = 0; i < k; ++i) {
        auto child = random_point_node(rng, depth - 1 - static_cast<int>(rng.integer(0, 1) * (depth > 1)));
        const auto& pt = std::get<PlanePoint>(child->value);
        bar.x1 += w[static_cast<std::size_t>(i)] / total * pt.x1;
        bar.x2 += w[static_cast<std::size_t>(i)] / total * pt.x2;
        kids.push_back({w[static_cast<std::size_t>(i)] / total, std::move(child)});
    }
    return make_node(bar, std::move(kids));
}

// Leaf curve parameters below a node, weighted by path probability.
void leaf_atoms(const MartingaleNode& n, double mass, std::vector<std::pair<double, double>>& out) {
    if (n.is_leaf()) {
        out.emplace_back(std::get<PlanePoint>(n.value).x1, mass);
        return;
    }
    for (const auto& b : n.children) leaf_atoms(*b.node, mass * b.prob, out);
}

void check_lift(const MartingaleNode& pts, const MartingaleNode& meas) {
    std::vector<std::pair<double, double>> expected;
    leaf_atoms(pts, 1.0, expected);
    const auto& d = std::get<Distribution>(meas.value);
    CHECK(oracle::tv(oracle::atoms_of(d), expected) < 1e-10);
    double m1 = 0.0, m2 = 0.0;
    for (const auto& a : d.atoms()) m1 += a.weight * a.value, m2 += a.weight * a.value * a.value;
    const auto& x = std::get<PlanePoint>(pts.value);
    CHECK(std::abs(m1 - x.x1) < 1e-10);
    CHECK(std::abs(m2 - x.x2) < 1e-10);
    for (std::size_t i = 0; i < pts.children.size(); ++i) check_lift(*pts.children[i].node, *meas.children[i].node);
}

}  // namespace

TEST_SUITE("martingale") {

TEST_CASE("structural validation") {
    CHECK_THROWS_AS(MartingaleTree(make_node(Distribution::from_atoms({{-1, 0.5}, {1, 0.5}}),
                                             {{0.5, make_node(Distribution::delta(-1))},
                                              {0.4, make_node(Distribution::delta(1))}})),
                    InputError);
    CHECK_THROWS_AS(MartingaleTree(make_node(Distribution::from_atoms({{-1, 0.5}, {1, 0.5}}),
                                             {{0.5, make_node(Distribution::delta(-1))},
                                              {0.5, make_node(Distribution::delta(2))}})),
                    InputError);
    CHECK_THROWS_AS(MartingaleTree(make_node(Distribution::from_atoms({{-1, 0.5}, {1, 0.5}}))), InputError);
    CHECK_THROWS_AS(MartingaleTree(make_node(PlanePoint{0, 1}, {{0.5, make_node(PlanePoint{-1, 1})},
                                                                {0.5, make_node(PlanePoint{1, 2})}})),
                    InputError);
    CHECK(two_leaf().depth() == 1);
}

TEST_CASE("two-leaf measure martingale against BmoP(2, eps)") {
    for (double eps : {0.5, 0.9, 0.999, 1.0, 1.001, 1.05, 1.5}) {
        const auto r = validate_membership(two_leaf(), MembershipDomain::bmo_p(2, eps), {});
        CHECK(r.pass == (eps > 1.0));
        CHECK(std::abs(r.worst_margin - (1.0 - eps * eps)) < 1e-9);
        if (!r.pass) CHECK(r.offending_path.empty());
    }
}

TEST_CASE("two-leaf point martingale against the parabola strip") {
    CHECK_FALSE(validate_membership(two_leaf_points(), MembershipDomain::parabola_strip(1.0), {}).pass);
    const auto ok = validate_membership(two_leaf_points(), MembershipDomain::parabola_strip(1.01), {});
    CHECK(ok.pass);
    CHECK(ok.worst_margin == doctest::Approx(1.0 - 1.01 * 1.01));
}

TEST_CASE("lift reproduces barycenters") {
    const auto m = lift(two_leaf_points(), BoundaryCurve::parabola());
    CHECK(tv_distance(std::get<Distribution>(m.root().value), Distribution::from_atoms({{-1, 0.5}, {1, 0.5}})) < 1e-15);
    const auto single = lift(MartingaleTree(make_node(PlanePoint{2, 4})), BoundaryCurve::parabola());
    CHECK(std::get<Distribution>(single.root().value).is_delta());
    CHECK_THROWS_AS(lift(MartingaleTree(make_node(PlanePoint{2, 5})), BoundaryCurve::parabola()), InputError);

    Rng rng(6);
    for (int trial = 0; trial < 25; ++trial) {
        const MartingaleTree pts(random_point_node(rng, static_cast<int>(rng.integer(1, 4))));
        const auto meas = lift(pts, BoundaryCurve::parabola());
        check_lift(pts.root(), meas.root());
    }
}

TEST_CASE("compiled distribution equals the root measure") {
    const auto e = compile_to_circle(two_leaf());
    CHECK(tv_distance(e->distribution(), Distribution::from_atoms({{-1, 0.5}, {1, 0.5}})) < 1e-12);

    const MartingaleTree three(make_node(Distribution::from_atoms({{0, 0.25}, {1, 0.25}, {2, 0.5}}),
                                         {{0.25, make_node(Distribution::delta(0))},
                                          {0.25, make_node(Distribution::delta(1))},
                                          {0.5, make_node(Distribution::delta(2))}}));
    const auto e3 = compile_to_circle(three, {{0.8, 5}});
    CHECK(oracle::tv(oracle::atoms_of(e3->distribution()), {{0, 0.25}, {1, 0.25}, {2, 0.5}}) < 1e-12);
    CHECK(oracle::tv(oracle::atoms_of(query_distribution(*e3, {-0.5, 0.5})), {{0, 0.25}, {1, 0.25}, {2, 0.5}}) < 1e-12);

    const auto st = log_staircase(1.5, 5);
    const auto es = compile_to_circle(st.martingale);
    const auto& root = std::get<Distribution>(st.martingale.root().value);
    CHECK(tv_distance(es->distribution(), root) < 1e-12);
    double sum = 0.0;
    for (const auto& a : root.atoms()) sum += a.weight * std::exp(0.7 * a.value);
    CHECK(std::abs(exp_integral(*es, 0.7) - sum) < 1e-12);

    // Point trees compile after lifting; the barycenter comes back.
    const auto lifted = lift(two_leaf_points(), BoundaryCurve::parabola());
    const auto ep = compile_to_circle(lifted);
    CHECK(std::abs(dist_functional(ep->distribution(), Functional::barycenter())) < 1e-10);
    CHECK(std::abs(dist_functional(ep->distribution(), Functional::central_moment(2)) - 1.0) < 1e-10);
}

TEST_CASE("log staircase values and martingale") {
    const auto st = log_staircase(std::numbers::e, 1);
    REQUIRE(st.function.pieces() == 2);
    CHECK(st.function.values()[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(st.function.values()[1] == doctest::Approx(-0.418023).epsilon(1e-6));
    CHECK(st.function.piece_length(1) == doctest::Approx(1.0 - 1.0 / std::numbers::e));

    // Piece values are the exact averages of log x.
    const double lam = 1.3;
    const auto s = log_staircase(lam, 12);
    for (std::size_t i = 1; i < s.function.pieces(); ++i) {
        const double a = s.function.breakpoints()[i], b = s.function.breakpoints()[i + 1];
        const double avg = (b * std::log(b) - b - a * std::log(a) + a) / (b - a);
        CHECK(s.function.values()[i] == doctest::Approx(avg).epsilon(1e-12));
    }
    CHECK(tv_distance(std::get<Distribution>(s.martingale.root().value), distribution(s.function)) < 1e-12);
    CHECK_THROWS_AS(log_staircase(1.0, 3), InputError);
}

TEST_CASE("staircase martingale stays in the BMO_1 domain") {
    const double delta = 0.3;
    const auto st = log_staircase(std::exp(delta / 5.0), 50);
    const auto r = validate_membership(st.martingale, MembershipDomain::bmo_p(1, 2.0 / std::numbers::e + delta), {});
    CHECK(r.pass);
    CHECK(r.worst_margin < 0.0);
}

TEST_CASE("truncated staircase lies on the splitting segment") {
    const double lam = 1.2;
    const int big_n = 30, n = 7;
    const auto st = log_staircase(lam, big_n);
    const double cut = std::pow(lam, -n);
    const auto tail = distribution(st.function, {0, cut});
    const auto at_cut = distribution(psi_truncated(lam, big_n, n, cut), {0, cut});
    CHECK(tv_distance(at_cut, tail) < 1e-12);
    const double avg_n = (std::log(cut) * cut - cut - std::log(cut * lam) * cut * lam + cut * lam) / (cut - cut * lam);
    for (double s : {1.3 * cut, 3.0 * cut, 40.0 * cut}) {
        const auto f = psi_truncated(lam, big_n, n, s);
        const auto d = distribution(f, {0, s});
        const auto mixed = dist_mix(tail, Distribution::delta(avg_n), 1.0 - cut / s);
        CHECK(tv_distance(d, mixed) < 1e-10);
        CHECK(std::abs(dist_functional(d, Functional::central_moment(1)) -
                       dist_functional(mixed, Functional::central_moment(1))) < 1e-10);
    }
    CHECK_THROWS_AS(psi_truncated(lam, big_n, n, 0.5 * cut), InputError);
}

TEST_CASE("power staircase") {
    const auto flat = power_staircase(0.0, 2.0, 1.1, 10);
    for (double v : flat.function.values()) CHECK(v == doctest::Approx(1.0));
    const auto r = validate_membership(flat.martingale, MembershipDomain::muckenhoupt_ap(2, 1.01), {});
    CHECK(r.pass);
    const auto ps = power_staircase(0.5, 2.0, 1.2, 20);
    CHECK(tv_distance(std::get<Distribution>(ps.martingale.root().value), distribution(ps.function)) < 1e-12);
    CHECK_THROWS_AS(power_staircase(-1.5, 2.0, 1.1, 10), InputError);
    CHECK_THROWS_AS(power_staircase(1.5, 2.0, 1.1, 10), InputError);
}

}  // TEST_SUITE
