#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bmo/constants.hpp"
#include "bmo/errors.hpp"
#include "oracles.hpp"

using namespace bmo;

TEST_SUITE("constants") {

TEST_CASE("closed forms") {
    CHECK(std::abs(c3p(1) - 2.0 / std::numbers::e) < 1e-12);
    CHECK(std::abs(c3p(2) - 1.0) < 1e-10);
    CHECK(std::abs(lp_equiv_constant(4) - std::pow(12.0, 0.25)) < 1e-12);
    const auto cj = classic_jn_constants();
    CHECK(cj.c1 == doctest::Approx(0.5 * std::exp(4.0 / std::numbers::e)).epsilon(1e-15));
    CHECK(cj.c1 == doctest::Approx(2.17792).epsilon(1e-5));
    CHECK(cj.c2 == doctest::Approx(2.0 / std::numbers::e).epsilon(1e-15));
}

TEST_CASE("quadrature agrees with Simpson") {
    for (double p : {1.0, 1.5, 2.0, 3.0, 5.0}) {
        // t^{p-1} has an integrable kink at 0 for p < 2; substitute t = s^2.
        const auto g = [p](double s) { return 2.0 * std::pow(s, 2.0 * p - 1.0) * std::exp(s * s); };
        CHECK(std::abs(c3p_integral(p) - oracle::simpson(g, 0.0, 1.0, 20000)) < 1e-10);
    }
}

TEST_CASE("c3p is nondecreasing") {
    double prev = c3p(1.0);
    for (double p = 1.05; p <= 8.0; p += 0.05) {
        const double v = c3p(p);
        CHECK(v >= prev - 1e-14);
        prev = v;
    }
}

TEST_CASE("weak envelope branches") {
    for (double at : {1.0, 2.0}) {
        const double h = 1e-13;
        CHECK(std::abs(jn_weak_envelope(at - h) - jn_weak_envelope(at + h)) < 1e-12);
    }
    CHECK(jn_weak_envelope(0.5) == 1.0);
    CHECK(jn_weak_envelope(1.5) == doctest::Approx(1.0 / 2.25));
    CHECK(jn_weak_envelope(3.0) == doctest::Approx(std::exp(2.0) / 4.0 * std::exp(-3.0)));
    CHECK(jn_weak_envelope(3.0) == doctest::Approx(0.0919699).epsilon(1e-6));
}

TEST_CASE("Bellman values") {
    CHECK(bellman_value(BellmanProblem::lp_moment(2)) == doctest::Approx(1.0));
    CHECK(bellman_value(BellmanProblem::lp_moment(3)) == doctest::Approx(3.0));
    CHECK(bellman_value(BellmanProblem::weak_type(2)) == doctest::Approx(0.25));
    CHECK_THROWS_AS(bellman_value(BellmanProblem::weak_type(0.5)), InputError);
    CHECK_THROWS_AS(c3p(0.5), InputError);
    CHECK_THROWS_AS(lp_equiv_constant(1.5), InputError);
}

}  // TEST_SUITE
