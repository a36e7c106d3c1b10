#include <doctest.h>

#include <cmath>

#include "bmo/errors.hpp"
#include "bmo/measure.hpp"
#include "bmo/random.hpp"
#include "oracles.hpp"

using namespace bmo;

namespace {

StepFunction sign_step() { return {DomainShape::interval(-1, 1), {-1, 0, 1}, {-1, 1}}; }
StepFunction split_step() { return {DomainShape::interval(0, 1), {0, 0.75, 1}, {0, 1}}; }

}  // namespace

TEST_SUITE("measure") {

TEST_CASE("step function construction is validated") {
    CHECK_THROWS_AS(StepFunction(DomainShape::interval(0, 1), {0, 0.5}, {1, 2}), InputError);
    CHECK_THROWS_AS(StepFunction(DomainShape::interval(0, 1), {0, 0.6, 0.5, 1}, {1, 2, 3}), InputError);
    CHECK_THROWS_AS(StepFunction(DomainShape::interval(0, 1), {0, 1}, {NAN}), InputError);
    CHECK_THROWS_AS(StepFunction(DomainShape::circle(), {0, 0.5, 2}, {1, 2}), InputError);
    CHECK_THROWS_AS(DomainShape::interval(1, 1), InputError);
}

TEST_CASE("averages and moments of the sign step") {
    const auto f = sign_step();
    CHECK(average(f, {-1, 1}) == doctest::Approx(0.0));
    CHECK(central_p_moment(f, {-1, 1}, 2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(average(f, {0, 1}) == 1.0);
    CHECK(central_p_moment(f, {0, 1}, 1) == 0.0);
    CHECK(central_p_moment(split_step(), {0.5, 1}, 1) == doctest::Approx(0.5));
    CHECK_THROWS_AS(average(f, {-2, 1}), InputError);
    CHECK_THROWS_AS(average(f, {0.5, 0.5}), InputError);
    CHECK_THROWS_AS(central_p_moment(f, {-1, 1}, 0.5), InputError);
}

TEST_CASE("distribution examples") {
    const auto d = distribution(sign_step(), {-1, 1});
    REQUIRE(d.size() == 2);
    CHECK(d.atoms()[0].value == -1.0);
    CHECK(d.atoms()[0].weight == doctest::Approx(0.5));
    CHECK(distribution(sign_step(), {0, 1}).is_delta());
    const auto s = distribution(split_step(), {0.5, 1});
    CHECK(oracle::tv(oracle::atoms_of(s), {{0, 0.5}, {1, 0.5}}) < 1e-15);
}

TEST_CASE("averages agree with a midpoint Riemann sum on random instances") {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const auto f = random_step_function(rng, static_cast<int>(rng.integer(1, 12)), DomainShape::interval(0, 1));
        double a = rng.uniform(), b = rng.uniform();
        if (a > b) std::swap(a, b);
        if (b - a < 0.05) continue;
        const double p = 1.0 + 2.0 * rng.uniform();
        CHECK(std::abs(average(f, {a, b}) - oracle::riemann_average(f, a, b, 200000)) < 1e-4);
        CHECK(std::abs(central_p_moment(f, {a, b}, p) - oracle::riemann_moment(f, a, b, p, 200000)) < 1e-4);
    }
}

TEST_CASE("circle arcs use the periodic realization") {
    const StepFunction c(DomainShape::circle(), {-0.5, 0.0, 0.5}, {-1, 1});
    CHECK(average(c, {0.0, 0.5}) == 1.0);
    CHECK(average(c, {0.5, 1.0}) == -1.0);
    CHECK(average(c, {0.25, 3.25}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(central_p_moment(c, {-3.0, 4.0}, 2) == doctest::Approx(1.0));
}

TEST_CASE("transfer preserves the distribution exactly") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = random_step_function(rng, static_cast<int>(rng.integer(1, 9)), DomainShape::interval(-1, 2));
        const double a = rng.uniform(-5, 5);
        const Interval j{a, a + rng.uniform(0.01, 3.0)};
        const auto g = transfer(f, j);
        CHECK(tv_distance(distribution(g), distribution(f)) < 1e-12);
    }
    const auto t = transfer(sign_step(), {0, 1});
    CHECK(t.breakpoints() == std::vector<double>{0, 0.5, 1});
    CHECK_THROWS_AS(transfer(StepFunction::constant(DomainShape::circle(), 1), {0, 1}), InputError);
}

TEST_CASE("monotone maps") {
    CHECK_THROWS_AS(MonotoneMap({0, 1}, {1, 0}), InputError);
    CHECK_THROWS_AS(MonotoneMap({1, 0}, {0, 1}), InputError);
    const auto f = sign_step();
    const auto id = compose_monotone(f, MonotoneMap::identity());
    CHECK(id.values() == f.values());
    const auto t = compose_monotone(f, MonotoneMap::truncation(0));
    CHECK(t.values() == std::vector<double>{-1, 0});
    const MonotoneMap g({0, 1, 2}, {0, 3, 3.5});
    CHECK(g.lipschitz() == 3.0);
    CHECK(g(-1) == -3.0);
    CHECK(g(4) == 4.5);
}

TEST_CASE("rearrangement sorts pieces and keeps the distribution") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto f = random_step_function(rng, static_cast<int>(rng.integer(1, 10)), DomainShape::interval(0, 1));
        const auto r = monotone_rearrangement(f);
        CHECK(std::is_sorted(r.values().begin(), r.values().end()));
        CHECK(tv_distance(distribution(r), distribution(f)) < 1e-12);
    }
    const auto s = monotone_rearrangement(sign_step());
    CHECK(s.values() == sign_step().values());
    CHECK(s.breakpoints() == sign_step().breakpoints());
}

TEST_CASE("functionals of distributions") {
    const auto pm = Distribution::from_atoms({{-1, 0.5}, {1, 0.5}});
    CHECK(dist_functional(pm, Functional::central_moment(2)) == 1.0);
    const auto w = Distribution::from_atoms({{2, 0.5}, {0.5, 0.5}});
    CHECK(dist_functional(w, Functional::ap_form(2)) == doctest::Approx(25.0 / 16.0).epsilon(1e-15));
    CHECK(dist_functional(Distribution::delta(0.3), Functional::exp_integral(2)) == doctest::Approx(std::exp(0.6)));
    CHECK(dist_functional(pm, Functional::tail_mass(1.0)) == 1.0);
    CHECK_THROWS_AS(dist_functional(pm, Functional::ap_form(2)), InputError);
    CHECK_THROWS_AS(dist_functional(pm, Functional::power_mean(2)), InputError);
    CHECK_THROWS_AS(Distribution::from_atoms({{0, 0.5}, {1, 0.4}}, true), InputError);
    CHECK_THROWS_AS(Distribution::from_atoms({{0, -0.5}, {1, 1.5}}), InputError);
}

TEST_CASE("mixing") {
    const auto d = dist_mix(Distribution::delta(0), Distribution::delta(1), 0.25);
    CHECK(oracle::tv(oracle::atoms_of(d), {{0, 0.75}, {1, 0.25}}) < 1e-15);
    CHECK(tv_distance(dist_mix(d, Distribution::delta(7), 0.0), d) == 0.0);
    CHECK(tv_distance(d, d) == 0.0);
    CHECK_THROWS_AS(dist_mix(d, d, 1.5), InputError);

    // Both groupings of a three-way mixture agree.
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_distribution(rng, static_cast<int>(rng.integer(1, 5)));
        const auto b = random_distribution(rng, static_cast<int>(rng.integer(1, 5)));
        const auto c = random_distribution(rng, static_cast<int>(rng.integer(1, 5)));
        const double wa = rng.uniform(0.05, 0.9), wb = rng.uniform(0.05, 1.0 - wa), wc = 1.0 - wa - wb;
        const auto left = dist_mix(dist_mix(a, b, wb / (wa + wb)), c, wc);
        const auto right = dist_mix(a, dist_mix(b, c, wc / (wb + wc)), wb + wc);
        CHECK(tv_distance(left, right) < 1e-12);
        CHECK(std::abs(tv_distance(left, right) - oracle::tv(oracle::atoms_of(left), oracle::atoms_of(right))) < 1e-12);
    }
}

}  // TEST_SUITE
