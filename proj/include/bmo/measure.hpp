#pragma once

// Exact calculus for piecewise-constant functions on an interval or on the
// unit circle, and for finite atomic probability distributions.

#include <span>
#include <string>
#include <vector>

namespace bmo {

inline constexpr double kIdentityTol = 1e-12;  // comparisons of exact identities
inline constexpr double kMergeTol = 1e-12;     // atoms closer than this are merged

struct Interval {
    double left = 0.0;
    double right = 0.0;

    double length() const { return right - left; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

// Either a finite interval [a, b] or the unit circle (period 1).
class DomainShape {
public:
    enum class Kind { interval, circle };

    static DomainShape interval(double a, double b);
    static DomainShape circle();

    Kind kind() const { return kind_; }
    bool is_circle() const { return kind_ == Kind::circle; }
    double a() const { return a_; }
    double b() const { return b_; }

    friend bool operator==(const DomainShape&, const DomainShape&) = default;

private:
    DomainShape(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

    Kind kind_;
    double a_;
    double b_;
};

struct Atom {
    double value = 0.0;
    double weight = 0.0;
};

// Finite atomic probability measure on the line. Atoms are kept sorted by
// value; values within kMergeTol are merged and weights are strictly positive.
class Distribution {
public:
    Distribution() = default;

    // Validates and normalizes: weights must be nonnegative and finite with a
    // positive sum; zero-weight atoms are dropped. With `require_unit_mass`
    // the raw weights must already sum to 1 within 1e-12 and are kept as given.
    static Distribution from_atoms(std::vector<Atom> atoms, bool require_unit_mass = false);
    static Distribution delta(double value);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool is_delta() const { return atoms_.size() == 1; }
    double min_value() const { return atoms_.front().value; }
    double max_value() const { return atoms_.back().value; }

private:
    std::vector<Atom> atoms_;
};

// Piecewise-constant function. Piece i is [breakpoints[i], breakpoints[i+1]).
// On the circle the breakpoints span exactly one period starting anywhere;
// the function is evaluated through its periodic realization.
class StepFunction {
public:
    StepFunction(DomainShape domain, std::vector<double> breakpoints, std::vector<double> values);

    static StepFunction constant(DomainShape domain, double value);

    const DomainShape& domain() const { return domain_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t pieces() const { return values_.size(); }
    double start() const { return breakpoints_.front(); }
    double end() const { return breakpoints_.back(); }
    double carrier_length() const { return end() - start(); }
    double piece_length(std::size_t i) const { return breakpoints_[i + 1] - breakpoints_[i]; }
    bool is_circle() const { return domain_.is_circle(); }
    bool is_positive() const;

    double value_at(double x) const;

    // Throws InputError unless `j` is a valid query for this function.
    void check_query(const Interval& j) const;

    // Length of j covered by each piece (long circle arcs accumulate whole
    // periods). Sums to j.length().
    std::vector<double> overlap_lengths(const Interval& j) const;

private:
    DomainShape domain_;
    std::vector<double> breakpoints_;
    std::vector<double> values_;
};

// Functionals of a distribution evaluated as exact finite sums.
struct Functional {
    enum class Kind {
        barycenter,
        central_moment,  // param = p >= 1
        exp_integral,    // param = C
        tail_mass,       // param = lambda > 0
        power_mean,      // param = q != 0, positive atoms
        ap_form,         // param = p > 1, positive atoms
        a_inf_form,      // positive atoms
    };

    Kind kind = Kind::barycenter;
    double param = 0.0;

    static Functional barycenter() { return {Kind::barycenter, 0.0}; }
    static Functional central_moment(double p) { return {Kind::central_moment, p}; }
    static Functional exp_integral(double c) { return {Kind::exp_integral, c}; }
    static Functional tail_mass(double lambda) { return {Kind::tail_mass, lambda}; }
    static Functional power_mean(double q) { return {Kind::power_mean, q}; }
    static Functional ap_form(double p) { return {Kind::ap_form, p}; }
    static Functional a_inf_form() { return {Kind::a_inf_form, 0.0}; }

    void validate() const;
    bool needs_positive_atoms() const;
    std::string name() const;
};

// Evaluates `fn` on the measure sum_i weights[i] * delta(values[i]), which is
// normalized internally. Zero weights are ignored.
double evaluate(const Functional& fn, std::span<const double> values, std::span<const double> weights);

double dist_functional(const Distribution& d, const Functional& fn);

double average(const StepFunction& f, const Interval& j);
double central_p_moment(const StepFunction& f, const Interval& j, double p);
Distribution distribution(const StepFunction& f, const Interval& j);
Distribution distribution(const StepFunction& f);  // over one carrier

// Affine copy of an interval-domain function onto j.
StepFunction transfer(const StepFunction& f, const Interval& j);

// Nondecreasing piecewise-linear map through the knots, extended linearly
// beyond the outer knots with the end slopes.
class MonotoneMap {
public:
    MonotoneMap(std::vector<double> xs, std::vector<double> ys);

    static MonotoneMap identity();
    static MonotoneMap truncation(double level);  // x -> min(x, level)

    double operator()(double x) const;
    double lipschitz() const;
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

StepFunction compose_monotone(const StepFunction& f, const MonotoneMap& g);
StepFunction monotone_rearrangement(const StepFunction& f);

Distribution dist_mix(const Distribution& d0, const Distribution& d1, double alpha);
double tv_distance(const Distribution& d0, const Distribution& d1);

}  // namespace bmo
