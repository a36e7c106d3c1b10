#include "bmo/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bmo/errors.hpp"

namespace bmo {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

bool finite(double x) { return std::isfinite(x); }

// |x|^p with the common exponents evaluated without pow.
double abs_pow(double x, double p) {
    x = std::fabs(x);
    if (p == 1.0) return x;
    if (p == 2.0) return x * x;
    if (p == 3.0) return x * x * x;
    return std::pow(x, p);
}

}  // namespace

DomainShape DomainShape::interval(double a, double b) {
    if (!finite(a) || !finite(b) || !(a < b))
        throw InputError("domain: interval needs finite a < b, got [" + fmt(a) + ", " + fmt(b) + "]");
    return {Kind::interval, a, b};
}

DomainShape DomainShape::circle() { return {Kind::circle, 0.0, 1.0}; }

// ---------------------------------------------------------------- Distribution

Distribution Distribution::from_atoms(std::vector<Atom> atoms, bool require_unit_mass) {
    double total = 0.0;
    for (const auto& a : atoms) {
        if (!finite(a.value)) throw InputError("distribution: atom value must be finite");
        if (!finite(a.weight) || a.weight < 0.0)
            throw InputError("distribution: atom weight must be finite and nonnegative, got " + fmt(a.weight));
        total += a.weight;
    }
    if (!(total > 0.0)) throw InputError("distribution: total weight must be positive");
    if (require_unit_mass && std::fabs(total - 1.0) > 1e-12)
        throw InputError("distribution: weights sum to " + fmt(total) + ", expected 1");

    std::erase_if(atoms, [](const Atom& a) { return a.weight == 0.0; });
    std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });

    Distribution d;
    for (const auto& a : atoms) {
        if (!d.atoms_.empty() && a.value - d.atoms_.back().value <= kMergeTol) {
            auto& last = d.atoms_.back();
            const double w = last.weight + a.weight;
            last.value = (last.value * last.weight + a.value * a.weight) / w;
            last.weight = w;
        } else {
            d.atoms_.push_back(a);
        }
    }
    // Unit-mass input is kept bit-for-bit so that serialized distributions round-trip.
    if (!require_unit_mass)
        for (auto& a : d.atoms_) a.weight /= total;
    return d;
}

Distribution Distribution::delta(double value) { return from_atoms({{value, 1.0}}); }

// ---------------------------------------------------------------- StepFunction

StepFunction::StepFunction(DomainShape domain, std::vector<double> breakpoints, std::vector<double> values)
    : domain_(domain), breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (values_.empty()) throw InputError("step function: needs at least one piece");
    if (breakpoints_.size() != values_.size() + 1)
        throw InputError("step function: breakpoints must number values + 1 (" + std::to_string(values_.size()) +
                         " values, " + std::to_string(breakpoints_.size()) + " breakpoints)");
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        if (!finite(breakpoints_[i])) throw InputError("step function: breakpoints must be finite");
        if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
            throw InputError("step function: breakpoints must be strictly increasing at index " + std::to_string(i));
    }
    for (double v : values_)
        if (!finite(v)) throw InputError("step function: values must be finite");
    if (domain_.is_circle()) {
        if (std::fabs(end() - start() - 1.0) > 1e-12)
            throw InputError("step function: circle breakpoints must span exactly one period");
        breakpoints_.back() = breakpoints_.front() + 1.0;
    } else if (std::fabs(start() - domain_.a()) > 1e-12 || std::fabs(end() - domain_.b()) > 1e-12) {
        throw InputError("step function: breakpoints must start at a and end at b");
    } else {
        breakpoints_.front() = domain_.a();
        breakpoints_.back() = domain_.b();
    }
}

StepFunction StepFunction::constant(DomainShape domain, double value) {
    if (domain.is_circle()) return {domain, {0.0, 1.0}, {value}};
    return {domain, {domain.a(), domain.b()}, {value}};
}

bool StepFunction::is_positive() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
}

double StepFunction::value_at(double x) const {
    if (is_circle()) {
        x -= std::floor(x - start());
        if (x >= end()) x -= 1.0;
    } else if (x < start() || x > end()) {
        throw InputError("step function: point " + fmt(x) + " outside domain");
    }
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    std::size_t i = it == breakpoints_.begin() ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    return values_[std::min(i, pieces() - 1)];
}

void StepFunction::check_query(const Interval& j) const {
    if (!finite(j.left) || !finite(j.right))
        throw InputError("interval: endpoints must be finite");
    if (!(j.left < j.right))
        throw InputError("interval: left must be < right, got [" + fmt(j.left) + ", " + fmt(j.right) + "]");
    if (!is_circle()) {
        const double slack = 1e-12 * (1.0 + carrier_length());
        if (j.left < start() - slack || j.right > end() + slack)
            throw InputError("interval: [" + fmt(j.left) + ", " + fmt(j.right) + "] outside domain [" +
                             fmt(start()) + ", " + fmt(end()) + "]");
    }
}

std::vector<double> StepFunction::overlap_lengths(const Interval& j) const {
    check_query(j);
    std::vector<double> out(pieces(), 0.0);
    if (!is_circle()) {
        const double l = std::max(j.left, start());
        const double r = std::min(j.right, end());
        auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), l);
        std::size_t i = it == breakpoints_.begin() ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
        for (; i < pieces() && breakpoints_[i] < r; ++i)
            out[i] = std::min(r, breakpoints_[i + 1]) - std::max(l, breakpoints_[i]);
        return out;
    }
    // Circle: shift so that the left end lies in the base period, then count
    // whole periods and the two partial periods.
    const double shift = std::floor(j.left - start());
    const double l = j.left - shift;
    const double r = j.right - shift;
    const double periods = std::floor(r - start());
    auto add_range = [&](double lo, double hi, double sign) {
        for (std::size_t i = 0; i < pieces(); ++i) {
            const double ov = std::min(hi, breakpoints_[i + 1]) - std::max(lo, breakpoints_[i]);
            if (ov > 0.0) out[i] += sign * ov;
        }
    };
    if (periods >= 1.0) {
        for (std::size_t i = 0; i < pieces(); ++i) out[i] += periods * piece_length(i);
        add_range(start(), r - periods, 1.0);
    } else {
        add_range(start(), r, 1.0);
    }
    add_range(start(), l, -1.0);
    for (auto& x : out) x = std::max(x, 0.0);
    return out;
}

// ---------------------------------------------------------------- Functional

void Functional::validate() const {
    switch (kind) {
        case Kind::central_moment:
            if (!(param >= 1.0)) throw InputError("p must be >= 1, got " + fmt(param));
            break;
        case Kind::tail_mass:
            if (!(param > 0.0)) throw InputError("lambda must be > 0, got " + fmt(param));
            break;
        case Kind::power_mean:
            if (param == 0.0 || !finite(param)) throw InputError("q must be finite and nonzero");
            break;
        case Kind::ap_form:
            if (!(param > 1.0)) throw InputError("p must be > 1, got " + fmt(param));
            break;
        case Kind::exp_integral:
            if (!finite(param)) throw InputError("C must be finite");
            break;
        default:
            break;
    }
}

bool Functional::needs_positive_atoms() const {
    return kind == Kind::power_mean || kind == Kind::ap_form || kind == Kind::a_inf_form;
}

std::string Functional::name() const {
    switch (kind) {
        case Kind::barycenter: return "barycenter";
        case Kind::central_moment: return "central_moment";
        case Kind::exp_integral: return "exp_integral";
        case Kind::tail_mass: return "tail_mass";
        case Kind::power_mean: return "power_mean";
        case Kind::ap_form: return "ap_form";
        case Kind::a_inf_form: return "a_inf_form";
    }
    return "?";
}

double evaluate(const Functional& fn, std::span<const double> values, std::span<const double> weights) {
    double total = 0.0;
    double first = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (weights[i] == 0.0) continue;
        if (fn.needs_positive_atoms() && !(values[i] > 0.0))
            throw InputError(fn.name() + ": atoms must be positive, got " + fmt(values[i]));
        total += weights[i];
        first += weights[i] * values[i];
    }
    if (!(total > 0.0)) throw InputError(fn.name() + ": empty distribution");
    const double bar = first / total;

    auto sum = [&](auto&& g) {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (weights[i] != 0.0) s += weights[i] * g(values[i]);
        return s / total;
    };

    switch (fn.kind) {
        case Functional::Kind::barycenter:
            return bar;
        case Functional::Kind::central_moment:
            return sum([&](double v) { return abs_pow(v - bar, fn.param); });
        case Functional::Kind::exp_integral:
            return sum([&](double v) { return std::exp(fn.param * v); });
        case Functional::Kind::tail_mass: {
            const double cut = fn.param * (1.0 - kIdentityTol);
            return sum([&](double v) { return std::fabs(v - bar) >= cut ? 1.0 : 0.0; });
        }
        case Functional::Kind::power_mean:
            return std::pow(sum([&](double v) { return std::pow(v, fn.param); }), 1.0 / fn.param);
        case Functional::Kind::ap_form: {
            const double gamma = 1.0 / (fn.param - 1.0);
            const double dual = sum([&](double v) { return std::pow(v, -gamma); });
            return bar * std::pow(dual, fn.param - 1.0);
        }
        case Functional::Kind::a_inf_form: {
            const double mean_log = sum([](double v) { return std::log(v); });
            return bar * std::exp(-mean_log);
        }
    }
    throw InternalError("unknown functional");
}

double dist_functional(const Distribution& d, const Functional& fn) {
    fn.validate();
    std::vector<double> values;
    std::vector<double> weights;
    for (const auto& a : d.atoms()) {
        values.push_back(a.value);
        weights.push_back(a.weight);
    }
    return evaluate(fn, values, weights);
}

// ---------------------------------------------------------------- step calculus

double average(const StepFunction& f, const Interval& j) {
    const auto lengths = f.overlap_lengths(j);
    return evaluate(Functional::barycenter(), f.values(), lengths);
}

double central_p_moment(const StepFunction& f, const Interval& j, double p) {
    const auto fn = Functional::central_moment(p);
    fn.validate();
    const auto lengths = f.overlap_lengths(j);
    return evaluate(fn, f.values(), lengths);
}

Distribution distribution(const StepFunction& f, const Interval& j) {
    const auto lengths = f.overlap_lengths(j);
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < f.pieces(); ++i)
        if (lengths[i] > 0.0) atoms.push_back({f.values()[i], lengths[i]});
    return Distribution::from_atoms(std::move(atoms));
}

Distribution distribution(const StepFunction& f) { return distribution(f, {f.start(), f.end()}); }

StepFunction transfer(const StepFunction& f, const Interval& j) {
    if (f.is_circle()) throw InputError("transfer: acts on interval-domain functions only");
    if (!finite(j.left) || !finite(j.right) || !(j.left < j.right))
        throw InputError("transfer: target interval needs finite left < right");
    const double scale = j.length() / f.carrier_length();
    std::vector<double> bp;
    bp.reserve(f.breakpoints().size());
    for (double x : f.breakpoints()) bp.push_back(j.left + (x - f.start()) * scale);
    bp.front() = j.left;
    bp.back() = j.right;
    return {DomainShape::interval(j.left, j.right), std::move(bp), f.values()};
}

// ---------------------------------------------------------------- monotone maps

MonotoneMap::MonotoneMap(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() < 2 || xs_.size() != ys_.size())
        throw InputError("monotone map: needs at least two knots with matching x and y");
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        if (!finite(xs_[i]) || !finite(ys_[i])) throw InputError("monotone map: knots must be finite");
        if (i > 0 && !(xs_[i] > xs_[i - 1]))
            throw InputError("monotone map: knot x must be strictly increasing at index " + std::to_string(i));
        if (i > 0 && ys_[i] < ys_[i - 1])
            throw InputError("monotone map: knot y decreases at index " + std::to_string(i));
    }
}

MonotoneMap MonotoneMap::identity() { return {{0.0, 1.0}, {0.0, 1.0}}; }

MonotoneMap MonotoneMap::truncation(double level) {
    return {{level - 1.0, level, level + 1.0}, {level - 1.0, level, level}};
}

double MonotoneMap::operator()(double x) const {
    const std::size_t n = xs_.size();
    std::size_t i;
    if (x <= xs_.front()) {
        i = 0;
    } else if (x >= xs_.back()) {
        i = n - 2;
    } else {
        i = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
        if (x == xs_[i]) return ys_[i];
    }
    const double slope = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
    return ys_[i] + slope * (x - xs_[i]);
}

double MonotoneMap::lipschitz() const {
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i)
        best = std::max(best, (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]));
    return best;
}

StepFunction compose_monotone(const StepFunction& f, const MonotoneMap& g) {
    std::vector<double> values;
    values.reserve(f.pieces());
    for (double v : f.values()) values.push_back(g(v));
    return {f.domain(), f.breakpoints(), std::move(values)};
}

StepFunction monotone_rearrangement(const StepFunction& f) {
    if (f.is_circle()) throw InputError("rearrangement: needs an interval domain");
    std::vector<std::size_t> order(f.pieces());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return f.values()[x] < f.values()[y]; });
    std::vector<double> bp{f.start()};
    std::vector<double> values;
    double x = f.start();
    for (std::size_t i : order) {
        x += f.piece_length(i);
        bp.push_back(x);
        values.push_back(f.values()[i]);
    }
    bp.back() = f.end();
    // Reordering can make tiny float ties; keep the strict-increase invariant.
    for (std::size_t i = 1; i + 1 < bp.size(); ++i)
        if (!(bp[i] > bp[i - 1])) bp[i] = std::nextafter(bp[i - 1], bp.back());
    return {f.domain(), std::move(bp), std::move(values)};
}

// ---------------------------------------------------------------- mixtures

Distribution dist_mix(const Distribution& d0, const Distribution& d1, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("mix: alpha must lie in [0, 1], got " + fmt(alpha));
    std::vector<Atom> atoms;
    for (const auto& a : d0.atoms()) atoms.push_back({a.value, (1.0 - alpha) * a.weight});
    for (const auto& a : d1.atoms()) atoms.push_back({a.value, alpha * a.weight});
    return Distribution::from_atoms(std::move(atoms));
}

double tv_distance(const Distribution& d0, const Distribution& d1) {
    const auto& x = d0.atoms();
    const auto& y = d1.atoms();
    std::size_t i = 0;
    std::size_t k = 0;
    double diff = 0.0;
    while (i < x.size() || k < y.size()) {
        if (k == y.size() || (i < x.size() && x[i].value < y[k].value - kMergeTol)) {
            diff += x[i++].weight;
        } else if (i == x.size() || y[k].value < x[i].value - kMergeTol) {
            diff += y[k++].weight;
        } else {
            diff += std::fabs(x[i++].weight - y[k++].weight);
        }
    }
    return std::min(1.0, 0.5 * diff);
}

}  // namespace bmo
