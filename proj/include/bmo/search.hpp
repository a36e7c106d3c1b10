#pragma once

// Supremum searches over subintervals: BMO_p seminorms, A_p / A_infinity
// constants, plus exact single-interval quantities (weak-type distribution,
// exponential integrals, Reverse Hoelder ratios).
//
// Lower bounds are values of concrete witness intervals. Upper bounds are
// produced only with `certify` and are sound for flat step functions; for
// construction DAGs the short-range straddling regime is search-based (see
// README, "Certified brackets").

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bmo/construct.hpp"
#include "bmo/measure.hpp"

namespace bmo {

struct SearchConfig {
    int grid = 5;           // grid points per endpoint on each cell pair (>= 2)
    int refine = 3;         // coordinate-refinement rounds per start
    double tol = 1e-9;      // relative tolerance of line searches, in (0, 0.1]
    int r_long = 32;        // whole cells/copies from which an interval counts as long
    int max_periods = 64;   // circle arc length handled explicitly, in periods
    bool certify = false;
    int threads = 1;
    std::uint64_t seed = 0;
    bool record_scan = false;
    std::size_t scan_limit = 200000;

    void validate() const;
};

struct ScanRow {
    double left = 0.0;
    double right = 0.0;
    double value = 0.0;
};

// What is being maximized over intervals.
struct Objective {
    enum class Kind { bmo, ap, a_inf };

    Kind kind = Kind::bmo;
    double p = 1.0;

    static Objective bmo(double p);
    static Objective ap(double p);
    static Objective a_inf();

    void validate() const;
    std::string name() const;
    bool needs_positive() const { return kind != Kind::bmo; }
    // Value on the measure sum_i weights[i] delta(values[i]).
    double value(std::span<const double> values, std::span<const double> weights) const;
    // Largest possible value over all distributions supported in [lo, hi].
    double range_bound(double lo, double hi) const;
};

struct SearchReport {
    std::string objective;
    double lower = 0.0;
    std::optional<double> upper;
    Interval witness;
    long evaluations = 0;
    SearchConfig config;
    std::vector<ScanRow> scan;
};

// Interval-domain targets (flat or a non-periodic construction).
SearchReport bmo_norm(const StepFunction& f, double p, const SearchConfig& cfg,
                      const std::vector<Interval>& seeds = {});
SearchReport bmo_norm(const Expr& e, double p, const SearchConfig& cfg);

// Circle targets: long arcs are intervals on the line through the periodic
// realization.
SearchReport circle_bmo_norm(const StepFunction& f, double p, const SearchConfig& cfg,
                             const std::vector<Interval>& seeds = {});
SearchReport circle_bmo_norm(const Expr& e, double p, const SearchConfig& cfg);

// Either domain kind.
SearchReport ap_constant(const StepFunction& w, double p, const SearchConfig& cfg);
SearchReport ap_constant(const Expr& w, double p, const SearchConfig& cfg);
SearchReport a_inf_constant(const StepFunction& w, const SearchConfig& cfg);
SearchReport a_inf_constant(const Expr& w, const SearchConfig& cfg);

// Generic entry points used by the ones above.
SearchReport search(const StepFunction& f, const Objective& obj, const SearchConfig& cfg,
                    const std::vector<Interval>& seeds = {});
SearchReport search(const Expr& e, const Objective& obj, const SearchConfig& cfg);

// Value of the objective on one interval.
double objective_on(const StepFunction& f, const Objective& obj, const Interval& j);
double objective_on(const Expr& e, const Objective& obj, const Interval& j);

double weak_distribution(const StepFunction& f, const Interval& i, double lambda);

// Sum of length * exp(C v) over the pieces inside i (not normalized).
// Overflow yields +infinity.
double exp_integral(const StepFunction& f, const Interval& i, double c);
double exp_integral(const StepFunction& f, double c);  // whole carrier
double exp_integral(const Expr& e, const Interval& i, double c);
double exp_integral(const Expr& e, double c);  // one carrier

double reverse_holder_ratio(const StepFunction& w, const Interval& i, double q);

}  // namespace bmo
