#pragma once

// Shared pieces of the flat and DAG searches.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "bmo/search.hpp"

namespace bmo::detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Candidate {
    double value = kNegInf;
    double left = 0.0;
    double right = 0.0;
};

// Values within this relative gap of the best count as ties.
inline constexpr double kTieRel = 1e-12;

inline double tie_gap(double v) { return kTieRel * std::max(1.0, std::abs(v)); }

// Best interval seen so far plus telemetry. Among near-ties the longest
// interval is reported (then the smaller left end, reduced to the base period
// on circles), so thread splits and visiting order do not matter.
class Tracker {
public:
    Tracker(bool circle, double base, const SearchConfig& cfg) : circle_(circle), base_(base), cfg_(&cfg) {}

    void offer(double v, double l, double r) {
        ++evaluations;
        if (cfg_->record_scan && scan.size() < cfg_->scan_limit) scan.push_back({l, r, v});
        if (!std::isfinite(v)) return;
        take({v, l, r});
    }

    void take(const Candidate& c) {
        if (!std::isfinite(c.value)) return;
        if (c.value > best.value) best = c;
        if (c.value >= best.value - tie_gap(best.value)) near_.push_back(c);
        if (near_.size() > 4096) {
            prune();
            if (near_.size() > 1024) {
                std::sort(near_.begin(), near_.end(), [&](const Candidate& a, const Candidate& b) { return preferred(a, b); });
                near_.resize(256);
            }
        }
    }

    // Pruning threshold for regions whose bound is `rb`: they cannot hold a
    // near-tie of the final best.
    bool hopeless(double rb) const { return rb < best.value - tie_gap(best.value); }

    // Reported witness.
    Candidate chosen() const {
        Candidate out = best;
        for (const auto& c : near_)
            if (c.value >= best.value - tie_gap(best.value) && preferred(c, out)) out = c;
        return out;
    }

    void merge(const Tracker& o) {
        take(o.best);
        for (const auto& c : o.near_) take(c);
        evaluations += o.evaluations;
        upper = std::max(upper, o.upper);
        for (const auto& row : o.scan) {
            if (scan.size() >= cfg_->scan_limit) break;
            scan.push_back(row);
        }
    }

    Candidate best;
    long evaluations = 0;
    double upper = kNegInf;  // max of the bounds produced so far
    std::vector<ScanRow> scan;

private:
    double reduce(double l) const { return circle_ ? l - std::floor(l - base_) : l; }

    // Order among ties: longer, then smaller reduced left end, then larger value.
    bool preferred(const Candidate& a, const Candidate& b) const {
        const double la = a.right - a.left, lb = b.right - b.left;
        if (la != lb) return la > lb;
        const double ra = reduce(a.left), rb = reduce(b.left);
        if (ra != rb) return ra < rb;
        return a.value > b.value;
    }

    void prune() {
        const double floor_value = best.value - tie_gap(best.value);
        std::erase_if(near_, [&](const Candidate& c) { return c.value < floor_value; });
    }

    std::vector<Candidate> near_;

    bool circle_;
    double base_;
    const SearchConfig* cfg_;
};

// Objective bound over all measures within total variation tau of the
// measure (values, weights), all supported in [lo, hi].
double tv_bound(const Objective& obj, std::span<const double> values, std::span<const double> weights, double lo,
                double hi, double tau);

// Bound on |dF/da| * T for the un-rooted objective F of a measure of mass T
// supported in [lo, hi], where a is the mass of one atom.
double gradient_constant(const Objective& obj, double lo, double hi);

// Maximizes h on [0, len]: G samples, then golden section around the best.
template <class H>
std::pair<double, double> line_max(H&& h, double len, int grid, double tol) {
    double bx = 0.0, bv = kNegInf;
    int bk = 0;
    for (int k = 0; k < grid; ++k) {
        const double x = len * k / (grid - 1);
        const double v = h(x);
        if (v > bv) bv = v, bx = x, bk = k;
    }
    double lo = len * std::max(bk - 1, 0) / (grid - 1);
    double hi = len * std::min(bk + 1, grid - 1) / (grid - 1);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = h(x1), f2 = h(x2);
    const double stop = tol * len;
    while (hi - lo > stop) {
        if (f1 >= f2) {
            if (f1 > bv) bv = f1, bx = x1;
            hi = x2;
            x2 = x1, f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = h(x1);
        } else {
            if (f2 > bv) bv = f2, bx = x2;
            lo = x1;
            x1 = x2, f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = h(x2);
        }
    }
    if (f1 > bv) bv = f1, bx = x1;
    if (f2 > bv) bv = f2, bx = x2;
    return {bx, bv};
}

}  // namespace bmo::detail
