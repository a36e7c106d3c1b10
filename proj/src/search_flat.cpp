#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "bmo/errors.hpp"
#include "search_internal.hpp"

namespace bmo {
namespace detail {

double gradient_constant(const Objective& obj, double lo, double hi) {
    switch (obj.kind) {
        case Objective::Kind::bmo: {
            const double d = hi - lo;
            return (1.0 + obj.p) * std::pow(d, obj.p);
        }
        case Objective::Kind::ap: {
            const double gamma = 1.0 / (obj.p - 1.0);
            const double ylo = std::pow(hi, -gamma), yhi = std::pow(lo, -gamma);
            const double ypow = obj.p >= 2.0 ? std::pow(yhi, obj.p - 2.0) : std::pow(ylo, obj.p - 2.0);
            return (hi - lo) / lo + (obj.p - 1.0) * hi * ypow * (yhi - ylo);
        }
        case Objective::Kind::a_inf:
            return (hi - lo) / lo + (hi / lo) * (std::log(hi) - std::log(lo));
    }
    return 0.0;
}

double tv_bound(const Objective& obj, std::span<const double> values, std::span<const double> weights, double lo,
                double hi, double tau) {
    const double range = obj.range_bound(lo, hi);
    switch (obj.kind) {
        case Objective::Kind::bmo: {
            const double m = evaluate(Functional::central_moment(obj.p), values, weights);
            const double d = hi - lo;
            return std::min(range, std::pow(m + (obj.p + 1.0) * std::pow(d, obj.p) * tau, 1.0 / obj.p));
        }
        case Objective::Kind::ap: {
            const double gamma = 1.0 / (obj.p - 1.0);
            const double x = evaluate(Functional::barycenter(), values, weights);
            const double y = evaluate(Functional::power_mean(-gamma), values, weights);
            const double yy = std::pow(y, -gamma) + tau * (std::pow(lo, -gamma) - std::pow(hi, -gamma));
            return std::min(range, (x + tau * (hi - lo)) * std::pow(yy, obj.p - 1.0));
        }
        case Objective::Kind::a_inf: {
            const double x = evaluate(Functional::barycenter(), values, weights);
            const double e = x / evaluate(Functional::a_inf_form(), values, weights);  // exp(<log w>)
            return std::min(range,
                            (x + tau * (hi - lo)) / e * std::exp(tau * (std::log(hi) - std::log(lo))));
        }
    }
    return range;
}

}  // namespace detail

namespace {

using detail::Candidate;
using detail::kNegInf;
using detail::Tracker;

// Cells of the (unrolled, on circles) step function.
struct Cells {
    Cells(const StepFunction& f, const Objective& obj) : f(f), n(static_cast<long>(f.pieces())) {
        uniq = f.values();
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (double v : f.values()) {
            rank.push_back(static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), v) - uniq.begin()));
            if (obj.kind == Objective::Kind::ap)
                aux.push_back(std::pow(v, -1.0 / (obj.p - 1.0)));
            else if (obj.kind == Objective::Kind::a_inf)
                aux.push_back(std::log(v));
            else
                aux.push_back(0.0);
        }
    }

    long base(long c) const { return c % n; }
    double start(long c) const { return f.breakpoints()[static_cast<std::size_t>(c % n)] + static_cast<double>(c / n); }
    double len(long c) const { return f.piece_length(static_cast<std::size_t>(c % n)); }
    double val(long c) const { return f.values()[static_cast<std::size_t>(c % n)]; }

    const StepFunction& f;
    long n;
    std::vector<double> uniq;
    std::vector<int> rank;
    std::vector<double> aux;
};

// Fenwick tree over value ranks carrying (length, length * value).
class Fenwick {
public:
    explicit Fenwick(std::size_t n) : w_(n + 1, 0.0), s_(n + 1, 0.0) {}
    void clear() {
        std::fill(w_.begin(), w_.end(), 0.0);
        std::fill(s_.begin(), s_.end(), 0.0);
    }
    void add(std::size_t i, double w, double s) {
        for (++i; i < w_.size(); i += i & (~i + 1)) w_[i] += w, s_[i] += s;
    }
    std::pair<double, double> prefix(std::size_t k) const {
        double w = 0.0, s = 0.0;
        for (; k > 0; k -= k & (~k + 1)) w += w_[k], s += s_[k];
        return {w, s};
    }

private:
    std::vector<double> w_, s_;
};

// Whole cells strictly between the two end cells of a candidate pair.
class Middle {
public:
    Middle(const Objective& obj, const Cells& cells)
        : obj_(obj), cells_(cells), fen_(cells.uniq.size()), dense_(cells.uniq.size(), 0.0) {}

    void reset(long i) {
        shift_ = obj_.kind == Objective::Kind::bmo ? cells_.val(i) : 0.0;
        w = s_ = q_ = g_ = 0.0;
        lo = hi = cells_.val(i);
        if (obj_.kind == Objective::Kind::bmo && obj_.p == 1.0) fen_.clear();
        for (int r : touched_) dense_[static_cast<std::size_t>(r)] = 0.0;
        touched_.clear();
    }

    void add(long c) {
        const double len = cells_.len(c), v = cells_.val(c) - shift_;
        const int r = cells_.rank[static_cast<std::size_t>(cells_.base(c))];
        w += len;
        s_ += len * v;
        q_ += len * v * v;
        g_ += len * cells_.aux[static_cast<std::size_t>(cells_.base(c))];
        lo = std::min(lo, cells_.val(c));
        hi = std::max(hi, cells_.val(c));
        if (obj_.kind != Objective::Kind::bmo) return;
        if (obj_.p == 1.0) {
            fen_.add(static_cast<std::size_t>(r), len, len * v);
        } else if (obj_.p != 2.0) {
            if (dense_[static_cast<std::size_t>(r)] == 0.0) touched_.push_back(r);
            dense_[static_cast<std::size_t>(r)] += len;
        }
    }

    // Objective of a * delta(v_i) + middle + b * delta(v_j).
    double value(double a, long i, double b, long j) const {
        const double t = a + w + b;
        if (!(t > 0.0)) return kNegInf;
        const double va = cells_.val(i) - shift_, vb = cells_.val(j) - shift_;
        const double mean = (s_ + a * va + b * vb) / t;
        switch (obj_.kind) {
            case Objective::Kind::bmo: {
                if (obj_.p == 2.0) {
                    const double var = (q_ + a * va * va + b * vb * vb) / t - mean * mean;
                    return std::sqrt(std::max(var, 0.0));
                }
                double acc = a * std::abs(va - mean) + b * std::abs(vb - mean);
                if (obj_.p == 1.0) {
                    const auto k = static_cast<std::size_t>(
                        std::upper_bound(cells_.uniq.begin(), cells_.uniq.end(), mean + shift_) - cells_.uniq.begin());
                    const auto [wl, sl] = fen_.prefix(k);
                    acc += (mean * wl - sl) + ((s_ - sl) - mean * (w - wl));
                    return std::max(acc, 0.0) / t;
                }
                acc = a * std::pow(std::abs(va - mean), obj_.p) + b * std::pow(std::abs(vb - mean), obj_.p);
                for (int r : touched_)
                    acc += dense_[static_cast<std::size_t>(r)] *
                           std::pow(std::abs(cells_.uniq[static_cast<std::size_t>(r)] - shift_ - mean), obj_.p);
                return std::pow(acc / t, 1.0 / obj_.p);
            }
            case Objective::Kind::ap: {
                const std::size_t bi = static_cast<std::size_t>(cells_.base(i));
                const std::size_t bj = static_cast<std::size_t>(cells_.base(j));
                const double y = (g_ + a * cells_.aux[bi] + b * cells_.aux[bj]) / t;
                return mean * std::pow(y, obj_.p - 1.0);
            }
            case Objective::Kind::a_inf: {
                const std::size_t bi = static_cast<std::size_t>(cells_.base(i));
                const std::size_t bj = static_cast<std::size_t>(cells_.base(j));
                const double l = (g_ + a * cells_.aux[bi] + b * cells_.aux[bj]) / t;
                return mean * std::exp(-l);
            }
        }
        return kNegInf;
    }

    double w = 0.0;
    double lo = 0.0, hi = 0.0;

private:
    const Objective& obj_;
    const Cells& cells_;
    double shift_ = 0.0;
    double s_ = 0.0, q_ = 0.0, g_ = 0.0;
    Fenwick fen_;
    std::vector<double> dense_;
    std::vector<int> touched_;
};

class FlatSearch {
public:
    FlatSearch(const StepFunction& f, const Objective& obj, const SearchConfig& cfg)
        : f_(f), obj_(obj), cfg_(cfg), cells_(f, obj) {}

    // Work is cut into a fixed set of interleaved chunks, each pruned only by
    // its own progress, so the report does not depend on the thread count.
    void run(Tracker& out) {
        const long chunks = std::min<long>(cells_.n, 64);
        std::vector<Tracker> parts(static_cast<std::size_t>(chunks), Tracker(f_.is_circle(), f_.start(), cfg_));
        for (auto& p : parts) p.take(out.best);
        std::atomic<long> next{0};
        auto work = [&] {
            Middle mid(obj_, cells_);
            for (long c = next++; c < chunks; c = next++) {
                Tracker& tr = parts[static_cast<std::size_t>(c)];
                for (long i = c; i < cells_.n; i += chunks) {
                    pairs_from(i, mid, tr);
                    if (f_.is_circle()) long_arcs_from(i, tr);
                }
            }
        };
        const int nt = static_cast<int>(std::min<long>(cfg_.threads, chunks));
        if (nt <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nt; ++t) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }
        for (const auto& p : parts) out.merge(p);
    }

private:
    long last_partner(long i) const {
        if (!f_.is_circle()) return cells_.n - 1;
        const long cap = cells_.n * (cfg_.max_periods + 2);
        const long span = cfg_.certify ? cap : std::min(cap, std::max<long>(cfg_.r_long + 1, cells_.n));
        return i + span;
    }

    void pairs_from(long i, Middle& mid, Tracker& tr) const {
        mid.reset(i);
        for (long j = i + 1; j <= last_partner(i); ++j) {
            if (j > i + 1) mid.add(j - 1);
            pair(i, j, mid, tr);
        }
    }

    void pair(long i, long j, const Middle& mid, Tracker& tr) const {
        const double va = cells_.val(i), vb = cells_.val(j);
        const double lo = std::min({mid.lo, va, vb}), hi = std::max({mid.hi, va, vb});
        const double rb = obj_.range_bound(lo, hi);
        if (tr.hopeless(rb)) return;

        const int g = cfg_.grid;
        const double la = cells_.len(i), lb = cells_.len(j);
        const double end_i = cells_.start(i) + la, start_j = cells_.start(j);
        auto eval = [&](double a, double b) {
            const double v = mid.value(a, i, b, j);
            if (v != kNegInf) tr.offer(v, end_i - a, start_j + b);
            return v;
        };

        std::vector<double> grid(static_cast<std::size_t>(g * g));
        for (int k = 0; k < g; ++k)
            for (int l = 0; l < g; ++l)
                grid[static_cast<std::size_t>(k * g + l)] = eval(la * k / (g - 1), lb * l / (g - 1));

        // Lipschitz bound on each grid box.
        const double kgrad = detail::gradient_constant(obj_, lo, hi);
        const double ha = la / (g - 1), hb = lb / (g - 1);
        double pair_upper = kNegInf;
        for (int k = 0; k + 1 < g && pair_upper < rb; ++k) {
            for (int l = 0; l + 1 < g; ++l) {
                const double tmin = la * k / (g - 1) + mid.w + lb * l / (g - 1);
                double corner = std::max({grid[static_cast<std::size_t>(k * g + l)],
                                          grid[static_cast<std::size_t>(k * g + l + 1)],
                                          grid[static_cast<std::size_t>((k + 1) * g + l)],
                                          grid[static_cast<std::size_t>((k + 1) * g + l + 1)]});
                if (!(tmin > 0.0) || corner == kNegInf) {
                    pair_upper = rb;
                    break;
                }
                const double slack = kgrad * 0.5 * (ha + hb) / tmin;
                double box;
                if (obj_.kind == Objective::Kind::bmo)
                    box = std::pow(std::pow(corner, obj_.p) + slack, 1.0 / obj_.p);
                else
                    box = corner + slack;
                pair_upper = std::max(pair_upper, std::min(box, rb));
            }
        }
        if (g == 1) pair_upper = rb;
        tr.upper = std::max(tr.upper, pair_upper);
        if (tr.hopeless(pair_upper)) return;

        static constexpr double kStarts[3] = {0.0, 0.5, 1.0};
        for (double fa : kStarts) {
            for (double fb : kStarts) {
                double a = fa * la, b = fb * lb;
                double cur = eval(a, b);
                for (int round = 0; round < cfg_.refine; ++round) {
                    const double prev = cur;
                    auto [na, va1] = detail::line_max([&](double x) { return eval(x, b); }, la, g, cfg_.tol);
                    if (va1 > cur) a = na, cur = va1;
                    auto [nb, vb1] = detail::line_max([&](double x) { return eval(a, x); }, lb, g, cfg_.tol);
                    if (vb1 > cur) b = nb, cur = vb1;
                    if (!(cur - prev > cfg_.tol * std::max(1.0, std::abs(cur)))) break;
                }
            }
        }
    }

    // Log-spaced arc lengths up to max_periods + 1 periods.
    void long_arcs_from(long i, Tracker& tr) const {
        const int g = cfg_.grid;
        const double top = cfg_.max_periods + 1.0;
        for (int k = 0; k < g - 1; ++k) {
            const double l = cells_.start(i) + cells_.len(i) * k / (g - 1);
            for (double len = 0.125; len <= top * (1.0 + 1e-12); len *= std::pow(2.0, 0.25)) {
                const Interval j{l, l + len};
                tr.offer(obj_.value(f_.values(), f_.overlap_lengths(j)), j.left, j.right);
            }
            const Interval j{l, l + top};
            tr.offer(obj_.value(f_.values(), f_.overlap_lengths(j)), j.left, j.right);
        }
    }

    const StepFunction& f_;
    const Objective& obj_;
    const SearchConfig& cfg_;
    Cells cells_;
};

void validate_target(const StepFunction& f, const Objective& obj, const SearchConfig& cfg) {
    cfg.validate();
    obj.validate();
    if (obj.needs_positive() && !f.is_positive()) throw InputError("weight must be positive-valued");
}

SearchReport finish(const StepFunction& f, const Objective& obj, const SearchConfig& cfg, Tracker& tr) {
    SearchReport rep;
    rep.objective = obj.name();
    rep.config = cfg;
    const auto w = tr.chosen();
    rep.witness = {w.left, w.right};
    rep.lower = objective_on(f, obj, rep.witness);
    rep.evaluations = tr.evaluations;
    if (cfg.certify) {
        double up = tr.upper;
        if (f.is_circle()) {
            // Arcs longer than max_periods + 1 periods hold at least max_periods
            // whole periods.
            const double tau = 2.0 / (cfg.max_periods + 1.0);
            const auto whole = f.overlap_lengths({f.start(), f.end()});
            const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
            up = std::max(up, detail::tv_bound(obj, f.values(), whole, *lo, *hi, tau));
        }
        rep.upper = std::max(up, rep.lower);
    }
    rep.scan = std::move(tr.scan);
    return rep;
}

}  // namespace

SearchReport search(const StepFunction& f, const Objective& obj, const SearchConfig& cfg,
                    const std::vector<Interval>& seeds) {
    validate_target(f, obj, cfg);
    Tracker tr(f.is_circle(), f.start(), cfg);
    // Any single piece is a valid (trivial) candidate.
    tr.offer(objective_on(f, obj, {f.start(), f.start() + f.piece_length(0)}), f.start(),
             f.start() + f.piece_length(0));
    for (const auto& s : seeds) {
        f.check_query(s);
        tr.offer(objective_on(f, obj, s), s.left, s.right);
    }
    FlatSearch(f, obj, cfg).run(tr);
    return finish(f, obj, cfg, tr);
}

SearchReport bmo_norm(const StepFunction& f, double p, const SearchConfig& cfg, const std::vector<Interval>& seeds) {
    if (f.is_circle()) throw InputError("bmo_norm: interval-domain function expected (use the circle variant)");
    return search(f, Objective::bmo(p), cfg, seeds);
}

SearchReport circle_bmo_norm(const StepFunction& f, double p, const SearchConfig& cfg,
                             const std::vector<Interval>& seeds) {
    if (!f.is_circle()) throw InputError("circle_bmo_norm: circle function expected");
    return search(f, Objective::bmo(p), cfg, seeds);
}

SearchReport ap_constant(const StepFunction& w, double p, const SearchConfig& cfg) {
    return search(w, Objective::ap(p), cfg);
}

SearchReport a_inf_constant(const StepFunction& w, const SearchConfig& cfg) {
    return search(w, Objective::a_inf(), cfg);
}

}  // namespace bmo
