#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "bmo/errors.hpp"
#include "search_internal.hpp"

namespace bmo {
namespace {

using detail::Candidate;
using detail::kNegInf;
using detail::Tracker;

struct NodeResult {
    Candidate best;
    double upper = kNegInf;
    long evaluations = 0;
};

// Number of grid candidates per node that get exact coordinate refinement.
constexpr std::size_t kRefinedPairs = 8;

class DagSearch {
public:
    DagSearch(const Objective& obj, const SearchConfig& cfg) : obj_(obj), cfg_(cfg) {}

    // Root: periodic nodes are searched over arcs of any length.
    NodeResult solve_root(const Expr& e) { return solve(e, true); }

private:
    // Inner nodes only matter through intervals inside one carrier window,
    // since that is what a parent copy shows of them.
    const NodeResult& solve_inner(const Expr& e) {
        auto it = memo_.find(&e);
        if (it != memo_.end()) return it->second;
        return memo_.emplace(&e, solve(e, false)).first->second;
    }

    NodeResult solve(const Expr& e, bool root) {
        NodeResult out;
        const Interval carrier = e.carrier();
        switch (e.kind()) {
            case Expr::Kind::constant: {
                out.best = {obj_.kind == Objective::Kind::bmo ? 0.0 : 1.0, carrier.left, carrier.right};
                out.upper = out.best.value;
                out.evaluations = 1;
                return out;
            }
            case Expr::Kind::leaf: {
                const auto rep = search(e.function(), obj_, cfg_);
                out.best = {rep.lower, rep.witness.left, rep.witness.right};
                out.upper = rep.upper.value_or(rep.lower);
                out.evaluations = rep.evaluations;
                return out;
            }
            default:
                break;
        }

        const bool wrap = root && e.periodic();
        Tracker tr(wrap, carrier.left, cfg_);
        Window win{e, root};
        double upper = kNegInf;

        // (i) intervals inside one copy.
        for (std::size_t s = 0; s < e.children().size(); ++s) {
            const Expr& child = *e.children()[s];
            const NodeResult& cr = solve_inner(child);
            tr.evaluations += cr.evaluations;
            upper = std::max(upper, cr.upper);
            const Copy* host = nullptr;
            for (const Copy& cp : e.copies())
                if (cp.slot == static_cast<int>(s) && (!host || cp.length > host->length)) host = &cp;
            if (!host) continue;
            const Interval w = child.carrier();
            const double a0 = e.layout_origin() + host->start, ratio = host->length / w.length();
            Interval j{a0 + (cr.best.left - w.left) * ratio, a0 + (cr.best.right - w.left) * ratio};
            j.left = std::max(j.left, a0);
            j.right = std::min(j.right, a0 + host->length);
            if (j.right > j.left) offer_exact(e, tr, win, j.left, j.right);
        }

        // (ii) intervals straddling copies with few whole copies between.
        upper = std::max(upper, straddle(e, tr, win));

        // (iii) long intervals, exact queries on a log-length grid.
        upper = std::max(upper, long_arcs(e, tr, win, wrap));

        if (wrap) {
            const double tau = 2.0 / (cfg_.max_periods + 1.0);
            upper = std::max(upper, detail::tv_bound(obj_, e.atoms(), e.weights(), e.atoms().front(),
                                                     e.atoms().back(), tau));
        }
        const double rb = obj_.range_bound(e.atoms().front(), e.atoms().back());
        out.best = tr.chosen();
        out.upper = std::max(tr.best.value, std::min(rb, upper));
        out.evaluations = tr.evaluations;
        return out;
    }

    // Which intervals a node is searched over.
    struct Window {
        const Expr& e;
        bool root;

        // Shifts [l, r] into the carrier window; false when it cannot fit.
        bool admit(double& l, double& r) const {
            const Interval c = e.carrier();
            if (root && e.periodic()) return r > l;
            if (e.periodic()) {
                const double k = std::floor((l - c.left) / c.length());
                l -= k * c.length();
                r -= k * c.length();
            }
            const double slack = 1e-12 * (1.0 + c.length());
            if (l < c.left - slack || r > c.right + slack) return false;
            l = std::max(l, c.left);
            r = std::min(r, c.right);
            return r > l;
        }
    };

    double offer_exact(const Expr& e, Tracker& tr, const Window& win, double l, double r) const {
        if (!win.admit(l, r)) return kNegInf;
        const auto acc = accumulate(e, {l, r});
        const double v = obj_.value(e.atoms(), acc.weights);
        tr.offer(v, l, r);
        return v;
    }

    // Copy q of the unrolled layout (q may exceed the copy count on periodic nodes).
    struct Unrolled {
        const Expr& e;
        long m;
        const Copy& copy(long q) const { return e.copies()[static_cast<std::size_t>(q % m)]; }
        double start(long q) const {
            return e.layout_origin() + copy(q).start + static_cast<double>(q / m) * e.period();
        }
    };

    double straddle(const Expr& e, Tracker& tr, const Window& win) {
        const int g = cfg_.grid;
        const std::size_t na = e.atoms().size();
        const std::size_t ns = e.children().size();

        // Per slot: prefix/suffix distributions at grid fractions, per unit of copy length.
        std::vector<std::vector<std::vector<double>>> pre(ns), suf(ns);
        std::vector<std::vector<double>> whole(ns, std::vector<double>(na, 0.0));
        std::vector<double> clo(ns), chi(ns);
        for (std::size_t s = 0; s < ns; ++s) {
            const Expr& child = *e.children()[s];
            const auto& map = e.child_atom_map(static_cast<int>(s));
            const Interval w = child.carrier();
            clo[s] = child.atoms().front();
            chi[s] = child.atoms().back();
            for (std::size_t i = 0; i < child.atoms().size(); ++i)
                whole[s][static_cast<std::size_t>(map[i])] += child.weights()[i];
            auto lift = [&](const Interval& j) {
                std::vector<double> out(na, 0.0);
                if (!(j.right > j.left)) return out;
                const auto acc = accumulate(child, j);
                for (std::size_t i = 0; i < acc.weights.size(); ++i)
                    out[static_cast<std::size_t>(map[i])] += acc.weights[i] / w.length();
                return out;
            };
            for (int k = 0; k < g; ++k) {
                const double x = w.left + w.length() * k / (g - 1);
                pre[s].push_back(k == g - 1 ? whole[s] : lift({w.left, x}));
                suf[s].push_back(k == 0 ? whole[s] : lift({x, w.right}));
            }
        }

        const Unrolled un{e, static_cast<long>(e.copies().size())};
        const bool unroll = e.periodic();
        const long span = cfg_.r_long + 1;

        struct Seed {
            double value;
            long qa, qb;
            double t, u;
        };
        std::vector<Seed> seeds;
        double upper = kNegInf;
        std::vector<double> mid(na), wts(na);

        for (long qa = 0; qa < un.m; ++qa) {
            std::fill(mid.begin(), mid.end(), 0.0);
            double mw = 0.0;
            const std::size_t sa = static_cast<std::size_t>(un.copy(qa).slot);
            double mlo = clo[sa], mhi = chi[sa];
            const long qmax = unroll ? qa + span : std::min(un.m - 1, qa + span);
            for (long qb = qa + 1; qb <= qmax; ++qb) {
                if (qb > qa + 1) {
                    const Copy& c = un.copy(qb - 1);
                    const auto sc = static_cast<std::size_t>(c.slot);
                    for (std::size_t i = 0; i < na; ++i) mid[i] += c.length * whole[sc][i];
                    mw += c.length;
                    mlo = std::min(mlo, clo[sc]);
                    mhi = std::max(mhi, chi[sc]);
                }
                const std::size_t sb = static_cast<std::size_t>(un.copy(qb).slot);
                const double lo = std::min(mlo, clo[sb]), hi = std::max(mhi, chi[sb]);
                const double rb = obj_.range_bound(lo, hi);
                if (tr.hopeless(rb)) continue;

                const double la = un.copy(qa).length, lb = un.copy(qb).length;
                const double xa = un.start(qa), xb = un.start(qb);
                std::vector<double> vals(static_cast<std::size_t>(g * g), kNegInf);
                Seed top{kNegInf, qa, qb, 0.0, 0.0};
                bool all_admitted = true;
                for (int k = 0; k < g; ++k) {
                    const double t = static_cast<double>(k) / (g - 1);
                    for (int l = 0; l < g; ++l) {
                        const double u = static_cast<double>(l) / (g - 1);
                        double left = xa + t * la, right = xb + u * lb;
                        if (!win.admit(left, right)) {
                            all_admitted = false;
                            continue;
                        }
                        const double mass = la * (1.0 - t) + mw + lb * u;
                        if (!(mass > 0.0)) continue;
                        for (std::size_t i = 0; i < na; ++i)
                            wts[i] = la * suf[sa][static_cast<std::size_t>(k)][i] + mid[i] +
                                     lb * pre[sb][static_cast<std::size_t>(l)][i];
                        const double v = obj_.value(e.atoms(), wts);
                        tr.offer(v, left, right);
                        vals[static_cast<std::size_t>(k * g + l)] = v;
                        if (v > top.value) top = {v, qa, qb, t, u};
                    }
                }

                // Moving an end by h changes the measure by mass h, so each grid
                // box is bounded by its best corner plus a Lipschitz term.
                double pair_upper = kNegInf;
                const double kgrad = detail::gradient_constant(obj_, lo, hi);
                const double ht = la / (g - 1), hu = lb / (g - 1);
                for (int k = 0; k + 1 < g && pair_upper < rb; ++k) {
                    for (int l = 0; l + 1 < g; ++l) {
                        const double corner = std::max({vals[static_cast<std::size_t>(k * g + l)],
                                                        vals[static_cast<std::size_t>(k * g + l + 1)],
                                                        vals[static_cast<std::size_t>((k + 1) * g + l)],
                                                        vals[static_cast<std::size_t>((k + 1) * g + l + 1)]});
                        const double tmin = la * (1.0 - static_cast<double>(k + 1) / (g - 1)) + mw +
                                            lb * static_cast<double>(l) / (g - 1);
                        if (!all_admitted || !(tmin > 0.0) || corner == kNegInf) {
                            pair_upper = rb;
                            break;
                        }
                        const double slack = kgrad * 0.5 * (ht + hu) / tmin;
                        const double box = obj_.kind == Objective::Kind::bmo
                                               ? std::pow(std::pow(corner, obj_.p) + slack, 1.0 / obj_.p)
                                               : corner + slack;
                        pair_upper = std::max(pair_upper, std::min(box, rb));
                    }
                }
                upper = std::max(upper, pair_upper);
                if (top.value > kNegInf) seeds.push_back(top);
            }
        }

        std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) {
            if (a.value != b.value) return a.value > b.value;
            return std::tie(a.qa, a.qb) < std::tie(b.qa, b.qb);
        });
        if (seeds.size() > kRefinedPairs) seeds.resize(kRefinedPairs);
        for (const Seed& s : seeds) {
            const double la = un.copy(s.qa).length, lb = un.copy(s.qb).length;
            const double xa = un.start(s.qa), xb = un.start(s.qb);
            double t = s.t, u = s.u, cur = s.value;
            auto at = [&](double tt, double uu) { return offer_exact(e, tr, win, xa + tt * la, xb + uu * lb); };
            for (int round = 0; round < cfg_.refine; ++round) {
                const double prev = cur;
                auto [nt, vt] = detail::line_max([&](double x) { return at(x, u); }, 1.0, g, cfg_.tol);
                if (vt > cur) t = nt, cur = vt;
                auto [nu, vu] = detail::line_max([&](double x) { return at(t, x); }, 1.0, g, cfg_.tol);
                if (vu > cur) u = nu, cur = vu;
                if (!(cur - prev > cfg_.tol * std::max(1.0, std::abs(cur)))) break;
            }
        }
        return upper;
    }

    // Returns the best value found; this regime is searched, not bounded.
    double long_arcs(const Expr& e, Tracker& tr, const Window& win, bool wrap) const {
        const double period = e.period();
        const double top = wrap ? (cfg_.max_periods + 1.0) * period : period;
        const double step = std::pow(2.0, 0.25);
        double best = kNegInf;
        for (const Copy& c : e.copies()) {
            for (int k = 0; k < 2; ++k) {
                const double l = e.layout_origin() + c.start + 0.5 * k * c.length;
                for (double len = period / 64.0; len <= top * (1.0 + 1e-12); len *= step)
                    best = std::max(best, offer_exact(e, tr, win, l, l + len));
                best = std::max(best, offer_exact(e, tr, win, l, l + top));
            }
        }
        return best;
    }

    const Objective& obj_;
    const SearchConfig& cfg_;
    std::map<const Expr*, NodeResult> memo_;
};

}  // namespace

SearchReport search(const Expr& e, const Objective& obj, const SearchConfig& cfg) {
    cfg.validate();
    obj.validate();
    if (obj.needs_positive() && !(e.atoms().front() > 0.0)) throw InputError("weight must be positive-valued");
    SearchReport rep;
    rep.objective = obj.name();
    rep.config = cfg;
    if (e.kind() == Expr::Kind::leaf) {
        rep = search(e.function(), obj, cfg);
        return rep;
    }
    DagSearch ds(obj, cfg);
    const NodeResult r = ds.solve_root(e);
    rep.witness = {r.best.left, r.best.right};
    rep.lower = objective_on(e, obj, rep.witness);
    rep.evaluations = r.evaluations;
    if (cfg.certify) rep.upper = std::max(r.upper, rep.lower);
    return rep;
}

SearchReport bmo_norm(const Expr& e, double p, const SearchConfig& cfg) {
    if (e.periodic()) throw InputError("bmo_norm: non-periodic construction expected (use the circle variant)");
    return search(e, Objective::bmo(p), cfg);
}

SearchReport circle_bmo_norm(const Expr& e, double p, const SearchConfig& cfg) {
    if (!e.periodic()) throw InputError("circle_bmo_norm: periodic construction expected");
    return search(e, Objective::bmo(p), cfg);
}

SearchReport ap_constant(const Expr& w, double p, const SearchConfig& cfg) { return search(w, Objective::ap(p), cfg); }

SearchReport a_inf_constant(const Expr& w, const SearchConfig& cfg) { return search(w, Objective::a_inf(), cfg); }

}  // namespace bmo
