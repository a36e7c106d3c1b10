#include "bmo/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "bmo/errors.hpp"
#include "search_internal.hpp"

namespace bmo {
namespace {

std::string num(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

std::string path_text(const std::vector<int>& path) {
    std::string s = "root";
    for (int i : path) s += "/" + std::to_string(i);
    return s;
}

Distribution mixture(const std::vector<Branch>& children) {
    std::vector<Atom> atoms;
    for (const auto& b : children)
        for (const auto& a : std::get<Distribution>(b.node->value).atoms()) atoms.push_back({a.value, b.prob * a.weight});
    return Distribution::from_atoms(std::move(atoms));
}

PlanePoint barycenter(const std::vector<Branch>& children) {
    PlanePoint x{0.0, 0.0};
    for (const auto& b : children) {
        const auto& y = std::get<PlanePoint>(b.node->value);
        x.x1 += b.prob * y.x1;
        x.x2 += b.prob * y.x2;
    }
    return x;
}

}  // namespace

MartingaleNodePtr make_node(Distribution d, std::vector<Branch> children) {
    auto n = std::make_shared<MartingaleNode>();
    n->value = std::move(d);
    n->children = std::move(children);
    return n;
}

MartingaleNodePtr make_node(PlanePoint x, std::vector<Branch> children) {
    auto n = std::make_shared<MartingaleNode>();
    n->value = x;
    n->children = std::move(children);
    return n;
}

MartingaleTree::MartingaleTree(MartingaleNodePtr root) : root_(std::move(root)) {
    if (!root_) throw InputError("martingale: missing root");
    kind_ = std::holds_alternative<Distribution>(root_->value) ? Kind::measure : Kind::point;
    std::map<const MartingaleNode*, int> seen;  // node -> height
    std::vector<int> path;
    std::function<int(const MartingaleNode&)> check = [&](const MartingaleNode& n) -> int {
        if (auto it = seen.find(&n); it != seen.end()) return it->second;
        const bool measure = std::holds_alternative<Distribution>(n.value);
        if (measure != (kind_ == Kind::measure))
            throw InputError("martingale: mixed node value kinds at " + path_text(path));
        if (n.is_leaf()) {
            if (measure && !std::get<Distribution>(n.value).is_delta())
                throw InputError("martingale: measure-valued leaf is not a delta measure at " + path_text(path));
            if (!measure) {
                const auto& x = std::get<PlanePoint>(n.value);
                if (!std::isfinite(x.x1) || !std::isfinite(x.x2))
                    throw InputError("martingale: non-finite point at " + path_text(path));
            }
            seen[&n] = 0;
            return 0;
        }
        double total = 0.0;
        int height = 0;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            const auto& b = n.children[i];
            if (!b.node) throw InputError("martingale: missing child at " + path_text(path));
            if (!(b.prob > 0.0) || !std::isfinite(b.prob))
                throw InputError("martingale: edge probabilities must be positive at " + path_text(path));
            total += b.prob;
            path.push_back(static_cast<int>(i));
            height = std::max(height, check(*b.node) + 1);
            path.pop_back();
        }
        if (std::abs(total - 1.0) > kMartingaleTol)
            throw InputError("martingale: edge probabilities sum to " + num(total) + " at " + path_text(path));
        if (measure) {
            const double tv = tv_distance(std::get<Distribution>(n.value), mixture(n.children));
            if (!(tv < kMartingaleTol))
                throw InputError("martingale: node is not the mixture of its children (TV " + num(tv) + ") at " +
                                 path_text(path));
        } else {
            const auto& x = std::get<PlanePoint>(n.value);
            const auto y = barycenter(n.children);
            const double d = std::hypot(x.x1 - y.x1, x.x2 - y.x2);
            if (!(d < kMartingaleTol * std::max(1.0, std::hypot(x.x1, x.x2))))
                throw InputError("martingale: node is not the barycenter of its children (distance " + num(d) +
                                 ") at " + path_text(path));
        }
        seen[&n] = height;
        return height;
    };
    depth_ = check(*root_);
}

// ---------------------------------------------------------------- curves

BoundaryCurve BoundaryCurve::power(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InputError("power curve: p must be > 1");
    return {Kind::power, p};
}

PlanePoint BoundaryCurve::at(double u) const {
    if (kind == Kind::parabola) return {u, u * u};
    if (!(u > 0.0)) throw InputError("power curve: parameter must be > 0");
    return {u, std::pow(u, -1.0 / (p - 1.0))};
}

std::optional<double> BoundaryCurve::parameter(const PlanePoint& x, double tol) const {
    if (kind == Kind::power && !(x.x1 > 0.0)) return std::nullopt;
    const PlanePoint y = at(x.x1);
    if (std::abs(y.x2 - x.x2) <= tol) return x.x1;
    return std::nullopt;
}

// ---------------------------------------------------------------- domains

MembershipDomain MembershipDomain::bmo_p(double p, double eps) {
    MembershipDomain d{Kind::bmo_p, p, eps};
    d.validate();
    return d;
}

MembershipDomain MembershipDomain::muckenhoupt_ap(double p, double c) {
    MembershipDomain d{Kind::muckenhoupt_ap, p, c};
    d.validate();
    return d;
}

MembershipDomain MembershipDomain::parabola_strip(double eps) {
    MembershipDomain d{Kind::parabola_strip, 2.0, eps};
    d.validate();
    return d;
}

MembershipDomain MembershipDomain::power_curve_strip(double p, double c) {
    MembershipDomain d{Kind::power_curve_strip, p, c};
    d.validate();
    return d;
}

void MembershipDomain::validate() const {
    if (!std::isfinite(p) || !std::isfinite(bound)) throw InputError("domain: parameters must be finite");
    switch (kind) {
        case Kind::bmo_p:
            if (!(p >= 1.0)) throw InputError("domain: p must be >= 1");
            if (!(bound > 0.0)) throw InputError("domain: epsilon must be > 0");
            break;
        case Kind::parabola_strip:
            if (!(bound > 0.0)) throw InputError("domain: epsilon must be > 0");
            break;
        case Kind::muckenhoupt_ap:
        case Kind::power_curve_strip:
            if (!(p > 1.0)) throw InputError("domain: p must be > 1");
            if (!(bound > 1.0)) throw InputError("domain: C must be > 1");
            break;
    }
}

std::string MembershipDomain::name() const {
    switch (kind) {
        case Kind::bmo_p: return "bmo_p";
        case Kind::muckenhoupt_ap: return "muckenhoupt_ap";
        case Kind::parabola_strip: return "parabola_strip";
        case Kind::power_curve_strip: return "power_curve_strip";
    }
    return "?";
}

namespace {

double measure_margin(const MembershipDomain& dom, std::span<const double> values, std::span<const double> weights) {
    if (dom.kind == MembershipDomain::Kind::bmo_p)
        return evaluate(Functional::central_moment(dom.p), values, weights) - std::pow(dom.bound, dom.p);
    return evaluate(Functional::ap_form(dom.p), values, weights) - dom.bound;
}

}  // namespace

double MembershipDomain::margin(const Distribution& d) const {
    if (!measure_valued()) throw InputError("domain " + name() + " takes plane points");
    std::vector<double> v, w;
    for (const auto& a : d.atoms()) v.push_back(a.value), w.push_back(a.weight);
    if (kind == Kind::muckenhoupt_ap && !(d.min_value() > 0.0)) throw InputError("A_p domain needs positive atoms");
    return measure_margin(*this, v, w);
}

double MembershipDomain::margin(const PlanePoint& x) const {
    if (measure_valued()) throw InputError("domain " + name() + " takes measures");
    if (kind == Kind::parabola_strip) return x.x2 - x.x1 * x.x1 - bound * bound;
    if (!(x.x1 > 0.0)) throw InputError("power curve domain needs x1 > 0");
    return x.x2 - bound * std::pow(x.x1, -1.0 / (p - 1.0));
}

double MembershipDomain::segment_max(const PlanePoint& a, const PlanePoint& b) const {
    // Both functionals are concave along segments: check the stationary point.
    double best = std::max(margin(a), margin(b));
    const double d1 = b.x1 - a.x1, d2 = b.x2 - a.x2;
    if (d1 == 0.0) return best;
    double xs;
    if (kind == Kind::parabola_strip) {
        xs = d2 / (2.0 * d1);
    } else {
        const double gamma = 1.0 / (p - 1.0);
        const double r = -d2 / (bound * gamma * d1);
        if (!(r > 0.0)) return best;
        xs = std::pow(r, -1.0 / (gamma + 1.0));
    }
    const double beta = (xs - a.x1) / d1;
    if (beta > 0.0 && beta < 1.0) best = std::max(best, margin(PlanePoint{a.x1 + beta * d1, a.x2 + beta * d2}));
    return best;
}

// ---------------------------------------------------------------- validation

namespace {

struct Pending {
    const MartingaleNode* node;
    std::vector<int> path;
};

// Largest membership functional over the hull of the children.
NodeMargin measure_hull_margin(const MartingaleNode& n, const MembershipDomain& dom, const SearchConfig& cfg) {
    NodeMargin out;
    out.margin = detail::kNegInf;
    const std::size_t k = n.children.size();
    std::vector<std::vector<double>> vals(k), wts(k);
    for (std::size_t i = 0; i < k; ++i)
        for (const auto& a : std::get<Distribution>(n.children[i].node->value).atoms())
            vals[i].push_back(a.value), wts[i].push_back(a.weight);

    std::vector<double> v, w;
    auto eval_mix = [&](const std::vector<double>& coef) {
        v.clear();
        w.clear();
        for (std::size_t i = 0; i < k; ++i) {
            if (coef[i] <= 0.0) continue;
            for (std::size_t j = 0; j < vals[i].size(); ++j) v.push_back(vals[i][j]), w.push_back(coef[i] * wts[i][j]);
        }
        return measure_margin(dom, v, w);
    };

    std::vector<double> coef(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        std::fill(coef.begin(), coef.end(), 0.0);
        coef[i] = 1.0;
        out.margin = std::max(out.margin, eval_mix(coef));
    }
    // Edges: fine grid, then golden refinement around the best sample.
    const int samples = std::max(65, 16 * cfg.grid + 1);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            auto along = [&](double s) {
                std::fill(coef.begin(), coef.end(), 0.0);
                coef[i] = 1.0 - s;
                coef[j] = s;
                return eval_mix(coef);
            };
            const auto [s, m] = detail::line_max(along, 1.0, samples, std::min(cfg.tol, 1e-10));
            (void)s;
            out.margin = std::max(out.margin, m);
        }
    }
    // Interiors of larger simplices: barycentric grid only.
    if (k >= 3) {
        out.sampled = true;
        const int res = std::max(cfg.grid, 3);
        std::vector<int> c(k, 0);
        std::function<void(std::size_t, int)> rec = [&](std::size_t idx, int left) {
            if (idx + 1 == k) {
                c[idx] = left;
                int nonzero = 0;
                for (int x : c) nonzero += x > 0;
                if (nonzero < 3) return;
                for (std::size_t t = 0; t < k; ++t) coef[t] = static_cast<double>(c[t]) / res;
                out.margin = std::max(out.margin, eval_mix(coef));
                return;
            }
            for (int x = 0; x <= left; ++x) {
                c[idx] = x;
                rec(idx + 1, left - x);
            }
        };
        if (k <= 8) rec(0, res);
    }
    return out;
}

NodeMargin point_hull_margin(const MartingaleNode& n, const MembershipDomain& dom) {
    NodeMargin out;
    out.margin = detail::kNegInf;
    const std::size_t k = n.children.size();
    for (std::size_t i = 0; i < k; ++i) {
        const auto& a = std::get<PlanePoint>(n.children[i].node->value);
        out.margin = std::max(out.margin, dom.margin(a));
        for (std::size_t j = i + 1; j < k; ++j)
            out.margin = std::max(out.margin, dom.segment_max(a, std::get<PlanePoint>(n.children[j].node->value)));
    }
    // A concave functional can peak inside a larger hull; sample it.
    if (k >= 3) {
        out.sampled = true;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j)
                for (std::size_t l = j + 1; l < k; ++l)
                    for (int s = 1; s < 16; ++s)
                        for (int t = 1; s + t < 16; ++t) {
                            const double u = s / 16.0, vv = t / 16.0, r = 1.0 - u - vv;
                            const auto& a = std::get<PlanePoint>(n.children[i].node->value);
                            const auto& b = std::get<PlanePoint>(n.children[j].node->value);
                            const auto& c = std::get<PlanePoint>(n.children[l].node->value);
                            out.margin = std::max(out.margin, dom.margin(PlanePoint{u * a.x1 + vv * b.x1 + r * c.x1,
                                                                                    u * a.x2 + vv * b.x2 + r * c.x2}));
                        }
    }
    return out;
}

}  // namespace

ValidationReport validate_membership(const MartingaleTree& m, const MembershipDomain& dom, const SearchConfig& cfg) {
    dom.validate();
    cfg.validate();
    const bool measure = m.kind() == MartingaleTree::Kind::measure;
    if (measure != dom.measure_valued())
        throw InputError("validate: domain " + dom.name() + " does not match the martingale kind");

    ValidationReport rep;
    std::vector<Pending> internal;
    std::map<const MartingaleNode*, bool> seen;
    std::function<void(const MartingaleNode&, std::vector<int>&)> walk = [&](const MartingaleNode& n,
                                                                              std::vector<int>& path) {
        if (!seen.emplace(&n, true).second) return;
        if (n.is_leaf()) {
            if (!measure && rep.failure.empty()) {
                const auto curve = dom.kind == MembershipDomain::Kind::parabola_strip ? BoundaryCurve::parabola()
                                                                                    : BoundaryCurve::power(dom.p);
                if (!curve.parameter(std::get<PlanePoint>(n.value))) {
                    rep.failure = "leaf off the boundary curve at " + path_text(path);
                    rep.offending_path = path;
                }
            }
            if (measure && dom.kind == MembershipDomain::Kind::muckenhoupt_ap &&
                !(std::get<Distribution>(n.value).min_value() > 0.0))
                throw InputError("validate: A_p domain needs positive atoms");
            return;
        }
        internal.push_back({&n, path});
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            path.push_back(static_cast<int>(i));
            walk(*n.children[i].node, path);
            path.pop_back();
        }
    };
    std::vector<int> path;
    walk(m.root(), path);

    rep.nodes.resize(internal.size());
    const int nt = std::max(1, std::min<int>(cfg.threads, static_cast<int>(internal.size())));
    auto work = [&](int t) {
        for (std::size_t i = static_cast<std::size_t>(t); i < internal.size(); i += static_cast<std::size_t>(nt)) {
            const auto& n = *internal[i].node;
            rep.nodes[i] = measure ? measure_hull_margin(n, dom, cfg) : point_hull_margin(n, dom);
            rep.nodes[i].path = internal[i].path;
        }
    };
    if (nt == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }

    rep.worst_margin = detail::kNegInf;
    for (const auto& nm : rep.nodes) {
        rep.worst_margin = std::max(rep.worst_margin, nm.margin);
        if (!(nm.margin < 0.0) && rep.failure.empty()) {
            rep.failure = "hull leaves the domain at " + path_text(nm.path) + " (margin " + num(nm.margin) + ")";
            rep.offending_path = nm.path;
        }
    }
    if (rep.nodes.empty()) {
        // A single leaf: its own value must lie in the domain.
        rep.worst_margin = measure ? dom.margin(std::get<Distribution>(m.root().value))
                                   : dom.margin(std::get<PlanePoint>(m.root().value));
        if (!(rep.worst_margin < 0.0) && rep.failure.empty()) rep.failure = "root outside the domain";
    }
    rep.pass = rep.failure.empty();
    return rep;
}

// ---------------------------------------------------------------- lift / compile

MartingaleTree lift(const MartingaleTree& m, const BoundaryCurve& curve) {
    if (m.kind() != MartingaleTree::Kind::point) throw InputError("lift: point-valued martingale expected");
    std::map<const MartingaleNode*, MartingaleNodePtr> memo;
    std::vector<int> path;
    std::function<MartingaleNodePtr(const MartingaleNode&)> go = [&](const MartingaleNode& n) -> MartingaleNodePtr {
        if (auto it = memo.find(&n); it != memo.end()) return it->second;
        MartingaleNodePtr out;
        if (n.is_leaf()) {
            const auto u = curve.parameter(std::get<PlanePoint>(n.value));
            if (!u) throw InputError("lift: leaf off the boundary curve at " + path_text(path));
            out = make_node(Distribution::delta(*u));
        } else {
            std::vector<Branch> kids;
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                path.push_back(static_cast<int>(i));
                kids.push_back({n.children[i].prob, go(*n.children[i].node)});
                path.pop_back();
            }
            auto d = mixture(kids);
            out = make_node(std::move(d), std::move(kids));
        }
        memo[&n] = out;
        return out;
    };
    return MartingaleTree(go(m.root()));
}

ExprPtr compile_to_circle(const MartingaleTree& m, const std::vector<HomSchedule>& schedule) {
    if (m.kind() != MartingaleTree::Kind::measure) throw InputError("compile: measure-valued martingale expected");
    for (const auto& s : schedule)
        if (s.levels < 0) throw InputError("compile: schedule levels must be >= 0");
    auto params = [&](int depth) {
        HomSchedule s = schedule.empty() ? HomSchedule{}
                                         : schedule[static_cast<std::size_t>(
                                               std::min<int>(depth, static_cast<int>(schedule.size()) - 1))];
        if (s.levels == 0) s.levels = default_levels(s.lambda_hom);
        return s;
    };
    std::map<std::pair<const MartingaleNode*, int>, ExprPtr> memo;
    std::function<ExprPtr(const MartingaleNode&, int)> go = [&](const MartingaleNode& n, int depth) -> ExprPtr {
        const auto key = std::make_pair(&n, depth);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        ExprPtr out;
        if (n.is_leaf()) {
            const auto& d = std::get<Distribution>(n.value);
            if (!d.is_delta()) throw InputError("compile: leaf is not a delta measure");
            out = constant(d.min_value());
        } else if (n.children.size() == 1) {
            out = go(*n.children[0].node, depth + 1);
        } else {
            const HomSchedule s = params(depth);
            out = go(*n.children[0].node, depth + 1);
            double cum = n.children[0].prob;
            for (std::size_t i = 1; i < n.children.size(); ++i) {
                cum += n.children[i].prob;
                const double alpha = n.children[i].prob / cum;
                out = glue_node(out, go(*n.children[i].node, depth + 1), alpha, s.lambda_hom, s.levels);
            }
        }
        memo[key] = out;
        return out;
    };
    return go(m.root(), 0);
}

// ---------------------------------------------------------------- staircases

namespace {

// Mean of log over [a, lambda a].
double log_mean(double log_a, double lambda) {
    const double d = lambda - 1.0;
    return log_a + lambda * std::log1p(d) / d - 1.0;
}

// Mean of x^alpha over [a, lambda a].
double power_mean_cell(double log_a, double alpha, double lambda) {
    const double base = std::exp(alpha * log_a);
    if (alpha == 0.0) return 1.0;
    const double e = alpha + 1.0;
    return base * std::expm1(e * std::log(lambda)) / (e * (lambda - 1.0));
}

// Staircase on [0, 1] with cell values v[k-1] on I_k and `tail` on [0, lambda^-N],
// plus the martingale splitting one cell off the tail per step.
Staircase build_staircase(double lambda, const std::vector<double>& v, double tail) {
    const int n = static_cast<int>(v.size());
    const double ll = std::log(lambda);
    std::vector<double> bp{0.0, std::exp(-n * ll)}, vals{tail};
    for (int k = n; k >= 1; --k) {
        bp.push_back(k == 1 ? 1.0 : std::exp(-(k - 1) * ll));
        vals.push_back(v[static_cast<std::size_t>(k - 1)]);
    }
    StepFunction f(DomainShape::interval(0.0, 1.0), std::move(bp), std::move(vals));

    const double keep = 1.0 / lambda;
    MartingaleNodePtr node = make_node(Distribution::delta(tail));
    for (int k = n; k >= 1; --k) {
        auto leaf = make_node(Distribution::delta(v[static_cast<std::size_t>(k - 1)]));
        std::vector<Branch> kids{{1.0 - keep, leaf}, {keep, node}};
        auto d = mixture(kids);
        node = make_node(std::move(d), std::move(kids));
    }
    return {std::move(f), MartingaleTree(node)};
}

}  // namespace

Staircase log_staircase(double lambda, int n) {
    if (!(lambda > 1.0) || !std::isfinite(lambda)) throw InputError("staircase: lambda must be > 1");
    if (n < 1) throw InputError("staircase: N must be >= 1");
    const double ll = std::log(lambda);
    std::vector<double> v;
    for (int k = 1; k <= n; ++k) v.push_back(log_mean(-k * ll, lambda));
    return build_staircase(lambda, v, -n * ll);
}

StepFunction psi_truncated(double lambda, int n_total, int n, double s) {
    if (!(lambda > 1.0) || !std::isfinite(lambda)) throw InputError("psi: lambda must be > 1");
    if (n < 1 || n > n_total) throw InputError("psi: need 1 <= n <= N");
    const double ll = std::log(lambda);
    const double cut = std::exp(-n * ll);
    if (!(s >= cut) || !std::isfinite(s)) throw InputError("psi: s must be >= lambda^-n");
    std::vector<double> bp{0.0, std::exp(-n_total * ll)}, vals{-n_total * ll};
    for (int k = n_total; k > n; --k) {
        bp.push_back(std::exp(-(k - 1) * ll));
        vals.push_back(log_mean(-k * ll, lambda));
    }
    bp.back() = cut;
    if (s > cut) {
        bp.push_back(s);
        vals.push_back(log_mean(-n * ll, lambda));
    }
    return {DomainShape::interval(0.0, bp.back()), std::move(bp), std::move(vals)};
}

Staircase power_staircase(double alpha, double p, double lambda, int n) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InputError("power staircase: p must be > 1");
    if (!(lambda > 1.0) || !std::isfinite(lambda)) throw InputError("power staircase: lambda must be > 1");
    if (n < 1) throw InputError("power staircase: N must be >= 1");
    if (!(alpha > -1.0) || !(alpha / (p - 1.0) < 1.0))
        throw InputError("power staircase: need alpha > -1 and alpha/(p-1) < 1");
    const double ll = std::log(lambda);
    std::vector<double> v;
    for (int k = 1; k <= n; ++k) v.push_back(power_mean_cell(-k * ll, alpha, lambda));
    return build_staircase(lambda, v, std::exp(-n * ll * alpha));
}

}  // namespace bmo
