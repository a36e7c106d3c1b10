#include "bmo/construct.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "bmo/errors.hpp"

namespace bmo {

int default_levels(double lambda_hom) {
    if (!(lambda_hom > 0.0 && lambda_hom < 1.0)) throw InputError("lambda_hom must lie in (0, 1)");
    return std::max(1, static_cast<int>(std::ceil(std::log(1e-3) / std::log(lambda_hom) - 1e-9)));
}

const char* Expr::kind_name() const {
    switch (kind_) {
        case Kind::leaf: return "leaf";
        case Kind::constant: return "const";
        case Kind::hom: return "hom";
        case Kind::glue: return "glue";
        case Kind::periodize: return "periodize";
    }
    return "?";
}

Distribution Expr::distribution() const {
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
        if (weights_[i] > 0.0) atoms.push_back({atoms_[i], weights_[i]});
    return Distribution::from_atoms(std::move(atoms));
}

std::size_t Expr::copy_index_at(double layout_pos) const {
    auto it = std::upper_bound(copies_.begin(), copies_.end(), layout_pos,
                               [](double x, const Copy& c) { return x < c.start; });
    if (it == copies_.begin()) return 0;
    return static_cast<std::size_t>(it - copies_.begin()) - 1;
}

namespace {

// Merges sorted atom lists within kMergeTol; fills per-list index maps.
std::vector<double> merge_atoms(const std::vector<const std::vector<double>*>& lists,
                                std::vector<std::vector<int>>& maps) {
    struct Item {
        double value;
        std::size_t list;
        std::size_t index;
    };
    std::vector<Item> items;
    for (std::size_t l = 0; l < lists.size(); ++l)
        for (std::size_t i = 0; i < lists[l]->size(); ++i) items.push_back({(*lists[l])[i], l, i});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.value < b.value; });
    maps.assign(lists.size(), {});
    for (std::size_t l = 0; l < lists.size(); ++l) maps[l].assign(lists[l]->size(), 0);
    std::vector<double> out;
    for (const auto& it : items) {
        if (out.empty() || it.value - out.back() > kMergeTol) out.push_back(it.value);
        maps[it.list][it.index] = static_cast<int>(out.size()) - 1;
    }
    return out;
}

void check_hom_params(double lambda_hom, int levels) {
    if (!(lambda_hom > 0.0 && lambda_hom < 1.0))
        throw InputError("lambda_hom must lie in (0, 1), got " + std::to_string(lambda_hom));
    if (levels < 1) throw InputError("levels (K) must be >= 1, got " + std::to_string(levels));
}

// Homogenization partition of [0, 1) (relative to the left end of [-1/2, 1/2]).
std::vector<std::pair<double, double>> hom_partition(double lambda_hom, int levels) {
    std::vector<double> cuts;  // positive-side cut points (1 - lambda^k) / 2, k = 0..K
    double lk = 1.0;
    for (int k = 0; k <= levels; ++k) {
        cuts.push_back((1.0 - lk) / 2.0);
        lk *= lambda_hom;
    }
    std::vector<double> pts;
    pts.push_back(-0.5);
    for (int k = levels; k >= 1; --k) pts.push_back(-cuts[static_cast<std::size_t>(k)]);
    pts.push_back(0.0);
    for (int k = 1; k <= levels; ++k) pts.push_back(cuts[static_cast<std::size_t>(k)]);
    pts.push_back(0.5);
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (!(pts[i + 1] > pts[i])) throw InputError("homogenization partition degenerates; reduce levels");
        out.emplace_back(pts[i] + 0.5, pts[i + 1] - pts[i]);
    }
    return out;
}

}  // namespace

void Expr::finish_composite() {
    std::vector<const std::vector<double>*> lists;
    for (const auto& c : children_) lists.push_back(&c->atoms());
    atoms_ = merge_atoms(lists, child_maps_);

    weights_.assign(atoms_.size(), 0.0);
    std::vector<double> slot_len(children_.size(), 0.0);
    for (const auto& c : copies_) slot_len[static_cast<std::size_t>(c.slot)] += c.length;
    const double total = period();
    raw_pieces_ = 0.0;
    depth_ = 0;
    for (std::size_t s = 0; s < children_.size(); ++s) {
        const auto& child = *children_[s];
        const double share = kind_ == Kind::glue ? (s == 0 ? 1.0 - alpha_ : alpha_) : slot_len[s] / total;
        for (std::size_t i = 0; i < child.atoms().size(); ++i)
            weights_[static_cast<std::size_t>(child_maps_[s][i])] += share * child.weights()[i];
        depth_ = std::max(depth_, child.depth() + 1);
    }
    slot_prefix_.assign(children_.size(), std::vector<double>(copies_.size() + 1, 0.0));
    for (std::size_t c = 0; c < copies_.size(); ++c) {
        for (std::size_t s = 0; s < children_.size(); ++s) slot_prefix_[s][c + 1] = slot_prefix_[s][c];
        slot_prefix_[static_cast<std::size_t>(copies_[c].slot)][c + 1] += copies_[c].length;
        raw_pieces_ += children_[static_cast<std::size_t>(copies_[c].slot)]->raw_piece_count();
    }
}

ExprPtr leaf(StepFunction f) {
    std::shared_ptr<Expr> e(new Expr());
    e->kind_ = Expr::Kind::leaf;
    e->carrier_ = {f.start(), f.end()};
    e->periodic_ = f.is_circle();
    std::vector<double> sorted = f.values();
    std::sort(sorted.begin(), sorted.end());
    for (double v : sorted)
        if (e->atoms_.empty() || v - e->atoms_.back() > kMergeTol) e->atoms_.push_back(v);
    e->weights_.assign(e->atoms_.size(), 0.0);
    for (std::size_t i = 0; i < f.pieces(); ++i) {
        const double v = f.values()[i];
        auto it = std::upper_bound(e->atoms_.begin(), e->atoms_.end(), v + kMergeTol);
        const int idx = static_cast<int>(it - e->atoms_.begin()) - 1;
        e->piece_atoms_.push_back(idx);
        e->weights_[static_cast<std::size_t>(idx)] += f.piece_length(i) / f.carrier_length();
    }
    e->raw_pieces_ = static_cast<double>(f.pieces());
    e->function_ = std::move(f);
    return e;
}

ExprPtr constant(double value) {
    if (!std::isfinite(value)) throw InputError("constant: value must be finite");
    std::shared_ptr<Expr> e(new Expr());
    e->kind_ = Expr::Kind::constant;
    e->atoms_ = {value};
    e->weights_ = {1.0};
    return e;
}

ExprPtr hom_node(ExprPtr child, double lambda_hom, int levels) {
    if (!child) throw InputError("hom: missing child");
    check_hom_params(lambda_hom, levels);
    std::shared_ptr<Expr> e(new Expr());
    e->kind_ = Expr::Kind::hom;
    e->periodic_ = child->periodic();
    e->lambda_hom_ = lambda_hom;
    e->levels_ = levels;
    for (const auto& [start, len] : hom_partition(lambda_hom, levels)) e->copies_.push_back({start, len, 0});
    e->children_ = {std::move(child)};
    e->finish_composite();
    e->finish_seam();
    return e;
}

ExprPtr glue_node(ExprPtr e0, ExprPtr e1, double alpha, double lambda_hom, int levels) {
    if (!e0 || !e1) throw InputError("glue: missing child");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("glue: alpha must lie in (0, 1), got " + std::to_string(alpha));
    check_hom_params(lambda_hom, levels);
    std::shared_ptr<Expr> e(new Expr());
    e->kind_ = Expr::Kind::glue;
    e->periodic_ = true;
    e->origin_ = 0.0;
    e->alpha_ = alpha;
    e->lambda_hom_ = lambda_hom;
    e->levels_ = levels;
    const auto part = hom_partition(lambda_hom, levels);
    for (const auto& [start, len] : part) e->copies_.push_back({alpha * start, alpha * len, 1});
    for (const auto& [start, len] : part) e->copies_.push_back({alpha + (1.0 - alpha) * start, (1.0 - alpha) * len, 0});
    e->children_ = {std::move(e0), std::move(e1)};
    e->finish_composite();
    e->finish_seam();
    return e;
}

ExprPtr periodize(ExprPtr child) {
    if (!child) throw InputError("periodize: missing child");
    std::shared_ptr<Expr> e(new Expr());
    e->kind_ = Expr::Kind::periodize;
    e->periodic_ = true;
    e->copies_ = {{0.0, 1.0, 0}};
    e->children_ = {std::move(child)};
    e->finish_composite();
    e->finish_seam();
    return e;
}

// ---------------------------------------------------------------- queries

namespace {

class Accumulator {
public:
    Accumulator(std::vector<double>& acc, int depth_limit) : acc_(acc), limit_(depth_limit) {}

    void run(const Expr& e, double l, double r, double scale, std::span<const int> map, int level) {
        ++visits;
        depth = std::max(depth, level);
        if (level > limit_) throw InternalError("query recursion exceeded 10 x construction depth");
        switch (e.kind()) {
            case Expr::Kind::constant:
                acc_[static_cast<std::size_t>(map[0])] += (r - l) * scale;
                return;
            case Expr::Kind::leaf: {
                const auto& f = e.function();
                if (!f.is_circle()) {
                    l = std::max(l, f.start());
                    r = std::min(r, f.end());
                    if (!(r > l)) return;
                }
                const auto lengths = f.overlap_lengths({l, r});
                for (std::size_t i = 0; i < lengths.size(); ++i)
                    if (lengths[i] > 0.0)
                        acc_[static_cast<std::size_t>(map[static_cast<std::size_t>(e.piece_atoms()[i])])] +=
                            lengths[i] * scale;
                return;
            }
            default:
                composite(e, l, r, scale, map, level);
        }
    }

    int depth = 0;
    long visits = 0;
    double partial_top = 0.0;

    void partial(const Expr& e, std::size_t c, double s, double t, double scale, std::span<const int> map, int level) {
        const Copy& cp = e.copies()[c];
        s = std::max(s, cp.start);
        t = std::min(t, cp.end());
        if (!(t > s)) return;
        if (s <= cp.start && t >= cp.end()) {
            add_child(e, cp.slot, cp.length * scale, map);
            return;
        }
        if (level == 0) partial_top += t - s;
        const auto& child = *e.children()[static_cast<std::size_t>(cp.slot)];
        const Interval w = child.carrier();
        const double ratio = w.length() / cp.length;
        const double cl = w.left + (s - cp.start) * ratio;
        const double cr = t >= cp.end() ? w.right : w.left + (t - cp.start) * ratio;
        const auto& cm = e.child_atom_map(cp.slot);
        std::vector<int> composed(cm.size());
        for (std::size_t i = 0; i < cm.size(); ++i) composed[i] = map[static_cast<std::size_t>(cm[i])];
        run(child, cl, std::max(cr, cl), scale / ratio, composed, level + 1);
    }

private:
    void add_node(const Expr& e, double mass, std::span<const int> map) {
        for (std::size_t i = 0; i < e.atoms().size(); ++i)
            acc_[static_cast<std::size_t>(map[i])] += mass * e.weights()[i];
    }

    void composite(const Expr& e, double l, double r, double scale, std::span<const int> map, int level) {
        const double period = e.period();
        double u = l - e.layout_origin();
        double v = r - e.layout_origin();
        if (e.periodic()) {
            const double k = std::floor(u / period);
            u -= k * period;
            v -= k * period;
            if (u >= period) {  // rounding
                u -= period;
                v -= period;
            }
        } else {
            u = std::max(u, 0.0);
            v = std::min(v, period);
        }
        if (!(v > u)) return;
        if (v <= period) {
            within(e, u, v, scale, map, level);
            return;
        }
        within(e, u, period, scale, map, level);
        const double q = std::floor(v / period);
        if (q >= 2.0) add_node(e, (q - 1.0) * period * scale, map);
        const double rest = v - q * period;
        if (rest > 0.0) within(e, 0.0, rest, scale, map, level);
    }

    void within(const Expr& e, double u, double v, double scale, std::span<const int> map, int level) {
        const auto& copies = e.copies();
        const std::size_t ca = e.copy_index_at(u);
        auto it = std::lower_bound(copies.begin(), copies.end(), v, [](const Copy& c, double x) { return c.start < x; });
        std::size_t cb = it == copies.begin() ? 0 : static_cast<std::size_t>(it - copies.begin()) - 1;
        cb = std::max(cb, ca);
        if (ca == cb) {
            partial(e, ca, u, v, scale, map, level);
            return;
        }
        if (e.has_seam() && u == e.seam())
            add_weights(e.seam_after(), scale, map);
        else
            partial(e, ca, u, copies[ca].end(), scale, map, level);
        for (std::size_t s = 0; s < e.children().size(); ++s) {
            const int slot = static_cast<int>(s);
            const double len = e.slot_prefix(slot, cb) - e.slot_prefix(slot, ca + 1);
            if (len > 0.0) add_child(e, slot, len * scale, map);
        }
        if (e.has_seam() && v == e.seam())
            add_weights(e.seam_before(), scale, map);
        else
            partial(e, cb, copies[cb].start, v, scale, map, level);
    }

    void add_weights(const std::vector<double>& w, double scale, std::span<const int> map) {
        for (std::size_t i = 0; i < w.size(); ++i) acc_[static_cast<std::size_t>(map[i])] += w[i] * scale;
    }

    void add_child(const Expr& e, int slot, double mass, std::span<const int> map) {
        const auto& child = *e.children()[static_cast<std::size_t>(slot)];
        const auto& cm = e.child_atom_map(slot);
        for (std::size_t i = 0; i < child.atoms().size(); ++i)
            acc_[static_cast<std::size_t>(map[static_cast<std::size_t>(cm[i])])] += mass * child.weights()[i];
    }

    std::vector<double>& acc_;
    int limit_;
};

}  // namespace

void Expr::finish_seam() {
    const double p = period();
    double d = carrier_.left - origin_;
    d -= std::floor(d / p) * p;
    if (!periodic_ || d <= 0.0 || d >= p) return;
    const std::size_t c = copy_index_at(d);
    const Copy& cp = copies_[c];
    if (!(d > cp.start && d < cp.end())) return;
    std::vector<int> identity(atoms_.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
    const int limit = 10 * (depth_ + 1);
    seam_before_.assign(atoms_.size(), 0.0);
    seam_after_.assign(atoms_.size(), 0.0);
    Accumulator before(seam_before_, limit), after(seam_after_, limit);
    before.partial(*this, c, cp.start, d, 1.0, identity, 0);
    after.partial(*this, c, d, cp.end(), 1.0, identity, 0);
    seam_ = d;
    has_seam_ = true;
}

namespace {

void check_expr_query(const Expr& e, const Interval& j) {
    if (!std::isfinite(j.left) || !std::isfinite(j.right) || !(j.left < j.right))
        throw InputError("query: interval needs finite left < right");
    if (!e.periodic()) {
        const Interval c = e.carrier();
        const double slack = 1e-12 * (1.0 + c.length());
        if (j.left < c.left - slack || j.right > c.right + slack)
            throw InputError("query: interval outside the non-periodic carrier");
    }
}

}  // namespace

QueryAccumulation accumulate(const Expr& e, const Interval& j) {
    check_expr_query(e, j);
    QueryAccumulation out;
    out.weights.assign(e.atoms().size(), 0.0);
    std::vector<int> identity(e.atoms().size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
    Accumulator acc(out.weights, 10 * (e.depth() + 1));
    acc.run(e, j.left, j.right, 1.0, identity, 0);
    out.depth = acc.depth;
    out.visits = acc.visits;
    out.partial_end_length = acc.partial_top;
    return out;
}

QueryResult query(const Expr& e, const Interval& j, const Functional& fn) {
    fn.validate();
    const auto a = accumulate(e, j);
    QueryResult r;
    r.value = evaluate(fn, e.atoms(), a.weights);
    r.depth = a.depth;
    r.partial_end_weight = a.partial_end_length / j.length();
    r.visits = a.visits;
    return r;
}

Distribution query_distribution(const Expr& e, const Interval& j) {
    const auto a = accumulate(e, j);
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        if (a.weights[i] > 0.0) atoms.push_back({e.atoms()[i], a.weights[i]});
    return Distribution::from_atoms(std::move(atoms));
}

// ---------------------------------------------------------------- materialize

namespace {

struct Pieces {
    std::vector<double> bp;
    std::vector<double> values;
};

// Rotates a periodic piece list over [o, o + P) to start at s.
Pieces rotate(const Pieces& in, double s) {
    const double o = in.bp.front();
    const double period = in.bp.back() - o;
    double shift = s - o;
    shift -= std::floor(shift / period) * period;
    if (shift == 0.0) {
        Pieces out = in;
        const double d = s - o;
        for (auto& x : out.bp) x += d;
        return out;
    }
    const double cut = o + shift;
    Pieces out;
    const std::size_t n = in.values.size();
    for (int pass = 0; pass < 2; ++pass) {
        const double offset = pass == 0 ? -cut : period - cut;
        for (std::size_t i = 0; i < n; ++i) {
            double lo = in.bp[i], hi = in.bp[i + 1];
            if (pass == 0) lo = std::max(lo, cut);
            else hi = std::min(hi, cut);
            if (!(hi > lo)) continue;
            if (out.bp.empty()) out.bp.push_back(lo + offset);
            out.bp.push_back(hi + offset);
            out.values.push_back(in.values[i]);
        }
    }
    for (auto& x : out.bp) x += s;
    return out;
}

class Expander {
public:
    const Pieces& expand(const Expr& e) {
        auto found = memo_.find(&e);
        if (found != memo_.end()) return found->second;
        Pieces p;
        switch (e.kind()) {
            case Expr::Kind::leaf:
                p = {e.function().breakpoints(), e.function().values()};
                break;
            case Expr::Kind::constant:
                p = {{e.carrier().left, e.carrier().right}, {e.constant_value()}};
                break;
            default: {
                const double o = e.layout_origin();
                p.bp.push_back(o);
                for (const Copy& cp : e.copies()) {
                    const Pieces& child = expand(*e.children()[static_cast<std::size_t>(cp.slot)]);
                    const double c0 = child.bp.front();
                    const double ratio = cp.length / (child.bp.back() - c0);
                    for (std::size_t i = 0; i < child.values.size(); ++i) {
                        p.bp.push_back(o + cp.start + (child.bp[i + 1] - c0) * ratio);
                        p.values.push_back(child.values[i]);
                    }
                    p.bp.back() = o + cp.end();
                }
                p.bp.back() = o + e.period();
                if (e.carrier().left != o) p = rotate(p, e.carrier().left);
            }
        }
        return memo_.emplace(&e, std::move(p)).first->second;
    }

private:
    std::map<const Expr*, Pieces> memo_;
};

}  // namespace

StepFunction materialize(const Expr& e, std::size_t max_pieces) {
    if (e.raw_piece_count() > static_cast<double>(max_pieces)) {
        const double need = e.raw_piece_count();
        const auto required = need > 1e18 ? std::size_t(-1) : static_cast<std::size_t>(need);
        throw BudgetError("materialize: needs " + std::to_string(required) + " pieces, budget is " +
                              std::to_string(max_pieces),
                          required);
    }
    Expander ex;
    const Pieces& raw = ex.expand(e);
    std::vector<double> bp{raw.bp.front()};
    std::vector<double> values;
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        const double hi = i + 1 == raw.values.size() ? raw.bp.back() : raw.bp[i + 1];
        if (!values.empty() && values.back() == raw.values[i]) {
            bp.back() = hi;
        } else if (!(hi > bp.back())) {
            continue;  // zero-length piece from rounding
        } else {
            bp.push_back(hi);
            values.push_back(raw.values[i]);
        }
    }
    bp.back() = raw.bp.back();
    if (e.periodic()) return {DomainShape::circle(), std::move(bp), std::move(values)};
    return {DomainShape::interval(bp.front(), bp.back()), std::move(bp), std::move(values)};
}

}  // namespace bmo
