#include "bmo/json_io.hpp"

#include <fstream>
#include <sstream>

#include "bmo/errors.hpp"

namespace bmo {
namespace {

const Json& field(const Json& j, const char* name, const std::string& where) {
    if (!j.is_object()) throw InputError(where + ": expected an object");
    auto it = j.find(name);
    if (it == j.end()) throw InputError(where + ": missing field \"" + name + "\"");
    return *it;
}

double number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw InputError(where + ": expected a number");
    return j.get<double>();
}

double number_field(const Json& j, const char* name, const std::string& where) {
    return number(field(j, name, where), where + "." + name);
}

int int_field(const Json& j, const char* name, const std::string& where) {
    const Json& v = field(j, name, where);
    if (!v.is_number_integer()) throw InputError(where + "." + name + ": expected an integer");
    return v.get<int>();
}

std::string string_field(const Json& j, const char* name, const std::string& where) {
    const Json& v = field(j, name, where);
    if (!v.is_string()) throw InputError(where + "." + name + ": expected a string");
    return v.get<std::string>();
}

std::vector<double> number_array(const Json& j, const char* name, const std::string& where) {
    const Json& v = field(j, name, where);
    if (!v.is_array()) throw InputError(where + "." + name + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(number(v[i], where + "." + name + "[" + std::to_string(i) + "]"));
    return out;
}

StepFunction step_function_at(const Json& j, const std::string& where) {
    const Json& d = field(j, "domain", where);
    const std::string kind = string_field(d, "kind", where + ".domain");
    DomainShape shape = DomainShape::circle();
    if (kind == "interval")
        shape = DomainShape::interval(number_field(d, "a", where + ".domain"), number_field(d, "b", where + ".domain"));
    else if (kind != "circle")
        throw InputError(where + ".domain.kind: expected \"interval\" or \"circle\"");
    return {shape, number_array(j, "breakpoints", where), number_array(j, "values", where)};
}

Distribution distribution_at(const Json& j, const std::string& where) {
    const Json& a = field(j, "atoms", where);
    if (!a.is_array()) throw InputError(where + ".atoms: expected an array");
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string w = where + ".atoms[" + std::to_string(i) + "]";
        atoms.push_back({number_field(a[i], "value", w), number_field(a[i], "weight", w)});
    }
    return Distribution::from_atoms(std::move(atoms), true);
}

ExprPtr expr_at(const Json& j, const std::string& where) {
    const std::string kind = string_field(j, "kind", where);
    if (kind == "leaf") return leaf(step_function_at(field(j, "function", where), where + ".function"));
    if (kind == "const") return constant(number_field(j, "value", where));
    if (kind == "hom")
        return hom_node(expr_at(field(j, "child", where), where + ".child"), number_field(j, "lambda_hom", where),
                        int_field(j, "levels", where));
    if (kind == "glue") {
        auto left = expr_at(field(j, "left", where), where + ".left");
        auto right = expr_at(field(j, "right", where), where + ".right");
        return glue_node(std::move(left), std::move(right), number_field(j, "alpha", where),
                         number_field(j, "lambda_hom", where), int_field(j, "levels", where));
    }
    if (kind == "periodize") return periodize(expr_at(field(j, "child", where), where + ".child"));
    throw InputError(where + ".kind: unknown expression kind \"" + kind + "\"");
}

MartingaleNodePtr node_at(const Json& j, bool measure, const std::string& where) {
    const Json& v = field(j, "value", where);
    std::vector<Branch> kids;
    if (j.contains("children")) {
        const Json& c = j["children"];
        if (!c.is_array()) throw InputError(where + ".children: expected an array");
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string w = where + ".children[" + std::to_string(i) + "]";
            kids.push_back({number_field(c[i], "prob", w), node_at(field(c[i], "node", w), measure, w + ".node")});
        }
    }
    if (measure) return make_node(distribution_at(v, where + ".value"), std::move(kids));
    if (!v.is_array() || v.size() != 2) throw InputError(where + ".value: expected [x1, x2]");
    return make_node(PlanePoint{number(v[0], where + ".value[0]"), number(v[1], where + ".value[1]")},
                     std::move(kids));
}

Json node_json(const MartingaleNode& n) {
    Json out;
    if (const auto* d = std::get_if<Distribution>(&n.value))
        out["value"] = to_json(*d);
    else
        out["value"] = {std::get<PlanePoint>(n.value).x1, std::get<PlanePoint>(n.value).x2};
    Json kids = Json::array();
    for (const auto& b : n.children) kids.push_back({{"prob", b.prob}, {"node", node_json(*b.node)}});
    out["children"] = kids;
    return out;
}

Json interval_json(const Interval& i) { return Json::array({i.left, i.right}); }

}  // namespace

Json to_json(const StepFunction& f) {
    Json d = f.is_circle() ? Json{{"kind", "circle"}} : Json{{"kind", "interval"}, {"a", f.domain().a()}, {"b", f.domain().b()}};
    return {{"domain", d}, {"breakpoints", f.breakpoints()}, {"values", f.values()}};
}

StepFunction step_function_from_json(const Json& j) { return step_function_at(j, "function"); }

Json to_json(const Distribution& d) {
    Json atoms = Json::array();
    for (const auto& a : d.atoms()) atoms.push_back({{"value", a.value}, {"weight", a.weight}});
    return {{"atoms", atoms}};
}

Distribution distribution_from_json(const Json& j) { return distribution_at(j, "distribution"); }

Json to_json(const Expr& e) {
    switch (e.kind()) {
        case Expr::Kind::leaf: return {{"kind", "leaf"}, {"function", to_json(e.function())}};
        case Expr::Kind::constant: return {{"kind", "const"}, {"value", e.constant_value()}};
        case Expr::Kind::hom:
            return {{"kind", "hom"},
                    {"child", to_json(*e.children()[0])},
                    {"lambda_hom", e.lambda_hom()},
                    {"levels", e.levels()}};
        case Expr::Kind::glue:
            return {{"kind", "glue"},
                    {"left", to_json(*e.children()[0])},
                    {"right", to_json(*e.children()[1])},
                    {"alpha", e.alpha()},
                    {"lambda_hom", e.lambda_hom()},
                    {"levels", e.levels()}};
        case Expr::Kind::periodize: return {{"kind", "periodize"}, {"child", to_json(*e.children()[0])}};
    }
    throw InternalError("unknown expression kind");
}

ExprPtr expr_from_json(const Json& j) { return expr_at(j, "expr"); }

Json to_json(const MartingaleTree& m) {
    return {{"kind", m.kind() == MartingaleTree::Kind::measure ? "measure" : "point"}, {"root", node_json(m.root())}};
}

MartingaleTree martingale_from_json(const Json& j) {
    const std::string kind = string_field(j, "kind", "martingale");
    if (kind != "measure" && kind != "point") throw InputError("martingale.kind: expected \"measure\" or \"point\"");
    return MartingaleTree(node_at(field(j, "root", "martingale"), kind == "measure", "martingale.root"));
}

Json to_json(const SearchReport& r) {
    Json out{{"objective", r.objective},
             {"lower", r.lower},
             {"witness", interval_json(r.witness)},
             {"evaluations", r.evaluations}};
    out["upper"] = r.upper ? Json(*r.upper) : Json(nullptr);
    if (r.upper) out["bracket"] = Json::array({r.lower, *r.upper});
    const auto& c = r.config;
    out["config"] = {{"grid", c.grid},       {"refine", c.refine},   {"tol", c.tol},
                     {"r_long", c.r_long},   {"max_periods", c.max_periods},
                     {"certify", c.certify}, {"threads", c.threads}, {"seed", c.seed}};
    return out;
}

Json to_json(const ValidationReport& r) {
    Json nodes = Json::array();
    for (const auto& n : r.nodes) nodes.push_back({{"path", n.path}, {"margin", n.margin}, {"sampled", n.sampled}});
    return {{"pass", r.pass},
            {"worst_margin", r.worst_margin},
            {"offending_path", r.offending_path},
            {"failure", r.failure},
            {"nodes", nodes}};
}

bool is_expr_json(const Json& j) { return j.is_object() && j.contains("kind") && !j.contains("domain"); }

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read input file: " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InputError(path + ": invalid JSON (" + e.what() + ")");
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write output file: " + path);
    out << text;
    if (!out) throw InputError("failed writing output file: " + path);
}

}  // namespace bmo
