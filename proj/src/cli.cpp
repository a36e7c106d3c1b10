#include "bmo/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <variant>

#include "bmo/constants.hpp"
#include "bmo/errors.hpp"
#include "bmo/json_io.hpp"
#include "bmo/verify.hpp"

namespace bmo {
namespace {

struct Options {
    double p = 1.0;
    double q = 2.0;
    double eps = 1.0;
    double c = 2.0;
    double lambda = 1.0;
    double lambda_hom = kDefaultLambdaHom;
    int levels = 0;
    int depth = 0;
    double alpha = 0.5;
    double delta = 0.3;
    double m = 2.0;
    int count = 100;
    std::vector<double> interval;
    std::string in, in2, out;
    std::string format = "json";
    std::string which;
    std::string kind;
    std::string curve;
    std::vector<double> knots;
    std::optional<double> truncate;
    std::optional<double> reference;
    std::size_t max_pieces = 1000000;
    bool materialize = false;
    bool ainf = false;
    SearchConfig search;
};

using Target = std::variant<StepFunction, ExprPtr>;

Target load_target(const std::string& path) {
    const Json j = read_json_file(path);
    if (is_expr_json(j)) return expr_from_json(j);
    return step_function_from_json(j);
}

ExprPtr as_expr(const Target& t) {
    if (const auto* f = std::get_if<StepFunction>(&t)) return leaf(*f);
    return std::get<ExprPtr>(t);
}

Interval interval_or_carrier(const Options& o, const Target& t) {
    if (!o.interval.empty()) return {o.interval[0], o.interval[1]};
    if (const auto* f = std::get_if<StepFunction>(&t)) return {f->start(), f->end()};
    return std::get<ExprPtr>(t)->carrier();
}

int levels_or_default(const Options& o) { return o.levels > 0 ? o.levels : default_levels(o.lambda_hom); }

std::string csv_scan(const SearchReport& r) {
    std::ostringstream os;
    os << std::setprecision(17) << "left,right,length,value\n";
    for (const auto& row : r.scan)
        os << row.left << ',' << row.right << ',' << (row.right - row.left) << ',' << row.value << '\n';
    return os.str();
}

class Runner {
public:
    Runner(Options& o, std::ostream& out) : o_(o), out_(out) {}

    void emit(const std::string& text) {
        if (o_.out.empty())
            out_ << text;
        else
            write_text_file(o_.out, text);
    }
    void emit(const Json& j) { emit(j.dump(2) + "\n"); }

    void emit_expr(const ExprPtr& e) {
        if (o_.materialize)
            emit(to_json(materialize(*e, o_.max_pieces)));
        else
            emit(to_json(*e));
    }

    int eval() {
        const Target t = load_target(o_.in);
        const Interval j = interval_or_carrier(o_, t);
        std::string which = o_.which.empty() ? "distribution" : o_.which;
        Distribution d = std::holds_alternative<StepFunction>(t) ? distribution(std::get<StepFunction>(t), j)
                                                                  : query_distribution(*std::get<ExprPtr>(t), j);
        Json res{{"which", which}, {"interval", {j.left, j.right}}, {"distribution", to_json(d)}};
        if (which != "distribution") {
            Functional fn;
            if (which == "barycenter") fn = Functional::barycenter();
            else if (which == "central_moment") fn = Functional::central_moment(o_.p);
            else if (which == "exp_integral") fn = Functional::exp_integral(o_.c);
            else if (which == "tail_mass") fn = Functional::tail_mass(o_.lambda);
            else if (which == "power_mean") fn = Functional::power_mean(o_.q);
            else if (which == "ap_form") fn = Functional::ap_form(o_.p);
            else if (which == "a_inf_form") fn = Functional::a_inf_form();
            else throw InputError("--which: unknown functional \"" + which + "\"");
            res["value"] = dist_functional(d, fn);
        }
        emit(res);
        return kExitOk;
    }

    int search_command(const Objective& obj) {
        if (o_.format == "csv") o_.search.record_scan = true;
        const Target t = load_target(o_.in);
        SearchReport r;
        if (const auto* f = std::get_if<StepFunction>(&t))
            r = search(*f, obj, o_.search);
        else
            r = search(*std::get<ExprPtr>(t), obj, o_.search);
        if (o_.format == "csv")
            emit(csv_scan(r));
        else
            emit(to_json(r));
        return kExitOk;
    }

    int weak() {
        const Target t = load_target(o_.in);
        const Interval j = interval_or_carrier(o_, t);
        double v;
        if (const auto* f = std::get_if<StepFunction>(&t)) {
            v = weak_distribution(*f, j, o_.lambda);
        } else {
            if (!(o_.lambda > 0.0)) throw InputError("--lambda must be > 0");
            v = query(*std::get<ExprPtr>(t), j, Functional::tail_mass(o_.lambda)).value;
        }
        emit(Json{{"lambda", o_.lambda}, {"interval", {j.left, j.right}}, {"value", v}});
        return kExitOk;
    }

    int expint() {
        const Target t = load_target(o_.in);
        const Interval j = interval_or_carrier(o_, t);
        const double v = std::holds_alternative<StepFunction>(t) ? exp_integral(std::get<StepFunction>(t), j, o_.c)
                                                                 : exp_integral(*std::get<ExprPtr>(t), j, o_.c);
        emit(Json{{"C", o_.c}, {"interval", {j.left, j.right}}, {"value", v}});
        return kExitOk;
    }

    int rh() {
        const Target t = load_target(o_.in);
        const Interval j = interval_or_carrier(o_, t);
        double v;
        if (const auto* f = std::get_if<StepFunction>(&t)) {
            v = reverse_holder_ratio(*f, j, o_.q);
        } else {
            const auto& e = *std::get<ExprPtr>(t);
            if (!(o_.q > 1.0)) throw InputError("--q must be > 1");
            if (!(e.atoms().front() > 0.0)) throw InputError("rh: weight must be positive-valued");
            v = query(e, j, Functional::power_mean(o_.q)).value / query(e, j, Functional::barycenter()).value;
        }
        emit(Json{{"q", o_.q}, {"interval", {j.left, j.right}}, {"value", v}});
        return kExitOk;
    }

    int homogenize() {
        emit_expr(hom_node(as_expr(load_target(o_.in)), o_.lambda_hom, levels_or_default(o_)));
        return kExitOk;
    }

    int glue() {
        auto e0 = as_expr(load_target(o_.in));
        auto e1 = as_expr(load_target(o_.in2));
        emit_expr(glue_node(std::move(e0), std::move(e1), o_.alpha, o_.lambda_hom, levels_or_default(o_)));
        return kExitOk;
    }

    int compile() {
        MartingaleTree m = martingale_from_json(read_json_file(o_.in));
        if (m.kind() == MartingaleTree::Kind::point) {
            if (o_.curve == "parabola") m = lift(m, BoundaryCurve::parabola());
            else if (o_.curve == "power") m = lift(m, BoundaryCurve::power(o_.p));
            else throw InputError("--curve: point-valued martingales need \"parabola\" or \"power\"");
        }
        emit_expr(compile_to_circle(m, {HomSchedule{o_.lambda_hom, o_.levels}}));
        return kExitOk;
    }

    int staircase() {
        const std::string kind = o_.kind.empty() ? "log" : o_.kind;
        if (o_.depth < 1) throw InputError("--depth must be >= 1");
        Staircase s = kind == "log"     ? log_staircase(o_.lambda, o_.depth)
                      : kind == "power" ? power_staircase(o_.alpha, o_.p, o_.lambda, o_.depth)
                                        : throw InputError("--kind: expected \"log\" or \"power\"");
        emit(Json{{"function", to_json(s.function)}, {"martingale", to_json(s.martingale)}});
        return kExitOk;
    }

    int rearrange() {
        emit(to_json(monotone_rearrangement(step_function_from_json(read_json_file(o_.in)))));
        return kExitOk;
    }

    int monotone() {
        const StepFunction f = step_function_from_json(read_json_file(o_.in));
        if (o_.truncate.has_value() == !o_.knots.empty())
            throw InputError("monotone: give exactly one of --knots and --truncate");
        if (o_.truncate) {
            emit(to_json(compose_monotone(f, MonotoneMap::truncation(*o_.truncate))));
            return kExitOk;
        }
        if (o_.knots.size() % 2 != 0 || o_.knots.size() < 4)
            throw InputError("--knots: expected pairs x0,y0,x1,y1,... (at least two knots)");
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < o_.knots.size(); i += 2) xs.push_back(o_.knots[i]), ys.push_back(o_.knots[i + 1]);
        emit(to_json(compose_monotone(f, MonotoneMap(std::move(xs), std::move(ys)))));
        return kExitOk;
    }

    int constants() {
        const std::string& w = o_.which;
        Json res{{"which", w}};
        if (w == "c3p") res["value"] = c3p(o_.p);
        else if (w == "lp_equiv") res["value"] = lp_equiv_constant(o_.p);
        else if (w == "jn_weak_envelope") res["value"] = jn_weak_envelope(o_.lambda);
        else if (w == "classic_jn") {
            const auto c = classic_jn_constants();
            res["c1"] = c.c1;
            res["c2"] = c.c2;
        } else if (w == "bellman_lp") res["value"] = bellman_value(BellmanProblem::lp_moment(o_.p));
        else if (w == "bellman_weak") res["value"] = bellman_value(BellmanProblem::weak_type(o_.lambda));
        else
            throw InputError("--which: expected c3p, lp_equiv, jn_weak_envelope, classic_jn, bellman_lp or bellman_weak");
        emit(res);
        return kExitOk;
    }

    int validate() {
        const MartingaleTree m = martingale_from_json(read_json_file(o_.in));
        MembershipDomain dom;
        if (o_.kind == "bmo") dom = MembershipDomain::bmo_p(o_.p, o_.eps);
        else if (o_.kind == "ap") dom = MembershipDomain::muckenhoupt_ap(o_.p, o_.c);
        else if (o_.kind == "parabola") dom = MembershipDomain::parabola_strip(o_.eps);
        else if (o_.kind == "power") dom = MembershipDomain::power_curve_strip(o_.p, o_.c);
        else throw InputError("--kind: expected bmo, ap, parabola or power");
        const auto rep = validate_membership(m, dom, o_.search);
        emit(to_json(rep));
        return rep.pass ? kExitOk : kExitVerifyFailed;
    }

    int verify(const VerifyReport& r) {
        emit(to_json(r));
        return r.pass() ? kExitOk : kExitVerifyFailed;
    }

    int verify_jn_cmd() {
        JnOptions jo;
        jo.delta = o_.delta;
        jo.m = o_.m;
        if (o_.depth > 0) jo.max_depth = o_.depth;
        jo.schedule = {HomSchedule{o_.lambda_hom, o_.levels}};
        jo.search = o_.search;
        const auto res = verify_jn(jo);
        Json j = to_json(res.report);
        j["depth"] = res.depth;
        j["lambda"] = res.lambda;
        j["c"] = res.c;
        j["atom_sum"] = res.atom_sum;
        j["norm"] = to_json(res.norm);
        emit(j);
        return res.report.pass() ? kExitOk : kExitVerifyFailed;
    }

    CorpusOptions corpus() const { return {o_.search.seed, o_.count, o_.search}; }

private:
    Options& o_;
    std::ostream& out_;
};

void add_search_flags(CLI::App* sub, Options& o) {
    sub->add_option("--tol", o.search.tol, "line-search tolerance");
    sub->add_option("--r-long", o.search.r_long, "whole cells from which an interval is long");
    sub->add_option("--max-periods", o.search.max_periods, "circle arcs searched explicitly, in periods");
    sub->add_option("--grid", o.search.grid, "grid points per endpoint");
    sub->add_option("--refine", o.search.refine, "refinement rounds");
    sub->add_flag("--certify", o.search.certify, "also report an upper bound");
    sub->add_option("--threads", o.search.threads, "worker threads");
    sub->add_option("--seed", o.search.seed, "random seed");
}

void add_io(CLI::App* sub, Options& o, bool needs_input) {
    auto* in = sub->add_option("--in", o.in, "input JSON file")->check(CLI::ExistingFile);
    if (needs_input) in->required();
    sub->add_option("--out", o.out, "output file (default: stdout)");
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

void add_hom_flags(CLI::App* sub, Options& o) {
    sub->add_option("--lambda-hom", o.lambda_hom, "homogenization ratio in (0, 1)");
    sub->add_option("--levels", o.levels, "truncation level K (default: smallest K with lambda^K <= 1e-3)");
    sub->add_flag("--materialize", o.materialize, "expand to a step function");
    sub->add_option("--max-pieces", o.max_pieces, "piece budget for --materialize");
}

void check_output_path(const std::string& out) {
    if (out.empty()) return;
    const auto parent = std::filesystem::absolute(out).parent_path();
    if (!std::filesystem::is_directory(parent)) throw InputError("--out: directory does not exist: " + parent.string());
    if (std::filesystem::is_directory(out)) throw InputError("--out: is a directory: " + out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"BMO / A_p seminorms, constructions and martingale transference"};
    app.require_subcommand(1);

    auto interval_opt = [&](CLI::App* s) {
        s->add_option("--interval", o.interval, "query interval: left right")->expected(2);
    };

    auto* eval = app.add_subcommand("eval", "distribution or functional over an interval");
    add_io(eval, o, true);
    interval_opt(eval);
    eval->add_option("--which", o.which, "distribution (default) or a functional name");
    eval->add_option("--p", o.p);
    eval->add_option("--q", o.q);
    eval->add_option("--C", o.c);
    eval->add_option("--lambda", o.lambda);

    auto* norm = app.add_subcommand("norm", "BMO_p seminorm search");
    add_io(norm, o, true);
    add_search_flags(norm, o);
    norm->add_option("--p", o.p, "exponent p >= 1");

    auto* ap = app.add_subcommand("ap", "A_p (or A_infinity) constant search");
    add_io(ap, o, true);
    add_search_flags(ap, o);
    ap->add_option("--p", o.p, "exponent p > 1");
    ap->add_flag("--ainf", o.ainf, "A_infinity instead of A_p");

    auto* weak = app.add_subcommand("weak", "weak-type distribution on one interval");
    add_io(weak, o, true);
    interval_opt(weak);
    weak->add_option("--lambda", o.lambda)->required();

    auto* expint = app.add_subcommand("expint", "integral of exp(C f) over one interval");
    add_io(expint, o, true);
    interval_opt(expint);
    expint->add_option("--C", o.c)->required();

    auto* rh = app.add_subcommand("rh", "Reverse Hoelder ratio on one interval");
    add_io(rh, o, true);
    interval_opt(rh);
    rh->add_option("--q", o.q);

    auto* hom = app.add_subcommand("homogenize", "lambda-homogenization");
    add_io(hom, o, true);
    add_hom_flags(hom, o);

    auto* glue = app.add_subcommand("glue", "glue two constructions into a circle function");
    add_io(glue, o, true);
    glue->add_option("--in2", o.in2, "second input (the part on [0, alpha))")->required()->check(CLI::ExistingFile);
    glue->add_option("--alpha", o.alpha)->required();
    add_hom_flags(glue, o);

    auto* comp = app.add_subcommand("compile", "compile a martingale to a circle construction");
    add_io(comp, o, true);
    add_hom_flags(comp, o);
    comp->add_option("--curve", o.curve, "boundary curve for point-valued input: parabola or power");
    comp->add_option("--p", o.p, "exponent of the power curve");

    auto* stair = app.add_subcommand("staircase", "staircase function and its martingale");
    add_io(stair, o, false);
    stair->add_option("--kind", o.kind, "log (default) or power");
    stair->add_option("--lambda", o.lambda)->required();
    stair->add_option("--depth", o.depth, "number of steps N")->required();
    stair->add_option("--alpha", o.alpha, "exponent of the power weight");
    stair->add_option("--p", o.p, "A_p exponent for the power weight");

    auto* rearr = app.add_subcommand("rearrange", "monotone rearrangement");
    add_io(rearr, o, true);

    auto* mono = app.add_subcommand("monotone", "compose with a nondecreasing map");
    add_io(mono, o, true);
    mono->add_option("--knots", o.knots, "x0,y0,x1,y1,... of a piecewise-linear map")->delimiter(',');
    mono->add_option("--truncate", o.truncate, "use min(f, N)");

    auto* consts = app.add_subcommand("constants", "sharp constants");
    add_io(consts, o, false);
    consts->add_option("--which", o.which)->required();
    consts->add_option("--p", o.p);
    consts->add_option("--lambda", o.lambda);

    auto* val = app.add_subcommand("validate", "martingale membership validation");
    add_io(val, o, true);
    add_search_flags(val, o);
    val->add_option("--kind", o.kind, "bmo, ap, parabola or power")->required();
    val->add_option("--p", o.p);
    val->add_option("--eps", o.eps);
    val->add_option("--C", o.c);

    auto* vjn = app.add_subcommand("verify-jn", "staircase / compile / circle-norm pipeline");
    add_io(vjn, o, false);
    add_search_flags(vjn, o);
    vjn->add_option("--delta", o.delta);
    vjn->add_option("--m", o.m, "threshold for the exponential atom sum");
    vjn->add_option("--depth", o.depth, "largest staircase depth tried (default 60)");
    vjn->add_option("--lambda-hom", o.lambda_hom);
    vjn->add_option("--levels", o.levels);

    CLI::App* corpus_cmds[3];
    const char* corpus_names[3] = {"verify-weak", "verify-lp", "verify-monotone"};
    const char* corpus_help[3] = {"weak-type envelope on a random corpus", "L_p equivalences on a random corpus",
                                  "monotone operations on a random corpus"};
    for (int i = 0; i < 3; ++i) {
        corpus_cmds[i] = app.add_subcommand(corpus_names[i], corpus_help[i]);
        add_io(corpus_cmds[i], o, false);
        add_search_flags(corpus_cmds[i], o);
        corpus_cmds[i]->add_option("--count", o.count);
    }
    auto* vrh = app.add_subcommand("verify-rh", "Reverse Hoelder checks");
    add_io(vrh, o, false);
    vrh->add_option("--q", o.q);
    vrh->add_option("--reference", o.reference, "user-supplied sharp constant");
    vrh->add_option("--seed", o.search.seed);
    vrh->add_option("--count", o.count);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        check_output_path(o.out);
        o.search.validate();
        Runner run(o, out);
        if (*eval) return run.eval();
        if (*norm) return run.search_command(Objective::bmo(o.p));
        if (*ap) return run.search_command(o.ainf ? Objective::a_inf() : Objective::ap(o.p));
        if (*weak) return run.weak();
        if (*expint) return run.expint();
        if (*rh) return run.rh();
        if (*hom) return run.homogenize();
        if (*glue) return run.glue();
        if (*comp) return run.compile();
        if (*stair) return run.staircase();
        if (*rearr) return run.rearrange();
        if (*mono) return run.monotone();
        if (*consts) return run.constants();
        if (*val) return run.validate();
        if (*vjn) return run.verify_jn_cmd();
        if (*corpus_cmds[0]) return run.verify(verify_weak(run.corpus()));
        if (*corpus_cmds[1]) return run.verify(verify_lp(run.corpus()));
        if (*corpus_cmds[2]) return run.verify(verify_monotone(run.corpus()));
        if (*vrh) return run.verify(verify_rh(o.q, o.reference, run.corpus()));
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const BudgetError& e) {
        err << "budget error: " << e.what() << " (required " << e.required() << ")\n";
        return kExitBudget;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    err << "error: no subcommand handled\n";
    return kExitInput;
}

}  // namespace bmo
