#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bmo/cli.hpp"
#include "bmo/errors.hpp"
#include "bmo/json_io.hpp"
#include "bmo/random.hpp"

using namespace bmo;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    const fs::path d = fs::temp_directory_path() / "bmo_cli_tests";
    fs::create_directories(d);
    return d;
}

std::string put(const std::string& name, const Json& j) {
    const auto p = (scratch() / name).string();
    write_text_file(p, j.dump());
    return p;
}

std::string sign_file() {
    return put("sign.json", to_json(StepFunction(DomainShape::interval(-1, 1), {-1, 0, 1}, {-1, 1})));
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("round trips") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const auto f = random_step_function(rng, static_cast<int>(rng.integer(1, 8)),
                                            trial % 2 ? DomainShape::circle() : DomainShape::interval(-1, 3));
        const Json j = to_json(f);
        const Json back = to_json(step_function_from_json(Json::parse(j.dump())));
        CHECK(back == j);

        const auto e = random_expr(rng, static_cast<int>(rng.integer(0, 3)));
        const Json je = to_json(*e);
        CHECK(to_json(*expr_from_json(Json::parse(je.dump()))) == je);

        const auto d = random_distribution(rng, static_cast<int>(rng.integer(1, 6)));
        const Json jd = to_json(d);
        CHECK(to_json(distribution_from_json(Json::parse(jd.dump()))) == jd);
    }
    const auto st = log_staircase(1.4, 6);
    const Json jm = to_json(st.martingale);
    CHECK(to_json(martingale_from_json(Json::parse(jm.dump()))) == jm);
}

TEST_CASE("parse errors name the field") {
    try {
        step_function_from_json(Json::parse(R"({"domain":{"kind":"interval","a":0,"b":1},"breakpoints":[0,1]})"));
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("values") != std::string::npos);
    }
    try {
        expr_from_json(Json::parse(R"({"kind":"hom","child":{"kind":"const","value":"x"},"lambda_hom":0.5,"levels":3})"));
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("expr.child.value") != std::string::npos);
    }
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("norm of the sign step") {
    const auto r = run({"norm", "--p", "2", "--in", sign_file()});
    REQUIRE(r.code == kExitOk);
    const Json j = Json::parse(r.out);
    CHECK(j["lower"].get<double>() == 1.0);
    CHECK(j["witness"] == Json::array({-1.0, 1.0}));
    // Output re-parses to the same document.
    CHECK(Json::parse(j.dump(2)) == j);
}

TEST_CASE("constants") {
    const auto r = run({"constants", "--which", "c3p", "--p", "1"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("0.7357588823") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(run({"norm", "--p", "0.5", "--in", sign_file()}).code == kExitInput);
    CHECK(run({"norm", "--bogus", "--in", sign_file()}).code == kExitInput);
    CHECK(run({"norm", "--in", (scratch() / "missing.json").string()}).code == kExitInput);
    CHECK(run({"norm", "--in", sign_file(), "--out", "/nonexistent/dir/x.json"}).code == kExitInput);
    CHECK(run({"frobnicate"}).code == kExitInput);
    const auto bad = put("bad.json", Json::parse(R"({"domain":{"kind":"interval","a":0,"b":1},"breakpoints":[0,1],"values":[1,2]})"));
    CHECK(run({"norm", "--in", bad}).code == kExitInput);

    const auto deep = hom_node(hom_node(hom_node(leaf(StepFunction(DomainShape::interval(-0.5, 0.5), {-0.5, 0, 0.5}, {-1, 1})), 0.9, 66), 0.9, 66), 0.9, 66);
    const auto deep_file = put("deep.json", to_json(*deep));
    CHECK(run({"homogenize", "--in", deep_file, "--materialize", "--max-pieces", "1000"}).code == kExitBudget);

    // Validation failure: the two-leaf martingale at eps = 1.
    const auto m = put("two_leaf.json", Json::parse(R"({"kind":"measure","root":{"value":{"atoms":[{"value":-1,"weight":0.5},{"value":1,"weight":0.5}]},
        "children":[{"prob":0.5,"node":{"value":{"atoms":[{"value":-1,"weight":1}]}}},
                    {"prob":0.5,"node":{"value":{"atoms":[{"value":1,"weight":1}]}}}]}})"));
    CHECK(run({"validate", "--in", m, "--kind", "bmo", "--p", "2", "--eps", "1"}).code == kExitVerifyFailed);
    CHECK(run({"validate", "--in", m, "--kind", "bmo", "--p", "2", "--eps", "1.05"}).code == kExitOk);
}

TEST_CASE("output file and csv scan") {
    const auto out = (scratch() / "norm_out.json").string();
    REQUIRE(run({"norm", "--p", "1", "--in", sign_file(), "--out", out}).code == kExitOk);
    const Json j = read_json_file(out);
    CHECK(j["lower"].get<double>() == 1.0);
    const auto csv = run({"norm", "--p", "1", "--in", sign_file(), "--format", "csv"});
    REQUIRE(csv.code == kExitOk);
    CHECK(csv.out.rfind("left,right,length,value\n", 0) == 0);
}

TEST_CASE("reports do not depend on the thread count") {
    Rng rng(99);
    const auto f = put("rand.json", to_json(random_step_function(rng, 30, DomainShape::interval(0, 1))));
    auto a = Json::parse(run({"norm", "--p", "1.5", "--in", f, "--certify", "--threads", "1"}).out);
    auto b = Json::parse(run({"norm", "--p", "1.5", "--in", f, "--certify", "--threads", "3"}).out);
    a["config"].erase("threads");
    b["config"].erase("threads");
    CHECK(a == b);
}

TEST_CASE("seeded suites are reproducible") {
    const auto a = run({"verify-monotone", "--seed", "5", "--count", "6"});
    const auto b = run({"verify-monotone", "--seed", "5", "--count", "6"});
    CHECK(a.code == kExitOk);
    CHECK(a.out == b.out);
    const Json j = Json::parse(a.out);
    REQUIRE(j["checks"].is_array());
    for (const auto& c : j["checks"])
        for (const char* key : {"name", "expected", "observed", "tolerance", "pass"}) CHECK(c.contains(key));
}

TEST_CASE("construction subcommands chain") {
    const auto s = put("half_sign.json", to_json(StepFunction(DomainShape::interval(-0.5, 0.5), {-0.5, 0, 0.5}, {-1, 1})));
    const auto hom = run({"homogenize", "--in", s, "--lambda-hom", "0.5", "--levels", "4"});
    REQUIRE(hom.code == kExitOk);
    const auto h = put("hom.json", Json::parse(hom.out));
    const auto glued = run({"glue", "--in", h, "--in2", s, "--alpha", "0.3", "--lambda-hom", "0.5", "--levels", "3"});
    REQUIRE(glued.code == kExitOk);
    const auto g = put("glued.json", Json::parse(glued.out));
    const auto ev = run({"eval", "--in", g});
    REQUIRE(ev.code == kExitOk);
    const auto norm = run({"norm", "--in", g, "--p", "2", "--certify"});
    REQUIRE(norm.code == kExitOk);
    CHECK(Json::parse(norm.out)["upper"].is_number());
}

}  // TEST_SUITE
