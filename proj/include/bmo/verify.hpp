#pragma once

// End-to-end verification suites. Each returns named checks that the CLI
// writes as {checks: [{name, expected, observed, tolerance, pass}]}.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bmo/json_io.hpp"
#include "bmo/martingale.hpp"
#include "bmo/search.hpp"

namespace bmo {

struct Check {
    enum class Relation { eq, le, ge, lt, gt };

    std::string name;
    double expected = 0.0;
    double observed = 0.0;
    double tolerance = 0.0;
    Relation relation = Relation::eq;
    bool pass = false;

    static Check make(std::string name, double expected, double observed, double tolerance, Relation rel);
};

struct VerifyReport {
    std::vector<Check> checks;

    bool pass() const;
    void add(Check c) { checks.push_back(std::move(c)); }
};

Json to_json(const VerifyReport& r);

// Staircase -> membership -> compile -> identities -> certified circle norm.
struct JnOptions {
    double delta = 0.3;
    double m = 2.0;    // threshold for the exponential atom sum
    int max_depth = 60;
    std::vector<HomSchedule> schedule;
    SearchConfig search;  // certify is forced on
};

struct JnOutcome {
    VerifyReport report;
    int depth = 0;            // chosen N
    double lambda = 0.0;
    double c = 0.0;
    double atom_sum = 0.0;
    SearchReport norm;
};

JnOutcome verify_jn(const JnOptions& opt);

struct CorpusOptions {
    std::uint64_t seed = 0;
    int count = 100;
    SearchConfig search;
};

VerifyReport verify_weak(const CorpusOptions& opt);
VerifyReport verify_lp(const CorpusOptions& opt);
VerifyReport verify_monotone(const CorpusOptions& opt);
// Staircase ratio against the x^{1/2} closed form, Jensen lower bound on a
// random corpus, and an optional user-supplied reference constant.
VerifyReport verify_rh(double q, std::optional<double> reference, const CorpusOptions& opt);

// The seeded corpus shared by the suites: interval-domain functions on [0, 1].
std::vector<StepFunction> random_corpus(std::uint64_t seed, int count);

// Restriction of f to the subinterval j of its carrier.
StepFunction restrict_to(const StepFunction& f, const Interval& j);

}  // namespace bmo
