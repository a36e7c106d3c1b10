#pragma once

// Finite simple martingales (measure- or point-valued), membership checks
// against the BMO / A_p domains, the barycenter lift, the compiler to circle
// constructions and the staircase factories.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bmo/construct.hpp"
#include "bmo/measure.hpp"
#include "bmo/search.hpp"

namespace bmo {

struct PlanePoint {
    double x1 = 0.0;
    double x2 = 0.0;
};

struct MartingaleNode;
using MartingaleNodePtr = std::shared_ptr<const MartingaleNode>;

struct Branch {
    double prob = 0.0;
    MartingaleNodePtr node;
};

struct MartingaleNode {
    std::variant<Distribution, PlanePoint> value;
    std::vector<Branch> children;

    bool is_leaf() const { return children.empty(); }
};

MartingaleNodePtr make_node(Distribution d, std::vector<Branch> children = {});
MartingaleNodePtr make_node(PlanePoint x, std::vector<Branch> children = {});

// Structurally validated on construction: one value kind throughout,
// positive probabilities summing to 1, the martingale property at every node
// and delta leaves for measure-valued trees.
class MartingaleTree {
public:
    enum class Kind { measure, point };

    explicit MartingaleTree(MartingaleNodePtr root);

    Kind kind() const { return kind_; }
    const MartingaleNode& root() const { return *root_; }
    MartingaleNodePtr root_ptr() const { return root_; }
    int depth() const { return depth_; }

private:
    MartingaleNodePtr root_;
    Kind kind_;
    int depth_ = 0;
};

inline constexpr double kMartingaleTol = 1e-12;
inline constexpr double kCurveTol = 1e-10;

struct BoundaryCurve {
    enum class Kind { parabola, power };

    Kind kind = Kind::parabola;
    double p = 2.0;

    static BoundaryCurve parabola() { return {Kind::parabola, 2.0}; }
    static BoundaryCurve power(double p);

    PlanePoint at(double u) const;
    // Curve parameter of x when x lies on the curve within tol, else nullopt.
    std::optional<double> parameter(const PlanePoint& x, double tol = kCurveTol) const;
};

struct MembershipDomain {
    enum class Kind { bmo_p, muckenhoupt_ap, parabola_strip, power_curve_strip };

    Kind kind = Kind::bmo_p;
    double p = 1.0;
    double bound = 1.0;  // epsilon for BMO-type domains, C for A_p-type domains

    static MembershipDomain bmo_p(double p, double eps);
    static MembershipDomain muckenhoupt_ap(double p, double c);
    static MembershipDomain parabola_strip(double eps);
    static MembershipDomain power_curve_strip(double p, double c);

    void validate() const;
    bool measure_valued() const { return kind == Kind::bmo_p || kind == Kind::muckenhoupt_ap; }
    std::string name() const;
    // Membership functional; the open domain is where it is negative.
    double margin(const Distribution& d) const;
    double margin(const PlanePoint& x) const;
    // Maximum of the functional on the segment [a, b] (point-valued domains).
    double segment_max(const PlanePoint& a, const PlanePoint& b) const;
};

struct NodeMargin {
    std::vector<int> path;  // child indices from the root
    double margin = 0.0;
    bool sampled = false;   // includes a sampled simplex interior
};

struct ValidationReport {
    bool pass = false;
    std::vector<NodeMargin> nodes;  // internal nodes, depth-first order
    double worst_margin = 0.0;
    std::vector<int> offending_path;  // first failing node or leaf
    std::string failure;              // empty when pass
};

ValidationReport validate_membership(const MartingaleTree& m, const MembershipDomain& dom, const SearchConfig& cfg);

MartingaleTree lift(const MartingaleTree& m, const BoundaryCurve& curve);

struct HomSchedule {
    double lambda_hom = kDefaultLambdaHom;
    int levels = 0;  // 0 selects default_levels(lambda_hom)
};

// schedule[d] applies to glue nodes compiled at tree depth d; the last entry
// repeats for deeper levels, an empty schedule uses the defaults.
ExprPtr compile_to_circle(const MartingaleTree& m, const std::vector<HomSchedule>& schedule = {});

struct Staircase {
    StepFunction function;
    MartingaleTree martingale;
};

Staircase log_staircase(double lambda, int n);
StepFunction psi_truncated(double lambda, int n_total, int n, double s);
Staircase power_staircase(double alpha, double p, double lambda, int n);

}  // namespace bmo
