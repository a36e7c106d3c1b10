#pragma once

// Lazy expression DAG for homogenized, glued and periodized constructions.
// Interval queries recurse only into the (at most two) partially covered
// copies per level, so deep constructions stay queryable without expanding
// their exponentially many pieces.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "bmo/measure.hpp"

namespace bmo {

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// One rescaled copy of a child inside a composite node's period.
struct Copy {
    double start = 0.0;
    double length = 0.0;
    int slot = 0;  // index into Expr::children()

    double end() const { return start + length; }
};

inline constexpr double kDefaultLambdaHom = 0.9;

// Smallest K with lambda^K <= 1e-3.
int default_levels(double lambda_hom);

class Expr {
public:
    enum class Kind { leaf, constant, hom, glue, periodize };

    Kind kind() const { return kind_; }
    const char* kind_name() const;

    // Coordinate window of the node. Periodic nodes repeat it with period
    // carrier().length(); non-periodic nodes accept queries inside it only.
    Interval carrier() const { return carrier_; }
    bool periodic() const { return periodic_; }
    int depth() const { return depth_; }

    // Sorted distinct atom values and the exact node distribution on them.
    const std::vector<double>& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }
    Distribution distribution() const;

    // Leaf / constant payloads.
    const StepFunction& function() const { return *function_; }
    const std::vector<int>& piece_atoms() const { return piece_atoms_; }
    double constant_value() const { return atoms_.front(); }

    // Composite payloads.
    const std::vector<ExprPtr>& children() const { return children_; }
    const std::vector<int>& child_atom_map(int slot) const { return child_maps_[static_cast<std::size_t>(slot)]; }
    const std::vector<Copy>& copies() const { return copies_; }
    double layout_origin() const { return origin_; }
    double period() const { return carrier_.length(); }
    double lambda_hom() const { return lambda_hom_; }
    int levels() const { return levels_; }
    double alpha() const { return alpha_; }

    // Total length of copies [0, c) carrying `slot` (prefix over copies()).
    double slot_prefix(int slot, std::size_t c) const { return slot_prefix_[static_cast<std::size_t>(slot)][c]; }
    std::size_t copy_index_at(double layout_pos) const;

    // Pieces of the fully expanded function over one carrier, before merging.
    double raw_piece_count() const { return raw_pieces_; }

    // Layout position of carrier().left when it falls strictly inside a copy,
    // with the cached weights of that copy on either side of it. One-sided
    // carrier queries then recurse along a single chain.
    bool has_seam() const { return has_seam_; }
    double seam() const { return seam_; }
    const std::vector<double>& seam_before() const { return seam_before_; }
    const std::vector<double>& seam_after() const { return seam_after_; }

    friend ExprPtr leaf(StepFunction f);
    friend ExprPtr constant(double value);
    friend ExprPtr hom_node(ExprPtr child, double lambda_hom, int levels);
    friend ExprPtr glue_node(ExprPtr e0, ExprPtr e1, double alpha, double lambda_hom, int levels);
    friend ExprPtr periodize(ExprPtr child);

private:
    Expr() = default;
    void finish_composite();
    void finish_seam();

    Kind kind_ = Kind::constant;
    Interval carrier_{-0.5, 0.5};
    bool periodic_ = true;
    int depth_ = 0;
    std::vector<double> atoms_;
    std::vector<double> weights_;

    std::optional<StepFunction> function_;
    std::vector<int> piece_atoms_;

    std::vector<ExprPtr> children_;
    std::vector<std::vector<int>> child_maps_;
    std::vector<Copy> copies_;
    std::vector<std::vector<double>> slot_prefix_;
    double origin_ = -0.5;
    double lambda_hom_ = 0.0;
    int levels_ = 0;
    double alpha_ = 0.0;
    double raw_pieces_ = 1.0;
    bool has_seam_ = false;
    double seam_ = 0.0;
    std::vector<double> seam_before_;
    std::vector<double> seam_after_;
};

ExprPtr leaf(StepFunction f);
ExprPtr constant(double value);
// lambda_hom-homogenization on [-1/2, 1/2]: copies on I_{k,+-} for k <= levels
// plus one copy on each residual end interval of length lambda^levels / 2.
ExprPtr hom_node(ExprPtr child, double lambda_hom, int levels);
// Circle function: homogenized e1 on [0, alpha), homogenized e0 on [alpha, 1).
ExprPtr glue_node(ExprPtr e0, ExprPtr e1, double alpha, double lambda_hom, int levels);
// Periodic extension of the child, rescaled to period 1 on [-1/2, 1/2].
ExprPtr periodize(ExprPtr child);

// Unnormalized distribution of `e` over an interval, as weights (lengths)
// on e.atoms().
struct QueryAccumulation {
    std::vector<double> weights;
    int depth = 0;                  // deepest recursion level reached
    double partial_end_length = 0;  // top-level length inside partially covered copies
    long visits = 0;                // node visits (cost telemetry)
};

QueryAccumulation accumulate(const Expr& e, const Interval& j);

struct QueryResult {
    double value = 0.0;
    int depth = 0;
    double partial_end_weight = 0.0;
    long visits = 0;
};

QueryResult query(const Expr& e, const Interval& j, const Functional& fn);
Distribution query_distribution(const Expr& e, const Interval& j);

// Expands the construction over one carrier. Throws BudgetError when the
// raw piece count exceeds max_pieces. Periodic nodes become circle functions.
StepFunction materialize(const Expr& e, std::size_t max_pieces);

}  // namespace bmo
