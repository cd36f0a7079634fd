#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace perihom {

/// Which identifier family an expression may reference: u1..uN for reaction
/// rates, y1,y2 for cell-coordinate coefficients.
enum class VarKind { species, cell };

namespace detail {
struct ExprNode;
}

/// Immutable expression tree over the reaction mini-language:
///   literals, identifiers, + - * / ^ (integer exponent), unary minus,
///   sin, cos, exp, min, max, parentheses.
/// Trees are shareable across threads once parsed.
class ReactionExpr {
public:
    ReactionExpr() = default;

    /// Throws ParseError (with byte offset) or ArityError.
    static ReactionExpr parse(std::string_view text, int arity, VarKind kind);
    static ReactionExpr constant(double value);

    bool valid() const { return root_ != nullptr; }
    int arity() const { return arity_; }
    VarKind kind() const { return kind_; }

    /// Throws DomainError on division by zero.
    double eval(std::span<const double> values) const;

    /// Forward-mode derivative; returns the value and fills grad (length
    /// arity). min/max differentiate into the selected branch.
    double eval_gradient(std::span<const double> values, std::span<double> grad) const;

    /// Minimal-parenthesis rendering; parse(print(e)) reproduces the tree.
    std::string print() const;

    bool structurally_equal(const ReactionExpr& other) const;

    /// True when the tree is the literal 0 (cheap short-circuit for absent
    /// reaction terms).
    bool is_literal_zero() const;

private:
    std::shared_ptr<const detail::ExprNode> root_;
    int arity_ = 0;
    VarKind kind_ = VarKind::species;
};

/// Sampled bound on the Lipschitz constant over a box: the maximum 1-norm of
/// the gradient over quasi-random points, corners and the center. An
/// estimate, not a certified bound.
struct LipschitzEstimate {
    double constant = 0.0;
    std::vector<double> box_lo;
    std::vector<double> box_hi;
    int samples = 0;
};

LipschitzEstimate estimate_lipschitz(const ReactionExpr& expr, std::span<const double> box_lo,
                                     std::span<const double> box_hi, int samples);

}  // namespace perihom
