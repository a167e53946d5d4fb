#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ukc::ir {

/// Expression tree over iteration dimensions d0..dN-1. Trees are immutable and
/// shared; structural equality compares shape, not identity.
class AffineExpr {
 public:
  enum class Kind { Dim, Const, Add, Mul, FloorDiv, Mod };

  static AffineExpr dim(unsigned position);
  static AffineExpr constant(int64_t value);

  AffineExpr() : AffineExpr(constant(0)) {}

  Kind kind() const { return node_->kind; }
  unsigned position() const { return node_->position; }
  int64_t value() const { return node_->value; }
  AffineExpr lhs() const { return AffineExpr(node_->lhs); }
  AffineExpr rhs() const { return AffineExpr(node_->rhs); }

  friend AffineExpr operator+(const AffineExpr& a, const AffineExpr& b);
  friend AffineExpr operator*(const AffineExpr& a, const AffineExpr& b);
  static AffineExpr floordiv(const AffineExpr& a, const AffineExpr& b);
  static AffineExpr mod(const AffineExpr& a, const AffineExpr& b);

  friend bool operator==(const AffineExpr& a, const AffineExpr& b);

  /// Evaluates the expression at an integer point.
  int64_t eval(const std::vector<int64_t>& dims) const;

  /// Replaces every dN by replacements[N].
  AffineExpr substitute(const std::vector<AffineExpr>& replacements) const;

  std::string str() const;

 private:
  struct Node {
    Kind kind;
    unsigned position = 0;
    int64_t value = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };
  explicit AffineExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static AffineExpr binary(Kind kind, const AffineExpr& a, const AffineExpr& b);

  std::shared_ptr<const Node> node_;
};

/// constant + sum(coefficients[i] * d_i)
struct LinearForm {
  std::vector<int64_t> coefficients;
  int64_t constant = 0;

  AffineExpr to_expr() const;
  friend bool operator==(const LinearForm&, const LinearForm&) = default;
};

/// Returns the linear form when the expression is integer-linear in the dims.
std::optional<LinearForm> linearize(const AffineExpr& expr, unsigned num_dims);

/// (d0, ..., dN-1) -> (e0, ..., eR-1)
struct AffineMap {
  unsigned num_dims = 0;
  std::vector<AffineExpr> results;

  static AffineMap identity(unsigned num_dims);
  static AffineMap from_linear(unsigned num_dims, const std::vector<LinearForm>& results);

  bool is_affine() const;
  bool references_dim(unsigned dim) const;
  std::vector<int64_t> eval(const std::vector<int64_t>& dims) const;
  std::string str() const;

  friend bool operator==(const AffineMap& a, const AffineMap& b);
};

}  // namespace ukc::ir
