#include "ukc/ir/affine.hpp"

#include <sstream>

#include "ukc/diagnostics.hpp"

namespace ukc::ir {

AffineExpr AffineExpr::dim(unsigned position) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Dim;
  n->position = position;
  return AffineExpr(std::move(n));
}

AffineExpr AffineExpr::constant(int64_t value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->value = value;
  return AffineExpr(std::move(n));
}

AffineExpr AffineExpr::binary(Kind kind, const AffineExpr& a, const AffineExpr& b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = a.node_;
  n->rhs = b.node_;
  return AffineExpr(std::move(n));
}

// Constant operands are folded so that the parser and the builders produce the
// same trees for the same text.
AffineExpr operator+(const AffineExpr& a, const AffineExpr& b) {
  using K = AffineExpr::Kind;
  if (a.kind() == K::Const && b.kind() == K::Const) return AffineExpr::constant(a.value() + b.value());
  if (b.kind() == K::Const && b.value() == 0) return a;
  if (a.kind() == K::Const && a.value() == 0) return b;
  return AffineExpr::binary(K::Add, a, b);
}

AffineExpr operator*(const AffineExpr& a, const AffineExpr& b) {
  using K = AffineExpr::Kind;
  if (a.kind() == K::Const && b.kind() == K::Const) return AffineExpr::constant(a.value() * b.value());
  if (b.kind() == K::Const && b.value() == 1) return a;
  if (a.kind() == K::Const && a.value() == 1) return b;
  if (a.kind() == K::Const && b.kind() != K::Const) return AffineExpr::binary(K::Mul, b, a);
  return AffineExpr::binary(K::Mul, a, b);
}

AffineExpr AffineExpr::floordiv(const AffineExpr& a, const AffineExpr& b) {
  return binary(Kind::FloorDiv, a, b);
}

AffineExpr AffineExpr::mod(const AffineExpr& a, const AffineExpr& b) { return binary(Kind::Mod, a, b); }

bool operator==(const AffineExpr& a, const AffineExpr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case AffineExpr::Kind::Dim:
      return a.position() == b.position();
    case AffineExpr::Kind::Const:
      return a.value() == b.value();
    default:
      return a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
}

static int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int64_t AffineExpr::eval(const std::vector<int64_t>& dims) const {
  switch (kind()) {
    case Kind::Dim:
      if (position() >= dims.size()) throw CompileError("affine dim d" + std::to_string(position()) + " out of range");
      return dims[position()];
    case Kind::Const:
      return value();
    case Kind::Add:
      return lhs().eval(dims) + rhs().eval(dims);
    case Kind::Mul:
      return lhs().eval(dims) * rhs().eval(dims);
    case Kind::FloorDiv:
      return floor_div(lhs().eval(dims), rhs().eval(dims));
    case Kind::Mod: {
      int64_t b = rhs().eval(dims);
      int64_t r = lhs().eval(dims) % b;
      return r < 0 ? r + b : r;
    }
  }
  return 0;
}

AffineExpr AffineExpr::substitute(const std::vector<AffineExpr>& replacements) const {
  switch (kind()) {
    case Kind::Dim:
      if (position() >= replacements.size()) throw CompileError("affine substitution out of range");
      return replacements[position()];
    case Kind::Const:
      return *this;
    case Kind::Add:
      return lhs().substitute(replacements) + rhs().substitute(replacements);
    case Kind::Mul:
      return lhs().substitute(replacements) * rhs().substitute(replacements);
    case Kind::FloorDiv:
      return floordiv(lhs().substitute(replacements), rhs().substitute(replacements));
    case Kind::Mod:
      return mod(lhs().substitute(replacements), rhs().substitute(replacements));
  }
  return *this;
}

static void print_expr(std::ostream& os, const AffineExpr& e, int parent_prec) {
  using K = AffineExpr::Kind;
  switch (e.kind()) {
    case K::Dim:
      os << 'd' << e.position();
      return;
    case K::Const:
      os << e.value();
      return;
    case K::Add: {
      bool paren = parent_prec > 1;
      if (paren) os << '(';
      print_expr(os, e.lhs(), 1);
      if (e.rhs().kind() == K::Const && e.rhs().value() < 0) {
        os << " - " << -e.rhs().value();
      } else {
        os << " + ";
        print_expr(os, e.rhs(), 2);
      }
      if (paren) os << ')';
      return;
    }
    case K::Mul:
    case K::FloorDiv:
    case K::Mod: {
      bool paren = parent_prec > 2;
      if (paren) os << '(';
      print_expr(os, e.lhs(), 2);
      os << (e.kind() == K::Mul ? " * " : e.kind() == K::FloorDiv ? " floordiv " : " mod ");
      print_expr(os, e.rhs(), 3);
      if (paren) os << ')';
      return;
    }
  }
}

std::string AffineExpr::str() const {
  std::ostringstream os;
  print_expr(os, *this, 0);
  return os.str();
}

AffineExpr LinearForm::to_expr() const {
  AffineExpr e = AffineExpr::constant(0);
  for (unsigned i = 0; i < coefficients.size(); ++i) {
    if (coefficients[i] == 0) continue;
    e = e + AffineExpr::dim(i) * AffineExpr::constant(coefficients[i]);
  }
  return e + AffineExpr::constant(constant);
}

std::optional<LinearForm> linearize(const AffineExpr& expr, unsigned num_dims) {
  using K = AffineExpr::Kind;
  LinearForm out;
  out.coefficients.assign(num_dims, 0);
  switch (expr.kind()) {
    case K::Dim:
      if (expr.position() >= num_dims) return std::nullopt;
      out.coefficients[expr.position()] = 1;
      return out;
    case K::Const:
      out.constant = expr.value();
      return out;
    case K::Add: {
      auto l = linearize(expr.lhs(), num_dims);
      auto r = linearize(expr.rhs(), num_dims);
      if (!l || !r) return std::nullopt;
      for (unsigned i = 0; i < num_dims; ++i) out.coefficients[i] = l->coefficients[i] + r->coefficients[i];
      out.constant = l->constant + r->constant;
      return out;
    }
    case K::Mul: {
      auto l = linearize(expr.lhs(), num_dims);
      auto r = linearize(expr.rhs(), num_dims);
      if (!l || !r) return std::nullopt;
      auto is_const = [](const LinearForm& f) {
        for (auto c : f.coefficients)
          if (c != 0) return false;
        return true;
      };
      if (!is_const(*l) && !is_const(*r)) return std::nullopt;
      const LinearForm& var = is_const(*l) ? *r : *l;
      int64_t k = is_const(*l) ? l->constant : r->constant;
      for (unsigned i = 0; i < num_dims; ++i) out.coefficients[i] = var.coefficients[i] * k;
      out.constant = var.constant * k;
      return out;
    }
    case K::FloorDiv:
    case K::Mod:
      return std::nullopt;
  }
  return std::nullopt;
}

AffineMap AffineMap::identity(unsigned num_dims) {
  AffineMap m;
  m.num_dims = num_dims;
  for (unsigned i = 0; i < num_dims; ++i) m.results.push_back(AffineExpr::dim(i));
  return m;
}

AffineMap AffineMap::from_linear(unsigned num_dims, const std::vector<LinearForm>& results) {
  AffineMap m;
  m.num_dims = num_dims;
  for (const auto& r : results) m.results.push_back(r.to_expr());
  return m;
}

bool AffineMap::is_affine() const {
  for (const auto& r : results)
    if (!linearize(r, num_dims)) return false;
  return true;
}

static bool expr_references(const AffineExpr& e, unsigned dim) {
  switch (e.kind()) {
    case AffineExpr::Kind::Dim:
      return e.position() == dim;
    case AffineExpr::Kind::Const:
      return false;
    default:
      return expr_references(e.lhs(), dim) || expr_references(e.rhs(), dim);
  }
}

bool AffineMap::references_dim(unsigned dim) const {
  for (const auto& r : results)
    if (expr_references(r, dim)) return true;
  return false;
}

std::vector<int64_t> AffineMap::eval(const std::vector<int64_t>& dims) const {
  std::vector<int64_t> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(r.eval(dims));
  return out;
}

std::string AffineMap::str() const {
  std::ostringstream os;
  os << "affine_map<(";
  for (unsigned i = 0; i < num_dims; ++i) os << (i ? ", " : "") << 'd' << i;
  os << ") -> (";
  for (unsigned i = 0; i < results.size(); ++i) os << (i ? ", " : "") << results[i].str();
  os << ")>";
  return os.str();
}

bool operator==(const AffineMap& a, const AffineMap& b) {
  if (a.num_dims != b.num_dims || a.results.size() != b.results.size()) return false;
  for (size_t i = 0; i < a.results.size(); ++i)
    if (!(a.results[i] == b.results[i])) return false;
  return true;
}

}  // namespace ukc::ir
