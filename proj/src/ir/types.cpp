#include "ukc/ir/types.hpp"

#include "ukc/diagnostics.hpp"

namespace ukc::ir {

Type Type::memref(Type element, std::vector<int64_t> shape) {
  Type t(TypeKind::MemRef);
  t.element_ = std::make_shared<const Type>(std::move(element));
  t.shape_ = std::move(shape);
  return t;
}

Type Type::readable(Type element) {
  Type t(TypeKind::ReadableStream);
  t.element_ = std::make_shared<const Type>(std::move(element));
  return t;
}

Type Type::writable(Type element) {
  Type t(TypeKind::WritableStream);
  t.element_ = std::make_shared<const Type>(std::move(element));
  return t;
}

Type Type::int_reg(std::string name) {
  Type t(TypeKind::IntReg);
  t.reg_ = std::move(name);
  return t;
}

Type Type::float_reg(std::string name) {
  Type t(TypeKind::FloatReg);
  t.reg_ = std::move(name);
  return t;
}

const Type& Type::element() const {
  static const Type kNone;
  return element_ ? *element_ : kNone;
}

int64_t Type::num_elements() const {
  int64_t n = 1;
  for (auto d : shape_) n *= d;
  return n;
}

int64_t Type::byte_width() const {
  switch (kind_) {
    case TypeKind::F32:
      return 4;
    case TypeKind::F64:
    case TypeKind::F32x2:
    case TypeKind::Index:
      return 8;
    default:
      throw CompileError("type " + str() + " has no scalar width");
  }
}

Type Type::with_reg(std::string name) const {
  if (!is_register()) throw CompileError("with_reg on non-register type " + str());
  Type t = *this;
  t.reg_ = std::move(name);
  return t;
}

std::string Type::str() const {
  switch (kind_) {
    case TypeKind::None:
      return "none";
    case TypeKind::F64:
      return "f64";
    case TypeKind::F32:
      return "f32";
    case TypeKind::F32x2:
      return "vector<2xf32>";
    case TypeKind::Index:
      return "index";
    case TypeKind::MemRef: {
      std::string s = "memref<";
      for (auto d : shape_) s += std::to_string(d) + "x";
      return s + element().str() + ">";
    }
    case TypeKind::ReadableStream:
      return "!stream.readable<" + element().str() + ">";
    case TypeKind::WritableStream:
      return "!stream.writable<" + element().str() + ">";
    case TypeKind::IntReg:
      return reg_.empty() ? "!rv.reg" : "!rv.reg<" + reg_ + ">";
    case TypeKind::FloatReg:
      return reg_.empty() ? "!rv.freg" : "!rv.freg<" + reg_ + ">";
  }
  return "?";
}

bool operator==(const Type& a, const Type& b) {
  if (a.kind_ != b.kind_ || a.shape_ != b.shape_ || a.reg_ != b.reg_) return false;
  if (!a.element_ || !b.element_) return !a.element_ && !b.element_;
  return *a.element_ == *b.element_;
}

}  // namespace ukc::ir
