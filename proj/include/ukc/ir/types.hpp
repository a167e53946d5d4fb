#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ukc::ir {

enum class TypeKind {
  None,
  F64,
  F32,
  F32x2,  // 64-bit register holding two f32 lanes
  Index,
  MemRef,
  ReadableStream,
  WritableStream,
  IntReg,
  FloatReg,
};

/// Value type. Small and copyable; compared structurally.
class Type {
 public:
  Type() = default;

  static Type none() { return Type(TypeKind::None); }
  static Type f64() { return Type(TypeKind::F64); }
  static Type f32() { return Type(TypeKind::F32); }
  static Type f32x2() { return Type(TypeKind::F32x2); }
  static Type index() { return Type(TypeKind::Index); }
  static Type memref(Type element, std::vector<int64_t> shape);
  static Type readable(Type element);
  static Type writable(Type element);
  /// Register types. An empty name means "not yet allocated".
  static Type int_reg(std::string name = {});
  static Type float_reg(std::string name = {});

  TypeKind kind() const { return kind_; }
  bool is(TypeKind k) const { return kind_ == k; }
  bool is_float() const { return kind_ == TypeKind::F64 || kind_ == TypeKind::F32 || kind_ == TypeKind::F32x2; }
  bool is_register() const { return kind_ == TypeKind::IntReg || kind_ == TypeKind::FloatReg; }
  bool is_stream() const { return kind_ == TypeKind::ReadableStream || kind_ == TypeKind::WritableStream; }
  bool is_allocated() const { return is_register() && !reg_.empty(); }

  const Type& element() const;
  const std::vector<int64_t>& shape() const { return shape_; }
  const std::string& reg() const { return reg_; }
  int64_t num_elements() const;
  /// Size in bytes of a scalar or packed floating-point type.
  int64_t byte_width() const;

  Type with_reg(std::string name) const;

  std::string str() const;

  friend bool operator==(const Type& a, const Type& b);
  friend bool operator!=(const Type& a, const Type& b) { return !(a == b); }

 private:
  explicit Type(TypeKind k) : kind_(k) {}

  TypeKind kind_ = TypeKind::None;
  std::shared_ptr<const Type> element_;
  std::vector<int64_t> shape_;
  std::string reg_;
};

}  // namespace ukc::ir
