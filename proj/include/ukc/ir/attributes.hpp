#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ukc/ir/affine.hpp"

namespace ukc::ir {

class Attribute;
using AttrArray = std::vector<Attribute>;
using AttrDict = std::map<std::string, Attribute>;

/// Dialect-specific attribute with named parameters, written `#dialect.name<key = value, ...>`.
struct OpaqueAttr {
  std::string name;
  std::vector<std::pair<std::string, Attribute>> params;

  const Attribute* get(const std::string& key) const;
};

/// Compile-time constant attached to an operation. Floats compare bitwise.
class Attribute {
 public:
  using Storage = std::variant<std::monostate, bool, int64_t, double, std::string, AttrArray, AttrDict, AffineMap,
                               std::shared_ptr<const OpaqueAttr>>;

  Attribute() = default;
  Attribute(bool v) : v_(v) {}
  Attribute(int v) : v_(int64_t{v}) {}
  Attribute(int64_t v) : v_(v) {}
  Attribute(double v) : v_(v) {}
  Attribute(const char* v) : v_(std::string(v)) {}
  Attribute(std::string v) : v_(std::move(v)) {}
  Attribute(AttrArray v) : v_(std::move(v)) {}
  Attribute(AttrDict v) : v_(std::move(v)) {}
  Attribute(AffineMap v) : v_(std::move(v)) {}
  Attribute(OpaqueAttr v) : v_(std::make_shared<const OpaqueAttr>(std::move(v))) {}

  static Attribute ints(const std::vector<int64_t>& values);
  static Attribute strings(const std::vector<std::string>& values);

  bool is_unit() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_int() const { return std::holds_alternative<int64_t>(v_); }
  bool is_float() const { return std::holds_alternative<double>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_array() const { return std::holds_alternative<AttrArray>(v_); }
  bool is_dict() const { return std::holds_alternative<AttrDict>(v_); }
  bool is_map() const { return std::holds_alternative<AffineMap>(v_); }
  bool is_opaque() const { return std::holds_alternative<std::shared_ptr<const OpaqueAttr>>(v_); }

  bool as_bool() const;
  int64_t as_int() const;
  double as_float() const;
  const std::string& as_string() const;
  const AttrArray& as_array() const;
  const AttrDict& as_dict() const;
  const AffineMap& as_map() const;
  const OpaqueAttr& as_opaque() const;

  std::vector<int64_t> as_ints() const;
  std::vector<std::string> as_strings() const;
  std::vector<AffineMap> as_maps() const;

  std::string str() const;

  friend bool operator==(const Attribute& a, const Attribute& b);
  friend bool operator!=(const Attribute& a, const Attribute& b) { return !(a == b); }

 private:
  Storage v_;
};

/// Shortest round-trippable decimal form; always contains '.', 'e', "inf" or "nan".
std::string format_double(double v);

}  // namespace ukc::ir
