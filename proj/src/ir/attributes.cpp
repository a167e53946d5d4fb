#include "ukc/ir/attributes.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

#include "ukc/diagnostics.hpp"

namespace ukc::ir {

const Attribute* OpaqueAttr::get(const std::string& key) const {
  for (const auto& [k, v] : params)
    if (k == key) return &v;
  return nullptr;
}

Attribute Attribute::ints(const std::vector<int64_t>& values) {
  AttrArray a;
  for (auto v : values) a.emplace_back(v);
  return Attribute(std::move(a));
}

Attribute Attribute::strings(const std::vector<std::string>& values) {
  AttrArray a;
  for (const auto& v : values) a.emplace_back(v);
  return Attribute(std::move(a));
}

template <typename T>
static const T& get_or_throw(const Attribute::Storage& v, const char* what) {
  if (auto p = std::get_if<T>(&v)) return *p;
  throw CompileError(std::string("attribute is not ") + what);
}

bool Attribute::as_bool() const { return get_or_throw<bool>(v_, "a bool"); }
int64_t Attribute::as_int() const { return get_or_throw<int64_t>(v_, "an integer"); }
double Attribute::as_float() const { return get_or_throw<double>(v_, "a float"); }
const std::string& Attribute::as_string() const { return get_or_throw<std::string>(v_, "a string"); }
const AttrArray& Attribute::as_array() const { return get_or_throw<AttrArray>(v_, "an array"); }
const AttrDict& Attribute::as_dict() const { return get_or_throw<AttrDict>(v_, "a dictionary"); }
const AffineMap& Attribute::as_map() const { return get_or_throw<AffineMap>(v_, "an affine map"); }
const OpaqueAttr& Attribute::as_opaque() const {
  return *get_or_throw<std::shared_ptr<const OpaqueAttr>>(v_, "a dialect attribute");
}

std::vector<int64_t> Attribute::as_ints() const {
  std::vector<int64_t> out;
  for (const auto& a : as_array()) out.push_back(a.as_int());
  return out;
}

std::vector<std::string> Attribute::as_strings() const {
  std::vector<std::string> out;
  for (const auto& a : as_array()) out.push_back(a.as_string());
  return out;
}

std::vector<AffineMap> Attribute::as_maps() const {
  std::vector<AffineMap> out;
  for (const auto& a : as_array()) out.push_back(a.as_map());
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

static std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

std::string Attribute::str() const {
  struct Printer {
    std::string operator()(std::monostate) const { return "unit"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(const std::string& s) const { return quote(s); }
    std::string operator()(const AttrArray& a) const {
      std::string s = "[";
      for (size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + a[i].str();
      return s + "]";
    }
    std::string operator()(const AttrDict& d) const {
      std::string s = "{";
      bool first = true;
      for (const auto& [k, v] : d) {
        s += (first ? "" : ", ") + k + " = " + v.str();
        first = false;
      }
      return s + "}";
    }
    std::string operator()(const AffineMap& m) const { return m.str(); }
    std::string operator()(const std::shared_ptr<const OpaqueAttr>& o) const {
      std::string s = "#" + o->name + "<";
      for (size_t i = 0; i < o->params.size(); ++i)
        s += (i ? ", " : "") + o->params[i].first + " = " + o->params[i].second.str();
      return s + ">";
    }
  };
  return std::visit(Printer{}, v_);
}

bool operator==(const Attribute& a, const Attribute& b) {
  if (a.v_.index() != b.v_.index()) return false;
  if (a.is_float()) {
    double x = a.as_float(), y = b.as_float();
    return std::memcmp(&x, &y, sizeof(double)) == 0;
  }
  if (a.is_opaque()) {
    const auto& x = a.as_opaque();
    const auto& y = b.as_opaque();
    return x.name == y.name && x.params == y.params;
  }
  return a.v_ == b.v_;
}

}  // namespace ukc::ir
