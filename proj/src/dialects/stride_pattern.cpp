#include "ukc/dialects/stride_pattern.hpp"

#include <sstream>

#include "ukc/diagnostics.hpp"

namespace ukc::snitch {

int64_t StridePattern::num_accesses() const {
  int64_t n = 1;
  for (auto b : upper_bounds) n *= b;
  return n;
}

std::vector<int64_t> StridePattern::offsets() const {
  std::vector<int64_t> out;
  int64_t total = num_accesses();
  if (total <= 0) return out;
  out.reserve(static_cast<size_t>(total * repeat));
  std::vector<int64_t> idx(upper_bounds.size(), 0);
  for (int64_t n = 0; n < total; ++n) {
    int64_t off = 0;
    for (size_t i = 0; i < idx.size(); ++i) off += idx[i] * strides[i];
    for (int64_t r = 0; r < repeat; ++r) out.push_back(off);
    for (int i = static_cast<int>(idx.size()) - 1; i >= 0; --i) {
      if (++idx[i] < upper_bounds[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

ir::Attribute StridePattern::to_attr() const {
  ir::OpaqueAttr o;
  o.name = "snitch_stream.stride_pattern";
  o.params.emplace_back("ub", ir::Attribute::ints(upper_bounds));
  o.params.emplace_back("strides", ir::Attribute::ints(strides));
  o.params.emplace_back("repeat", ir::Attribute(repeat));
  return ir::Attribute(std::move(o));
}

StridePattern StridePattern::from_attr(const ir::Attribute& attr) {
  const auto& o = attr.as_opaque();
  if (o.name != "snitch_stream.stride_pattern") throw CompileError("expected a snitch_stream.stride_pattern");
  StridePattern p;
  const auto* ub = o.get("ub");
  const auto* st = o.get("strides");
  if (!ub || !st) throw CompileError("stride pattern needs 'ub' and 'strides'");
  p.upper_bounds = ub->as_ints();
  p.strides = st->as_ints();
  if (const auto* r = o.get("repeat")) p.repeat = r->as_int();
  if (p.upper_bounds.size() != p.strides.size()) throw CompileError("stride pattern rank mismatch");
  return p;
}

std::string StridePattern::str() const { return to_attr().str(); }

StridePattern canonicalize_pattern(const StridePattern& p) {
  StridePattern out;
  out.repeat = p.repeat;
  for (size_t i = 0; i < p.upper_bounds.size(); ++i) {
    if (p.upper_bounds[i] == 1) continue;
    out.upper_bounds.push_back(p.upper_bounds[i]);
    out.strides.push_back(p.strides[i]);
  }
  // A zero-stride innermost dim repeats each element; repeats of repeats multiply.
  while (!out.upper_bounds.empty() && out.strides.back() == 0) {
    out.repeat *= out.upper_bounds.back();
    out.upper_bounds.pop_back();
    out.strides.pop_back();
  }
  for (size_t j = 0; j + 1 < out.upper_bounds.size();) {
    if (out.strides[j] == out.strides[j + 1] * out.upper_bounds[j + 1]) {
      out.upper_bounds[j + 1] *= out.upper_bounds[j];
      out.upper_bounds.erase(out.upper_bounds.begin() + static_cast<std::ptrdiff_t>(j));
      out.strides.erase(out.strides.begin() + static_cast<std::ptrdiff_t>(j));
      if (j > 0) --j;
    } else {
      ++j;
    }
  }
  if (out.upper_bounds.empty()) {
    // Every element is the same address: a single access repeated.
    out.upper_bounds.push_back(1);
    out.strides.push_back(0);
  }
  return out;
}

StridePattern pattern_from_affine(const std::vector<int64_t>& bounds, const ir::AffineMap& index_map,
                                  int64_t element_size, const std::vector<int64_t>& operand_shape) {
  if (index_map.num_dims != bounds.size())
    throw CompileError("index map " + index_map.str() + " does not match " + std::to_string(bounds.size()) +
                       " iteration dims");
  if (index_map.results.size() != operand_shape.size())
    throw CompileError("index map " + index_map.str() + " does not match operand rank " +
                       std::to_string(operand_shape.size()));
  std::vector<int64_t> coeffs(bounds.size(), 0);
  int64_t row_stride = element_size;
  for (int r = static_cast<int>(operand_shape.size()) - 1; r >= 0; --r) {
    auto lin = ir::linearize(index_map.results[static_cast<size_t>(r)], index_map.num_dims);
    if (!lin) throw CompileError("non-affine access " + index_map.str() + " cannot be streamed");
    for (size_t d = 0; d < coeffs.size(); ++d) coeffs[d] += lin->coefficients[d] * row_stride;
    row_stride *= operand_shape[static_cast<size_t>(r)];
  }
  StridePattern p;
  p.upper_bounds = bounds;
  p.strides = coeffs;
  return p;
}

int64_t pattern_base_offset(const ir::AffineMap& index_map, int64_t element_size,
                            const std::vector<int64_t>& operand_shape) {
  int64_t offset = 0;
  int64_t row_stride = element_size;
  for (int r = static_cast<int>(operand_shape.size()) - 1; r >= 0; --r) {
    auto lin = ir::linearize(index_map.results[static_cast<size_t>(r)], index_map.num_dims);
    if (!lin) throw CompileError("non-affine access " + index_map.str() + " cannot be streamed");
    offset += lin->constant * row_stride;
    row_stride *= operand_shape[static_cast<size_t>(r)];
  }
  return offset;
}

}  // namespace ukc::snitch
