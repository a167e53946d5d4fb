#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ukc/ir/affine.hpp"
#include "ukc/ir/attributes.hpp"

namespace ukc::snitch {

/// Address sequence of one stream: the index tuple runs over `upper_bounds`
/// with the last dimension innermost, address = base + sum(idx[i] * strides[i]),
/// and each address is delivered `repeat` times.
struct StridePattern {
  std::vector<int64_t> upper_bounds;
  std::vector<int64_t> strides;
  int64_t repeat = 1;

  int rank() const { return static_cast<int>(upper_bounds.size()); }
  /// Distinct addresses generated (before repetition).
  int64_t num_accesses() const;
  int64_t num_elements() const { return num_accesses() * repeat; }
  /// Byte offsets in delivery order, repetitions included.
  std::vector<int64_t> offsets() const;

  ir::Attribute to_attr() const;
  static StridePattern from_attr(const ir::Attribute& attr);

  std::string str() const;
  friend bool operator==(const StridePattern&, const StridePattern&) = default;
};

/// Drops unit dimensions, merges contiguous neighbours and folds a trailing
/// zero-stride dimension into the repeat count. Offsets are preserved exactly.
StridePattern canonicalize_pattern(const StridePattern& p);

/// Builds the pattern of a row-major operand of `operand_shape` accessed by
/// `index_map` over the iteration space `bounds`. Throws CompileError on a
/// map that is not integer-linear.
StridePattern pattern_from_affine(const std::vector<int64_t>& bounds, const ir::AffineMap& index_map,
                                  int64_t element_size, const std::vector<int64_t>& operand_shape);

/// Constant byte offset of the first element addressed by `index_map`.
int64_t pattern_base_offset(const ir::AffineMap& index_map, int64_t element_size,
                            const std::vector<int64_t>& operand_shape);

/// Maximum hardware rank of a stream pattern.
inline constexpr int kMaxStreamRank = 4;

}  // namespace ukc::snitch
