#pragma once

#include <string>
#include <vector>

#include "ukc/ir/ir.hpp"

namespace ukc::ms {

inline constexpr const char* kParallel = "parallel";
inline constexpr const char* kReduction = "reduction";
inline constexpr const char* kInterleaved = "interleaved";

/// Accessors for `linalg.generic` and `memref_stream.generic`.
///
/// Operands are inputs, then outputs, then (memref_stream only) init values
/// for the outputs, sized by `operand_segments`. The body receives, per input
/// and then per output, `interleave_factor()` consecutive block arguments.
class GenericView {
 public:
  explicit GenericView(ir::Operation* op);

  ir::Operation* op() const { return op_; }
  bool is_linalg() const;

  unsigned num_inputs() const { return seg_[0]; }
  unsigned num_outputs() const { return seg_[1]; }
  unsigned num_inits() const { return seg_.size() > 2 ? seg_[2] : 0; }
  ir::Value* input(unsigned i) const { return op_->operand(i); }
  ir::Value* output(unsigned i) const { return op_->operand(num_inputs() + i); }
  ir::Value* init(unsigned i) const { return op_->operand(num_inputs() + num_outputs() + i); }
  std::vector<ir::Value*> inputs() const;
  std::vector<ir::Value*> outputs() const;

  /// Explicit bounds; for linalg these are inferred from operand shapes.
  std::vector<int64_t> bounds() const;
  std::vector<ir::AffineMap> maps() const;
  std::vector<std::string> iterator_types() const;
  ir::AffineMap map(unsigned operand) const { return maps().at(operand); }

  bool has_reduction() const;
  /// Extent of the trailing interleaved dim, 1 when there is none.
  int64_t interleave_factor() const;

  ir::Block& body() const { return op_->body(); }
  ir::Value* input_arg(unsigned input, unsigned copy = 0) const;
  ir::Value* output_arg(unsigned output, unsigned copy = 0) const;

 private:
  ir::Operation* op_;
  std::vector<unsigned> seg_;
};

/// Infers linalg-style bounds: for each dim, the extent of the first operand
/// dimension indexed by exactly that dim. Throws CompileError on inconsistency.
std::vector<int64_t> infer_bounds(const std::vector<ir::AffineMap>& maps, const std::vector<ir::Type>& operand_types);

}  // namespace ukc::ms
