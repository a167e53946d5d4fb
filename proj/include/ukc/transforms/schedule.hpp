#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ukc/ir/ir.hpp"
#include "ukc/ir/pass.hpp"
#include "ukc/regalloc/regalloc.hpp"

namespace ukc::transforms {

/// Which optimizations the pipeline applies. Every stage can be toggled on its
/// own; the default enables all of them.
struct PipelineConfig {
  bool streams = true;
  bool scalar_replacement = true;
  bool frep = true;
  bool fuse_fill = true;
  bool unroll_and_jam = true;
  std::optional<int64_t> unroll_factor_override;

  static PipelineConfig baseline() { return {false, false, false, false, false, std::nullopt}; }
  /// Stage name list such as "streams+scalar_replacement", or "baseline".
  std::string str() const;
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// The six cumulative stage sets, from the baseline to the full pipeline.
struct Stage {
  std::string name;
  PipelineConfig config;
};
std::vector<Stage> cumulative_stages();

// Generic-level scheduling.

/// linalg.generic -> memref_stream.generic with explicit bounds.
void ingest_generic(ir::Operation& module);
/// Rewrites f32 element-wise generics and f32 dot products to operate on
/// two-lane packed values.
void pack_f32_lanes(ir::Operation& module);
/// Drops reduction dims from output maps so accumulation happens in registers.
void apply_scalar_replacement(ir::Operation& module);
/// Folds a constant fill into the accumulator initialisation of the reduction
/// that immediately follows it.
void apply_fuse_fill(ir::Operation& module);
/// Unroll-and-jam factor for a parallel extent: the whole extent up to 4,
/// else the smallest divisor in [4, 8], else 4 with a remainder.
int64_t choose_unroll_factor(int64_t extent);
void apply_unroll_and_jam(ir::Operation& module, std::optional<int64_t> factor_override = std::nullopt);
/// Wraps generics in streaming regions for their affine operands.
void streamify(ir::Operation& module);

// Lowering to the RISC-V level.

/// func / memref_stream -> rv_func, rv_scf, snitch_stream and rv ops.
void lower_to_loops(ir::Operation& module);
void convert_inner_loop_to_frep(ir::Operation& module);
void lower_streaming_region(ir::Operation& module);
void lower_rv_scf_to_rv_cf(ir::Operation& module);
/// GNU-style assembly for a fully allocated, flattened module.
std::string emit_assembly(const ir::Operation& module);
/// Assembly line of one region-free instruction op, empty for ops that print
/// nothing (rv.get_register).
std::string emit_instruction(const ir::Operation& op);

/// Number of leading iteration dims that must become loops around the stream
/// setup so that every stream fits the hardware rank. Returns -1 when no
/// parallel prefix suffices.
int peeled_dims(const std::vector<int64_t>& bounds, const std::vector<std::string>& iterator_types,
                const std::vector<ir::AffineMap>& stream_maps, const std::vector<std::vector<int64_t>>& shapes,
                const std::vector<bool>& reduced_domain);

/// Generic-level prefix of the pipeline; the result still evaluates with
/// sim::evaluate.
std::vector<ir::Pass> generic_passes(const PipelineConfig& config);
/// Passes from the high-level module down to allocated structured RISC-V IR.
/// Allocation reports are appended to `reports` when it is non-null.
std::vector<ir::Pass> schedule_passes(const PipelineConfig& config,
                                      std::vector<regalloc::AllocationReport>* reports = nullptr);
/// Everything after register allocation: rv_scf -> rv_cf.
std::vector<ir::Pass> finalize_passes();

}  // namespace ukc::transforms
