#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ukc/ir/ir.hpp"

namespace ukc::kernels {

enum class KernelKind { Fill, Sum, ReLU, Conv3x3, MaxPool3x3, SumPool3x3, MatMul, MatMulT };
enum class DType { F64, F32 };

/// Data memory of the simulated core.
inline constexpr int64_t kTcdmBytes = 128 * 1024;

std::string kind_name(KernelKind kind);
std::optional<KernelKind> parse_kind(const std::string& name);
std::string dtype_name(DType dtype);
std::optional<DType> parse_dtype(const std::string& name);
const std::vector<KernelKind>& all_kinds();

struct KernelSpec {
  KernelKind kind = KernelKind::MatMul;
  int64_t n = 1;
  int64_t m = 1;
  int64_t k = 1;  // only MatMul and MatMulT
  DType dtype = DType::F64;

  bool has_k() const { return kind == KernelKind::MatMul || kind == KernelKind::MatMulT; }
  int64_t element_size() const { return dtype == DType::F64 ? 8 : 4; }
  /// e.g. "matmul_f64_1x5x200"
  std::string label() const;
};

/// One kernel argument in call order. Buffers come first, scalars last.
struct ArgSpec {
  std::string name;
  bool is_buffer = true;
  std::vector<int64_t> shape;  // buffers only
  bool is_output = false;
};

std::vector<ArgSpec> arguments(const KernelSpec& spec);
/// Total bytes of all buffers.
int64_t footprint_bytes(const KernelSpec& spec);

/// Throws CompileError for unsupported dtypes, bad shapes or TCDM overflow.
void validate(const KernelSpec& spec);

/// High-level module: one `func.func` holding linalg.generic ops (a fill
/// followed by the computation for reduction kernels).
std::unique_ptr<ir::Operation> build_kernel(const KernelSpec& spec);

/// Argument values. Buffers are stored as doubles; f32 values are exactly
/// representable floats.
struct KernelData {
  std::vector<std::vector<double>> buffers;
  std::vector<double> scalars;
};

/// Seeded uniform values in [-1, 1]; outputs are filled with a sentinel so
/// that a kernel that forgets to write them is caught.
KernelData generate_inputs(const KernelSpec& spec, uint64_t seed);

/// Naive evaluation of the kernel. Operation order matches the compiled code:
/// multiply-accumulate is fused and f32 dot products accumulate even and odd
/// lanes separately before the final horizontal sum.
std::vector<double> compute_reference(const KernelSpec& spec, const KernelData& data);

/// Minimal FLOP count of the kernel.
int64_t flop_count(const KernelSpec& spec);

/// One representative shape per kernel and dtype, used for register counts.
std::vector<KernelSpec> register_shapes();

}  // namespace ukc::kernels
