#pragma once

#include "ukc/ir/ir.hpp"
#include "ukc/kernels/kernels.hpp"

namespace ukc::sim {

/// Interprets the single function of a module at the func / linalg /
/// memref_stream level, updating the buffers of `data` in place. Buffers and
/// scalars bind to the function arguments in order.
///
/// A `mulf` whose only use is an `addf` evaluates as one fused multiply-add,
/// matching what the backend emits. Streams must be consumed exactly.
void evaluate(const ir::Operation& module, kernels::KernelData& data);

}  // namespace ukc::sim
