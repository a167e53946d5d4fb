#pragma once

#include <string>

#include "ukc/ir/ir.hpp"
#include "ukc/kernels/kernels.hpp"
#include "ukc/sim/machine.hpp"

namespace ukc::sim {

struct RunOptions {
  TimingParams timing;
  bool trace = false;
};

struct RunResult {
  Metrics metrics;
  /// One line per retired instruction, `cycle pc mnemonic operands`, when
  /// RunOptions::trace is set.
  std::string trace;
};

/// Buffer placement in the TCDM: consecutive, 8-byte aligned, from kTcdmBase.
std::vector<uint64_t> buffer_addresses(const kernels::KernelSpec& spec);

/// Assembles `assembly`, places the kernel buffers in TCDM, passes buffer
/// pointers in a0.. and scalars in fa0.., runs `symbol` and copies the output
/// buffers back into `data`.
RunResult run_kernel(const std::string& assembly, const std::string& symbol, const kernels::KernelSpec& spec,
                     kernels::KernelData& data, const RunOptions& options = {});

/// Executes an allocated module still in structured form (rv_scf loops and
/// frep regions) register by register, with the same calling convention as
/// run_kernel. Used to check the control-flow lowering.
void interpret_structured(const ir::Operation& module, const kernels::KernelSpec& spec, kernels::KernelData& data);

}  // namespace ukc::sim
