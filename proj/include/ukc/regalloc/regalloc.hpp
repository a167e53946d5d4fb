#pragma once

#include <map>
#include <string>
#include <vector>

#include "ukc/ir/ir.hpp"

namespace ukc::regalloc {

/// Registers still free for allocation in one function: the caller-saved
/// pools minus every register the function already names explicitly.
struct RegisterPool {
  std::vector<std::string> int_regs;
  std::vector<std::string> fp_regs;
};

RegisterPool available_registers(const ir::Operation& func);

/// For every loop region in `func`, the values used inside it (at any depth)
/// that are defined outside it, in first-use order.
std::map<const ir::Region*, std::vector<ir::Value*>> loop_live_ins(ir::Operation& func);

struct AllocationReport {
  std::string function;
  int int_used = 0;  // distinct integer registers, excluding zero
  int fp_used = 0;
  int int_pool = 0;  // size of the caller-saved pools
  int fp_pool = 0;
  std::vector<std::string> int_regs;  // sorted
  std::vector<std::string> fp_regs;
};

/// Counts the registers a function uses after allocation.
AllocationReport usage(const ir::Operation& func);

/// Assigns a register to every unallocated register-typed value of an
/// rv_func.func. Walks the body backwards, so a register is taken at the last
/// use of a value and released at its definition. Loop-carried values share
/// one register across init, block argument, yield operand and result.
/// Throws OutOfRegisters when a pool is exhausted; nothing is spilled.
AllocationReport allocate_function(ir::Operation& func);

std::vector<AllocationReport> allocate_module(ir::Operation& module);

}  // namespace ukc::regalloc
