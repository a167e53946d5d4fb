#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ukc/ir/ir.hpp"
#include "ukc/kernels/kernels.hpp"
#include "ukc/regalloc/regalloc.hpp"
#include "ukc/sim/runner.hpp"
#include "ukc/transforms/schedule.hpp"

namespace ukc::driver {

struct Compiled {
  std::unique_ptr<ir::Operation> module;  // flattened, allocated
  std::string assembly;
  regalloc::AllocationReport registers;
  std::string symbol;
};

/// Builds, schedules, allocates and emits one kernel.
Compiled compile(const kernels::KernelSpec& spec, const transforms::PipelineConfig& config);

/// Number of `frep.o` lines in an assembly listing.
int count_freps(const std::string& assembly);

enum class Status { Ok, Mismatch, CompileError, SimError };
std::string status_name(Status s);

/// One simulated kernel run.
struct RunRecord {
  kernels::KernelSpec spec;
  transforms::PipelineConfig config;
  sim::Metrics metrics;
  int static_freps = 0;
  regalloc::AllocationReport registers;
  Status status = Status::Ok;
  int64_t mismatches = 0;  // output elements that differ from the oracle
  std::string message;     // diagnostic for failed runs
  std::string trace;

  bool ok() const { return status == Status::Ok; }
};

struct RunSettings {
  uint64_t seed = 1;
  bool trace = false;
  sim::TimingParams timing;
};

/// Compiles, simulates and validates against compute_reference. Compile and
/// simulator diagnostics are captured in the record, not thrown.
RunRecord run(const kernels::KernelSpec& spec, const transforms::PipelineConfig& config,
              const RunSettings& settings = {});

/// Simulates existing assembly for `spec` and validates it. The record's
/// config and register fields are left at their defaults.
RunRecord run_assembly(const kernels::KernelSpec& spec, const std::string& assembly, const std::string& symbol,
                       const RunSettings& settings = {});

/// The six cumulative stages in order.
std::vector<RunRecord> ablate(const kernels::KernelSpec& spec, const RunSettings& settings = {});

/// Worker count for sweeps: UKC_THREADS when set and positive, otherwise the
/// hardware concurrency.
unsigned thread_count();

/// Runs every job, up to `threads` at a time. Results keep the job order.
std::vector<RunRecord> run_all(const std::vector<std::pair<kernels::KernelSpec, transforms::PipelineConfig>>& jobs,
                               const RunSettings& settings = {}, unsigned threads = 0);

/// Named shape grids: "registers", "f32", "f64", "matmul", and "matrix" (registers
/// plus a small-shape grid and the largest fits). Shapes that would
/// not fit the TCDM are left out. Throws std::invalid_argument on an unknown
/// suite.
std::vector<kernels::KernelSpec> suite(const std::string& name);
std::vector<std::string> suite_names();

/// Largest M (a multiple of 4) for which `kind` with N = n fits the TCDM.
int64_t largest_fitting_m(kernels::KernelKind kind, kernels::DType dtype, int64_t n, int64_t k = 1);

std::string csv_header();
std::string csv_row(const RunRecord& r);

}  // namespace ukc::driver
