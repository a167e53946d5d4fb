#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "ukc/sim/isa.hpp"

namespace ukc::sim {

/// Start of the tightly coupled data memory in the address space.
inline constexpr uint64_t kTcdmBase = 0x10000000;
inline constexpr uint64_t kTcdmSize = 128 * 1024;

/// Cycle-model constants. Calibrated, not taken from RTL.
struct TimingParams {
  int fp_latency = 3;      // FPU result ready this many cycles after issue
  int load_latency = 2;    // explicit loads: TCDM access plus writeback
  int mul_latency = 3;     // integer multiply result latency
  int branch_taken = 2;    // cycles spent on a taken branch or jump
  int fp_queue_depth = 16; // FP instructions offloaded but not yet issued
};

struct Metrics {
  int64_t cycles = 0;
  int64_t instructions = 0;  // retired, frep replays included
  int64_t flops = 0;
  int64_t fpu_busy_cycles = 0;  // FPU compute issues, moves included
  int64_t loads = 0;   // explicit fld / flw
  int64_t stores = 0;  // explicit fsd / fsw
  int64_t fmadd = 0;   // fmadd.d / fmadd.s
  int64_t frep_launches = 0;
  int64_t ssr_elements = 0;  // elements moved through stream registers
  int64_t ssr_accesses = 0;  // TCDM accesses made by the stream lanes

  double throughput() const { return cycles ? static_cast<double>(flops) / static_cast<double>(cycles) : 0.0; }
  double fpu_utilization() const {
    return cycles ? static_cast<double>(fpu_busy_cycles) / static_cast<double>(cycles) : 0.0;
  }
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// One stream semantic register lane.
struct SsrLane {
  uint64_t base = 0;
  std::array<int64_t, 4> bounds{};   // trip count minus one, dim 0 outermost
  std::array<int64_t, 4> strides{};  // bytes
  int64_t repeat = 0;                // extra deliveries of each element
  int rank = 0;
  bool write = false;
  bool configured = false;
  std::array<int64_t, 4> idx{};
  int64_t rep_count = 0;
  int64_t delivered = 0;
  int64_t total = 0;

  uint64_t address() const;
  /// Moves to the next element; returns false once the pattern is exhausted.
  bool advance();
};

/// Single Snitch-like core: integer registers, FP registers, three SSR lanes,
/// the FREP sequencer and the TCDM. Executes functionally in program order
/// while a separate timing model tracks when each instruction issues.
class Machine {
 public:
  explicit Machine(TimingParams timing = {});

  // Memory
  std::vector<uint8_t>& memory() { return tcdm_; }
  void write_f64(uint64_t addr, double v);
  void write_f32(uint64_t addr, float v);
  double read_f64(uint64_t addr) const;
  float read_f32(uint64_t addr) const;

  // Registers
  void set_x(int r, int64_t v) {
    if (r != 0) x_[static_cast<size_t>(r)] = v;
  }
  int64_t x(int r) const { return x_[static_cast<size_t>(r)]; }
  void set_f(int r, uint64_t bits) { f_[static_cast<size_t>(r)] = bits; }
  uint64_t f(int r) const { return f_[static_cast<size_t>(r)]; }

  /// Called for every retired instruction with (issue cycle, pc, instruction).
  void set_trace(std::function<void(int64_t, uint64_t, const Instr&)> fn) { trace_ = std::move(fn); }

  /// Runs from `entry` until the top-level `ret`. Throws SimError on memory
  /// faults, stream over/under-runs, or when `max_instructions` is exceeded.
  Metrics run(const Program& prog, size_t entry, int64_t max_instructions = 50'000'000);

  /// Executes one non-control-flow instruction functionally and in the
  /// timing model. Used by the structured interpreter.
  void step(const Instr& in, uint64_t pc = 0);
  /// Executes a frep.o whose body is `body`.
  void frep(const Instr& frep, const std::vector<const Instr*>& body, uint64_t pc = 0);
  void begin();
  Metrics finish();
  /// Timing of a taken / not-taken branch evaluated outside step().
  void branch(const Instr& in, bool taken, uint64_t pc = 0);

 private:
  uint64_t check(uint64_t addr, uint64_t bytes) const;
  uint64_t read_src(int r, int64_t& ready);
  void write_dst(int r, uint64_t bits);
  bool streaming(int r, bool write) const;
  void execute(const Instr& in);
  void issue_fp(const Instr& in, int64_t earliest, uint64_t pc);
  void retire(int64_t cycle, uint64_t pc, const Instr& in);

  TimingParams timing_;
  std::vector<uint8_t> tcdm_;
  std::array<int64_t, 32> x_{};
  std::array<uint64_t, 32> f_{};
  std::array<SsrLane, 3> ssr_{};
  bool ssr_enabled_ = false;

  // Timing state.
  int64_t t_ = 0;          // next integer-core issue cycle
  int64_t fpu_next_ = 0;   // next free FPU issue slot
  int64_t fpu_done_ = 0;   // cycle by which all issued FP work has completed
  std::array<int64_t, 32> x_ready_{};
  std::array<int64_t, 32> f_ready_{};
  std::deque<int64_t> fp_queue_;  // issue cycles of offloaded FP instructions
  int64_t src_ready_ = 0;

  Metrics m_;
  std::function<void(int64_t, uint64_t, const Instr&)> trace_;
};

}  // namespace ukc::sim
