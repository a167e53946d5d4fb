#include "ukc/sim/machine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "ukc/diagnostics.hpp"

namespace ukc::sim {

namespace {

float lo(uint64_t bits) { return std::bit_cast<float>(static_cast<uint32_t>(bits)); }
float hi(uint64_t bits) { return std::bit_cast<float>(static_cast<uint32_t>(bits >> 32)); }
uint64_t pack(float l, float h) {
  return static_cast<uint64_t>(std::bit_cast<uint32_t>(l)) | (static_cast<uint64_t>(std::bit_cast<uint32_t>(h)) << 32);
}
// Scalar single-precision results are NaN-boxed in the 64-bit register.
uint64_t box(float v) { return 0xFFFFFFFF00000000ull | std::bit_cast<uint32_t>(v); }
double as_f64(uint64_t bits) { return std::bit_cast<double>(bits); }
uint64_t bits_of(double v) { return std::bit_cast<uint64_t>(v); }

// RISC-V fmax: a NaN operand yields the other operand, +0 beats -0.
template <typename T>
T rv_max(T a, T b) {
  if (std::isnan(a)) return b;
  if (std::isnan(b)) return a;
  if (a == 0 && b == 0) return std::signbit(a) ? b : a;
  return a > b ? a : b;
}

bool reads_int_rs1(Opcode op) {
  switch (op) {
    case Opcode::Mv: case Opcode::Add: case Opcode::Sub: case Opcode::Mul: case Opcode::Addi: case Opcode::Slli:
    case Opcode::Fld: case Opcode::Flw: case Opcode::Fsd: case Opcode::Fsw: case Opcode::FcvtDW: case Opcode::FmvDX:
    case Opcode::ScfgBound: case Opcode::ScfgStride: case Opcode::ScfgRep: case Opcode::ScfgBase: case Opcode::FrepO:
    case Opcode::Blt: case Opcode::Bge: case Opcode::Bne: case Opcode::Beq:
      return true;
    default:
      return false;
  }
}

bool reads_int_rs2(Opcode op) {
  switch (op) {
    case Opcode::Add: case Opcode::Sub: case Opcode::Mul:
    case Opcode::Blt: case Opcode::Bge: case Opcode::Bne: case Opcode::Beq:
      return true;
    default:
      return false;
  }
}

// FP registers read by an FP-side instruction, in operand order.
std::vector<int> fp_sources(const Instr& in) {
  switch (in.op) {
    case Opcode::Fsd: case Opcode::Fsw:
      return {in.rs2};
    case Opcode::FmvD:
      return {in.rs1};
    case Opcode::VfsumS:
      return {in.rd, in.rs1};
    case Opcode::VfmacS:
      return {in.rd, in.rs1, in.rs2};
    case Opcode::FmaddD: case Opcode::FmaddS:
      return {in.rs1, in.rs2, in.rs3};
    case Opcode::FcvtDW: case Opcode::FmvDX: case Opcode::Fld: case Opcode::Flw:
      return {};
    default:
      return {in.rs1, in.rs2};
  }
}

bool writes_fp(Opcode op) { return op != Opcode::Fsd && op != Opcode::Fsw; }

}  // namespace

uint64_t SsrLane::address() const {
  uint64_t a = base;
  for (int d = 0; d < rank; ++d)
    a += static_cast<uint64_t>(idx[static_cast<size_t>(d)] * strides[static_cast<size_t>(d)]);
  return a;
}

bool SsrLane::advance() {
  ++delivered;
  if (rep_count < repeat) {
    ++rep_count;
    return true;
  }
  rep_count = 0;
  for (int d = rank - 1; d >= 0; --d) {
    auto du = static_cast<size_t>(d);
    if (idx[du] < bounds[du]) {
      ++idx[du];
      return true;
    }
    idx[du] = 0;
  }
  return false;
}

Machine::Machine(TimingParams timing) : timing_(timing), tcdm_(kTcdmSize, 0) {}

uint64_t Machine::check(uint64_t addr, uint64_t bytes) const {
  if (addr < kTcdmBase || addr + bytes > kTcdmBase + kTcdmSize || addr + bytes < addr) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "memory access of %llu bytes at 0x%llx is outside the TCDM",
                  static_cast<unsigned long long>(bytes), static_cast<unsigned long long>(addr));
    throw SimError(buf);
  }
  return addr - kTcdmBase;
}

void Machine::write_f64(uint64_t addr, double v) { std::memcpy(&tcdm_[check(addr, 8)], &v, 8); }
void Machine::write_f32(uint64_t addr, float v) { std::memcpy(&tcdm_[check(addr, 4)], &v, 4); }
double Machine::read_f64(uint64_t addr) const {
  double v;
  std::memcpy(&v, &tcdm_[check(addr, 8)], 8);
  return v;
}
float Machine::read_f32(uint64_t addr) const {
  float v;
  std::memcpy(&v, &tcdm_[check(addr, 4)], 4);
  return v;
}

bool Machine::streaming(int r, bool write) const {
  if (!ssr_enabled_ || r < 0 || r >= static_cast<int>(ssr_.size())) return false;
  const auto& lane = ssr_[static_cast<size_t>(r)];
  return lane.configured && lane.write == write;
}

uint64_t Machine::read_src(int r, int64_t& ready) {
  if (streaming(r, false)) {
    auto& lane = ssr_[static_cast<size_t>(r)];
    if (lane.delivered >= lane.total)
      throw SimError("stream " + std::to_string(r) + " over-run: all " + std::to_string(lane.total) +
                     " elements already read");
    if (lane.rep_count == 0) ++m_.ssr_accesses;
    uint64_t bits;
    std::memcpy(&bits, &tcdm_[check(lane.address(), 8)], 8);
    lane.advance();
    ++m_.ssr_elements;
    return bits;
  }
  ready = std::max(ready, f_ready_[static_cast<size_t>(r)]);
  return f_[static_cast<size_t>(r)];
}

void Machine::write_dst(int r, uint64_t bits) {
  if (streaming(r, true)) {
    auto& lane = ssr_[static_cast<size_t>(r)];
    if (lane.delivered >= lane.total)
      throw SimError("stream " + std::to_string(r) + " over-run: all " + std::to_string(lane.total) +
                     " elements already written");
    std::memcpy(&tcdm_[check(lane.address(), 8)], &bits, 8);
    ++m_.ssr_accesses;
    ++m_.ssr_elements;
    lane.advance();
    return;
  }
  f_[static_cast<size_t>(r)] = bits;
}

void Machine::retire(int64_t cycle, uint64_t pc, const Instr& in) {
  ++m_.instructions;
  if (trace_) trace_(cycle, pc, in);
}

void Machine::begin() {
  m_ = {};
  t_ = fpu_next_ = fpu_done_ = 0;
  x_ready_.fill(0);
  f_ready_.fill(0);
  fp_queue_.clear();
  ssr_enabled_ = false;
  for (auto& lane : ssr_) lane = {};
}

Metrics Machine::finish() {
  if (ssr_enabled_) throw SimError("program returned with streams still enabled");
  m_.cycles = std::max(t_, fpu_done_);
  return m_;
}

// Functional semantics of an FP-side instruction. Sources are read in
// operand order so that stream pops happen in program order.
void Machine::execute(const Instr& in) {
  int64_t ready = 0;
  auto src = [&](int r) { return read_src(r, ready); };
  switch (in.op) {
    case Opcode::Fld:
      write_dst(in.rd, [&] {
        uint64_t b;
        std::memcpy(&b, &tcdm_[check(static_cast<uint64_t>(x(in.rs1) + in.imm), 8)], 8);
        return b;
      }());
      break;
    case Opcode::Flw:
      write_dst(in.rd, box(read_f32(static_cast<uint64_t>(x(in.rs1) + in.imm))));
      break;
    case Opcode::Fsd: {
      uint64_t b = src(in.rs2);
      std::memcpy(&tcdm_[check(static_cast<uint64_t>(x(in.rs1) + in.imm), 8)], &b, 8);
      break;
    }
    case Opcode::Fsw:
      write_f32(static_cast<uint64_t>(x(in.rs1) + in.imm), lo(src(in.rs2)));
      break;
    case Opcode::FaddD: case Opcode::FsubD: case Opcode::FmulD: case Opcode::FmaxD: {
      double a = as_f64(src(in.rs1)), b = as_f64(src(in.rs2));
      double r = in.op == Opcode::FaddD   ? a + b
                 : in.op == Opcode::FsubD ? a - b
                 : in.op == Opcode::FmulD ? a * b
                                          : rv_max(a, b);
      write_dst(in.rd, bits_of(r));
      break;
    }
    case Opcode::FaddS: case Opcode::FsubS: case Opcode::FmulS: case Opcode::FmaxS: {
      float a = lo(src(in.rs1)), b = lo(src(in.rs2));
      float r = in.op == Opcode::FaddS   ? a + b
                : in.op == Opcode::FsubS ? a - b
                : in.op == Opcode::FmulS ? a * b
                                         : rv_max(a, b);
      write_dst(in.rd, box(r));
      break;
    }
    case Opcode::FmaddD: {
      double a = as_f64(src(in.rs1)), b = as_f64(src(in.rs2)), c = as_f64(src(in.rs3));
      write_dst(in.rd, bits_of(std::fma(a, b, c)));
      break;
    }
    case Opcode::FmaddS: {
      float a = lo(src(in.rs1)), b = lo(src(in.rs2)), c = lo(src(in.rs3));
      write_dst(in.rd, box(std::fmaf(a, b, c)));
      break;
    }
    case Opcode::FmvD:
      write_dst(in.rd, src(in.rs1));
      break;
    case Opcode::FcvtDW:
      write_dst(in.rd, bits_of(static_cast<double>(static_cast<int32_t>(x(in.rs1)))));
      break;
    case Opcode::FmvDX:
      write_dst(in.rd, static_cast<uint64_t>(x(in.rs1)));
      break;
    case Opcode::VfaddS: case Opcode::VfmulS: case Opcode::VfmaxS: case Opcode::VfcpkaSS: {
      uint64_t a = src(in.rs1), b = src(in.rs2);
      uint64_t r = 0;
      if (in.op == Opcode::VfaddS) r = pack(lo(a) + lo(b), hi(a) + hi(b));
      if (in.op == Opcode::VfmulS) r = pack(lo(a) * lo(b), hi(a) * hi(b));
      if (in.op == Opcode::VfmaxS) r = pack(rv_max(lo(a), lo(b)), rv_max(hi(a), hi(b)));
      if (in.op == Opcode::VfcpkaSS) r = pack(lo(a), lo(b));
      write_dst(in.rd, r);
      break;
    }
    case Opcode::VfmacS: {
      uint64_t acc = src(in.rd), a = src(in.rs1), b = src(in.rs2);
      write_dst(in.rd, pack(std::fmaf(lo(a), lo(b), lo(acc)), std::fmaf(hi(a), hi(b), hi(acc))));
      break;
    }
    case Opcode::VfsumS: {
      uint64_t acc = src(in.rd), a = src(in.rs1);
      float s = (lo(acc) + lo(a)) + hi(a);
      write_dst(in.rd, pack(s, hi(acc)));
      break;
    }
    default:
      throw SimError("'" + in.text + "' is not an FP instruction");
  }
}

// Offloads an FP-side instruction: waits for a free slot in the FP queue,
// then issues in order once its register sources are ready. Stream-fed
// sources never stall.
void Machine::issue_fp(const Instr& in, int64_t earliest, uint64_t pc) {
  int64_t ready = std::max(earliest, fpu_next_);
  for (int r : fp_sources(in))
    if (!streaming(r, false)) ready = std::max(ready, f_ready_[static_cast<size_t>(r)]);
  int64_t issue = ready;
  fpu_next_ = issue + 1;
  bool load = in.op == Opcode::Fld || in.op == Opcode::Flw;
  int latency = load ? timing_.load_latency : timing_.fp_latency;
  if (writes_fp(in.op) && !streaming(in.rd, true)) f_ready_[static_cast<size_t>(in.rd)] = issue + latency;
  fpu_done_ = std::max(fpu_done_, issue + (writes_fp(in.op) ? latency : 1));

  execute(in);
  int f = flops(in.op);
  m_.flops += f;
  if (is_fp_compute(in.op)) ++m_.fpu_busy_cycles;
  if (load) ++m_.loads;
  if (in.op == Opcode::Fsd || in.op == Opcode::Fsw) ++m_.stores;
  if (in.op == Opcode::FmaddD || in.op == Opcode::FmaddS) ++m_.fmadd;
  retire(issue, pc, in);
}

void Machine::step(const Instr& in, uint64_t pc) {
  int64_t start = t_;
  if (reads_int_rs1(in.op)) start = std::max(start, x_ready_[static_cast<size_t>(in.rs1)]);
  if (reads_int_rs2(in.op)) start = std::max(start, x_ready_[static_cast<size_t>(in.rs2)]);

  bool fp_side = is_fp_compute(in.op) || in.op == Opcode::Fld || in.op == Opcode::Flw || in.op == Opcode::Fsd ||
                 in.op == Opcode::Fsw;
  if (fp_side) {
    while (!fp_queue_.empty() && fp_queue_.front() <= start) fp_queue_.pop_front();
    if (static_cast<int>(fp_queue_.size()) >= timing_.fp_queue_depth) {
      start = std::max(start, fp_queue_.front());
      fp_queue_.pop_front();
    }
    issue_fp(in, start, pc);
    fp_queue_.push_back(fpu_next_ - 1);
    t_ = start + 1;
    return;
  }

  auto set = [&](int64_t v, int latency = 1) {
    set_x(in.rd, v);
    if (in.rd > 0) x_ready_[static_cast<size_t>(in.rd)] = start + latency;
  };
  switch (in.op) {
    case Opcode::Li: set(in.imm); break;
    case Opcode::Mv: set(x(in.rs1)); break;
    case Opcode::Add: set(x(in.rs1) + x(in.rs2)); break;
    case Opcode::Sub: set(x(in.rs1) - x(in.rs2)); break;
    case Opcode::Mul: set(x(in.rs1) * x(in.rs2), timing_.mul_latency); break;
    case Opcode::Addi: set(x(in.rs1) + in.imm); break;
    case Opcode::Slli: set(static_cast<int64_t>(static_cast<uint64_t>(x(in.rs1)) << (in.imm & 63))); break;
    case Opcode::ScfgBound:
      ssr_[static_cast<size_t>(in.stream)].bounds[static_cast<size_t>(in.dim)] = x(in.rs1);
      break;
    case Opcode::ScfgStride:
      ssr_[static_cast<size_t>(in.stream)].strides[static_cast<size_t>(in.dim)] = x(in.rs1);
      break;
    case Opcode::ScfgRep:
      ssr_[static_cast<size_t>(in.stream)].repeat = x(in.rs1);
      break;
    case Opcode::ScfgBase: {
      auto& lane = ssr_[static_cast<size_t>(in.stream)];
      lane.base = static_cast<uint64_t>(x(in.rs1));
      lane.rank = in.rank;
      lane.write = in.write;
      lane.configured = true;
      lane.idx.fill(0);
      lane.rep_count = 0;
      lane.delivered = 0;
      lane.total = lane.repeat + 1;
      for (int d = 0; d < lane.rank; ++d) {
        int64_t b = lane.bounds[static_cast<size_t>(d)];
        if (b < 0) throw SimError("stream " + std::to_string(in.stream) + " has a negative bound");
        lane.total *= b + 1;
      }
      break;
    }
    case Opcode::SsrEnable:
      ssr_enabled_ = true;
      break;
    case Opcode::SsrDisable:
      start = std::max(start, fpu_done_);
      for (size_t k = 0; k < ssr_.size(); ++k) {
        const auto& lane = ssr_[k];
        if (lane.configured && lane.delivered != lane.total)
          throw SimError("stream " + std::to_string(k) + " under-run: " + std::to_string(lane.delivered) + " of " +
                         std::to_string(lane.total) + " elements transferred");
      }
      for (auto& lane : ssr_) lane = {};
      ssr_enabled_ = false;
      break;
    default:
      throw SimError("'" + in.text + "' cannot be executed by step()");
  }
  retire(start, pc, in);
  t_ = start + 1;
}

void Machine::branch(const Instr& in, bool taken, uint64_t pc) {
  int64_t start = t_;
  if (reads_int_rs1(in.op)) start = std::max(start, x_ready_[static_cast<size_t>(in.rs1)]);
  if (reads_int_rs2(in.op)) start = std::max(start, x_ready_[static_cast<size_t>(in.rs2)]);
  retire(start, pc, in);
  t_ = start + (taken ? timing_.branch_taken : 1);
}

// The integer core hands the body to the sequencer one instruction per
// cycle; the sequencer replays it count+1 times without further core work.
// Body slots stay occupied in the FP queue until their last replay issues.
void Machine::frep(const Instr& fr, const std::vector<const Instr*>& body, uint64_t pc) {
  int64_t start = std::max(t_, x_ready_[static_cast<size_t>(fr.rs1)]);
  retire(start, pc, fr);
  ++m_.frep_launches;
  int64_t reps = x(fr.rs1) + 1;
  if (reps < 1) throw SimError("frep with a negative repetition count");
  int64_t dispatch = start + 1;
  std::vector<int64_t> dispatched;
  for (size_t j = 0; j < body.size(); ++j) {
    while (!fp_queue_.empty() && fp_queue_.front() <= dispatch) fp_queue_.pop_front();
    if (static_cast<int>(fp_queue_.size()) >= timing_.fp_queue_depth) {
      dispatch = std::max(dispatch, fp_queue_.front());
      fp_queue_.pop_front();
    }
    dispatched.push_back(dispatch);
    ++dispatch;
  }
  std::vector<int64_t> last(body.size(), 0);
  for (int64_t r = 0; r < reps; ++r) {
    for (size_t j = 0; j < body.size(); ++j) {
      issue_fp(*body[j], r == 0 ? dispatched[j] : 0, pc + 4 * (j + 1));
      last[j] = fpu_next_ - 1;
    }
  }
  for (auto v : last) fp_queue_.push_back(v);
  std::sort(fp_queue_.begin(), fp_queue_.end());
  t_ = dispatch;
}

Metrics Machine::run(const Program& prog, size_t entry, int64_t max_instructions) {
  begin();
  size_t pc = entry;
  int64_t executed = 0;
  while (true) {
    if (pc >= prog.instrs.size()) throw SimError("execution ran past the end of the program");
    if (++executed > max_instructions)
      throw SimError("instruction limit of " + std::to_string(max_instructions) + " exceeded");
    const Instr& in = prog.instrs[pc];
    uint64_t addr = 4 * static_cast<uint64_t>(pc);
    switch (in.op) {
      case Opcode::Ret:
        retire(t_, addr, in);
        t_ += 1;
        return finish();
      case Opcode::J:
        branch(in, true, addr);
        pc = in.target;
        break;
      case Opcode::Blt: case Opcode::Bge: case Opcode::Bne: case Opcode::Beq: {
        int64_t a = x(in.rs1), b = x(in.rs2);
        bool taken = in.op == Opcode::Blt   ? a < b
                     : in.op == Opcode::Bge ? a >= b
                     : in.op == Opcode::Bne ? a != b
                                            : a == b;
        branch(in, taken, addr);
        pc = taken ? in.target : pc + 1;
        break;
      }
      case Opcode::FrepO: {
        std::vector<const Instr*> body;
        for (int64_t k = 1; k <= in.imm; ++k) body.push_back(&prog.instrs[pc + static_cast<size_t>(k)]);
        frep(in, body, addr);
        pc += static_cast<size_t>(in.imm) + 1;
        break;
      }
      default:
        step(in, addr);
        ++pc;
    }
  }
}

}  // namespace ukc::sim
