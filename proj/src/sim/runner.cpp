#include "ukc/sim/runner.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "ukc/diagnostics.hpp"
#include "ukc/dialects/rv.hpp"
#include "ukc/transforms/schedule.hpp"

namespace ukc::sim {

using kernels::DType;
using kernels::KernelData;
using kernels::KernelSpec;

std::vector<uint64_t> buffer_addresses(const KernelSpec& spec) {
  std::vector<uint64_t> out;
  uint64_t next = kTcdmBase;
  for (const auto& a : kernels::arguments(spec)) {
    if (!a.is_buffer) continue;
    out.push_back(next);
    uint64_t bytes = static_cast<uint64_t>(spec.element_size());
    for (auto e : a.shape) bytes *= static_cast<uint64_t>(e);
    next += (bytes + 7) & ~uint64_t{7};
  }
  if (next > kTcdmBase + kTcdmSize)
    throw SimError(spec.label() + " needs " + std::to_string(next - kTcdmBase) + " bytes, the TCDM holds " +
                   std::to_string(kTcdmSize));
  return out;
}

namespace {

// Writes inputs to TCDM and sets the argument registers.
std::vector<uint64_t> load_arguments(Machine& m, const KernelSpec& spec, const KernelData& data) {
  auto addrs = buffer_addresses(spec);
  auto args = kernels::arguments(spec);
  size_t buf = 0, scalar = 0;
  int next_x = rv::int_reg_number("a0"), next_f = rv::float_reg_number("fa0");
  for (const auto& a : args) {
    if (a.is_buffer) {
      const auto& values = data.buffers.at(buf);
      for (size_t i = 0; i < values.size(); ++i) {
        if (spec.dtype == DType::F64)
          m.write_f64(addrs[buf] + 8 * i, values[i]);
        else
          m.write_f32(addrs[buf] + 4 * i, static_cast<float>(values[i]));
      }
      m.set_x(next_x++, static_cast<int64_t>(addrs[buf]));
      ++buf;
    } else {
      double v = data.scalars.at(scalar++);
      uint64_t bits = spec.dtype == DType::F64
                          ? std::bit_cast<uint64_t>(v)
                          : 0xFFFFFFFF00000000ull | std::bit_cast<uint32_t>(static_cast<float>(v));
      m.set_f(next_f++, bits);
    }
  }
  return addrs;
}

void store_outputs(const Machine& m, const KernelSpec& spec, const std::vector<uint64_t>& addrs, KernelData& data) {
  size_t buf = 0;
  for (const auto& a : kernels::arguments(spec)) {
    if (!a.is_buffer) continue;
    if (a.is_output) {
      auto& values = data.buffers.at(buf);
      for (size_t i = 0; i < values.size(); ++i)
        values[i] = spec.dtype == DType::F64 ? m.read_f64(addrs[buf] + 8 * i)
                                             : static_cast<double>(m.read_f32(addrs[buf] + 4 * i));
    }
    ++buf;
  }
}

}  // namespace

RunResult run_kernel(const std::string& assembly, const std::string& symbol, const KernelSpec& spec, KernelData& data,
                     const RunOptions& options) {
  Program prog = assemble(assembly);
  Machine m(options.timing);
  auto addrs = load_arguments(m, spec, data);
  RunResult result;
  std::ostringstream trace;
  if (options.trace) {
    m.set_trace([&trace](int64_t cycle, uint64_t pc, const Instr& in) {
      trace << cycle << " 0x" << std::hex << pc << std::dec << " " << in.text << "\n";
    });
  }
  result.metrics = m.run(prog, prog.entry(symbol));
  result.trace = trace.str();
  store_outputs(m, spec, addrs, data);
  return result;
}

namespace {

class StructuredInterpreter {
 public:
  explicit StructuredInterpreter(Machine& m) : m_(m) {}

  void run_block(const ir::Block& block) {
    for (const auto& op : block.op_list()) {
      if (done_) return;
      run_op(*op);
    }
  }

 private:
  int64_t x(const ir::Value* v) const { return m_.x(rv::int_reg_number(reg(v))); }

  static const std::string& reg(const ir::Value* v) {
    if (!v->type().is_allocated()) throw SimError("interpreter: unallocated value");
    return v->type().reg();
  }

  // Simultaneous register copies src_i -> dst_i.
  void copy(const std::vector<const ir::Value*>& src, const std::vector<const ir::Value*>& dst) {
    std::vector<uint64_t> vals;
    for (const auto* s : src) {
      bool is_int = s->type().is(ir::TypeKind::IntReg);
      vals.push_back(is_int ? static_cast<uint64_t>(m_.x(rv::int_reg_number(reg(s))))
                            : m_.f(rv::float_reg_number(reg(s))));
    }
    for (size_t i = 0; i < dst.size(); ++i) {
      if (dst[i]->type().is(ir::TypeKind::IntReg))
        m_.set_x(rv::int_reg_number(reg(dst[i])), static_cast<int64_t>(vals[i]));
      else
        m_.set_f(rv::float_reg_number(reg(dst[i])), vals[i]);
    }
  }

  void run_op(const ir::Operation& op) {
    if (op.is("rv.get_register") || op.is("rv.label")) return;
    if (op.is("rv_func.return")) {
      done_ = true;
      return;
    }
    if (op.is("rv_scf.for")) {
      const auto& body = op.body();
      std::vector<const ir::Value*> init = {op.operand(0)}, args = {body.arg(0)};
      for (unsigned i = 3; i < op.num_operands(); ++i) init.push_back(op.operand(i));
      for (unsigned i = 1; i < body.num_args(); ++i) args.push_back(body.arg(i));
      copy(init, args);
      int iv = rv::int_reg_number(reg(body.arg(0)));
      while (m_.x(iv) < x(op.operand(1))) {
        run_body(body, args, 1);
        m_.set_x(iv, m_.x(iv) + x(op.operand(2)));
      }
      return;
    }
    if (op.is("rv_snitch.frep")) {
      const auto& body = op.body();
      std::vector<const ir::Value*> init, args;
      for (unsigned i = 1; i < op.num_operands(); ++i) init.push_back(op.operand(i));
      for (unsigned i = 0; i < body.num_args(); ++i) args.push_back(body.arg(i));
      copy(init, args);
      for (int64_t r = 0; r <= x(op.operand(0)); ++r) run_body(body, args, 0);
      return;
    }
    std::string text = transforms::emit_instruction(op);
    if (text.empty()) return;
    m_.step(parse_instruction(text));
  }

  void run_body(const ir::Block& body, const std::vector<const ir::Value*>& args, size_t first_carried) {
    for (const auto& inner : body.op_list()) {
      if (inner->is("rv_scf.yield") || inner->is("rv_snitch.frep_yield")) {
        std::vector<const ir::Value*> ys(inner->operands().begin(), inner->operands().end());
        std::vector<const ir::Value*> dst(args.begin() + static_cast<std::ptrdiff_t>(first_carried), args.end());
        copy(ys, dst);
        return;
      }
      run_op(*inner);
    }
  }

  Machine& m_;
  bool done_ = false;
};

}  // namespace

void interpret_structured(const ir::Operation& module, const KernelSpec& spec, KernelData& data) {
  const ir::Operation* func = nullptr;
  for (const auto& op : module.body().op_list())
    if (op->is("rv_func.func")) func = op.get();
  if (!func) throw SimError("interpreter: module has no rv_func.func");
  Machine m;
  auto addrs = load_arguments(m, spec, data);
  m.begin();
  StructuredInterpreter(m).run_block(func->body());
  m.finish();
  store_outputs(m, spec, addrs, data);
}

}  // namespace ukc::sim
