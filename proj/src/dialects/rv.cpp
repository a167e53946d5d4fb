#include "ukc/dialects/rv.hpp"

#include <array>

#include "ukc/dialects/dialects.hpp"
#include "ukc/ir/registry.hpp"

namespace ukc::rv {

namespace {

const std::array<const char*, 32> kIntNames = {
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0",  "a1",  "a2", "a3", "a4", "a5",
    "a6",   "a7", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};

const std::array<const char*, 32> kFloatNames = {
    "ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6",  "ft7",  "fs0", "fs1", "fa0",  "fa1",  "fa2", "fa3", "fa4", "fa5",
    "fa6", "fa7", "fs2", "fs3", "fs4", "fs5", "fs6",  "fs7",  "fs8", "fs9", "fs10", "fs11", "ft8", "ft9", "ft10", "ft11"};

int lookup(const std::array<const char*, 32>& names, char raw, const std::string& name) {
  for (int i = 0; i < 32; ++i)
    if (name == names[static_cast<size_t>(i)]) return i;
  if (name == "fp" && raw == 'x') return 8;
  if (name.size() >= 2 && name[0] == raw) {
    int n = 0;
    for (size_t i = 1; i < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) return -1;
      n = n * 10 + (name[i] - '0');
    }
    return n < 32 ? n : -1;
  }
  return -1;
}

}  // namespace

int int_reg_number(const std::string& name) { return lookup(kIntNames, 'x', name); }
int float_reg_number(const std::string& name) { return lookup(kFloatNames, 'f', name); }
std::string int_reg_name(int number) { return kIntNames.at(static_cast<size_t>(number)); }
std::string float_reg_name(int number) { return kFloatNames.at(static_cast<size_t>(number)); }

const std::vector<std::string>& int_pool() {
  static const std::vector<std::string> pool = {"a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7",
                                                "t0", "t1", "t2", "t3", "t4", "t5", "t6"};
  return pool;
}

const std::vector<std::string>& float_pool() {
  static const std::vector<std::string> pool = {"ft0", "ft1", "ft2", "ft3", "ft4",  "ft5", "ft6",
                                                "ft7", "ft8", "ft9", "ft10", "ft11", "fa0", "fa1",
                                                "fa2", "fa3", "fa4", "fa5", "fa6",  "fa7"};
  return pool;
}

std::string stream_reg(int stream) { return "ft" + std::to_string(stream); }

int stream_index(const std::string& reg) {
  for (int k = 0; k < kNumStreams; ++k)
    if (reg == stream_reg(k)) return k;
  return -1;
}

bool is_fp_register_op(const ir::Operation& op) {
  if (op.num_results() == 0 && op.num_operands() == 0) return false;
  for (auto* v : op.operands())
    if (!v->type().is(ir::TypeKind::FloatReg)) return false;
  for (const auto& r : op.results())
    if (!r->type().is(ir::TypeKind::FloatReg)) return false;
  return true;
}

ir::Value* li(ir::Builder& b, int64_t imm, ir::Type t) {
  return b.create("rv.li", {}, {std::move(t)}, {{"immediate", ir::Attribute(imm)}})->result();
}

ir::Value* get_register(ir::Builder& b, ir::Type t) { return b.create("rv.get_register", {}, {std::move(t)})->result(); }

ir::Value* binary(ir::Builder& b, const char* name, ir::Value* lhs, ir::Value* rhs, ir::Type t) {
  return b.create(name, {lhs, rhs}, {std::move(t)})->result();
}

ir::Value* unary(ir::Builder& b, const char* name, ir::Value* src, ir::Type t) {
  return b.create(name, {src}, {std::move(t)})->result();
}

ir::Value* imm_op(ir::Builder& b, const char* name, ir::Value* src, int64_t imm, ir::Type t) {
  return b.create(name, {src}, {std::move(t)}, {{"immediate", ir::Attribute(imm)}})->result();
}

}  // namespace ukc::rv

namespace ukc::dialects {

using ir::OpDef;

static void check_loop_terminator(const ir::Operation& op, const char* yield, std::vector<std::string>& errs) {
  if (op.num_regions() != 1 || op.region().blocks().size() != 1) {
    errs.push_back(op.name() + ": body must be a single block");
    return;
  }
  const auto* term = op.body().terminator();
  if (!term || term->name() != yield) {
    errs.push_back(op.name() + ": body must end with " + yield);
    return;
  }
  if (term->num_operands() != op.num_results()) {
    errs.push_back(op.name() + ": yield arity " + std::to_string(term->num_operands()) + " does not match " +
                   std::to_string(op.num_results()) + " results");
    return;
  }
  for (unsigned i = 0; i < op.num_results(); ++i)
    if (term->operand(i)->type().kind() != op.result(i)->type().kind())
      errs.push_back(op.name() + ": yield operand " + std::to_string(i) + " type does not match result");
}

void register_rv(ir::Registry& r) {
  auto add = [&](const char* name, int nops, int nres, const char* ops, const char* res,
                 std::vector<std::string> attrs = {}) {
    OpDef d;
    d.name = name;
    d.num_operands = nops;
    d.num_results = nres;
    d.operand_classes = ops;
    d.result_classes = res;
    d.required_attrs = std::move(attrs);
    r.add(std::move(d));
  };
  add("rv.get_register", 0, 1, "", "*");
  add("rv.li", 0, 1, "", "i", {"immediate"});
  add("rv.mv", 1, 1, "i", "i");
  for (const char* n : {"rv.add", "rv.sub", "rv.mul"}) add(n, 2, 1, "ii", "i");
  for (const char* n : {"rv.addi", "rv.slli"}) add(n, 1, 1, "i", "i", {"immediate"});
  for (const char* n : {"rv.fld", "rv.flw"}) add(n, 1, 1, "i", "f", {"immediate"});
  for (const char* n : {"rv.fsd", "rv.fsw"}) add(n, 2, 0, "fi", "", {"immediate"});
  for (const char* n : {"rv.fadd_d", "rv.fsub_d", "rv.fmul_d", "rv.fmax_d", "rv.fadd_s", "rv.fsub_s", "rv.fmul_s",
                        "rv.fmax_s"})
    add(n, 2, 1, "ff", "f");
  for (const char* n : {"rv.fmadd_d", "rv.fmadd_s"}) add(n, 3, 1, "fff", "f");
  add("rv.fmv_d", 1, 1, "f", "f");
  add("rv.fcvt_d_w", 1, 1, "i", "f");
  add("rv.fmv_d_x", 1, 1, "i", "f");
  add("rv.label", 0, 0, "", "", {"label"});

  // Unstructured control flow.
  for (const char* n : {"rv_cf.blt", "rv_cf.bge", "rv_cf.bne", "rv_cf.beq"}) add(n, 2, 0, "ii", "", {"target"});
  add("rv_cf.j", 0, 0, "", "", {"target"});

  // Structured loops.
  {
    OpDef d;
    d.name = "rv_scf.for";
    d.num_operands = ir::kVariadic;
    d.num_results = ir::kVariadic;
    d.num_regions = 1;
    d.verify = [](const ir::Operation& op, std::vector<std::string>& errs) {
      if (op.num_operands() < 3) {
        errs.push_back("rv_scf.for: expected lower bound, upper bound and step operands");
        return;
      }
      for (unsigned i = 0; i < 3; ++i)
        if (!op.operand(i)->type().is(ir::TypeKind::IntReg))
          errs.push_back("rv_scf.for: loop bound operand " + std::to_string(i) + " must be an integer register");
      unsigned iters = op.num_operands() - 3;
      if (op.num_results() != iters)
        errs.push_back("rv_scf.for: " + std::to_string(iters) + " iter args but " +
                       std::to_string(op.num_results()) + " results");
      if (op.num_regions() == 1 && !op.region().empty()) {
        const auto& body = op.body();
        if (body.num_args() != 1 + iters)
          errs.push_back("rv_scf.for: body needs " + std::to_string(1 + iters) + " block arguments, has " +
                         std::to_string(body.num_args()));
        else if (!body.arg(0)->type().is(ir::TypeKind::IntReg))
          errs.push_back("rv_scf.for: induction variable must be an integer register");
      }
      check_loop_terminator(op, "rv_scf.yield", errs);
    };
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "rv_scf.yield";
    d.num_operands = ir::kVariadic;
    d.terminator = true;
    r.add(std::move(d));
  }

  // Functions.
  {
    OpDef d;
    d.name = "rv_func.func";
    d.num_regions = 1;
    d.required_attrs = {"sym_name"};
    d.verify = [](const ir::Operation& op, std::vector<std::string>& errs) {
      if (op.region().empty()) return;
      for (const auto& a : op.region().front().args()) {
        const auto& t = a->type();
        bool ok = t.is_register() && (t.reg().empty() || t.reg().rfind(t.is(ir::TypeKind::IntReg) ? "a" : "fa", 0) == 0);
        if (!ok) errs.push_back("rv_func.func: argument of type " + t.str() + " is not an A register");
      }
    };
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "rv_func.return";
    d.num_operands = ir::kVariadic;
    d.terminator = true;
    r.add(std::move(d));
  }
}

}  // namespace ukc::dialects
