#include "oracles.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ukc/dialects/rv.hpp"
#include "ukc/diagnostics.hpp"
#include "ukc/ir/pass.hpp"
#include "ukc/ir/text.hpp"

namespace ukc::oracle {

using ir::Block;
using ir::Builder;
using ir::Operation;
using ir::Type;
using ir::TypeKind;
using ir::Value;

Func make_func(const std::vector<Type>& args) {
  Func f;
  f.module = ir::make_module();
  Builder mb(&f.module->body());
  f.func = mb.create("rv_func.func", {}, {}, {{"sym_name", ir::Attribute(std::string("f"))}}, 1);
  f.entry = f.func->region().add_block();
  for (const auto& t : args) f.entry->add_arg(t);
  return f;
}

namespace {

// Random structured IR: straight-line integer and FP arithmetic, stores,
// rv_scf.for loops and frep loops nested up to three deep.
class RandomFunc {
 public:
  explicit RandomFunc(uint32_t seed) : rng_(seed) {}

  Func build() {
    Func f = make_func({Type::int_reg("a0"), Type::float_reg("fa0")});
    Scope s;
    s.ints.push_back(f.entry->arg(0));
    s.fps.push_back(f.entry->arg(1));
    Builder b(f.entry);
    fill(b, s, 0, false);
    b.create("rv_func.return", {}, {});
    return f;
  }

 private:
  struct Scope {
    std::vector<Value*> ints, fps;
  };

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  Value* pick(const std::vector<Value*>& vs) { return vs[static_cast<size_t>(uniform(0, static_cast<int>(vs.size()) - 1))]; }
  bool room(int n) const { return ops_ + n <= kMaxOps; }

  void fill(Builder& b, Scope& s, int depth, bool fp_only) {
    int n = uniform(1, depth == 0 ? 14 : 6);
    for (int i = 0; i < n && room(2); ++i) {
      int choice = uniform(0, fp_only ? 5 : 9);
      if (fp_only) choice += 4;
      switch (choice) {
        case 0:
          s.ints.push_back(rv::li(b, uniform(-8, 8)));
          ++ops_;
          break;
        case 1:
        case 2:
          s.ints.push_back(rv::binary(b, choice == 1 ? "rv.add" : "rv.mul", pick(s.ints), pick(s.ints), Type::int_reg()));
          ++ops_;
          break;
        case 3:
          s.fps.push_back(rv::unary(b, "rv.fcvt_d_w", pick(s.ints), Type::float_reg()));
          ++ops_;
          break;
        case 4:
        case 5:
          s.fps.push_back(rv::binary(b, choice == 4 ? "rv.fadd_d" : "rv.fmul_d", pick(s.fps), pick(s.fps), Type::float_reg()));
          ++ops_;
          break;
        case 6:
          s.fps.push_back(b.create("rv.fmadd_d", {pick(s.fps), pick(s.fps), pick(s.fps)}, {Type::float_reg()})->result());
          ++ops_;
          break;
        case 7: {
          Value* acc = rv::unary(b, "rv.fmv_d", pick(s.fps), Type::float_reg());
          s.fps.push_back(b.create("rv_snitch.vfmac_s", {acc, pick(s.fps), pick(s.fps)}, {Type::float_reg()})->result());
          ops_ += 2;
          break;
        }
        case 8:
          if (depth < 3 && room(6)) frep(b, s, depth);
          break;
        case 9:
          if (fp_only) break;
          if (depth < 3 && room(6))
            loop(b, s, depth);
          else
            b.create("rv.fsd", {pick(s.fps), pick(s.ints)}, {}, {{"immediate", ir::Attribute(int64_t{0})}}), ++ops_;
          break;
      }
    }
  }

  std::vector<Value*> inits(Scope& s, bool fp_only) {
    std::vector<Value*> out;
    int k = uniform(0, 2);
    for (int i = 0; i < k; ++i) out.push_back(fp_only || uniform(0, 1) ? pick(s.fps) : pick(s.ints));
    return out;
  }

  void yield_and_publish(Builder& ib, Scope& inner, Scope& outer, Operation* loop, Block* body, unsigned arg_off,
                         const char* yield_name) {
    std::vector<Value*> ys;
    for (unsigned i = 0; i < loop->num_results(); ++i) {
      bool is_int = body->arg(i + arg_off)->type().is(TypeKind::IntReg);
      ys.push_back(pick(is_int ? inner.ints : inner.fps));
    }
    ib.create(yield_name, ys, {});
    ++ops_;
    for (const auto& r : loop->results()) (r->type().is(TypeKind::IntReg) ? outer.ints : outer.fps).push_back(r.get());
  }

  void loop(Builder& b, Scope& s, int depth) {
    Value* lb = rv::li(b, uniform(0, 2));
    Value* ub = rv::li(b, uniform(3, 5));
    Value* step = rv::li(b, 1);
    ops_ += 4;
    auto its = inits(s, false);
    std::vector<Value*> operands = {lb, ub, step};
    std::vector<Type> types;
    for (auto* v : its) {
      operands.push_back(v);
      types.push_back(v->type().is(TypeKind::IntReg) ? Type::int_reg() : Type::float_reg());
    }
    auto* op = b.create("rv_scf.for", operands, types, {}, 1);
    Block* body = op->region().add_block();
    Scope inner = s;
    inner.ints.push_back(body->add_arg(Type::int_reg()));
    for (const auto& t : types) (t.is(TypeKind::IntReg) ? inner.ints : inner.fps).push_back(body->add_arg(t));
    Builder ib(body);
    fill(ib, inner, depth + 1, false);
    yield_and_publish(ib, inner, s, op, body, 1, "rv_scf.yield");
  }

  void frep(Builder& b, Scope& s, int depth) {
    Value* count = rv::li(b, uniform(0, 3));
    ops_ += 2;
    auto its = inits(s, true);
    std::vector<Value*> operands = {count};
    std::vector<Type> types;
    for (auto* v : its) {
      operands.push_back(v);
      types.push_back(Type::float_reg());
    }
    auto* op = b.create("rv_snitch.frep", operands, types, {}, 1);
    Block* body = op->region().add_block();
    Scope inner;
    inner.fps = s.fps;
    for (const auto& t : types) inner.fps.push_back(body->add_arg(t));
    Builder ib(body);
    fill(ib, inner, 3, true);
    yield_and_publish(ib, inner, s, op, body, 0, "rv_snitch.frep_yield");
  }

  static constexpr int kMaxOps = 40;
  std::mt19937 rng_;
  int ops_ = 0;
};

}  // namespace

Func random_function(uint32_t seed) { return RandomFunc(seed).build(); }

bool is_loop(const Operation* op) { return op->is("rv_scf.for") || op->is("rv_snitch.frep"); }

std::vector<Interval> live_intervals(Operation& func) {
  std::map<const Operation*, int64_t> pos;
  int64_t n = 0;
  ir::walk(&func, [&](Operation* op) { pos[op] = n++; });
  auto back_edge = [&](const Operation* loop) { return 2 * pos[loop->body().terminator()] + 1; };
  auto owner = [](const Value* v) { return v->is_block_arg() ? v->owner_block()->parent_op() : v->defining_op(); };
  auto inside = [](const Operation* op, const Operation* anc) {
    for (const Operation* p = op; p; p = p->parent_op())
      if (p == anc) return true;
    return false;
  };

  std::vector<Interval> out;
  auto add = [&](const Value* v, int64_t start) {
    int64_t end = start;
    const Operation* def = owner(v);
    for (const auto& use : v->uses()) {
      const Operation* u = use.user;
      int64_t point = 2 * pos[u];
      if (u->is("rv_scf.for") && (use.operand_index == 1 || use.operand_index == 2)) point = back_edge(u) - 1;
      for (const Operation* a = u->parent_op(); a; a = a->parent_op())
        if (is_loop(a) && !inside(def, a)) point = std::max(point, back_edge(a));
      end = std::max(end, point);
    }
    out.push_back({v, start, end});
  };

  ir::walk(&func, [&](Operation* op) {
    if (op == &func) {
      for (const auto& a : op->body().args()) add(a.get(), -1);
      return;
    }
    if (is_loop(op)) {
      Block& body = op->body();
      for (unsigned i = 0; i < body.num_args(); ++i) {
        add(body.arg(i), 2 * pos[op] + 1);
        if (op->is("rv_scf.for") && i == 0) out.back().end = back_edge(op);
      }
      for (const auto& r : op->results()) add(r.get(), back_edge(op));
      return;
    }
    for (const auto& r : op->results()) add(r.get(), 2 * pos[op] + 1);
  });
  return out;
}

std::vector<std::string> conflicts(Operation& func) {
  auto ivs = live_intervals(func);
  std::vector<std::string> bad;
  for (size_t i = 0; i < ivs.size(); ++i) {
    for (size_t j = i + 1; j < ivs.size(); ++j) {
      const auto& a = ivs[i];
      const auto& b = ivs[j];
      const auto& ra = a.value->type().reg();
      if (ra.empty() || ra == "zero" || ra != b.value->type().reg()) continue;
      if (a.start <= b.end && b.start <= a.end)
        bad.push_back(ra + " shared by values live over [" + std::to_string(a.start) + ", " + std::to_string(a.end) +
                      "] and [" + std::to_string(b.start) + ", " + std::to_string(b.end) + "]");
    }
  }
  return bad;
}

size_t op_count(Operation& root) { return ir::collect(&root).size(); }

bool all_allocated(Operation& func) {
  bool ok = true;
  ir::walk(&func, [&](Operation* op) {
    for (const auto& r : op->results()) ok &= !r->type().is_register() || r->type().is_allocated();
    for (const auto& reg : op->regions())
      for (const auto& blk : reg->blocks())
        for (const auto& a : blk->args()) ok &= !a->type().is_register() || a->type().is_allocated();
  });
  return ok;
}

std::vector<std::string> coherence_violations(Operation& func) {
  std::vector<std::string> bad;
  for (auto* loop : ir::collect(&func, [](Operation* op) { return is_loop(op); })) {
    unsigned first_iter = loop->is("rv_scf.for") ? 3 : 1;
    unsigned arg_off = loop->is("rv_scf.for") ? 1 : 0;
    for (unsigned i = 0; i < loop->num_results(); ++i) {
      const auto& r = loop->result(i)->type().reg();
      if (loop->body().arg(i + arg_off)->type().reg() != r)
        bad.push_back(loop->name() + " result " + std::to_string(i) + " in " + r + ", body argument elsewhere");
      // Single-use inits defined right before the loop share the register;
      // other inits are copied in by the lowering.
      Value* init = loop->operand(first_iter + i);
      bool local = !init->is_block_arg() && init->defining_op()->parent_block() == loop->parent_block();
      if (init->num_uses() == 1 && local && init->type().reg() != r)
        bad.push_back(loop->name() + " init " + std::to_string(i) + " in " + init->type().reg() + ", result in " + r);
    }
  }
  return bad;
}

std::vector<int64_t> enumerate_pattern(const snitch::StridePattern& p) {
  std::vector<int64_t> out;
  for (auto b : p.upper_bounds)
    if (b == 0) return out;
  std::vector<int64_t> idx(p.upper_bounds.size(), 0);
  while (true) {
    int64_t off = 0;
    for (size_t d = 0; d < idx.size(); ++d) off += idx[d] * p.strides[d];
    for (int64_t r = 0; r < p.repeat; ++r) out.push_back(off);
    int d = static_cast<int>(idx.size()) - 1;
    while (d >= 0 && ++idx[static_cast<size_t>(d)] == p.upper_bounds[static_cast<size_t>(d)]) {
      idx[static_cast<size_t>(d)] = 0;
      --d;
    }
    if (d < 0) break;
  }
  return out;
}

snitch::StridePattern random_pattern(std::mt19937_64& rng, int iter) {
  std::uniform_int_distribution<int> rank_d(1, 4), bound_d(1, 6), rep_d(1, 3);
  std::uniform_int_distribution<int> stride_d(-4, 8);
  snitch::StridePattern p;
  int rank = rank_d(rng);
  for (int d = 0; d < rank; ++d) {
    p.upper_bounds.push_back(bound_d(rng));
    p.strides.push_back(8 * stride_d(rng));
  }
  if (rank >= 2 && iter % 3 == 0) {
    size_t j = static_cast<size_t>(rng() % static_cast<uint64_t>(rank - 1));
    p.strides[j] = p.strides[j + 1] * p.upper_bounds[j + 1];
  }
  if (iter % 5 == 0) p.strides.back() = 0;
  p.repeat = rep_d(rng);
  return p;
}

std::vector<std::string> pipeline_roundtrip_failures(const kernels::KernelSpec& spec,
                                                     const transforms::PipelineConfig& config) {
  std::vector<std::string> bad;
  ir::PipelineOptions opts;
  opts.after_pass = [&](const std::string& pass, const Operation& m) {
    std::string text = ir::print(m);
    try {
      auto again = ir::parse(text);
      if (!ir::structurally_equal(m, *again) || ir::print(*again) != text)
        bad.push_back(spec.label() + " after " + pass + ": round trip changed the module");
    } catch (const Error& e) {
      bad.push_back(spec.label() + " after " + pass + ": " + e.what());
    }
  };
  auto module = kernels::build_kernel(spec);
  opts.after_pass("build", *module);
  ir::run_pipeline(*module, transforms::schedule_passes(config), opts);
  ir::run_pipeline(*module, transforms::finalize_passes(), opts);
  return bad;
}

std::vector<std::string> listing_names() {
  return {"vecmat_linalg.ir", "matvec_rv_snitch.ir", "vecmat_memref_stream.ir"};
}

std::string read_data(const std::string& name) {
  std::ifstream in(std::string(UKC_TEST_DATA_DIR) + "/" + name);
  if (!in) throw std::runtime_error("cannot open test data " + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ukc::oracle
