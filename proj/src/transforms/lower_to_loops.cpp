#include <array>
#include <bit>
#include <cstring>
#include <functional>
#include <map>
#include <unordered_map>

#include "ukc/diagnostics.hpp"
#include "ukc/dialects/memref_stream.hpp"
#include "ukc/dialects/rv.hpp"
#include "ukc/dialects/stride_pattern.hpp"
#include "ukc/transforms/schedule.hpp"
#include "util.hpp"

namespace ukc::transforms {

using ir::AffineExpr;
using ir::AffineMap;
using ir::Attribute;
using ir::Builder;
using ir::Operation;
using ir::Type;
using ir::TypeKind;
using ir::Value;
using namespace detail;

namespace {

Type ireg() { return Type::int_reg(); }
Type freg() { return Type::float_reg(); }

/// A coordinate along one iteration dim: a register or a compile-time constant.
struct Coord {
  Value* reg = nullptr;
  int64_t constant = 0;
};

/// How a high-level generic operand is accessed after lowering.
struct Access {
  enum Kind { Scalar, Memory, Stream } kind = Scalar;
  Value* value = nullptr;  // FP value, base pointer, or stream block arg
  Type memref;             // Memory only
};

uint64_t constant_bits(double v, TypeKind kind) {
  if (kind == TypeKind::F64) return std::bit_cast<uint64_t>(v);
  uint64_t lane = std::bit_cast<uint32_t>(static_cast<float>(v));
  return kind == TypeKind::F32x2 ? (lane << 32) | lane : lane;
}

const char* fp_op_name(const std::string& arith, TypeKind kind) {
  static const std::map<std::string, std::array<const char*, 3>> names = {
      {"arith.addf", {"rv.fadd_d", "rv.fadd_s", "rv_snitch.vfadd_s"}},
      {"arith.subf", {"rv.fsub_d", "rv.fsub_s", nullptr}},
      {"arith.mulf", {"rv.fmul_d", "rv.fmul_s", "rv_snitch.vfmul_s"}},
      {"arith.maximumf", {"rv.fmax_d", "rv.fmax_s", "rv_snitch.vfmax_s"}},
  };
  auto it = names.find(arith);
  if (it == names.end()) throw CompileError("cannot lower " + arith + " to RISC-V");
  const char* n = it->second[kind == TypeKind::F64 ? 0 : kind == TypeKind::F32 ? 1 : 2];
  if (!n) throw CompileError("no packed instruction for " + arith);
  return n;
}

int log2_exact(int64_t v) {
  int s = 0;
  while ((int64_t{1} << s) < v) ++s;
  if ((int64_t{1} << s) != v) throw CompileError("element size " + std::to_string(v) + " is not a power of two");
  return s;
}

class FunctionLowering {
 public:
  explicit FunctionLowering(Operation* func) : func_(func) {}

  void run() {
    Builder mb;
    mb.set_insertion_point(func_);
    rv_func_ = mb.create("rv_func.func", {}, {}, {{"sym_name", func_->attr("sym_name")}}, 1);
    entry_ = rv_func_->region().add_block();
    pro_ = Builder(entry_);
    holder_ = Operation::create("builtin.module", {}, {}, {}, 1);
    b_ = Builder(holder_->region().add_block());

    int next_int = 0, next_fp = 0;
    for (const auto& a : func_->body().args()) {
      const auto& t = a->type();
      if (t.is(TypeKind::MemRef)) {
        auto* arg = entry_->add_arg(Type::int_reg("a" + std::to_string(next_int++)));
        env_[a.get()] = Access{Access::Memory, rv::unary(pro_, "rv.mv", arg, ireg()), t};
      } else {
        auto* arg = entry_->add_arg(Type::float_reg("fa" + std::to_string(next_fp++)));
        env_[a.get()] = Access{Access::Scalar, rv::unary(pro_, "rv.fmv_d", arg, freg()), {}};
      }
    }
    zero_reg_ = rv::get_register(pro_, Type::int_reg("zero"));
    ir::walk(func_, [&](Operation* op) {
      if (op->is("arith.constant")) constant(op->attr("value").as_float(), op->result()->type().kind());
    });

    for (auto* op : func_->body().ops()) lower_top(op);

    for (auto* op : b_.block()->ops()) op->move_to_end(entry_);
    func_->drop_all_references();
    func_->erase();
  }

 private:
  // Hoisted values.

  Value* constant(double v, TypeKind kind) {
    uint64_t bits = constant_bits(v, kind);
    auto it = fp_consts_.find(bits);
    if (it != fp_consts_.end()) return it->second;
    Value* r;
    if (bits == 0) {
      r = rv::unary(pro_, "rv.fcvt_d_w", zero_reg_, freg());
    } else {
      r = rv::unary(pro_, "rv.fmv_d_x", rv::li(pro_, static_cast<int64_t>(bits)), freg());
    }
    return fp_consts_[bits] = r;
  }

  Value* int_const(int64_t v) {
    auto it = int_consts_.find(v);
    if (it != int_consts_.end()) return it->second;
    return int_consts_[v] = rv::li(pro_, v);
  }

  // Top level.

  void lower_top(Operation* op) {
    if (op->is("func.return")) {
      b_.create("rv_func.return", {}, {});
    } else if (op->is("arith.constant")) {
      env_[op->result()] = Access{Access::Scalar, constant(op->attr("value").as_float(), op->result()->type().kind()), {}};
    } else if (op->is("memref_stream.cast_packed")) {
      Access a = env_.at(op->operand(0));
      a.memref = op->result()->type();
      env_[op->result()] = a;
    } else if (op->is("memref_stream.generic")) {
      ms::GenericView g(op);
      std::vector<Access> acc;
      for (auto* v : op->operands()) acc.push_back(env_.at(v));
      std::vector<Coord> coords(g.bounds().size());
      lower_generic(g, acc, coords, 0);
    } else if (op->is("memref_stream.streaming_region")) {
      lower_region(op);
    } else {
      throw CompileError("lower-to-loops: unsupported operation " + op->name());
    }
  }

  // Loops.

  /// Emits `for iv in [0, extent)` carrying `inits`; extent 1 inlines the body.
  std::vector<Value*> loop(int64_t extent, const std::vector<Value*>& inits,
                           const std::function<std::vector<Value*>(Value*, const std::vector<Value*>&)>& body) {
    if (extent == 1) return body(zero_reg_, inits);
    Value* lb = rv::li(b_, 0);
    std::vector<Value*> operands = {lb, int_const(extent), int_const(1)};
    operands.insert(operands.end(), inits.begin(), inits.end());
    std::vector<Type> results(inits.size(), freg());
    auto* for_op = b_.create("rv_scf.for", operands, results, {}, 1);
    auto* block = for_op->region().add_block();
    Value* iv = block->add_arg(ireg());
    std::vector<Value*> iters;
    for (size_t i = 0; i < inits.size(); ++i) iters.push_back(block->add_arg(freg()));
    Builder saved = b_;
    b_ = Builder(block);
    auto yielded = body(iv, iters);
    b_.create("rv_scf.yield", yielded, {});
    b_ = saved;
    std::vector<Value*> out;
    for (const auto& r : for_op->results()) out.push_back(r.get());
    return out;
  }

  /// Nested loops over dims [begin, end), setting coords; extent-1 dims get a
  /// zero coordinate without a loop.
  std::vector<Value*> nest(const std::vector<int64_t>& bounds, size_t begin, size_t end, std::vector<Coord>& coords,
                           const std::vector<Value*>& inits,
                           const std::function<std::vector<Value*>(const std::vector<Value*>&)>& body) {
    if (begin == end) return body(inits);
    return loop(bounds[begin], inits, [&](Value* iv, const std::vector<Value*>& iters) {
      coords[begin] = Coord{iv, 0};
      return nest(bounds, begin + 1, end, coords, iters, body);
    });
  }

  // Addressing.

  /// Index value of one map result at `point`.
  Value* index_value(const AffineExpr& e, unsigned num_dims, const std::vector<Coord>& point) {
    auto lin = ir::linearize(e, num_dims);
    if (!lin) throw CompileError("non-affine index expression " + e.str());
    Value* sum = nullptr;
    int64_t c = lin->constant;
    for (unsigned d = 0; d < num_dims; ++d) {
      int64_t k = lin->coefficients[d];
      if (k == 0) continue;
      if (!point[d].reg) {
        c += k * point[d].constant;
        continue;
      }
      Value* term = k == 1 ? point[d].reg : rv::binary(b_, "rv.mul", point[d].reg, rv::li(b_, k), ireg());
      sum = sum ? rv::binary(b_, "rv.add", sum, term, ireg()) : term;
    }
    if (!sum) return c == 0 ? zero_reg_ : rv::li(b_, c);
    return c == 0 ? sum : rv::imm_op(b_, "rv.addi", sum, c);
  }

  /// Row-major address of `map(point)` in `a`.
  Value* address(const Access& a, const AffineMap& map, const std::vector<Coord>& point) {
    const auto& shape = a.memref.shape();
    Value* lin = nullptr;
    for (size_t r = 0; r < map.results.size(); ++r) {
      Value* scaled = lin ? rv::binary(b_, "rv.mul", lin, rv::li(b_, shape[r]), ireg()) : nullptr;
      Value* idx = index_value(map.results[r], map.num_dims, point);
      lin = scaled ? rv::binary(b_, "rv.add", scaled, idx, ireg()) : idx;
    }
    if (!lin) return a.value;
    int64_t el = a.memref.element().byte_width();
    Value* bytes = rv::imm_op(b_, "rv.slli", lin, log2_exact(el));
    return rv::binary(b_, "rv.add", a.value, bytes, ireg());
  }

  Value* load(const Access& a, const AffineMap& map, const std::vector<Coord>& point) {
    const char* name = a.memref.element().is(TypeKind::F32) ? "rv.flw" : "rv.fld";
    return rv::imm_op(b_, name, address(a, map, point), 0, freg());
  }

  void store(const Access& a, const AffineMap& map, const std::vector<Coord>& point, Value* v) {
    const char* name = a.memref.element().is(TypeKind::F32) ? "rv.fsw" : "rv.fsd";
    b_.create(name, {v, address(a, map, point)}, {}, {{"immediate", Attribute(int64_t{0})}});
  }

  // Generic bodies.

  /// Lowers one execution of the body for every interleaved copy.
  std::vector<Value*> emit_body(const ms::GenericView& g, const std::vector<Access>& acc,
                                const std::vector<Coord>& point, const std::vector<Value*>& outputs) {
    auto maps = g.maps();
    auto u = static_cast<unsigned>(g.interleave_factor());
    bool interleaved = g.iterator_types().back() == ms::kInterleaved;
    const auto& body = g.body();
    ir::IRMapping map;
    for (unsigned i = 0; i < g.num_inputs(); ++i)
      for (unsigned c = 0; c < u; ++c) {
        const Access& a = acc[i];
        Value* v;
        if (a.kind == Access::Scalar) {
          v = a.value;
        } else if (a.kind == Access::Stream) {
          v = b_.create("rv_snitch.read", {a.value}, {freg()})->result();
        } else {
          auto pt = point;
          if (interleaved) pt.back() = Coord{nullptr, c};
          v = load(a, maps[i], pt);
        }
        map.map(g.input_arg(i, c), v);
      }
    for (unsigned o = 0; o < g.num_outputs(); ++o)
      for (unsigned c = 0; c < u; ++c) map.map(g.output_arg(o, c), outputs[o * u + c]);

    auto fused_mul = [](const Value* v) {
      const Operation* d = v->defining_op();
      return d && d->is("arith.mulf") && v->num_uses() == 1 && v->uses()[0].user->is("arith.addf") ? d : nullptr;
    };
    for (auto* op : body.ops()) {
      if (op == body.terminator()) break;
      Value* r = nullptr;
      TypeKind kind = op->result()->type().kind();
      if (op->is("arith.constant")) {
        r = constant(op->attr("value").as_float(), kind);
      } else if (op->is("arith.mulf") && fused_mul(op->result())) {
        continue;
      } else if (op->is("arith.addf") && (fused_mul(op->operand(0)) || fused_mul(op->operand(1)))) {
        unsigned k = fused_mul(op->operand(1)) ? 1 : 0;
        const Operation* mul = op->operand(k)->defining_op();
        Value* a = map.lookup(mul->operand(0));
        Value* bv = map.lookup(mul->operand(1));
        Value* c = map.lookup(op->operand(1 - k));
        if (kind == TypeKind::F32x2) {
          if (op->operand(1 - k)->num_uses() != 1) c = rv::unary(b_, "rv.fmv_d", c, freg());
          r = b_.create("rv_snitch.vfmac_s", {c, a, bv}, {freg()})->result();
        } else {
          r = b_.create(kind == TypeKind::F64 ? "rv.fmadd_d" : "rv.fmadd_s", {a, bv, c}, {freg()})->result();
        }
      } else if (op->is("vector.reduce_add")) {
        Value* accv = map.lookup(op->operand(1));
        if (op->operand(1)->num_uses() != 1) accv = rv::unary(b_, "rv.fmv_d", accv, freg());
        r = b_.create("rv_snitch.vfsum_s", {accv, map.lookup(op->operand(0))}, {freg()})->result();
      } else {
        r = rv::binary(b_, fp_op_name(op->name(), kind), map.lookup(op->operand(0)), map.lookup(op->operand(1)), freg());
      }
      map.map(op->result(), r);
    }
    std::vector<Value*> out;
    for (auto* v : body.terminator()->operands()) out.push_back(map.lookup(v));
    return out;
  }

  void lower_generic(const ms::GenericView& g, const std::vector<Access>& acc, std::vector<Coord> coords,
                     size_t first) {
    auto bounds = g.bounds();
    auto maps = g.maps();
    auto its = g.iterator_types();
    size_t n = bounds.size();
    auto u = static_cast<unsigned>(g.interleave_factor());
    bool interleaved = its.back() == ms::kInterleaved;
    size_t outer_n = interleaved ? n - 1 : n;
    unsigned ni = g.num_inputs(), no = g.num_outputs();
    bool lane_sum = g.op()->has_attr("lane_sum");
    if (interleaved) coords[n - 1] = Coord{nullptr, 0};

    auto output_point = [&](unsigned o, const std::vector<Coord>& pt, unsigned c) {
      std::vector<Coord> p;
      for (size_t d = 0; d < n; ++d)
        if (maps[ni + o].num_dims == n || its[d] != ms::kReduction) p.push_back(pt[d]);
      if (interleaved) p.back() = Coord{nullptr, c};
      return p;
    };

    if (g.has_reduction() && !outputs_reduced(g)) {
      // Accumulation through memory: read-modify-write at every point.
      nest(bounds, first, outer_n, coords, {}, [&](const std::vector<Value*>&) {
        std::vector<Value*> outs;
        for (unsigned o = 0; o < no; ++o)
          for (unsigned c = 0; c < u; ++c)
            outs.push_back(g.output_arg(o, c)->has_uses() ? load(acc[ni + o], maps[ni + o], output_point(o, coords, c))
                                                          : nullptr);
        auto res = emit_body(g, acc, coords, outs);
        for (unsigned o = 0; o < no; ++o)
          for (unsigned c = 0; c < u; ++c) store(acc[ni + o], maps[ni + o], output_point(o, coords, c), res[o * u + c]);
        return std::vector<Value*>{};
      });
      return;
    }

    size_t rstart = first;
    while (rstart < outer_n && its[rstart] != ms::kReduction) ++rstart;
    bool inputs_streamed = true, outputs_streamed = true;
    for (unsigned i = 0; i < ni; ++i) inputs_streamed &= acc[i].kind != Access::Memory;
    for (unsigned o = 0; o < no; ++o) outputs_streamed &= acc[ni + o].kind == Access::Stream;
    bool collapse_red = inputs_streamed;
    bool collapse_par = inputs_streamed && outputs_streamed;

    auto point_body = [&]() {
      std::vector<Value*> accs, base;
      for (unsigned o = 0; o < no; ++o)
        for (unsigned c = 0; c < u; ++c) {
          Value* v = nullptr;
          if (g.num_inits() > 0)
            v = rv::unary(b_, "rv.fmv_d", env_.at(g.init(o)).value, freg());
          else if (lane_sum || g.output_arg(o, c)->has_uses() || rstart < outer_n)
            v = acc[ni + o].kind == Access::Memory ? load(acc[ni + o], maps[ni + o], output_point(o, coords, c))
                                                   : rv::unary(b_, "rv.fmv_d", constant(0.0, TypeKind::F64), freg());
          if (lane_sum) {
            base.push_back(v);
            v = rv::unary(b_, "rv.fmv_d", constant(0.0, TypeKind::F64), freg());
          }
          accs.push_back(v);
        }
      std::vector<Value*> res;
      if (rstart == outer_n) {
        res = emit_body(g, acc, coords, accs);
      } else if (collapse_red) {
        int64_t trips = 1;
        for (size_t d = rstart; d < outer_n; ++d) trips *= bounds[d];
        res = loop(trips, accs, [&](Value*, const std::vector<Value*>& iters) { return emit_body(g, acc, coords, iters); });
      } else {
        res = nest(bounds, rstart, outer_n, coords, accs,
                   [&](const std::vector<Value*>& iters) { return emit_body(g, acc, coords, iters); });
      }
      for (unsigned o = 0; o < no; ++o)
        for (unsigned c = 0; c < u; ++c) {
          Value* v = res[o * u + c];
          if (lane_sum) v = b_.create("rv_snitch.vfsum_s", {base[o * u + c], v}, {freg()})->result();
          const Access& a = acc[ni + o];
          if (a.kind == Access::Stream)
            b_.create("rv_snitch.write", {v, a.value}, {});
          else
            store(a, maps[ni + o], output_point(o, coords, c), v);
        }
    };

    if (collapse_par) {
      int64_t trips = 1;
      for (size_t d = first; d < rstart; ++d) trips *= bounds[d];
      loop(trips, {}, [&](Value*, const std::vector<Value*>&) {
        point_body();
        return std::vector<Value*>{};
      });
    } else {
      nest(bounds, first, rstart, coords, {}, [&](const std::vector<Value*>&) {
        point_body();
        return std::vector<Value*>{};
      });
    }
  }

  // Streaming regions.

  void lower_region(Operation* region) {
    Operation* gop = nullptr;
    for (auto* op : region->body().ops())
      if (op->is("memref_stream.generic")) gop = op;
    if (!gop || region->body().ops().size() != 1)
      throw CompileError("lower-to-loops: a streaming region must hold exactly one generic");
    ms::GenericView g(gop);
    auto bounds = g.bounds();
    auto its = g.iterator_types();
    const auto& pats = region->attr("patterns").as_array();

    std::vector<AffineMap> smaps;
    std::vector<std::vector<int64_t>> shapes;
    std::vector<bool> reduced;
    std::vector<Access> bases;
    for (unsigned s = 0; s < region->num_operands(); ++s) {
      const auto& p = pats[s].as_opaque();
      smaps.push_back(p.get("index_map")->as_map());
      bases.push_back(env_.at(region->operand(s)));
      shapes.push_back(bases.back().memref.shape());
      reduced.push_back(smaps.back().num_dims != bounds.size());
    }
    int k = peeled_dims(bounds, its, smaps, shapes, reduced);
    if (k < 0) throw CompileError("lower-to-loops: stream patterns exceed the hardware rank");

    std::vector<Coord> coords(bounds.size());
    nest(bounds, 0, static_cast<size_t>(k), coords, {}, [&](const std::vector<Value*>&) {
      auto rb = reduced_bounds(bounds, its);
      ir::AttrArray patterns;
      std::vector<Value*> base_regs;
      for (unsigned s = 0; s < region->num_operands(); ++s) {
        const auto& full = reduced[s] ? rb : bounds;
        std::vector<AffineExpr> repl;
        for (unsigned d = 0; d < full.size(); ++d)
          repl.push_back(d < static_cast<unsigned>(k) ? AffineExpr::constant(0)
                                                     : AffineExpr::dim(d - static_cast<unsigned>(k)));
        auto inner_map = substitute_map(smaps[s], repl, static_cast<unsigned>(full.size()) - static_cast<unsigned>(k));
        std::vector<int64_t> inner(full.begin() + k, full.end());
        int64_t el = bases[s].memref.element().byte_width();
        patterns.push_back(
            snitch::canonicalize_pattern(snitch::pattern_from_affine(inner, inner_map, el, shapes[s])).to_attr());

        // Base address: the first element touched at the peeled coordinates.
        std::vector<Coord> pt;
        for (unsigned d = 0; d < full.size(); ++d) pt.push_back(d < static_cast<unsigned>(k) ? coords[d] : Coord{});
        Value* base = bases[s].value;
        if (k > 0 || snitch::pattern_base_offset(smaps[s], el, shapes[s]) != 0) base = address(bases[s], smaps[s], pt);
        base_regs.push_back(base);
      }
      auto ni = region->int_attr("num_inputs");
      auto* sr = b_.create("snitch_stream.streaming_region", base_regs, {},
                           {{"patterns", Attribute(patterns)}, {"num_inputs", Attribute(ni)}}, 1);
      auto* block = sr->region().add_block();
      std::map<Value*, Access> stream_of;
      for (unsigned s = 0; s < region->num_operands(); ++s) {
        Type reg = Type::float_reg(rv::stream_reg(static_cast<int>(s)));
        auto* arg = block->add_arg(static_cast<int64_t>(s) < ni ? Type::readable(reg) : Type::writable(reg));
        stream_of[region->body().arg(s)] = Access{Access::Stream, arg, {}};
      }
      std::vector<Access> acc;
      for (auto* v : gop->operands()) {
        auto it = stream_of.find(v);
        acc.push_back(it != stream_of.end() ? it->second : env_.at(v));
      }
      Builder saved = b_;
      b_ = Builder(block);
      lower_generic(g, acc, coords, static_cast<size_t>(k));
      b_ = saved;
      return std::vector<Value*>{};
    });
  }

  Operation* func_;
  Operation* rv_func_ = nullptr;
  ir::Block* entry_ = nullptr;
  Builder pro_;
  Builder b_;
  std::unique_ptr<Operation> holder_;
  Value* zero_reg_ = nullptr;
  std::unordered_map<const Value*, Access> env_;
  std::map<uint64_t, Value*> fp_consts_;
  std::map<int64_t, Value*> int_consts_;
};

}  // namespace

void lower_to_loops(Operation& module) {
  for (auto* func : ir::collect(&module, "func.func")) FunctionLowering(func).run();
}

}  // namespace ukc::transforms
