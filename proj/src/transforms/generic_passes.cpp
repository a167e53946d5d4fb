#include <algorithm>
#include <limits>
#include <map>

#include "ukc/diagnostics.hpp"
#include "ukc/dialects/dialects.hpp"
#include "ukc/dialects/memref_stream.hpp"
#include "ukc/dialects/rv.hpp"
#include "ukc/dialects/stride_pattern.hpp"
#include "ukc/transforms/schedule.hpp"
#include "util.hpp"

namespace ukc::transforms {

using ir::AffineExpr;
using ir::AffineMap;
using ir::Attribute;
using ir::Operation;
using ir::Type;
using ir::TypeKind;
using ir::Value;

namespace detail {

AffineMap substitute_map(const AffineMap& map, const std::vector<AffineExpr>& replacements, unsigned new_num_dims) {
  AffineMap out{new_num_dims, {}};
  for (const auto& r : map.results) {
    auto e = r.substitute(replacements);
    auto lin = ir::linearize(e, new_num_dims);
    out.results.push_back(lin ? lin->to_expr() : e);
  }
  return out;
}

AffineMap reduce_map(const AffineMap& map, const std::vector<std::string>& its) {
  std::vector<AffineExpr> repl;
  unsigned next = 0;
  for (const auto& t : its) repl.push_back(t == ms::kReduction ? AffineExpr::constant(0) : AffineExpr::dim(next++));
  return substitute_map(map, repl, next);
}

std::vector<int64_t> reduced_bounds(const std::vector<int64_t>& bounds, const std::vector<std::string>& its) {
  std::vector<int64_t> out;
  for (size_t d = 0; d < bounds.size(); ++d)
    if (its[d] != ms::kReduction) out.push_back(bounds[d]);
  return out;
}

bool outputs_reduced(const ms::GenericView& g) {
  auto maps = g.maps();
  auto n = g.iterator_types().size();
  if (g.num_outputs() == 0) return false;
  for (unsigned o = 0; o < g.num_outputs(); ++o)
    if (maps[g.num_inputs() + o].num_dims == n) return false;
  return true;
}

bool dims_ordered(const std::vector<std::string>& its) {
  int phase = 0;
  for (const auto& t : its) {
    int p = t == ms::kParallel ? 0 : t == ms::kReduction ? 1 : 2;
    if (p < phase) return false;
    if (p == 2 && phase == 2) return false;
    phase = p;
  }
  return true;
}

std::vector<Operation*> generics(Operation& module) { return ir::collect(&module, "memref_stream.generic"); }

Attribute maps_attr(const std::vector<AffineMap>& maps) {
  ir::AttrArray a;
  for (const auto& m : maps) a.emplace_back(m);
  return Attribute(a);
}

}  // namespace detail

using namespace detail;

namespace {

Type packed_memref(const Type& t) {
  auto shape = t.shape();
  shape.back() /= 2;
  return Type::memref(Type::f32x2(), shape);
}

bool is_f32_memref(const Value* v) {
  return v->type().is(TypeKind::MemRef) && v->type().element().is(TypeKind::F32);
}

/// The map indexes its innermost operand dim with exactly d`dim`, and no other
/// result mentions d`dim`.
bool innermost_is_dim(const AffineMap& m, unsigned dim) {
  if (m.results.empty()) return false;
  const auto& last = m.results.back();
  if (last.kind() != AffineExpr::Kind::Dim || last.position() != dim) return false;
  for (size_t r = 0; r + 1 < m.results.size(); ++r) {
    AffineMap probe{m.num_dims, {m.results[r]}};
    if (probe.references_dim(dim)) return false;
  }
  return true;
}

/// Matches `yield addf(acc, mulf(a, b))` over args (a, b, acc).
bool is_dot_body(const ir::Block& body) {
  if (body.num_args() != 3) return false;
  auto ops = body.ops();
  if (ops.size() != 3 || !ops[0]->is("arith.mulf") || !ops[1]->is("arith.addf")) return false;
  const Operation* mul = ops[0];
  const Operation* add = ops[1];
  if (mul->operand(0) != body.arg(0) || mul->operand(1) != body.arg(1)) return false;
  bool acc_first = add->operand(0) == body.arg(2) && add->operand(1) == mul->result();
  bool acc_second = add->operand(1) == body.arg(2) && add->operand(0) == mul->result();
  return (acc_first || acc_second) && ops[2]->operand(0) == add->result();
}

/// Casts right after the definition of `v`, so casts never separate a fill
/// from the computation that follows it.
Value* cast_packed(Value* v, std::map<Value*, Value*>& cache) {
  auto it = cache.find(v);
  if (it != cache.end()) return it->second;
  ir::Builder b;
  if (v->is_block_arg())
    b.set_insertion_point_to_start(v->owner_block());
  else
    b.set_insertion_point_after(v->defining_op());
  Value* packed = b.create("memref_stream.cast_packed", {v}, {packed_memref(v->type())})->result();
  cache[v] = packed;
  return packed;
}

void retype_body_to_packed(ir::Block& body) {
  for (const auto& a : body.args())
    if (a->type().is(TypeKind::F32)) a->set_type(Type::f32x2());
  for (auto* op : body.ops())
    for (const auto& r : op->results())
      if (r->type().is(TypeKind::F32)) r->set_type(Type::f32x2());
}

}  // namespace

void ingest_generic(Operation& module) {
  for (auto* op : ir::collect(&module, "linalg.generic")) {
    ms::GenericView g(op);
    auto bounds = g.bounds();
    ir::Builder b;
    b.set_insertion_point(op);
    auto* ng = b.create("memref_stream.generic", op->operands(), {},
                        {{"bounds", Attribute::ints(bounds)},
                         {"indexing_maps", op->attr("indexing_maps")},
                         {"iterator_types", op->attr("iterator_types")},
                         {"operand_segments", Attribute::ints({g.num_inputs(), g.num_outputs(), 0})}},
                        1);
    ng->region().take_blocks(op->region());
    auto* term = ng->body().terminator();
    ir::Builder tb;
    tb.set_insertion_point(term);
    tb.create("memref_stream.yield", term->operands(), {});
    term->erase();
    op->erase();
  }
}

void pack_f32_lanes(Operation& module) {
  std::map<Value*, Value*> cache;
  for (auto* op : generics(module)) {
    ms::GenericView g(op);
    if (g.interleave_factor() != 1 || g.num_inits() != 0) continue;
    auto bounds = g.bounds();
    auto maps = g.maps();
    auto its = g.iterator_types();
    unsigned n = static_cast<unsigned>(bounds.size());
    unsigned ni = g.num_inputs(), no = g.num_outputs();
    if (n == 0 || bounds.back() % 2 != 0) continue;
    bool all_f32 = true, inner_ok = true;
    for (unsigned i = 0; i < ni + no; ++i) all_f32 &= is_f32_memref(op->operand(i));
    if (!all_f32) continue;

    if (!g.has_reduction()) {
      for (unsigned i = 0; i < ni + no; ++i) inner_ok &= innermost_is_dim(maps[i], n - 1);
      if (!inner_ok) continue;
      for (unsigned i = 0; i < ni + no; ++i) op->set_operand(i, cast_packed(op->operand(i), cache));
      bounds.back() /= 2;
      op->set_attr("bounds", Attribute::ints(bounds));
      retype_body_to_packed(g.body());
      continue;
    }

    // Dot product along the innermost reduction dim.
    if (ni != 2 || no != 1 || its.back() != ms::kReduction || maps[2].num_dims != n || !is_dot_body(g.body()))
      continue;
    if (!innermost_is_dim(maps[0], n - 1) || !innermost_is_dim(maps[1], n - 1) || maps[2].references_dim(n - 1))
      continue;
    if (!dims_ordered(its)) continue;
    for (unsigned i = 0; i < ni; ++i) op->set_operand(i, cast_packed(op->operand(i), cache));
    bounds.back() /= 2;
    op->set_attr("bounds", Attribute::ints(bounds));
    maps[2] = reduce_map(maps[2], its);
    op->set_attr("indexing_maps", maps_attr(maps));
    op->set_attr("lane_sum", Attribute());
    retype_body_to_packed(g.body());
  }
}

void apply_scalar_replacement(Operation& module) {
  for (auto* op : generics(module)) {
    ms::GenericView g(op);
    auto its = g.iterator_types();
    if (!g.has_reduction() || outputs_reduced(g) || !dims_ordered(its)) continue;
    auto maps = g.maps();
    for (unsigned o = 0; o < g.num_outputs(); ++o) maps[g.num_inputs() + o] = reduce_map(maps[g.num_inputs() + o], its);
    op->set_attr("indexing_maps", maps_attr(maps));
  }
}

namespace {

/// `out[...] = scalar` over the whole of `out`.
bool is_fill(const ms::GenericView& g) {
  if (g.num_inputs() != 1 || g.num_outputs() != 1 || g.num_inits() != 0 || g.has_reduction()) return false;
  if (g.input(0)->type().is(TypeKind::MemRef) || g.input(0)->type().is_stream()) return false;
  if (!g.output(0)->type().is(TypeKind::MemRef)) return false;
  auto maps = g.maps();
  auto bounds = g.bounds();
  if (!maps[0].results.empty() || maps[1] != AffineMap::identity(static_cast<unsigned>(bounds.size()))) return false;
  if (bounds != g.output(0)->type().shape()) return false;
  const auto* term = g.body().terminator();
  return g.body().ops().size() == 1 && term->num_operands() == 1 && term->operand(0) == g.body().arg(0);
}

}  // namespace

void apply_fuse_fill(Operation& module) {
  for (auto* op : generics(module)) {
    if (!op->parent_block()) continue;
    ms::GenericView fill(op);
    if (!is_fill(fill)) continue;
    Operation* next = op->next();
    if (!next || !next->is("memref_stream.generic")) continue;
    ms::GenericView g(next);
    if (!g.has_reduction() || !outputs_reduced(g) || g.num_outputs() != 1 || g.num_inits() != 0) continue;
    if (g.output(0) != fill.output(0)) continue;
    int64_t written = 1;
    for (auto e : reduced_bounds(g.bounds(), g.iterator_types())) written *= e;
    if (written != g.output(0)->type().num_elements()) continue;
    next->add_operand(fill.input(0));
    next->set_attr("operand_segments", Attribute::ints({g.num_inputs(), g.num_outputs(), 1}));
    op->erase();
  }
}

int64_t choose_unroll_factor(int64_t extent) {
  if (extent <= 4) return extent;
  for (int64_t f = 4; f <= 8; ++f)
    if (extent % f == 0) return f;
  return 4;
}

int peeled_dims(const std::vector<int64_t>& bounds, const std::vector<std::string>& its,
                const std::vector<AffineMap>& stream_maps, const std::vector<std::vector<int64_t>>& shapes,
                const std::vector<bool>& reduced_domain) {
  auto rbounds = reduced_bounds(bounds, its);
  for (size_t k = 0; k <= bounds.size(); ++k) {
    if (k > 0 && its[k - 1] != ms::kParallel) return -1;
    bool fits = true;
    for (size_t s = 0; s < stream_maps.size() && fits; ++s) {
      const auto& full = reduced_domain[s] ? rbounds : bounds;
      std::vector<AffineExpr> repl;
      for (unsigned d = 0; d < full.size(); ++d)
        repl.push_back(d < k ? AffineExpr::constant(0) : AffineExpr::dim(d - static_cast<unsigned>(k)));
      auto inner_map = substitute_map(stream_maps[s], repl, static_cast<unsigned>(full.size() - k));
      std::vector<int64_t> inner(full.begin() + static_cast<long>(k), full.end());
      auto p = snitch::canonicalize_pattern(snitch::pattern_from_affine(inner, inner_map, 8, shapes[s]));
      fits = p.rank() <= snitch::kMaxStreamRank;
    }
    if (fits) return static_cast<int>(k);
  }
  return -1;
}

namespace {

struct UnrollPlan {
  std::vector<int64_t> bounds;
  std::vector<AffineMap> maps;
  std::vector<std::string> its;
};

/// Splits dim `j` as j * u + i_new (+ offset), with i_new a trailing interleaved
/// dim of extent u; dim j keeps `outer_extent` iterations.
UnrollPlan plan_unroll(const ms::GenericView& g, unsigned j, int64_t u, int64_t outer_extent, int64_t offset) {
  auto bounds = g.bounds();
  auto maps = g.maps();
  auto its = g.iterator_types();
  unsigned n = static_cast<unsigned>(bounds.size());
  UnrollPlan p;
  p.bounds = bounds;
  p.bounds[j] = outer_extent;
  p.bounds.push_back(u);
  p.its = its;
  p.its.push_back(ms::kInterleaved);

  auto split = [&](unsigned dims, unsigned jj) {
    std::vector<AffineExpr> repl;
    for (unsigned d = 0; d < dims; ++d) repl.push_back(AffineExpr::dim(d));
    repl[jj] = AffineExpr::dim(jj) * AffineExpr::constant(u) + AffineExpr::dim(dims) + AffineExpr::constant(offset);
    return repl;
  };
  unsigned jr = 0;
  for (unsigned d = 0; d < j; ++d) jr += its[d] != ms::kReduction;
  unsigned nr = static_cast<unsigned>(reduced_bounds(bounds, its).size());
  for (const auto& m : maps) {
    if (m.num_dims == n)
      p.maps.push_back(substitute_map(m, split(n, j), n + 1));
    else
      p.maps.push_back(substitute_map(m, split(nr, jr), nr + 1));
  }
  return p;
}

/// Removes dim `j`, which must have extent 1 in `p`.
UnrollPlan drop_unit_dim(const UnrollPlan& p, unsigned j) {
  UnrollPlan out = p;
  unsigned n = static_cast<unsigned>(p.bounds.size());
  unsigned jr = 0, nr = 0;
  for (unsigned d = 0; d < n; ++d) {
    if (d < j && p.its[d] != ms::kReduction) ++jr;
    if (p.its[d] != ms::kReduction) ++nr;
  }
  auto without = [](unsigned dims, unsigned k) {
    std::vector<AffineExpr> repl;
    for (unsigned d = 0; d < dims; ++d)
      repl.push_back(d == k ? AffineExpr::constant(0) : AffineExpr::dim(d < k ? d : d - 1));
    return repl;
  };
  out.bounds.erase(out.bounds.begin() + j);
  out.its.erase(out.its.begin() + j);
  for (auto& m : out.maps)
    m = m.num_dims == n ? substitute_map(m, without(n, j), n - 1) : substitute_map(m, without(nr, jr), nr - 1);
  return out;
}

int64_t peel_cost(const ms::GenericView& g, const UnrollPlan& p) {
  std::vector<AffineMap> smaps;
  std::vector<std::vector<int64_t>> shapes;
  std::vector<bool> reduced;
  for (unsigned i = 0; i < g.num_inputs() + g.num_outputs(); ++i) {
    const auto& t = g.op()->operand(i)->type();
    if (!t.is(TypeKind::MemRef)) continue;
    smaps.push_back(p.maps[i]);
    shapes.push_back(t.shape());
    reduced.push_back(p.maps[i].num_dims != p.bounds.size());
  }
  int k = peeled_dims(p.bounds, p.its, smaps, shapes, reduced);
  if (k < 0) return std::numeric_limits<int64_t>::max();
  int64_t cost = 1;
  for (int d = 0; d < k; ++d) cost *= p.bounds[static_cast<size_t>(d)];
  return cost;
}

/// Rebuilds `g` as an interleaved generic; body ops are cloned op-major, one
/// copy per lane.
Operation* emit_unrolled(ms::GenericView g, const UnrollPlan& p, int64_t u) {
  Operation* op = g.op();
  ir::Builder b;
  b.set_insertion_point(op);
  Operation::AttrMap attrs = op->attrs();
  attrs["bounds"] = Attribute::ints(p.bounds);
  attrs["indexing_maps"] = maps_attr(p.maps);
  attrs["iterator_types"] = Attribute::strings(p.its);
  auto* ng = b.create("memref_stream.generic", op->operands(), {}, attrs, 1);
  auto* block = ng->region().add_block();
  const auto& body = g.body();
  unsigned nargs = body.num_args();
  std::vector<ir::IRMapping> lanes(static_cast<size_t>(u));
  for (unsigned a = 0; a < nargs; ++a)
    for (int64_t c = 0; c < u; ++c) lanes[static_cast<size_t>(c)].map(body.arg(a), block->add_arg(body.arg(a)->type()));
  ir::Builder ib(block);
  for (auto* inner : body.ops()) {
    if (inner == body.terminator()) break;
    for (auto& lane : lanes) ib.insert(ir::clone(*inner, lane));
  }
  std::vector<Value*> yielded;
  for (auto* v : body.terminator()->operands())
    for (auto& lane : lanes) yielded.push_back(lane.lookup(v));
  ib.create("memref_stream.yield", yielded, {});
  return ng;
}

}  // namespace

void apply_unroll_and_jam(Operation& module, std::optional<int64_t> factor_override) {
  for (auto* op : generics(module)) {
    ms::GenericView g(op);
    if (!g.has_reduction() || !outputs_reduced(g) || g.interleave_factor() != 1) continue;
    auto bounds = g.bounds();
    auto its = g.iterator_types();
    if (!dims_ordered(its)) continue;

    int best = -1;
    int64_t best_cost = std::numeric_limits<int64_t>::max();
    for (unsigned d = 0; d < bounds.size(); ++d) {
      if (its[d] != ms::kParallel || bounds[d] < 2) continue;
      int64_t u = factor_override ? std::min(*factor_override, bounds[d]) : choose_unroll_factor(bounds[d]);
      if (u < 2) continue;
      int64_t cost = peel_cost(g, plan_unroll(g, d, u, bounds[d] / u, 0));
      if (cost <= best_cost) {
        best_cost = cost;
        best = static_cast<int>(d);
      }
    }
    if (best < 0) continue;
    auto j = static_cast<unsigned>(best);
    int64_t e = bounds[j];
    int64_t u = factor_override ? std::min(*factor_override, e) : choose_unroll_factor(e);
    int64_t main_extent = e / u, rem = e % u;
    auto plan = plan_unroll(g, j, u, main_extent, 0);
    if (main_extent == 1 && rem == 0) plan = drop_unit_dim(plan, j);
    emit_unrolled(g, plan, u);
    if (rem > 0) emit_unrolled(g, plan_unroll(g, j, rem, 1, main_extent * u), rem);
    op->erase();
  }
}

void streamify(Operation& module) {
  for (auto* op : generics(module)) {
    if (dialects::enclosing_streaming_region(*op)) continue;
    ms::GenericView g(op);
    auto bounds = g.bounds();
    auto maps = g.maps();
    auto its = g.iterator_types();
    bool case_b = !g.has_reduction() || outputs_reduced(g);
    std::vector<unsigned> chosen;
    auto streamable = [&](unsigned i) {
      const auto& t = op->operand(i)->type();
      if (!t.is(TypeKind::MemRef) || t.element().byte_width() != 8) return false;
      for (const auto& r : maps[i].results)
        if (!ir::linearize(r, maps[i].num_dims)) return false;
      return true;
    };
    for (unsigned i = 0; i < g.num_inputs(); ++i)
      if (streamable(i)) chosen.push_back(i);
    for (unsigned o = 0; o < g.num_outputs(); ++o) {
      unsigned i = g.num_inputs() + o;
      if (!case_b || op->has_attr("lane_sum") || !streamable(i)) continue;
      bool write_only = g.num_inits() > 0;
      if (!write_only) {
        write_only = true;
        for (int64_t c = 0; c < g.interleave_factor(); ++c)
          write_only &= !g.output_arg(o, static_cast<unsigned>(c))->has_uses();
      }
      if (write_only) chosen.push_back(i);
    }
    if (chosen.size() > static_cast<size_t>(rv::kNumStreams)) chosen.resize(static_cast<size_t>(rv::kNumStreams));

    // Drop streams until the remaining ones fit the hardware rank after peeling.
    while (!chosen.empty()) {
      std::vector<AffineMap> smaps;
      std::vector<std::vector<int64_t>> shapes;
      std::vector<bool> reduced;
      for (unsigned i : chosen) {
        smaps.push_back(maps[i]);
        shapes.push_back(op->operand(i)->type().shape());
        reduced.push_back(maps[i].num_dims != bounds.size());
      }
      if (peeled_dims(bounds, its, smaps, shapes, reduced) >= 0) break;
      chosen.pop_back();
    }
    if (chosen.empty()) continue;

    ir::AttrArray patterns;
    std::vector<Value*> operands;
    int64_t num_inputs = 0;
    for (unsigned i : chosen) {
      bool reduced = maps[i].num_dims != bounds.size();
      ir::OpaqueAttr pat;
      pat.name = "memref_stream.stride_pattern";
      pat.params.emplace_back("ub", Attribute::ints(reduced ? reduced_bounds(bounds, its) : bounds));
      pat.params.emplace_back("index_map", Attribute(maps[i]));
      patterns.emplace_back(std::move(pat));
      operands.push_back(op->operand(i));
      num_inputs += i < g.num_inputs();
    }
    ir::Builder b;
    b.set_insertion_point(op);
    auto* region = b.create("memref_stream.streaming_region", operands, {},
                            {{"patterns", Attribute(patterns)}, {"num_inputs", Attribute(num_inputs)}}, 1);
    auto* block = region->region().add_block();
    for (size_t s = 0; s < chosen.size(); ++s) {
      const Type& el = operands[s]->type().element();
      auto* arg = block->add_arg(static_cast<int64_t>(s) < num_inputs ? Type::readable(el) : Type::writable(el));
      op->set_operand(chosen[s], arg);
    }
    op->move_to_end(block);
  }
}

}  // namespace ukc::transforms
