#include "ukc/dialects/memref_stream.hpp"

#include "ukc/diagnostics.hpp"
#include "ukc/dialects/dialects.hpp"

namespace ukc::ms {

GenericView::GenericView(ir::Operation* op) : op_(op) {
  if (!op->is("linalg.generic") && !op->is("memref_stream.generic"))
    throw CompileError("expected a generic operation, got " + op->name());
  for (auto s : op->attr("operand_segments").as_ints()) seg_.push_back(static_cast<unsigned>(s));
  if (seg_.size() < 2) throw CompileError(op->name() + ": operand_segments needs at least 2 entries");
}

bool GenericView::is_linalg() const { return op_->is("linalg.generic"); }

std::vector<ir::Value*> GenericView::inputs() const {
  std::vector<ir::Value*> v;
  for (unsigned i = 0; i < num_inputs(); ++i) v.push_back(input(i));
  return v;
}

std::vector<ir::Value*> GenericView::outputs() const {
  std::vector<ir::Value*> v;
  for (unsigned i = 0; i < num_outputs(); ++i) v.push_back(output(i));
  return v;
}

std::vector<int64_t> GenericView::bounds() const {
  if (op_->has_attr("bounds")) return op_->attr("bounds").as_ints();
  std::vector<ir::Type> types;
  for (unsigned i = 0; i < num_inputs() + num_outputs(); ++i) types.push_back(op_->operand(i)->type());
  return infer_bounds(maps(), types);
}

std::vector<ir::AffineMap> GenericView::maps() const { return op_->attr("indexing_maps").as_maps(); }

std::vector<std::string> GenericView::iterator_types() const { return op_->attr("iterator_types").as_strings(); }

bool GenericView::has_reduction() const {
  for (const auto& t : iterator_types())
    if (t == kReduction) return true;
  return false;
}

int64_t GenericView::interleave_factor() const {
  auto its = iterator_types();
  if (!its.empty() && its.back() == kInterleaved) return bounds().back();
  return 1;
}

ir::Value* GenericView::input_arg(unsigned input, unsigned copy) const {
  auto u = static_cast<unsigned>(interleave_factor());
  return body().arg(input * u + copy);
}

ir::Value* GenericView::output_arg(unsigned output, unsigned copy) const {
  auto u = static_cast<unsigned>(interleave_factor());
  return body().arg((num_inputs() + output) * u + copy);
}

std::vector<int64_t> infer_bounds(const std::vector<ir::AffineMap>& maps, const std::vector<ir::Type>& operand_types) {
  if (maps.empty()) throw CompileError("cannot infer bounds without indexing maps");
  unsigned n = maps.front().num_dims;
  std::vector<int64_t> bounds(n, -1);
  for (size_t o = 0; o < maps.size() && o < operand_types.size(); ++o) {
    const auto& t = operand_types[o];
    if (!t.is(ir::TypeKind::MemRef)) continue;
    const auto& m = maps[o];
    if (m.results.size() != t.shape().size())
      throw CompileError("map " + m.str() + " does not match operand type " + t.str());
    for (size_t r = 0; r < m.results.size(); ++r) {
      const auto& e = m.results[r];
      if (e.kind() != ir::AffineExpr::Kind::Dim) continue;
      int64_t extent = t.shape()[r];
      int64_t& b = bounds.at(e.position());
      if (b < 0)
        b = extent;
      else if (b != extent)
        throw CompileError("inconsistent extent for d" + std::to_string(e.position()) + ": " + std::to_string(b) +
                           " vs " + std::to_string(extent));
    }
  }
  // Sliding windows: an operand dim indexed by da + db has extent
  // bound(da) + bound(db) - 1, which determines one of them from the other.
  for (bool changed = true; changed;) {
    changed = false;
    for (size_t o = 0; o < maps.size() && o < operand_types.size(); ++o) {
      const auto& t = operand_types[o];
      if (!t.is(ir::TypeKind::MemRef) || maps[o].results.size() != t.shape().size()) continue;
      for (size_t r = 0; r < maps[o].results.size(); ++r) {
        const auto& e = maps[o].results[r];
        if (e.kind() != ir::AffineExpr::Kind::Add || e.lhs().kind() != ir::AffineExpr::Kind::Dim ||
            e.rhs().kind() != ir::AffineExpr::Kind::Dim)
          continue;
        int64_t& a = bounds.at(e.lhs().position());
        int64_t& b = bounds.at(e.rhs().position());
        if ((a < 0) == (b < 0)) continue;
        (a < 0 ? a : b) = t.shape()[r] - (a < 0 ? b : a) + 1;
        changed = true;
      }
    }
  }
  for (unsigned d = 0; d < n; ++d)
    if (bounds[d] < 0) throw CompileError("cannot infer extent of d" + std::to_string(d) + " from operand shapes");
  return bounds;
}

}  // namespace ukc::ms

namespace ukc::dialects {

using ir::OpDef;

namespace {

bool is_streaming_region(const ir::Operation& op) {
  return op.is("memref_stream.streaming_region") || op.is("snitch_stream.streaming_region");
}

void verify_generic(const ir::Operation& op, std::vector<std::string>& errs) {
  auto seg = op.attr("operand_segments").as_ints();
  int64_t total = 0;
  for (auto s : seg) total += s;
  if (seg.size() != 3 || total != op.num_operands()) {
    errs.push_back("memref_stream.generic: operand_segments must be [inputs, outputs, inits] summing to " +
                   std::to_string(op.num_operands()));
    return;
  }
  auto bounds = op.attr("bounds").as_ints();
  auto maps = op.attr("indexing_maps").as_maps();
  auto its = op.attr("iterator_types").as_strings();
  if (its.size() != bounds.size()) errs.push_back("memref_stream.generic: iterator_types/bounds length mismatch");
  if (maps.size() != static_cast<size_t>(seg[0] + seg[1]))
    errs.push_back("memref_stream.generic: one indexing map per input and output required");
  size_t non_reduction = 0;
  for (size_t d = 0; d < its.size(); ++d) {
    if (its[d] != ms::kReduction) ++non_reduction;
    if (its[d] == ms::kInterleaved && d + 1 != its.size())
      errs.push_back("memref_stream.generic: interleaved dim must be innermost");
    if (its[d] != ms::kParallel && its[d] != ms::kReduction && its[d] != ms::kInterleaved)
      errs.push_back("memref_stream.generic: unknown iterator type '" + its[d] + "'");
  }
  for (size_t m = 0; m < maps.size(); ++m) {
    bool is_output = m >= static_cast<size_t>(seg[0]);
    bool ok = maps[m].num_dims == bounds.size() || (is_output && maps[m].num_dims == non_reduction);
    if (!ok) errs.push_back("memref_stream.generic: map " + maps[m].str() + " domain does not match bounds");
    if (is_output && maps[m].num_dims == bounds.size())
      for (size_t d = 0; d < its.size(); ++d)
        if (its[d] == ms::kReduction && maps[m].references_dim(static_cast<unsigned>(d)))
          errs.push_back("memref_stream.generic: output map references reduction dim d" + std::to_string(d));
  }
  if (op.num_regions() != 1 || op.region().empty()) {
    errs.push_back("memref_stream.generic: missing body");
    return;
  }
  int64_t u = (!its.empty() && its.back() == ms::kInterleaved) ? bounds.back() : 1;
  auto expected = static_cast<size_t>((seg[0] + seg[1]) * u);
  if (op.body().num_args() != expected)
    errs.push_back("memref_stream.generic: body needs " + std::to_string(expected) + " arguments, has " +
                   std::to_string(op.body().num_args()));
  const auto* term = op.body().terminator();
  if (!term || !term->is("memref_stream.yield"))
    errs.push_back("memref_stream.generic: body must end with memref_stream.yield");
  else if (term->num_operands() != static_cast<unsigned>(seg[1] * u))
    errs.push_back("memref_stream.generic: yield must produce " + std::to_string(seg[1] * u) + " values");
}

}  // namespace

const ir::Operation* enclosing_streaming_region(const ir::Operation& op) {
  for (const ir::Operation* p = op.parent_op(); p; p = p->parent_op())
    if (is_streaming_region(*p)) return p;
  return nullptr;
}

void register_memref_stream(ir::Registry& r) {
  {
    OpDef d;
    d.name = "memref_stream.generic";
    d.num_operands = ir::kVariadic;
    d.num_regions = 1;
    d.required_attrs = {"bounds", "indexing_maps", "iterator_types", "operand_segments"};
    d.verify = verify_generic;
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "memref_stream.yield";
    d.num_operands = ir::kVariadic;
    d.terminator = true;
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "memref_stream.streaming_region";
    d.num_operands = ir::kVariadic;
    d.num_regions = 1;
    d.required_attrs = {"patterns", "num_inputs"};
    d.operand_classes = "m";
    d.verify = [](const ir::Operation& op, std::vector<std::string>& errs) {
      const auto& pats = op.attr("patterns").as_array();
      if (pats.size() != op.num_operands())
        errs.push_back("memref_stream.streaming_region: one pattern per streamed operand required");
      for (const auto& p : pats)
        if (!p.is_opaque() || p.as_opaque().name != "memref_stream.stride_pattern")
          errs.push_back("memref_stream.streaming_region: patterns must be #memref_stream.stride_pattern");
      if (op.region().empty() || op.body().num_args() != op.num_operands())
        errs.push_back("memref_stream.streaming_region: body needs one stream argument per operand");
      else
        for (const auto& a : op.body().args())
          if (!a->type().is_stream()) errs.push_back("memref_stream.streaming_region: body arguments must be streams");
    };
    r.add(std::move(d));
  }
  {
    // Reinterprets a memref of f32 as a memref of packed pairs along the innermost dim.
    OpDef d;
    d.name = "memref_stream.cast_packed";
    d.num_operands = 1;
    d.num_results = 1;
    d.operand_classes = "m";
    d.result_classes = "m";
    d.verify = [](const ir::Operation& op, std::vector<std::string>& errs) {
      const auto& in = op.operand(0)->type();
      const auto& out = op.result()->type();
      if (!in.element().is(ir::TypeKind::F32) || !out.element().is(ir::TypeKind::F32x2) || in.shape().empty() ||
          in.shape().size() != out.shape().size() || in.shape().back() != 2 * out.shape().back())
        errs.push_back("memref_stream.cast_packed: expected memref<...xNxf32> -> memref<...x(N/2)xvector<2xf32>>");
    };
    r.add(std::move(d));
  }
}

}  // namespace ukc::dialects
