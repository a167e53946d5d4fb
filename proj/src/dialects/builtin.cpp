#include "ukc/dialects/dialects.hpp"

namespace ukc::dialects {

using ir::OpDef;

namespace {

void same_float_types(const ir::Operation& op, std::vector<std::string>& errs) {
  const ir::Type& t = op.result()->type();
  if (!t.is_float()) {
    errs.push_back(op.name() + ": result must be a float type, got " + t.str());
    return;
  }
  for (auto* v : op.operands())
    if (v->type() != t) errs.push_back(op.name() + ": operand type " + v->type().str() + " differs from " + t.str());
}

void region_ends_with(const ir::Operation& op, const char* term, std::vector<std::string>& errs) {
  if (op.num_regions() == 0 || op.region().empty()) {
    errs.push_back(op.name() + ": missing body");
    return;
  }
  for (const auto& b : op.region().blocks()) {
    const auto* t = b->terminator();
    if (!t || t->name() != term) errs.push_back(op.name() + ": block must end with " + term);
  }
}

}  // namespace

void register_builtin(ir::Registry& r) {
  {
    OpDef d;
    d.name = "builtin.module";
    d.num_regions = 1;
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "func.func";
    d.num_regions = 1;
    d.required_attrs = {"sym_name"};
    d.verify = [](const ir::Operation& op, std::vector<std::string>& errs) {
      region_ends_with(op, "func.return", errs);
    };
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "func.return";
    d.num_operands = ir::kVariadic;
    d.terminator = true;
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "arith.constant";
    d.num_results = 1;
    d.required_attrs = {"value"};
    d.result_classes = "F";
    d.verify = [](const ir::Operation& op, std::vector<std::string>& errs) {
      if (!op.attr("value").is_float()) errs.push_back("arith.constant: value must be a float attribute");
    };
    r.add(std::move(d));
  }
  for (const char* n : {"arith.addf", "arith.subf", "arith.mulf", "arith.maximumf"}) {
    OpDef d;
    d.name = n;
    d.num_operands = 2;
    d.num_results = 1;
    d.verify = same_float_types;
    r.add(std::move(d));
  }
  {
    // acc + v[0] + v[1], evaluated left to right.
    OpDef d;
    d.name = "vector.reduce_add";
    d.num_operands = 2;
    d.num_results = 1;
    d.verify = [](const ir::Operation& op, std::vector<std::string>& errs) {
      if (!op.operand(0)->type().is(ir::TypeKind::F32x2) || !op.operand(1)->type().is(ir::TypeKind::F32) ||
          !op.result()->type().is(ir::TypeKind::F32))
        errs.push_back("vector.reduce_add: expected (vector<2xf32>, f32) -> f32");
    };
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "linalg.generic";
    d.num_operands = ir::kVariadic;
    d.num_regions = 1;
    d.required_attrs = {"indexing_maps", "iterator_types", "operand_segments"};
    d.verify = [](const ir::Operation& op, std::vector<std::string>& errs) {
      region_ends_with(op, "linalg.yield", errs);
      auto seg = op.attr("operand_segments").as_ints();
      int64_t total = 0;
      for (auto s : seg) total += s;
      if (seg.size() != 2 || total != op.num_operands()) errs.push_back("linalg.generic: bad operand_segments");
      auto maps = op.attr("indexing_maps").as_maps();
      auto its = op.attr("iterator_types").as_strings();
      if (maps.size() != op.num_operands()) errs.push_back("linalg.generic: one indexing map per operand required");
      for (const auto& m : maps)
        if (m.num_dims != its.size()) errs.push_back("linalg.generic: map " + m.str() + " has wrong domain");
    };
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "linalg.yield";
    d.num_operands = ir::kVariadic;
    d.terminator = true;
    r.add(std::move(d));
  }
}

}  // namespace ukc::dialects
