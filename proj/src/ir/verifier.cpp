#include "ukc/ir/verifier.hpp"

#include <unordered_map>

#include "ukc/ir/registry.hpp"

namespace ukc::ir {

std::string VerifyReport::str() const {
  std::string s;
  for (const auto& v : violations) s += v + "\n";
  return s;
}

namespace {

bool matches_class(char cls, const Type& t) {
  switch (cls) {
    case 'i':
      return t.is(TypeKind::IntReg);
    case 'f':
      return t.is(TypeKind::FloatReg);
    case 'F':
      return t.is_float();
    case 'm':
      return t.is(TypeKind::MemRef);
    case 's':
      return t.is_stream();
    case 'x':
      return t.is(TypeKind::Index);
    default:
      return true;
  }
}

class Verifier {
 public:
  VerifyReport run(const Operation& root) {
    check_op(root);
    return std::move(report_);
  }

 private:
  size_t position(const Operation* op) {
    const Block* b = op->parent_block();
    auto it = positions_.find(b);
    if (it == positions_.end()) {
      std::unordered_map<const Operation*, size_t> m;
      size_t i = 0;
      for (const auto& o : b->op_list()) m[o.get()] = i++;
      it = positions_.emplace(b, std::move(m)).first;
    }
    return it->second.at(op);
  }

  bool dominates(const Value* v, const Operation* user) {
    const Block* def_block = v->parent_block();
    const Operation* anchor = user;
    while (anchor && anchor->parent_block()) {
      const Block* b = anchor->parent_block();
      if (b == def_block) {
        if (v->is_block_arg()) return true;
        return position(v->defining_op()) < position(anchor);
      }
      // Multi-block regions are laid out in order; earlier blocks are visible.
      if (def_block && def_block->parent_region() == b->parent_region()) {
        const Region* r = b->parent_region();
        return r->block_index(def_block) < r->block_index(b);
      }
      anchor = b->parent_op();
    }
    return false;
  }

  void check_op(const Operation& op) {
    const OpDef* def = registry().lookup(op.name());
    if (!def) {
      report_.violations.push_back("unregistered operation '" + op.name() + "'");
    } else {
      check_schema(op, *def);
    }
    for (unsigned i = 0; i < op.num_operands(); ++i)
      if (!dominates(op.operand(i), &op))
        report_.violations.push_back(op.name() + ": operand " + std::to_string(i) +
                                     " does not dominate its use (SSA dominance violation)");
    for (const auto& r : op.regions())
      for (const auto& b : r->blocks()) {
        size_t idx = 0, n = b->op_list().size();
        for (const auto& inner : b->op_list()) {
          const OpDef* idef = registry().lookup(inner->name());
          if (idef && idef->terminator && idx + 1 != n)
            report_.violations.push_back(inner->name() + ": terminator must be the last operation of its block");
          check_op(*inner);
          ++idx;
        }
      }
  }

  void check_schema(const Operation& op, const OpDef& def) {
    auto& out = report_.violations;
    if (def.num_operands != kVariadic && op.num_operands() != static_cast<unsigned>(def.num_operands))
      out.push_back(op.name() + ": expected " + std::to_string(def.num_operands) + " operands, got " +
                    std::to_string(op.num_operands()));
    if (def.num_results != kVariadic && op.num_results() != static_cast<unsigned>(def.num_results))
      out.push_back(op.name() + ": expected " + std::to_string(def.num_results) + " results, got " +
                    std::to_string(op.num_results()));
    if (op.num_regions() != static_cast<unsigned>(def.num_regions))
      out.push_back(op.name() + ": expected " + std::to_string(def.num_regions) + " regions, got " +
                    std::to_string(op.num_regions()));
    for (const auto& a : def.required_attrs)
      if (!op.has_attr(a)) out.push_back(op.name() + ": missing required attribute '" + a + "'");
    auto check_classes = [&](const std::string& classes, const std::vector<const Type*>& types, const char* what) {
      if (classes.empty()) return;
      for (size_t i = 0; i < types.size(); ++i) {
        char cls = classes[std::min(i, classes.size() - 1)];
        if (!matches_class(cls, *types[i]))
          out.push_back(op.name() + ": " + what + " " + std::to_string(i) + " has unexpected type " +
                        types[i]->str());
      }
    };
    std::vector<const Type*> ots, rts;
    for (auto* v : op.operands()) ots.push_back(&v->type());
    for (const auto& r : op.results()) rts.push_back(&r->type());
    check_classes(def.operand_classes, ots, "operand");
    check_classes(def.result_classes, rts, "result");
    if (def.tied_operand >= 0 && op.num_results() == 1 &&
        static_cast<unsigned>(def.tied_operand) < op.num_operands()) {
      const auto& a = op.result()->type();
      const auto& b = op.operand(static_cast<unsigned>(def.tied_operand))->type();
      if (a.is_allocated() && b.is_allocated() && a.reg() != b.reg())
        out.push_back(op.name() + ": result must share the register of operand " +
                      std::to_string(def.tied_operand));
    }
    bool attrs_ok = true;
    for (const auto& a : def.required_attrs) attrs_ok = attrs_ok && op.has_attr(a);
    if (def.verify && attrs_ok) {
      try {
        def.verify(op, out);
      } catch (const std::exception& e) {
        out.push_back(op.name() + ": " + e.what());
      }
    }
  }

  VerifyReport report_;
  std::unordered_map<const Block*, std::unordered_map<const Operation*, size_t>> positions_;
};

}  // namespace

VerifyReport verify(const Operation& root) { return Verifier().run(root); }

}  // namespace ukc::ir
