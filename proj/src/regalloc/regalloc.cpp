#include "ukc/regalloc/regalloc.hpp"

#include <algorithm>
#include <set>

#include "ukc/diagnostics.hpp"
#include "ukc/dialects/rv.hpp"
#include "ukc/ir/registry.hpp"

namespace ukc::regalloc {

using ir::Block;
using ir::Operation;
using ir::TypeKind;
using ir::Value;

namespace {

bool is_loop(const Operation& op) { return op.is("rv_scf.for") || op.is("rv_snitch.frep"); }

// Operation owning the definition of v: its defining op, or the op whose
// region holds the block of a block argument.
const Operation* def_owner(const Value* v) {
  if (v->is_block_arg()) return v->owner_block()->parent_op();
  return v->defining_op();
}

bool nested_in(const Operation* op, const Operation* ancestor) {
  for (const Operation* p = op; p; p = p->parent_op())
    if (p == ancestor) return true;
  return false;
}

void for_each_value(const Operation& func, const std::function<void(const Value*)>& fn) {
  ir::walk(const_cast<Operation*>(&func), [&](Operation* op) {
    for (const auto& r : op->results()) fn(r.get());
    for (const auto& region : op->regions())
      for (const auto& block : region->blocks())
        for (const auto& a : block->args()) fn(a.get());
  });
}

bool in_pool(const std::string& reg) {
  const auto& ip = rv::int_pool();
  const auto& fp = rv::float_pool();
  return std::find(ip.begin(), ip.end(), reg) != ip.end() || std::find(fp.begin(), fp.end(), reg) != fp.end();
}

class Allocator {
 public:
  Allocator(Operation& func) : pool_(available_registers(func)), live_ins_(loop_live_ins(func)) {}

  void run(Operation& func) {
    for (const auto& block : func.region().blocks()) walk_block(*block);
  }

 private:
  std::string take(const Value* v, const std::string& hint) {
    const auto& regs = v->type().is(TypeKind::IntReg) ? pool_.int_regs : pool_.fp_regs;
    auto usable = [&](const std::string& r) {
      return !busy_.count(r) && !reserved_.count(r) && std::find(regs.begin(), regs.end(), r) != regs.end();
    };
    if (!hint.empty() && usable(hint)) {
      busy_.insert(hint);
      return hint;
    }
    for (const auto& r : regs)
      if (usable(r)) {
        busy_.insert(r);
        return r;
      }
    const Operation* d = def_owner(v);
    std::string live;
    for (const auto& r : regs)
      if (busy_.count(r) || reserved_.count(r)) live += (live.empty() ? "" : " ") + r;
    throw OutOfRegisters(std::string("no free ") + (v->type().is(TypeKind::IntReg) ? "integer" : "floating-point") +
                         " register for a value defined by " + (d ? d->name() : std::string("<unknown>")) +
                         " (live: " + live + ")");
  }

  void assign(Value* v, const std::string& hint = {}) {
    if (!v->type().is_register() || v->type().is_allocated()) return;
    v->set_type(v->type().with_reg(take(v, hint)));
  }

  void release(const Value* v) {
    const auto& r = v->type().reg();
    if (!r.empty() && !reserved_.count(r)) busy_.erase(r);
  }

  void walk_block(Block& block) {
    auto ops = block.ops();
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
      if (is_loop(**it))
        walk_loop(**it);
      else
        walk_op(**it);
    }
  }

  void walk_op(Operation& op) {
    for (const auto& r : op.results()) assign(r.get());
    for (const auto& r : op.results()) release(r.get());
    const auto* def = ir::registry().lookup(op.name());
    int tied = def ? def->tied_operand : -1;
    if (tied >= 0 && op.num_results() == 1) {
      Value* t = op.operand(static_cast<unsigned>(tied));
      const auto& reg = op.result()->type().reg();
      if (!t->type().is_allocated()) {
        t->set_type(t->type().with_reg(reg));
        if (in_pool(reg) && !reserved_.count(reg)) busy_.insert(reg);
      } else if (t->type().reg() != reg) {
        throw CompileError(op.name() + ": accumulator operand is in " + t->type().reg() + " but the result is in " +
                           reg + ", they must share a register");
      }
    }
    for (unsigned i = 0; i < op.num_operands(); ++i)
      if (static_cast<int>(i) != tied) assign(op.operand(i));
  }

  // True when the block argument `arg` is still needed at or after the
  // definition of `y` in the same body, so the two cannot share a register.
  // A tied accumulator inherits the register of its operand, so the register
  // of `y` is written as early as the start of its tied chain.
  static bool overlaps(const Value* arg, const Value* y, const Block& body) {
    const Operation* d = y->defining_op();
    size_t def_pos = body.index_of(d);
    std::set<const Operation*> chain = {d};
    for (const Operation* op = d;;) {
      const auto* def = ir::registry().lookup(op->name());
      if (!def || def->tied_operand < 0) break;
      const Value* t = op->operand(static_cast<unsigned>(def->tied_operand));
      const Operation* td = t->defining_op();
      if (!td || td->parent_block() != &body || t->type().is_allocated()) break;
      op = td;
      chain.insert(op);
      def_pos = body.index_of(op);
    }
    for (const auto& use : arg->uses()) {
      const Operation* top = use.user;
      while (top->parent_block() != &body) top = top->parent_op();
      if (top->is("rv_scf.yield") || top->is("rv_snitch.frep_yield")) return true;
      size_t pos = body.index_of(top);
      if (pos > def_pos || (pos == def_pos && !chain.count(use.user))) return true;
    }
    return false;
  }

  void walk_loop(Operation& loop) {
    bool is_for = loop.is("rv_scf.for");
    unsigned first_iter = is_for ? 3 : 1;
    unsigned arg_off = is_for ? 1 : 0;
    Block& body = loop.body();

    std::vector<std::string> carried;
    for (const auto& r : loop.results()) assign(r.get());
    for (const auto& r : loop.results()) {
      release(r.get());
      carried.push_back(r->type().reg());
    }
    for (unsigned i = 0; i < loop.num_results(); ++i) {
      Value* a = body.arg(i + arg_off);
      if (!a->type().is_allocated()) a->set_type(a->type().with_reg(carried[i]));
    }

    std::vector<std::string> newly_reserved;
    auto reserve = [&](const std::string& r) {
      if (!r.empty() && in_pool(r) && reserved_.insert(r).second) newly_reserved.push_back(r);
    };
    for (const auto& r : carried) reserve(r);

    if (is_for) {
      assign(loop.operand(1));
      assign(loop.operand(2));
    }
    auto li = live_ins_.find(&loop.region());
    if (li != live_ins_.end())
      for (auto* v : li->second) assign(v);

    std::string iv_reg;
    if (is_for) {
      assign(body.arg(0));
      iv_reg = body.arg(0)->type().reg();
    }
    reserve(iv_reg);

    Operation* yield = body.terminator();
    std::set<const Value*> hinted;
    for (unsigned i = 0; yield && i < yield->num_operands() && i < carried.size(); ++i) {
      Value* y = yield->operand(i);
      if (y->type().is_allocated() || y->is_block_arg() || hinted.count(y)) continue;
      if (!y->defining_op() || y->defining_op()->parent_block() != &body) continue;
      if (overlaps(body.arg(i + arg_off), y, body)) continue;
      y->set_type(y->type().with_reg(carried[i]));
      hinted.insert(y);
    }

    walk_block(body);

    for (const auto& r : newly_reserved) {
      reserved_.erase(r);
      busy_.erase(r);
    }
    if (is_for) assign(loop.operand(0), iv_reg);
    for (unsigned i = 0; i < loop.num_results(); ++i) assign(loop.operand(first_iter + i), carried[i]);
    if (!is_for) assign(loop.operand(0));
  }

  RegisterPool pool_;
  std::map<const ir::Region*, std::vector<Value*>> live_ins_;
  std::set<std::string> busy_;
  std::set<std::string> reserved_;
};

}  // namespace

RegisterPool available_registers(const Operation& func) {
  std::set<std::string> named;
  for_each_value(func, [&](const Value* v) {
    if (v->type().is_allocated()) named.insert(v->type().reg());
  });
  RegisterPool p;
  for (const auto& r : rv::int_pool())
    if (!named.count(r)) p.int_regs.push_back(r);
  for (const auto& r : rv::float_pool())
    if (!named.count(r)) p.fp_regs.push_back(r);
  return p;
}

std::map<const ir::Region*, std::vector<Value*>> loop_live_ins(Operation& func) {
  std::map<const ir::Region*, std::vector<Value*>> out;
  for (auto* loop : ir::collect(&func, [](Operation* op) { return is_loop(*op); })) {
    auto& list = out[&loop->region()];
    std::set<const Value*> seen;
    ir::walk(loop, [&](Operation* op) {
      if (op == loop) return;
      for (auto* v : op->operands()) {
        if (!v->type().is_register() || nested_in(def_owner(v), loop) || !seen.insert(v).second) continue;
        list.push_back(v);
      }
    });
  }
  return out;
}

AllocationReport usage(const Operation& func) {
  AllocationReport rep;
  if (func.has_attr("sym_name")) rep.function = func.attr("sym_name").as_string();
  std::set<std::string> ints, fps;
  for_each_value(func, [&](const Value* v) {
    if (!v->type().is_allocated()) return;
    if (v->type().is(TypeKind::IntReg)) {
      if (v->type().reg() != "zero") ints.insert(v->type().reg());
    } else {
      fps.insert(v->type().reg());
    }
  });
  rep.int_regs.assign(ints.begin(), ints.end());
  rep.fp_regs.assign(fps.begin(), fps.end());
  rep.int_used = static_cast<int>(ints.size());
  rep.fp_used = static_cast<int>(fps.size());
  rep.int_pool = static_cast<int>(rv::int_pool().size());
  rep.fp_pool = static_cast<int>(rv::float_pool().size());
  return rep;
}

AllocationReport allocate_function(Operation& func) {
  if (!func.is("rv_func.func")) throw CompileError("register allocation expects rv_func.func, got " + func.name());
  Allocator(func).run(func);
  return usage(func);
}

std::vector<AllocationReport> allocate_module(Operation& module) {
  std::vector<AllocationReport> out;
  for (auto* f : ir::collect(&module, "rv_func.func")) out.push_back(allocate_function(*f));
  return out;
}

}  // namespace ukc::regalloc
