#include <algorithm>
#include <optional>
#include <map>
#include <sstream>

#include "ukc/diagnostics.hpp"
#include "ukc/dialects/rv.hpp"
#include "ukc/dialects/stride_pattern.hpp"
#include "ukc/ir/registry.hpp"
#include "ukc/transforms/schedule.hpp"

namespace ukc::transforms {

using ir::Attribute;
using ir::Block;
using ir::Builder;
using ir::Operation;
using ir::Type;
using ir::TypeKind;
using ir::Value;

namespace {

std::optional<int64_t> li_value(const Value* v) {
  const Operation* d = v->defining_op();
  if (d && d->is("rv.li")) return d->int_attr("immediate");
  return std::nullopt;
}

bool frep_body_op(const Operation& op) {
  if (op.is("rv_snitch.read") || op.is("rv_snitch.write") || op.is("rv_scf.yield")) return true;
  if (op.num_regions() != 0) return false;
  if (op.is("rv.get_register")) return op.result()->type().is(TypeKind::FloatReg);
  return rv::is_fp_register_op(op);
}

void erase_if_dead(Value* v) {
  Operation* d = v->defining_op();
  if (d && d->is("rv.li") && !v->has_uses() && d->num_results() == 1 && d->num_regions() == 0) d->erase();
}

}  // namespace

void convert_inner_loop_to_frep(Operation& module) {
  auto loops = ir::collect(&module, "rv_scf.for");
  for (auto it = loops.rbegin(); it != loops.rend(); ++it) {
    Operation* loop = *it;
    Block& body = loop->body();
    if (body.arg(0)->has_uses()) continue;
    auto lb = li_value(loop->operand(0)), ub = li_value(loop->operand(1)), step = li_value(loop->operand(2));
    if (!lb || !ub || !step || *step != 1 || *ub - *lb < 1) continue;
    bool ok = true;
    for (const auto& op : body.op_list()) ok &= frep_body_op(*op);
    if (!ok) continue;

    Builder b;
    b.set_insertion_point(loop);
    std::vector<Value*> operands = {rv::li(b, *ub - *lb - 1)};
    for (unsigned i = 3; i < loop->num_operands(); ++i) operands.push_back(loop->operand(i));
    std::vector<Type> results;
    for (const auto& r : loop->results()) results.push_back(r->type());
    auto* frep = b.create("rv_snitch.frep", operands, results, {}, 1);
    auto* block = frep->region().add_block();
    for (unsigned i = 1; i < body.num_args(); ++i) body.arg(i)->replace_all_uses_with(block->add_arg(body.arg(i)->type()));
    for (auto* op : body.ops()) op->move_to_end(block);
    auto* yield = block->terminator();
    Builder yb;
    yb.set_insertion_point(yield);
    yb.create("rv_snitch.frep_yield", yield->operands(), {});
    yield->erase();
    for (unsigned i = 0; i < loop->num_results(); ++i) loop->result(i)->replace_all_uses_with(frep->result(i));
    std::vector<Value*> bounds = {loop->operand(0), loop->operand(1), loop->operand(2)};
    loop->drop_all_references();
    loop->erase();
    for (auto* v : bounds) erase_if_dead(v);
  }
}

namespace {

/// Rewrites stream reads of one stream in one block: reads become the stream
/// register directly when each is consumed once, in order, by a plain
/// instruction of the same block; otherwise every read is copied out with fmv.
void rewrite_reads(const std::vector<Operation*>& reads, const std::string& reg) {
  bool direct = true;
  size_t last_pos = 0;
  std::map<const Operation*, int> per_user;
  for (size_t i = 0; i < reads.size() && direct; ++i) {
    Value* v = reads[i]->result();
    if (v->num_uses() != 1) {
      direct = false;
      break;
    }
    const auto& use = v->uses()[0];
    const Operation* user = use.user;
    const auto* def = ir::registry().lookup(user->name());
    bool tied = def && def->tied_operand == static_cast<int>(use.operand_index);
    if (user->parent_block() != reads[i]->parent_block() || user->num_regions() != 0 || tied ||
        user->is("rv_snitch.write") || user->is("rv_scf.yield") || user->is("rv_snitch.frep_yield") ||
        ++per_user[user] > 1) {
      direct = false;
      break;
    }
    size_t pos = user->parent_block()->index_of(user);
    if (i > 0 && pos <= last_pos) direct = false;
    last_pos = pos;
  }
  for (auto* r : reads) {
    Builder b;
    b.set_insertion_point(r);
    Value* v = rv::get_register(b, Type::float_reg(reg));
    if (!direct) v = rv::unary(b, "rv.fmv_d", v, Type::float_reg());
    r->result()->replace_all_uses_with(v);
    r->erase();
  }
}

/// Writes retype their producer to the stream register when it is a plain,
/// single-use instruction of the same block and pushes stay in order;
/// otherwise the value is copied into the stream register with fmv.
void rewrite_writes(const std::vector<Operation*>& writes, const std::string& reg) {
  bool direct = true;
  size_t last_pos = 0;
  for (size_t i = 0; i < writes.size() && direct; ++i) {
    Value* v = writes[i]->operand(0);
    Operation* d = v->defining_op();
    const auto* def = d ? ir::registry().lookup(d->name()) : nullptr;
    if (!d || v->num_uses() != 1 || d->parent_block() != writes[i]->parent_block() || d->num_regions() != 0 ||
        d->num_results() != 1 || d->is("rv.get_register") || !def || def->tied_operand >= 0 ||
        (v->type().is_allocated() && v->type().reg() != reg)) {
      direct = false;
      break;
    }
    size_t pos = d->parent_block()->index_of(d);
    if (i > 0 && pos <= last_pos) direct = false;
    last_pos = pos;
  }
  for (auto* w : writes) {
    Value* v = w->operand(0);
    if (direct) {
      v->set_type(Type::float_reg(reg));
    } else {
      Builder b;
      b.set_insertion_point(w);
      rv::unary(b, "rv.fmv_d", v, Type::float_reg(reg));
    }
    w->erase();
  }
}

}  // namespace

void lower_streaming_region(Operation& module) {
  for (auto* region : ir::collect(&module, "snitch_stream.streaming_region")) {
    const auto& pats = region->attr("patterns").as_array();
    if (pats.size() > static_cast<size_t>(rv::kNumStreams))
      throw CompileError("streaming region uses " + std::to_string(pats.size()) + " streams, at most " +
                         std::to_string(rv::kNumStreams) + " exist");
    auto num_inputs = region->int_attr("num_inputs");
    Builder b;
    b.set_insertion_point(region);
    for (unsigned s = 0; s < region->num_operands(); ++s) {
      auto p = snitch::StridePattern::from_attr(pats[s]);
      if (p.rank() > snitch::kMaxStreamRank)
        throw CompileError("stream " + std::to_string(s) + " has rank " + std::to_string(p.rank()) +
                           " after canonicalization, the hardware supports " + std::to_string(snitch::kMaxStreamRank));
      auto stream = static_cast<int64_t>(s);
      for (int d = 0; d < p.rank(); ++d) {
        auto du = static_cast<size_t>(d);
        b.create("rv_snitch.scfg_bound", {rv::li(b, p.upper_bounds[du] - 1)}, {},
                 {{"stream", Attribute(stream)}, {"dim", Attribute(int64_t{d})}});
        b.create("rv_snitch.scfg_stride", {rv::li(b, p.strides[du])}, {},
                 {{"stream", Attribute(stream)}, {"dim", Attribute(int64_t{d})}});
      }
      if (p.repeat > 1) b.create("rv_snitch.scfg_rep", {rv::li(b, p.repeat - 1)}, {}, {{"stream", Attribute(stream)}});
      b.create("rv_snitch.scfg_base", {region->operand(s)}, {},
               {{"stream", Attribute(stream)},
                {"rank", Attribute(int64_t{p.rank()})},
                {"write", Attribute(stream >= num_inputs)}});
    }
    b.create("rv_snitch.ssr_enable", {}, {});

    Block& body = region->body();
    for (unsigned s = 0; s < body.num_args(); ++s) {
      std::string reg = rv::stream_reg(static_cast<int>(s));
      std::map<Block*, std::vector<Operation*>> by_block;
      for (const auto& use : body.arg(s)->uses()) by_block[use.user->parent_block()].push_back(use.user);
      for (auto& [block, ops] : by_block) {
        std::sort(ops.begin(), ops.end(),
                  [&](const Operation* x, const Operation* y) { return block->index_of(x) < block->index_of(y); });
        if (static_cast<int64_t>(s) < num_inputs)
          rewrite_reads(ops, reg);
        else
          rewrite_writes(ops, reg);
      }
    }
    for (auto* op : body.ops()) op->move_before(region);
    b.create("rv_snitch.ssr_disable", {}, {});
    region->erase();
  }
}

namespace {

/// Emits copies src_i -> dst_i that behave as if performed simultaneously:
/// a copy is emitted only once no pending copy still reads its destination.
void parallel_moves(Builder& b, std::vector<std::pair<Value*, Type>> moves) {
  std::erase_if(moves, [](const auto& m) { return m.first->type().reg() == m.second.reg(); });
  while (!moves.empty()) {
    auto ready = std::find_if(moves.begin(), moves.end(), [&](const auto& m) {
      return std::none_of(moves.begin(), moves.end(), [&](const auto& o) {
        return &o != &m && o.first->type().reg() == m.second.reg();
      });
    });
    if (ready == moves.end())
      throw CompileError("lower-rv-scf-to-rv-cf: cyclic register copies at a loop boundary (" +
                         moves.front().first->type().reg() + " -> " + moves.front().second.reg() + ")");
    rv::unary(b, ready->second.is(TypeKind::IntReg) ? "rv.mv" : "rv.fmv_d", ready->first, ready->second);
    moves.erase(ready);
  }
}

}  // namespace

void lower_rv_scf_to_rv_cf(Operation& module) {
  for (auto* func : ir::collect(&module, "rv_func.func")) {
    ir::walk(func, [](Operation* op) {
      for (const auto& r : op->results())
        if (r->type().is_register() && !r->type().is_allocated())
          throw CompileError("lower-rv-scf-to-rv-cf: " + op->name() + " has an unallocated result");
    });
    int next_label = 0;
    std::string fname = func->attr("sym_name").as_string();

    // Iter-arg moves around frep bodies.
    for (auto* frep : ir::collect(func, "rv_snitch.frep")) {
      Builder b;
      b.set_insertion_point(frep);
      std::vector<std::pair<Value*, Type>> entry, back;
      auto* yield = frep->body().terminator();
      for (unsigned i = 0; i < frep->num_results(); ++i) {
        entry.emplace_back(frep->operand(i + 1), frep->result(i)->type());
        back.emplace_back(yield->operand(i), frep->result(i)->type());
      }
      parallel_moves(b, entry);
      b.set_insertion_point(yield);
      parallel_moves(b, back);
    }

    // Loops, outermost first; each split moves the body into the function region.
    for (auto* loop : ir::collect(func, "rv_scf.for")) {
      Block* parent = loop->parent_block();
      auto& region = func->region();
      size_t at = region.block_index(parent);
      int id = next_label++;
      std::string body_label = "." + fname + "_loop" + std::to_string(id);
      std::string exit_label = "." + fname + "_exit" + std::to_string(id);
      Value* lb = loop->operand(0);
      Value* ub = loop->operand(1);
      Value* step = loop->operand(2);
      Block& lbody = loop->body();
      const Type iv_t = lbody.arg(0)->type();

      Builder b;
      b.set_insertion_point(loop);
      std::vector<std::pair<Value*, Type>> entry = {{lb, iv_t}};
      for (unsigned i = 0; i < loop->num_results(); ++i) entry.emplace_back(loop->operand(i + 3), loop->result(i)->type());
      parallel_moves(b, entry);
      auto lo = li_value(lb), hi = li_value(ub);
      bool guard = !(lo && hi && *lo < *hi);
      Value* iv_before = rv::get_register(b, iv_t);
      if (guard) b.create("rv_cf.bge", {iv_before, ub}, {}, {{"target", Attribute(exit_label)}});

      // Body block: label, old body, yield moves, increment, back-edge.
      Block* body_block = region.insert_block(at + 1);
      Builder bb(body_block);
      bb.create("rv.label", {}, {}, {{"label", Attribute(body_label)}});
      for (unsigned i = 0; i < lbody.num_args(); ++i)
        lbody.arg(i)->replace_all_uses_with(rv::get_register(bb, lbody.arg(i)->type()));
      for (auto* op : lbody.ops()) op->move_to_end(body_block);
      auto* yield = body_block->terminator();
      Builder yb;
      yb.set_insertion_point(yield);
      std::vector<std::pair<Value*, Type>> back;
      for (unsigned i = 0; i < loop->num_results(); ++i) back.emplace_back(yield->operand(i), loop->result(i)->type());
      parallel_moves(yb, back);
      yield->erase();
      Value* iv_cur = rv::get_register(bb, iv_t);
      Value* next_iv = li_value(step) && *li_value(step) < 2048
                           ? rv::imm_op(bb, "rv.addi", iv_cur, *li_value(step), iv_t)
                           : rv::binary(bb, "rv.add", iv_cur, step, iv_t);
      bb.create("rv_cf.blt", {next_iv, ub}, {}, {{"target", Attribute(body_label)}});

      // Exit block: label, then everything after the loop.
      Block* exit_block = region.insert_block(at + 2);
      Builder eb(exit_block);
      eb.create("rv.label", {}, {}, {{"label", Attribute(exit_label)}});
      for (unsigned i = 0; i < loop->num_results(); ++i)
        loop->result(i)->replace_all_uses_with(rv::get_register(eb, loop->result(i)->type()));
      for (Operation* op = loop->next(); op;) {
        Operation* next = op->next();
        op->move_to_end(exit_block);
        op = next;
      }
      loop->drop_all_references();
      loop->erase();
      erase_if_dead(step);
    }
  }
}

namespace {

std::string reg(const Value* v, const Operation& op) {
  if (!v->type().is_allocated()) throw CompileError("emit-assembly: " + op.name() + " uses an unallocated register");
  return v->type().reg();
}

std::string mnemonic(const std::string& name) {
  std::string m = name.substr(name.find('.') + 1);
  for (auto& c : m)
    if (c == '_') c = '.';
  return m;
}

void emit_op(const Operation& op, std::ostringstream& os);

void emit_instr(const Operation& op, std::ostringstream& os) {
  const auto& n = op.name();
  auto r = [&](const Value* v) { return reg(v, op); };
  auto line = [&](const std::string& text) { os << "    " << text << "\n"; };
  auto imm = [&] { return std::to_string(op.int_attr("immediate")); };
  std::string m = mnemonic(n);
  if (n == "rv.get_register") return;
  if (n == "rv.label") {
    os << op.attr("label").as_string() << ":\n";
  } else if (n == "rv_func.return") {
    line("ret");
  } else if (n == "rv.li") {
    line("li " + r(op.result()) + ", " + imm());
  } else if (n == "rv.addi" || n == "rv.slli") {
    line(m + " " + r(op.result()) + ", " + r(op.operand(0)) + ", " + imm());
  } else if (n == "rv.fld" || n == "rv.flw") {
    line(m + " " + r(op.result()) + ", " + imm() + "(" + r(op.operand(0)) + ")");
  } else if (n == "rv.fsd" || n == "rv.fsw") {
    line(m + " " + r(op.operand(0)) + ", " + imm() + "(" + r(op.operand(1)) + ")");
  } else if (op.dialect() == "rv_cf") {
    std::string target = op.attr("target").as_string();
    line(op.num_operands() ? m + " " + r(op.operand(0)) + ", " + r(op.operand(1)) + ", " + target : m + " " + target);
  } else if (n == "rv_snitch.scfg_bound" || n == "rv_snitch.scfg_stride") {
    line(m + " " + std::to_string(op.int_attr("stream")) + ", " + std::to_string(op.int_attr("dim")) + ", " +
         r(op.operand(0)));
  } else if (n == "rv_snitch.scfg_rep") {
    line(m + " " + std::to_string(op.int_attr("stream")) + ", " + r(op.operand(0)));
  } else if (n == "rv_snitch.scfg_base") {
    line(m + " " + std::to_string(op.int_attr("stream")) + ", " + std::to_string(op.int_attr("rank")) + ", " +
         (op.attr("write").as_bool() ? "w" : "r") + ", " + r(op.operand(0)));
  } else if (n == "rv_snitch.ssr_enable" || n == "rv_snitch.ssr_disable") {
    line(m);
  } else if (n == "rv_snitch.frep") {
    int count = 0;
    for (const auto& inner : op.body().op_list())
      if (!inner->is("rv.get_register") && !inner->is("rv_snitch.frep_yield")) ++count;
    line("frep.o " + r(op.operand(0)) + ", " + std::to_string(count));
    for (const auto& inner : op.body().op_list()) emit_op(*inner, os);
  } else if (n == "rv_snitch.frep_yield") {
    return;
  } else if (op.num_regions() == 0 && (op.dialect() == "rv" || op.dialect() == "rv_snitch")) {
    const auto* def = ir::registry().lookup(n);
    int tied = def ? def->tied_operand : -1;
    std::string text = m;
    bool first = true;
    auto add = [&](const std::string& s) {
      text += (first ? " " : ", ") + s;
      first = false;
    };
    for (const auto& res : op.results()) add(r(res.get()));
    for (unsigned i = 0; i < op.num_operands(); ++i)
      if (static_cast<int>(i) != tied) add(r(op.operand(i)));
    line(text);
  } else {
    throw CompileError("emit-assembly: cannot print " + n);
  }
}

void emit_op(const Operation& op, std::ostringstream& os) { emit_instr(op, os); }

}  // namespace

std::string emit_instruction(const Operation& op) {
  if (op.num_regions() != 0) throw CompileError("emit-instruction: " + op.name() + " has regions");
  std::ostringstream os;
  emit_instr(op, os);
  std::string text = os.str();
  size_t b = text.find_first_not_of(' ');
  if (b == std::string::npos) return {};
  return text.substr(b, text.find_last_not_of('\n') - b + 1);
}

std::string emit_assembly(const Operation& module) {
  std::ostringstream os;
  for (const auto& op : module.body().op_list()) {
    if (!op->is("rv_func.func")) throw CompileError("emit-assembly: cannot print " + op->name());
    std::string name = op->attr("sym_name").as_string();
    os << "    .text\n    .globl " << name << "\n    .p2align 2\n" << name << ":\n";
    for (const auto& block : op->region().blocks())
      for (const auto& inner : block->op_list()) emit_op(*inner, os);
    os << "\n";
  }
  return os.str();
}

}  // namespace ukc::transforms
