#include "ukc/dialects/dialects.hpp"
#include "ukc/dialects/rv.hpp"
#include "ukc/dialects/stride_pattern.hpp"

namespace ukc::dialects {

using ir::OpDef;

namespace {

bool allowed_in_frep(const ir::Operation& op) {
  if (op.is("rv_snitch.read") || op.is("rv_snitch.write") || op.is("rv_snitch.frep_yield")) return true;
  if (op.is("rv.get_register")) return op.result()->type().is(ir::TypeKind::FloatReg);
  return rv::is_fp_register_op(op) && op.num_regions() == 0;
}

void verify_frep(const ir::Operation& op, std::vector<std::string>& errs) {
  if (op.num_operands() < 1 || !op.operand(0)->type().is(ir::TypeKind::IntReg)) {
    errs.push_back("rv_snitch.frep: first operand must be the integer repetition count");
    return;
  }
  unsigned iters = op.num_operands() - 1;
  if (op.num_results() != iters) errs.push_back("rv_snitch.frep: iter arg / result count mismatch");
  if (op.region().blocks().size() != 1) {
    errs.push_back("rv_snitch.frep: body must be a single block");
    return;
  }
  const auto& body = op.body();
  if (body.num_args() != iters) errs.push_back("rv_snitch.frep: body needs one argument per iter arg");
  const auto* term = body.terminator();
  if (!term || !term->is("rv_snitch.frep_yield") || term->num_operands() != iters)
    errs.push_back("rv_snitch.frep: body must end with rv_snitch.frep_yield of the iter args");
  for (const auto& inner : body.op_list()) {
    if (inner->is("rv_snitch.frep")) {
      errs.push_back("rv_snitch.frep: nested frep is not supported");
    } else if (!allowed_in_frep(*inner)) {
      errs.push_back("rv_snitch.frep: only FP register and stream operations are allowed in the body, found " +
                     inner->name());
    }
  }
  for (unsigned i = 0; i < iters; ++i)
    if (!op.operand(i + 1)->type().is(ir::TypeKind::FloatReg))
      errs.push_back("rv_snitch.frep: iter args must be float registers");
}

void verify_stream_access(const ir::Operation& op, std::vector<std::string>& errs) {
  const ir::Value* stream = op.is("rv_snitch.read") ? op.operand(0) : op.operand(1);
  if (!stream->type().is_stream()) {
    errs.push_back(op.name() + ": stream operand has type " + stream->type().str());
    return;
  }
  bool want_readable = op.is("rv_snitch.read");
  if (stream->type().is(ir::TypeKind::ReadableStream) != want_readable)
    errs.push_back(op.name() + ": wrong stream direction");
  const ir::Block* owner = stream->owner_block();
  const ir::Operation* region = owner ? owner->parent_op() : nullptr;
  if (!region || !region->is("snitch_stream.streaming_region") || !enclosing_streaming_region(op))
    errs.push_back(op.name() + ": stream access outside a streaming region");
}

}  // namespace

void register_snitch(ir::Registry& r) {
  auto add = [&](const char* name, int nops, int nres, const char* ops, const char* res,
                 std::vector<std::string> attrs = {}, int tied = -1) {
    OpDef d;
    d.name = name;
    d.num_operands = nops;
    d.num_results = nres;
    d.operand_classes = ops;
    d.result_classes = res;
    d.required_attrs = std::move(attrs);
    d.tied_operand = tied;
    r.add(std::move(d));
  };
  for (const char* n : {"rv_snitch.vfadd_s", "rv_snitch.vfmul_s", "rv_snitch.vfmax_s", "rv_snitch.vfcpka_s_s"})
    add(n, 2, 1, "ff", "f");
  // rd = rd + rs1 * rs2 lane-wise; operands (rd, rs1, rs2).
  add("rv_snitch.vfmac_s", 3, 1, "fff", "f", {}, 0);
  // rd.lo = rd.lo + rs.lo + rs.hi; operands (rd, rs).
  add("rv_snitch.vfsum_s", 2, 1, "ff", "f", {}, 0);

  {
    OpDef d;
    d.name = "rv_snitch.frep";
    d.num_operands = ir::kVariadic;
    d.num_results = ir::kVariadic;
    d.num_regions = 1;
    d.verify = verify_frep;
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "rv_snitch.frep_yield";
    d.num_operands = ir::kVariadic;
    d.terminator = true;
    d.operand_classes = "f";
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "rv_snitch.read";
    d.num_operands = 1;
    d.num_results = 1;
    d.result_classes = "f";
    d.verify = verify_stream_access;
    r.add(std::move(d));
  }
  {
    OpDef d;
    d.name = "rv_snitch.write";
    d.num_operands = 2;
    d.operand_classes = "fs";
    d.verify = verify_stream_access;
    r.add(std::move(d));
  }
  add("rv_snitch.scfg_bound", 1, 0, "i", "", {"stream", "dim"});
  add("rv_snitch.scfg_stride", 1, 0, "i", "", {"stream", "dim"});
  add("rv_snitch.scfg_rep", 1, 0, "i", "", {"stream"});
  add("rv_snitch.scfg_base", 1, 0, "i", "", {"stream", "rank", "write"});
  add("rv_snitch.ssr_enable", 0, 0, "", "");
  add("rv_snitch.ssr_disable", 0, 0, "", "");

  {
    OpDef d;
    d.name = "snitch_stream.streaming_region";
    d.num_operands = ir::kVariadic;
    d.num_regions = 1;
    d.required_attrs = {"patterns", "num_inputs"};
    d.operand_classes = "i";
    d.verify = [](const ir::Operation& op, std::vector<std::string>& errs) {
      const auto& pats = op.attr("patterns").as_array();
      if (pats.size() != op.num_operands())
        errs.push_back("snitch_stream.streaming_region: one pattern per base address required");
      if (pats.size() > static_cast<size_t>(rv::kNumStreams))
        errs.push_back("snitch_stream.streaming_region: at most " + std::to_string(rv::kNumStreams) + " streams");
      for (const auto& p : pats) {
        try {
          snitch::StridePattern::from_attr(p);
        } catch (const std::exception& e) {
          errs.push_back(std::string("snitch_stream.streaming_region: ") + e.what());
        }
      }
      if (op.region().empty() || op.body().num_args() != op.num_operands()) {
        errs.push_back("snitch_stream.streaming_region: body needs one stream argument per pattern");
        return;
      }
      auto ni = op.int_attr("num_inputs");
      for (unsigned i = 0; i < op.body().num_args(); ++i) {
        const auto& t = op.body().arg(i)->type();
        auto want = static_cast<int64_t>(i) < ni ? ir::TypeKind::ReadableStream : ir::TypeKind::WritableStream;
        if (!t.is(want)) errs.push_back("snitch_stream.streaming_region: stream argument " + std::to_string(i) +
                                        " has type " + t.str());
      }
      // Explicit memory traffic must not target the stream registers.
      ir::walk(const_cast<ir::Operation*>(&op), [&](ir::Operation* inner) {
        bool load = inner->is("rv.fld") || inner->is("rv.flw");
        bool store = inner->is("rv.fsd") || inner->is("rv.fsw");
        if (!load && !store) return;
        const ir::Value* v = load ? inner->result() : inner->operand(0);
        if (rv::stream_index(v->type().reg()) >= 0 &&
            rv::stream_index(v->type().reg()) < static_cast<int>(op.num_operands()))
          errs.push_back("snitch_stream.streaming_region: explicit " + inner->name() + " on stream register " +
                         v->type().reg());
      });
    };
    r.add(std::move(d));
  }
}

}  // namespace ukc::dialects
