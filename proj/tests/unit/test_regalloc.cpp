#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "ukc/diagnostics.hpp"
#include "ukc/dialects/rv.hpp"
#include "ukc/ir/text.hpp"
#include "ukc/ir/verifier.hpp"
#include "ukc/regalloc/regalloc.hpp"

using namespace ukc;
using ir::Block;
using ir::Builder;
using ir::Operation;
using ir::Type;
using ir::TypeKind;
using ir::Value;

using oracle::all_allocated;
using oracle::conflicts;
using oracle::make_func;
using oracle::op_count;


TEST_CASE("pass 1 removes every named register from the pools") {
  SUBCASE("an unallocated function keeps the full caller-saved pools") {
    auto f = make_func();
    auto p = regalloc::available_registers(*f.func);
    CHECK(p.int_regs.size() == 15);
    CHECK(p.fp_regs.size() == 20);
  }
  SUBCASE("arguments pin their registers") {
    auto f = make_func({Type::int_reg("a0"), Type::int_reg("a1")});
    auto p = regalloc::available_registers(*f.func);
    CHECK(p.int_regs.size() == 13);
    CHECK(p.int_regs.front() == "a2");
  }
  SUBCASE("an explicit ft0 leaves 19 FP registers") {
    auto f = make_func();
    Builder b(f.entry);
    rv::get_register(b, Type::float_reg("ft0"));
    auto p = regalloc::available_registers(*f.func);
    CHECK(p.fp_regs.size() == 19);
    CHECK(std::find(p.fp_regs.begin(), p.fp_regs.end(), "ft0") == p.fp_regs.end());
  }
}

TEST_CASE("pass 2 collects values used in a loop but defined outside it") {
  auto f = make_func({Type::int_reg("a0")});
  Builder b(f.entry);
  Value* base = rv::binary(b, "rv.add", f.entry->arg(0), f.entry->arg(0), Type::int_reg());
  Value* deep = rv::li(b, 7);
  auto* outer = b.create("rv_scf.for", {rv::li(b, 0), rv::li(b, 4), rv::li(b, 1)}, {}, {}, 1);
  Block* ob = outer->region().add_block();
  ob->add_arg(Type::int_reg());
  Builder ib(ob);
  Value* local = rv::binary(ib, "rv.add", base, base, Type::int_reg());
  rv::binary(ib, "rv.add", local, local, Type::int_reg());
  auto* inner = ib.create("rv_scf.for", {rv::li(ib, 0), rv::li(ib, 2), rv::li(ib, 1)}, {}, {}, 1);
  Block* inb = inner->region().add_block();
  inb->add_arg(Type::int_reg());
  Builder iib(inb);
  rv::binary(iib, "rv.add", deep, ob->arg(0), Type::int_reg());
  iib.create("rv_scf.yield", {}, {});
  ib.create("rv_scf.yield", {}, {});
  b.create("rv_func.return", {}, {});
  REQUIRE(ir::verify(*f.module).ok());

  auto live = regalloc::loop_live_ins(*f.func);
  auto has = [&](const Operation* loop, const Value* v) {
    const auto& l = live[&loop->region()];
    return std::find(l.begin(), l.end(), v) != l.end();
  };
  CHECK(has(outer, base));
  CHECK_FALSE(has(outer, local));
  CHECK(has(outer, deep));
  CHECK(has(inner, deep));
  CHECK(has(inner, ob->arg(0)));
  CHECK_FALSE(has(outer, ob->arg(0)));
}

TEST_CASE("a long chain with one live value reuses a single register") {
  auto f = make_func();
  Builder b(f.entry);
  Value* v = rv::li(b, 1);
  for (int i = 0; i < 40; ++i) v = rv::unary(b, "rv.mv", v, Type::int_reg());
  b.create("rv.fsd", {rv::unary(b, "rv.fcvt_d_w", v, Type::float_reg()), v}, {}, {{"immediate", ir::Attribute(int64_t{0})}});
  b.create("rv_func.return", {}, {});
  auto rep = regalloc::allocate_function(*f.func);
  CHECK(rep.int_used == 1);
  CHECK(rep.fp_used == 1);
}

TEST_CASE("21 simultaneously live FP values exhaust the pool") {
  auto f = make_func();
  Builder b(f.entry);
  Value* zero = rv::li(b, 0);
  std::vector<Value*> vs;
  for (int i = 0; i < 21; ++i) vs.push_back(rv::unary(b, "rv.fcvt_d_w", zero, Type::float_reg()));
  Value* acc = vs[0];
  for (int i = 1; i < 21; ++i) acc = rv::binary(b, "rv.fadd_d", acc, vs[static_cast<size_t>(i)], Type::float_reg());
  b.create("rv.fsd", {acc, zero}, {}, {{"immediate", ir::Attribute(int64_t{0})}});
  b.create("rv_func.return", {}, {});
  CHECK_THROWS_AS(regalloc::allocate_function(*f.func), OutOfRegisters);
}

TEST_CASE("20 simultaneously live FP values fit") {
  auto f = make_func();
  Builder b(f.entry);
  Value* zero = rv::li(b, 0);
  std::vector<Value*> vs;
  for (int i = 0; i < 20; ++i) vs.push_back(rv::unary(b, "rv.fcvt_d_w", zero, Type::float_reg()));
  Value* acc = vs[0];
  for (int i = 1; i < 20; ++i) acc = rv::binary(b, "rv.fadd_d", acc, vs[static_cast<size_t>(i)], Type::float_reg());
  b.create("rv.fsd", {acc, zero}, {}, {{"immediate", ir::Attribute(int64_t{0})}});
  b.create("rv_func.return", {}, {});
  auto rep = regalloc::allocate_function(*f.func);
  CHECK(rep.fp_used == 20);
  CHECK(conflicts(*f.func).empty());
}

TEST_CASE("allocation of random structured IR is conflict-free, coherent and deterministic") {
  int allocated = 0, exhausted = 0;
  for (uint32_t seed = 1; allocated < 1000 && seed < 3000; ++seed) {
    CAPTURE(seed);
    auto f = oracle::random_function(seed);
    REQUIRE(ir::verify(*f.module).ok());
    size_t before = op_count(*f.module);
    try {
      regalloc::allocate_function(*f.func);
    } catch (const OutOfRegisters&) {
      ++exhausted;
      continue;
    }
    ++allocated;
    CHECK(op_count(*f.module) == before);
    CHECK(all_allocated(*f.func));
    auto bad = conflicts(*f.func);
    CHECK_MESSAGE(bad.empty(), (bad.empty() ? std::string() : bad.front() + "\n" + ir::print(*f.module)));

    auto incoherent = oracle::coherence_violations(*f.func);
    CHECK_MESSAGE(incoherent.empty(), (incoherent.empty() ? std::string() : incoherent.front()));

    auto again = oracle::random_function(seed);
    regalloc::allocate_function(*again.func);
    CHECK(ir::print(*again.module) == ir::print(*f.module));
  }
  CHECK(allocated >= 1000);
  MESSAGE("random functions allocated: " << allocated << ", out of registers: " << exhausted);
}
