#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "ukc/diagnostics.hpp"
#include "ukc/ir/pass.hpp"
#include "ukc/ir/text.hpp"
#include "ukc/ir/verifier.hpp"

using namespace ukc;
using namespace ukc::ir;

using oracle::read_data;

TEST_CASE("affine expressions linearize and print") {
  auto e = AffineExpr::dim(0) * AffineExpr::constant(5) + AffineExpr::dim(2);
  CHECK(e.str() == "d0 * 5 + d2");
  auto lin = linearize(e, 3);
  REQUIRE(lin);
  CHECK(lin->coefficients == std::vector<int64_t>{5, 0, 1});
  CHECK(e.eval({2, 7, 3}) == 13);
  CHECK_FALSE(linearize(AffineExpr::mod(AffineExpr::dim(0), AffineExpr::constant(2)), 1));
  auto nested = (AffineExpr::dim(0) + AffineExpr::dim(1)) * AffineExpr::constant(3);
  CHECK(nested.str() == "(d0 + d1) * 3");
}

TEST_CASE("parse a single constant op") {
  auto m = parse(R"("arith.constant" {value = 0.0} : f64)");
  REQUIRE(m->is("builtin.module"));
  auto ops = m->body().ops();
  REQUIRE(ops.size() == 1);
  CHECK(ops[0]->is("arith.constant"));
  CHECK(ops[0]->attr("value").as_float() == 0.0);
  CHECK(ops[0]->result()->type() == Type::f64());
  CHECK(verify(*m).ok());
}

TEST_CASE("empty module verifies") {
  auto m = make_module();
  CHECK(verify(*m).ok());
}

TEST_CASE("hand-written listings round-trip") {
  for (const auto& file : oracle::listing_names()) {
    CAPTURE(file);
    auto m = parse(read_data(file));
    auto report = verify(*m);
    CHECK_MESSAGE(report.ok(), report.str());
    std::string printed = print(*m);
    auto again = parse(printed);
    CHECK(structurally_equal(*m, *again));
    CHECK(print(*again) == printed);
  }
}

TEST_CASE("scheduled vector-matrix generic carries bounds [1, 200, 5]") {
  auto m = parse(read_data("vecmat_memref_stream.ir"));
  auto generics = collect(m.get(), "memref_stream.generic");
  REQUIRE(generics.size() == 1);
  CHECK(generics[0]->attr("bounds").as_ints() == std::vector<int64_t>{1, 200, 5});
  auto regions = collect(m.get(), "memref_stream.streaming_region");
  REQUIRE(regions.size() == 1);
  const auto& sp = regions[0]->attr("patterns").as_array()[1].as_opaque();
  CHECK(sp.get("index_map")->as_map().str() == "affine_map<(d0, d1, d2) -> (d0 * 5 + d2, d1)>");
}

TEST_CASE("parse errors report the offending position") {
  SUBCASE("unterminated region") {
    try {
      parse("builtin.module() ({\n  func.func() {sym_name = \"f\"} ({\n    func.return()\n  )\n})");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
      CHECK(e.column() == 3);
    }
  }
  SUBCASE("unknown dialect") { CHECK_THROWS_AS(parse("foo.bar()"), ParseError); }
  SUBCASE("unknown op of a known dialect") {
    CHECK_THROWS_WITH_AS(parse("rv.frobnicate()"), doctest::Contains("unknown operation"), ParseError);
  }
  SUBCASE("undefined value") { CHECK_THROWS_AS(parse("rv.mv(%a) : !rv.reg"), ParseError); }
  SUBCASE("type mismatch in functional form") {
    CHECK_THROWS_WITH_AS(parse("%a = rv.li() {immediate = 1} : !rv.reg\n%b = rv.mv(%a) : (!rv.freg) -> !rv.reg"),
                         doctest::Contains("type mismatch"), ParseError);
  }
}

TEST_CASE("dominance violations are reported") {
  auto m = make_module();
  Builder b(&m->body());
  auto* li = b.create("rv.li", {}, {Type::int_reg()}, {{"immediate", Attribute(1)}});
  b.create("rv.mv", {li->result()}, {Type::int_reg()});
  li->move_to_end(&m->body());
  auto report = verify(*m);
  REQUIRE_FALSE(report.ok());
  CHECK(report.str().find("dominance") != std::string::npos);
}

TEST_CASE("inner values are not visible outside their region") {
  auto m = parse(R"(
    %lb = rv.li() {immediate = 0} : !rv.reg
    %ub = rv.li() {immediate = 4} : !rv.reg
    %st = rv.li() {immediate = 1} : !rv.reg
    rv_scf.for(%lb, %ub, %st) ({
    ^bb0(%i : !rv.reg):
      %x = rv.mv(%i) : !rv.reg
      rv_scf.yield()
    })
  )");
  CHECK(verify(*m).ok());
  auto loop = collect(m.get(), "rv_scf.for").front();
  auto* inner = loop->body().front();
  Builder b(&m->body());
  b.create("rv.mv", {inner->result()}, {Type::int_reg()});
  CHECK_FALSE(verify(*m).ok());
  m->body().back()->erase();
}

TEST_CASE("walks are deterministic and clones are structurally equal") {
  auto m = parse(read_data("matvec_rv_snitch.ir"));
  std::vector<std::string> a, b;
  walk(m.get(), [&](Operation* op) { a.push_back(op->name()); });
  walk(m.get(), [&](Operation* op) { b.push_back(op->name()); });
  CHECK(a == b);
  auto copy = clone(*m);
  CHECK(structurally_equal(*m, *copy));
  collect(copy.get(), "rv.li").front()->set_attr("immediate", Attribute(5));
  CHECK_FALSE(structurally_equal(*m, *copy));
}

TEST_CASE("replace all uses and erase") {
  auto m = parse(R"(
    %a = rv.li() {immediate = 1} : !rv.reg
    %b = rv.li() {immediate = 2} : !rv.reg
    %c = rv.add(%a, %a) : !rv.reg
  )");
  auto ops = m->body().ops();
  ops[0]->result()->replace_all_uses_with(ops[1]->result());
  CHECK_FALSE(ops[0]->result()->has_uses());
  CHECK(ops[1]->result()->num_uses() == 2);
  ops[0]->erase();
  CHECK(m->body().ops().size() == 2);
  CHECK_THROWS_AS(ops[1]->erase(), CompileError);
}

TEST_CASE("verifier enforces operation schemas") {
  auto m = parse(R"(%a = rv.li() : !rv.reg)");
  auto report = verify(*m);
  CHECK(report.str().find("missing required attribute 'immediate'") != std::string::npos);
  auto m2 = parse(R"(
    %a = rv.li() {immediate = 1} : !rv.reg
    %f = rv.fadd_d(%a, %a) : !rv.freg
  )");
  CHECK(verify(*m2).str().find("unexpected type") != std::string::npos);
}

TEST_CASE("frep body may only hold FP register operations") {
  auto m = parse(R"(
    %n = rv.li() {immediate = 3} : !rv.reg
    %p = rv.li() {immediate = 0} : !rv.reg
    %z = rv.fcvt_d_w(%p) : !rv.freg
    %r = rv_snitch.frep(%n, %z) : !rv.freg ({
    ^bb0(%acc : !rv.freg):
      %v = rv.fld(%p) {immediate = 0} : !rv.freg
      %s = rv.fadd_d(%acc, %v) : !rv.freg
      rv_snitch.frep_yield(%s)
    })
  )");
  auto report = verify(*m);
  REQUIRE_FALSE(report.ok());
  CHECK(report.str().find("only FP register and stream operations") != std::string::npos);
}

TEST_CASE("pipelines run passes in order and check required dialects") {
  auto m = parse(read_data("vecmat_linalg.ir"));
  auto before = print(*m);
  run_pipeline(*m, {});
  CHECK(print(*m) == before);

  std::vector<std::string> seen;
  Pass p1{"first", {"linalg"}, {}, {}, [&](Operation&) { seen.push_back("first"); }};
  Pass p2{"second", {}, {}, {}, [&](Operation&) { seen.push_back("second"); }};
  run_pipeline(*m, {p1, p2});
  CHECK(seen == std::vector<std::string>{"first", "second"});

  Pass needs_ms{"needs-memref-stream", {"memref_stream"}, {}, {}, [](Operation&) {}};
  CHECK_THROWS_WITH_AS(run_pipeline(*m, {needs_ms}), doctest::Contains("requires dialect"), CompileError);
}
