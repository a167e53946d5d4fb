#include <cstring>

#include "doctest.h"
#include "ukc/diagnostics.hpp"
#include "ukc/dialects/memref_stream.hpp"
#include "ukc/ir/text.hpp"
#include "ukc/kernels/kernels.hpp"
#include "ukc/sim/evaluate.hpp"
#include "ukc/transforms/schedule.hpp"

using namespace ukc;
using namespace ukc::kernels;
using namespace ukc::transforms;

namespace {

std::vector<KernelSpec> schedule_specs() {
  auto specs = register_shapes();
  specs.push_back({KernelKind::MatMul, 1, 5, 200});
  specs.push_back({KernelKind::MatMul, 3, 7, 5});
  specs.push_back({KernelKind::MatMulT, 3, 5, 7});
  specs.push_back({KernelKind::Conv3x3, 5, 7});
  specs.push_back({KernelKind::MaxPool3x3, 4, 8});
  specs.push_back({KernelKind::SumPool3x3, 8, 8});
  specs.push_back({KernelKind::Fill, 3, 5});
  specs.push_back({KernelKind::MatMulT, 2, 3, 6, DType::F32});
  return specs;
}

std::vector<PipelineConfig> configs() {
  std::vector<PipelineConfig> out;
  for (const auto& s : cumulative_stages()) out.push_back(s.config);
  // A few non-cumulative toggles.
  PipelineConfig c;
  c.streams = false;
  out.push_back(c);
  c = {};
  c.scalar_replacement = false;
  out.push_back(c);
  c = {};
  c.fuse_fill = false;
  out.push_back(c);
  c = {};
  c.unroll_factor_override = 3;
  out.push_back(c);
  return out;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("unroll factor policy") {
  CHECK(choose_unroll_factor(1) == 1);
  CHECK(choose_unroll_factor(3) == 3);
  CHECK(choose_unroll_factor(4) == 4);
  CHECK(choose_unroll_factor(5) == 5);
  CHECK(choose_unroll_factor(6) == 6);
  CHECK(choose_unroll_factor(16) == 4);
  CHECK(choose_unroll_factor(7) == 7);
  CHECK(choose_unroll_factor(11) == 4);
}

TEST_CASE("cumulative stages run from baseline to the full pipeline") {
  auto stages = cumulative_stages();
  REQUIRE(stages.size() == 6);
  CHECK(stages.front().config == PipelineConfig::baseline());
  CHECK(stages.back().config == PipelineConfig{});
  CHECK(PipelineConfig::baseline().str() == "baseline");
}

TEST_CASE("generic-level schedules preserve kernel semantics bit for bit") {
  for (const auto& spec : schedule_specs()) {
    for (const auto& config : configs()) {
      CAPTURE(spec.label());
      CAPTURE(config.str());
      auto m = build_kernel(spec);
      ir::run_pipeline(*m, generic_passes(config));
      auto data = generate_inputs(spec, 11);
      auto expected = compute_reference(spec, data);
      sim::evaluate(*m, data);
      CHECK(bit_equal(data.buffers.back(), expected));
    }
  }
}

TEST_CASE("full generic schedule shapes") {
  SUBCASE("matmul 4x16x8 interleaves the m dim by four with a fused init") {
    auto m = build_kernel({KernelKind::MatMul, 4, 16, 8});
    ir::run_pipeline(*m, generic_passes({}));
    auto gs = ir::collect(m.get(), "memref_stream.generic");
    REQUIRE(gs.size() == 1);
    ms::GenericView g(gs[0]);
    CHECK(g.bounds() == std::vector<int64_t>{4, 4, 8, 4});
    CHECK(g.num_inits() == 1);
    CHECK(ir::collect(m.get(), "memref_stream.streaming_region").size() == 1);
  }
  SUBCASE("matmul 1x5x200 takes the interleaved form [1, 200, 5]") {
    auto m = build_kernel({KernelKind::MatMul, 1, 5, 200});
    ir::run_pipeline(*m, generic_passes({}));
    auto gs = ir::collect(m.get(), "memref_stream.generic");
    REQUIRE(gs.size() == 1);
    ms::GenericView g(gs[0]);
    CHECK(g.bounds() == std::vector<int64_t>{1, 200, 5});
    CHECK(g.iterator_types() == std::vector<std::string>{"parallel", "reduction", "interleaved"});
    CHECK(g.map(1).str() == "affine_map<(d0, d1, d2) -> (d1, d2)>");
  }
  SUBCASE("pool 4x8 interleaves the n dim to avoid peeling") {
    auto m = build_kernel({KernelKind::MaxPool3x3, 4, 8});
    ir::run_pipeline(*m, generic_passes({}));
    auto gs = ir::collect(m.get(), "memref_stream.generic");
    REQUIRE(gs.size() == 1);
    CHECK(ms::GenericView(gs[0]).bounds() == std::vector<int64_t>{8, 3, 3, 4});
  }
  SUBCASE("an extent without a divisor in [4, 8] gets a remainder generic") {
    auto m = build_kernel({KernelKind::MatMul, 1, 11, 3});
    ir::run_pipeline(*m, generic_passes({}));
    auto gs = ir::collect(m.get(), "memref_stream.generic");
    REQUIRE(gs.size() == 2);
    CHECK(ms::GenericView(gs[0]).interleave_factor() == 4);
    CHECK(ms::GenericView(gs[1]).interleave_factor() == 3);
  }
  SUBCASE("f32 matmult becomes a packed lane-sum generic") {
    auto m = build_kernel({KernelKind::MatMulT, 4, 16, 16, DType::F32});
    ir::run_pipeline(*m, generic_passes({}));
    auto gs = ir::collect(m.get(), "memref_stream.generic");
    REQUIRE(gs.size() == 1);
    CHECK(gs[0]->has_attr("lane_sum"));
    CHECK(ir::collect(m.get(), "memref_stream.cast_packed").size() == 2);
  }
  SUBCASE("without scalar replacement the fill is not fused and outputs stay in memory") {
    PipelineConfig c;
    c.scalar_replacement = false;
    auto m = build_kernel({KernelKind::MatMul, 2, 4, 4});
    ir::run_pipeline(*m, generic_passes(c));
    CHECK(ir::collect(m.get(), "memref_stream.generic").size() == 2);
  }
}
