#include "ukc/transforms/schedule.hpp"


namespace ukc::transforms {

std::string PipelineConfig::str() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += "+";
    s += name;
  };
  add(streams, "streams");
  add(scalar_replacement, "scalar_replacement");
  add(frep, "frep");
  add(fuse_fill, "fuse_fill");
  add(unroll_and_jam, "unroll_and_jam");
  if (unroll_factor_override) s += "(u=" + std::to_string(*unroll_factor_override) + ")";
  return s.empty() ? "baseline" : s;
}

std::vector<Stage> cumulative_stages() {
  std::vector<Stage> stages;
  PipelineConfig c = PipelineConfig::baseline();
  stages.push_back({"Baseline", c});
  c.streams = true;
  stages.push_back({"+Streams", c});
  c.scalar_replacement = true;
  stages.push_back({"+Scalar Replacement", c});
  c.frep = true;
  stages.push_back({"+FRep", c});
  c.fuse_fill = true;
  stages.push_back({"+Fuse Fill", c});
  c.unroll_and_jam = true;
  stages.push_back({"+Unroll-and-Jam", c});
  return stages;
}

std::vector<ir::Pass> generic_passes(const PipelineConfig& config) {
  std::vector<ir::Pass> passes;
  passes.push_back({"ingest-generic", {"linalg"}, {"linalg"}, {"memref_stream"}, ingest_generic});
  passes.push_back({"pack-f32-lanes", {}, {}, {}, pack_f32_lanes});
  if (config.scalar_replacement) passes.push_back({"scalar-replacement", {}, {}, {}, apply_scalar_replacement});
  if (config.fuse_fill) passes.push_back({"fuse-fill", {}, {}, {}, apply_fuse_fill});
  if (config.unroll_and_jam) {
    auto factor = config.unroll_factor_override;
    passes.push_back({"unroll-and-jam", {}, {}, {}, [factor](ir::Operation& m) { apply_unroll_and_jam(m, factor); }});
  }
  if (config.streams) passes.push_back({"streamify", {}, {}, {}, streamify});
  return passes;
}

std::vector<ir::Pass> schedule_passes(const PipelineConfig& config, std::vector<regalloc::AllocationReport>* reports) {
  auto passes = generic_passes(config);
  passes.push_back({"lower-to-loops", {"memref_stream"}, {"func", "memref_stream"}, {"rv", "rv_scf"}, lower_to_loops});
  if (config.frep) passes.push_back({"convert-inner-loop-to-frep", {}, {}, {"rv_snitch"}, convert_inner_loop_to_frep});
  passes.push_back({"lower-streaming-region", {}, {"snitch_stream"}, {"rv_snitch"}, lower_streaming_region});
  passes.push_back({"allocate-registers", {"rv_func"}, {}, {}, [reports](ir::Operation& m) {
                      auto r = regalloc::allocate_module(m);
                      if (reports) reports->insert(reports->end(), r.begin(), r.end());
                    }});
  return passes;
}

std::vector<ir::Pass> finalize_passes() {
  return {{"lower-rv-scf-to-rv-cf", {"rv_func"}, {"rv_scf"}, {"rv_cf"}, lower_rv_scf_to_rv_cf}};
}

}  // namespace ukc::transforms
