// Acceptance runner: one PASS/FAIL line per criterion. Exits 0 after
// evaluating every criterion; with --strict, exits 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include "oracles.hpp"
#include "ukc/diagnostics.hpp"
#include "ukc/driver/driver.hpp"
#include "ukc/ir/text.hpp"
#include "ukc/ir/verifier.hpp"
#include "ukc/regalloc/regalloc.hpp"

using namespace ukc;
using driver::RunRecord;
using kernels::DType;
using kernels::KernelKind;
using kernels::KernelSpec;
using transforms::PipelineConfig;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string join(const std::vector<int64_t>& v) {
  std::string s = "(";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + ")";
}

// Shared between criteria 1 and 4.
std::vector<RunRecord> matrix_records() {
  static std::vector<RunRecord> records = [] {
    std::vector<std::pair<KernelSpec, PipelineConfig>> jobs;
    for (const auto& spec : driver::suite("matrix"))
      for (const auto& stage : transforms::cumulative_stages()) jobs.emplace_back(spec, stage.config);
    return driver::run_all(jobs);
  }();
  return records;
}

std::string out_of_register_cases(const std::vector<RunRecord>& records) {
  std::map<std::string, int> by_stage;
  std::string first;
  for (const auto& r : records)
    if (r.status == driver::Status::CompileError && r.message.find("no free") != std::string::npos) {
      ++by_stage[r.config.str()];
      if (first.empty()) first = r.spec.label();
    }
  std::string s;
  for (const auto& [stage, n] : by_stage) s += (s.empty() ? "" : ", ") + std::to_string(n) + " at " + stage;
  return s.empty() ? "none" : s + " (first: " + first + ")";
}

Verdict functional() {
  auto records = matrix_records();
  int64_t exact = 0, mismatch = 0, sim_error = 0, compile_error = 0;
  for (const auto& r : records) {
    if (r.ok()) ++exact;
    if (r.status == driver::Status::Mismatch) ++mismatch;
    if (r.status == driver::Status::SimError) ++sim_error;
    if (r.status == driver::Status::CompileError) ++compile_error;
  }
  Verdict v;
  v.pass = exact == static_cast<int64_t>(records.size()) && records.size() >= 200;
  v.detail = std::to_string(exact) + "/" + std::to_string(records.size()) + " runs bit-exact; mismatches " +
             std::to_string(mismatch) + ", simulator errors " + std::to_string(sim_error) + ", compile errors " +
             std::to_string(compile_error) + "; out of registers: " + out_of_register_cases(records);
  return v;
}

std::vector<RunRecord> ablation() {
  static std::vector<RunRecord> rows = driver::ablate({KernelKind::MatMul, 1, 5, 200, DType::F64});
  return rows;
}

Verdict dynamic_counts() {
  std::vector<int64_t> loads, stores, fmadd, frep;
  bool ok = true;
  for (const auto& r : ablation()) {
    ok = ok && r.ok();
    loads.push_back(r.metrics.loads);
    stores.push_back(r.metrics.stores);
    fmadd.push_back(r.metrics.fmadd);
    frep.push_back(r.static_freps);
  }
  Verdict v;
  v.pass = ok && loads == std::vector<int64_t>{3000, 1000, 5, 5, 0, 0} &&
           stores == std::vector<int64_t>{1005, 1000, 5, 5, 0, 0} && fmadd == std::vector<int64_t>(6, 1000) &&
           frep == std::vector<int64_t>{0, 0, 0, 2, 1, 1};
  v.detail = "loads " + join(loads) + ", stores " + join(stores) + ", fmadd " + join(fmadd) + ", frep " + join(frep);
  return v;
}

Verdict cycles_and_occupancy() {
  auto rows = ablation();
  std::vector<int64_t> c;
  for (const auto& r : rows) c.push_back(r.metrics.cycles);
  double final_cycles = static_cast<double>(c[5]);
  double occupancy = rows[5].metrics.fpu_utilization();
  double speedup = static_cast<double>(c[0]) / final_cycles;
  bool ordered = c[0] > c[1] && c[1] > c[2] && c[2] >= c[3] && *std::min_element(c.begin(), c.end()) == c[5];
  Verdict v;
  v.pass = std::abs(final_cycles - 1115.0) <= 0.10 * 1115.0 && occupancy >= 0.85 &&
           std::abs(speedup - 36.0) <= 0.30 * 36.0 && ordered;
  v.detail = "cycles " + join(c) + "; final " + std::to_string(c[5]) + " (1115 +-10%), occupancy " +
             fmt("%.4f", occupancy) + " (>= 0.85), speedup " + fmt("%.2f", speedup) + "x (36x +-30%), ordering " +
             (ordered ? "holds" : "violated");
  return v;
}

Verdict register_counts() {
  const std::map<std::string, std::pair<int, int>> reference = {
      {"fill_f64_4x4", {3, 3}},       {"relu_f64_4x4", {3, 5}},       {"sum_f64_4x4", {3, 7}},
      {"maxpool3x3_f64_4x4", {7, 6}}, {"sumpool3x3_f64_4x4", {7, 6}}, {"conv3x3_f64_4x4", {8, 8}},
      {"matmul_f64_4x16x8", {8, 8}},  {"relu_f32_4x8", {3, 5}},       {"sum_f32_4x8", {3, 7}},
      {"matmult_f32_4x16x16", {11, 12}},
  };
  bool counts_ok = true;
  std::string counts;
  for (const auto& spec : kernels::register_shapes()) {
    auto c = driver::compile(spec, PipelineConfig{});
    const auto& r = c.registers;
    auto [fp, in] = reference.at(spec.label());
    bool exact = spec.kind == KernelKind::Fill || spec.kind == KernelKind::ReLU || spec.kind == KernelKind::Sum;
    int tol = exact ? 0 : 2;
    bool ok = std::abs(r.fp_used - fp) <= tol && std::abs(r.int_used - in) <= tol && r.fp_used <= r.fp_pool &&
              r.int_used <= r.int_pool && r.fp_pool == 20 && r.int_pool == 15;
    counts_ok = counts_ok && ok;
    counts += (counts.empty() ? "" : " ") + spec.label() + "=" + std::to_string(r.fp_used) + "/" +
              std::to_string(r.int_used) + (ok ? "" : "!");
  }
  auto records = matrix_records();
  int64_t oor = 0;
  for (const auto& r : records)
    if (r.status == driver::Status::CompileError && r.message.find("no free") != std::string::npos) ++oor;
  Verdict v;
  v.pass = counts_ok && oor == 0;
  v.detail = std::string("counts (fp/int) ") + (counts_ok ? "within tolerance" : "OUT of tolerance") + ": " + counts +
             "; out-of-register runs in the matrix: " + std::to_string(oor) + " (" + out_of_register_cases(records) +
             ")";
  return v;
}

double utilization(const KernelSpec& s) {
  auto r = driver::run(s, PipelineConfig{});
  if (!r.ok()) throw std::runtime_error(s.label() + ": " + r.message);
  return r.metrics.fpu_utilization();
}

Verdict utilization_targets() {
  Verdict v;
  double min_ew = 1.0, min_red = 1.0;
  std::string worst_ew, worst_red;
  for (int64_t n : {4, 8, 16}) {
    for (auto kind : {KernelKind::Sum, KernelKind::ReLU}) {
      KernelSpec s{kind, n, driver::largest_fitting_m(kind, DType::F64, n), 1, DType::F64};
      double u = utilization(s);
      if (u < min_ew) min_ew = u, worst_ew = s.label();
    }
    for (auto kind : {KernelKind::Conv3x3, KernelKind::MaxPool3x3, KernelKind::SumPool3x3}) {
      KernelSpec s{kind, n, driver::largest_fitting_m(kind, DType::F64, n), 1, DType::F64};
      double u = utilization(s);
      if (u < min_red) min_red = u, worst_red = s.label();
    }
  }
  for (auto kind : {KernelKind::Sum, KernelKind::ReLU}) {
    KernelSpec s{kind, 4, driver::largest_fitting_m(kind, DType::F32, 4), 1, DType::F32};
    double u = utilization(s);
    if (u < min_ew) min_ew = u, worst_ew = s.label();
  }
  // Monotonic in M for the element-wise kernels over both sweeps.
  std::vector<std::pair<KernelSpec, PipelineConfig>> jobs;
  for (const auto& name : {"f64", "f32"})
    for (const auto& s : driver::suite(name))
      if (s.kind == KernelKind::Fill || s.kind == KernelKind::Sum || s.kind == KernelKind::ReLU)
        jobs.emplace_back(s, PipelineConfig{});
  auto records = driver::run_all(jobs);
  std::map<std::tuple<int, int, int64_t>, std::vector<std::pair<int64_t, double>>> series;
  for (const auto& r : records)
    series[{static_cast<int>(r.spec.kind), static_cast<int>(r.spec.dtype), r.spec.n}].push_back(
        {r.spec.m, r.metrics.fpu_utilization()});
  int64_t drops = 0;
  for (auto& [key, pts] : series) {
    std::sort(pts.begin(), pts.end());
    for (size_t i = 1; i < pts.size(); ++i)
      if (pts[i].second < pts[i - 1].second) ++drops;
  }
  v.pass = min_ew >= 0.90 && min_red >= 0.70 && drops == 0;
  v.detail = "element-wise min " + fmt("%.4f", min_ew) + " at " + worst_ew + " (>= 0.90); reductions min " +
             fmt("%.4f", min_red) + " at " + worst_red + " (>= 0.70); decreases in M over " +
             std::to_string(series.size()) + " series: " + std::to_string(drops);
  return v;
}

Verdict matmul_throughput() {
  std::vector<std::pair<KernelSpec, PipelineConfig>> jobs;
  for (const auto& s : driver::suite("matmul")) jobs.emplace_back(s, PipelineConfig{});
  auto records = driver::run_all(jobs);
  double min_large = 4.0, corner = 0.0;
  std::string worst;
  int64_t large = 0;
  for (const auto& r : records) {
    if (!r.ok()) return {false, r.spec.label() + " failed: " + r.message};
    double tp = r.metrics.throughput();
    if (r.spec.m == 4 && r.spec.k == 4) corner = tp;
    if (std::min(r.spec.m, r.spec.k) >= 32) {
      ++large;
      if (tp < min_large) min_large = tp, worst = r.spec.label();
    }
  }
  Verdict v;
  v.pass = large > 0 && min_large >= 1.80 && corner < 1.6;
  v.detail = "min over " + std::to_string(large) + " shapes with M, K >= 32: " + fmt("%.4f", min_large) + " at " +
             worst + " (>= 1.80); 1x4x4 corner " + fmt("%.4f", corner) + " (< 1.6)";
  return v;
}

Verdict allocator_properties() {
  int64_t allocated = 0, exhausted = 0, conflicted = 0, incoherent = 0, nondeterministic = 0, grew = 0;
  for (uint32_t seed = 1; allocated < 1000 && seed < 5000; ++seed) {
    auto f = oracle::random_function(seed);
    size_t before = oracle::op_count(*f.module);
    try {
      regalloc::allocate_function(*f.func);
    } catch (const OutOfRegisters&) {
      ++exhausted;
      continue;
    }
    ++allocated;
    if (oracle::op_count(*f.module) != before || !oracle::all_allocated(*f.func)) ++grew;
    if (!oracle::conflicts(*f.func).empty()) ++conflicted;
    if (!oracle::coherence_violations(*f.func).empty()) ++incoherent;
    auto again = oracle::random_function(seed);
    regalloc::allocate_function(*again.func);
    if (ir::print(*again.module) != ir::print(*f.module)) ++nondeterministic;
  }
  Verdict v;
  v.pass = allocated >= 1000 && conflicted == 0 && incoherent == 0 && nondeterministic == 0 && grew == 0;
  v.detail = std::to_string(allocated) + " random functions allocated (" + std::to_string(exhausted) +
             " exhausted the pool); conflicts " + std::to_string(conflicted) + ", coherence violations " +
             std::to_string(incoherent) + ", nondeterministic " + std::to_string(nondeterministic) +
             ", ops added or unallocated " + std::to_string(grew);
  return v;
}

Verdict stream_patterns() {
  std::mt19937_64 rng(20240);
  int64_t total = 0, wrong = 0, collapsed = 0, folded = 0;
  for (int iter = 0; iter < 2000; ++iter) {
    auto p = oracle::random_pattern(rng, iter);
    auto c = snitch::canonicalize_pattern(p);
    ++total;
    if (oracle::enumerate_pattern(c) != oracle::enumerate_pattern(p)) ++wrong;
    if (c.rank() < p.rank()) ++collapsed;
    if (c.repeat > p.repeat) ++folded;
  }
  // Directed: contiguous collapse and repeat fold.
  snitch::StridePattern rowmajor;
  rowmajor.upper_bounds = {4, 5};
  rowmajor.strides = {40, 8};
  auto a = snitch::canonicalize_pattern(rowmajor);
  snitch::StridePattern broadcast;
  broadcast.upper_bounds = {1, 200, 5};
  broadcast.strides = {0, 8, 0};
  auto b = snitch::canonicalize_pattern(broadcast);
  bool directed = a.upper_bounds == std::vector<int64_t>{20} && a.strides == std::vector<int64_t>{8} &&
                  b.upper_bounds == std::vector<int64_t>{200} && b.strides == std::vector<int64_t>{8} &&
                  b.repeat == 5;
  Verdict v;
  v.pass = total >= 1000 && wrong == 0 && collapsed > 0 && folded > 0 && directed;
  v.detail = std::to_string(total) + " random patterns, " + std::to_string(wrong) + " sequence changes; " +
             std::to_string(collapsed) + " collapsed, " + std::to_string(folded) + " folded; directed cases " +
             (directed ? "hold" : "FAIL");
  return v;
}

Verdict ir_roundtrip() {
  int64_t modules = 0;
  std::vector<std::string> bad;
  for (const auto& name : oracle::listing_names()) {
    ++modules;
    try {
      auto m = ir::parse(oracle::read_data(name));
      auto text = ir::print(*m);
      auto again = ir::parse(text);
      if (!ir::verify(*m).ok() || !ir::structurally_equal(*m, *again) || ir::print(*again) != text)
        bad.push_back(name);
    } catch (const std::exception& e) {
      bad.push_back(name + ": " + e.what());
    }
  }
  int64_t pipelines = 0;
  for (const auto& spec : kernels::register_shapes())
    for (const auto& stage : transforms::cumulative_stages()) {
      ++pipelines;
      try {
        for (auto& msg : oracle::pipeline_roundtrip_failures(spec, stage.config)) bad.push_back(msg);
      } catch (const OutOfRegisters&) {
        // Counted under criteria 1 and 4.
      }
    }
  Verdict v;
  v.pass = bad.empty();
  v.detail = std::to_string(modules) + " listings and every intermediate module of " + std::to_string(pipelines) +
             " kernel pipelines; failures " + std::to_string(bad.size()) + (bad.empty() ? "" : " (first: " + bad[0] + ")");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  struct Criterion {
    const char* name;
    std::function<Verdict()> check;
  };
  std::vector<Criterion> criteria = {
      {"functional correctness over every kernel, shape and stage", functional},
      {"matmul 1x5x200 ablation dynamic counts", dynamic_counts},
      {"matmul 1x5x200 cycles, occupancy and speedup", cycles_and_occupancy},
      {"register counts and spill freedom", register_counts},
      {"FPU utilization targets", utilization_targets},
      {"f64 matmul throughput", matmul_throughput},
      {"register allocator properties", allocator_properties},
      {"stride pattern canonicalization", stream_patterns},
      {"IR print/parse round trip", ir_roundtrip},
  };
  auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s %zu. %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, v.detail.c_str());
    std::fflush(stdout);
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%zu criteria, %d failed, %.1f s\n", criteria.size(), failed, secs);
  return strict && failed ? 1 : 0;
}
