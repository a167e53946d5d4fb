#include "ukc/driver/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ukc/diagnostics.hpp"

namespace ukc::driver {

using kernels::DType;
using kernels::KernelKind;
using kernels::KernelSpec;
using transforms::PipelineConfig;

Compiled compile(const KernelSpec& spec, const PipelineConfig& config) {
  Compiled c;
  c.module = kernels::build_kernel(spec);
  std::vector<regalloc::AllocationReport> reports;
  ir::run_pipeline(*c.module, transforms::schedule_passes(config, &reports));
  ir::run_pipeline(*c.module, transforms::finalize_passes());
  c.assembly = transforms::emit_assembly(*c.module);
  if (!reports.empty()) c.registers = reports.front();
  c.symbol = kernels::kind_name(spec.kind);
  return c;
}

int count_freps(const std::string& assembly) {
  std::istringstream in(assembly);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    auto p = line.find_first_not_of(" \t");
    if (p != std::string::npos && line.compare(p, 7, "frep.o ") == 0) ++n;
  }
  return n;
}

std::string status_name(Status s) {
  switch (s) {
    case Status::Ok: return "ok";
    case Status::Mismatch: return "mismatch";
    case Status::CompileError: return "compile_error";
    case Status::SimError: return "sim_error";
  }
  return "?";
}

RunRecord run(const KernelSpec& spec, const PipelineConfig& config, const RunSettings& settings) {
  RunRecord r;
  r.spec = spec;
  r.config = config;
  Compiled c;
  try {
    c = compile(spec, config);
  } catch (const Error& e) {
    r.status = Status::CompileError;
    r.message = e.what();
    return r;
  }
  r = run_assembly(spec, c.assembly, c.symbol, settings);
  r.config = config;
  r.registers = c.registers;
  return r;
}

RunRecord run_assembly(const KernelSpec& spec, const std::string& assembly, const std::string& symbol,
                       const RunSettings& settings) {
  RunRecord r;
  r.spec = spec;
  r.static_freps = count_freps(assembly);
  auto data = kernels::generate_inputs(spec, settings.seed);
  auto expected = kernels::compute_reference(spec, data);
  try {
    auto res = sim::run_kernel(assembly, symbol, spec, data, {settings.timing, settings.trace});
    r.metrics = res.metrics;
    r.trace = std::move(res.trace);
  } catch (const Error& e) {
    r.status = Status::SimError;
    r.message = e.what();
    return r;
  }

  auto args = kernels::arguments(spec);
  size_t buf = 0;
  for (const auto& a : args) {
    if (!a.is_buffer) continue;
    if (a.is_output) {
      const auto& got = data.buffers[buf];
      for (size_t i = 0; i < expected.size(); ++i)
        if (std::memcmp(&got[i], &expected[i], sizeof(double)) != 0) ++r.mismatches;
    }
    ++buf;
  }
  if (r.mismatches) {
    r.status = Status::Mismatch;
    r.message = std::to_string(r.mismatches) + " output elements differ from the reference";
  }
  return r;
}

std::vector<RunRecord> ablate(const KernelSpec& spec, const RunSettings& settings) {
  std::vector<std::pair<KernelSpec, PipelineConfig>> jobs;
  for (const auto& st : transforms::cumulative_stages()) jobs.emplace_back(spec, st.config);
  return run_all(jobs, settings, 1);
}

unsigned thread_count() {
  if (const char* env = std::getenv("UKC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

std::vector<RunRecord> run_all(const std::vector<std::pair<KernelSpec, PipelineConfig>>& jobs,
                               const RunSettings& settings, unsigned threads) {
  std::vector<RunRecord> out(jobs.size());
  if (threads == 0) threads = thread_count();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < jobs.size();) out[i] = run(jobs[i].first, jobs[i].second, settings);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

namespace {

bool fits(const KernelSpec& s) {
  try {
    kernels::validate(s);
    return true;
  } catch (const CompileError&) {
    return false;
  }
}

}  // namespace

int64_t largest_fitting_m(KernelKind kind, DType dtype, int64_t n, int64_t k) {
  int64_t best = 0;
  for (int64_t m = 4;; m += 4) {
    KernelSpec s{kind, n, m, k, dtype};
    if (kernels::footprint_bytes(s) > kernels::kTcdmBytes) break;
    best = m;
  }
  return best;
}

std::vector<std::string> suite_names() { return {"registers", "f32", "f64", "matmul", "matrix"}; }

std::vector<KernelSpec> suite(const std::string& name) {
  std::vector<KernelSpec> out;
  auto add = [&](const KernelSpec& s) {
    if (fits(s)) out.push_back(s);
  };
  if (name == "registers") {
    out = kernels::register_shapes();
  } else if (name == "f32") {
    for (auto kind : {KernelKind::Sum, KernelKind::ReLU})
      for (int64_t m : {8, 16, 32, 64, 128, 256, 512}) add({kind, 4, m, 1, DType::F32});
    for (int64_t k : {16, 32, 64, 128, 256}) add({KernelKind::MatMulT, 4, 16, k, DType::F32});
  } else if (name == "f64") {
    for (auto kind : {KernelKind::Fill, KernelKind::Sum, KernelKind::ReLU, KernelKind::Conv3x3,
                      KernelKind::MaxPool3x3, KernelKind::SumPool3x3})
      for (int64_t n : {4, 8, 16})
        for (int64_t m : {4, 8, 16, 32, 64, 128, 256}) add({kind, n, m, 1, DType::F64});
  } else if (name == "matmul") {
    for (int64_t m : {4, 8, 16, 32, 64, 128, 256})
      for (int64_t k : {4, 8, 16, 32, 64, 128, 256}) add({KernelKind::MatMul, 1, m, k, DType::F64});
  } else if (name == "matrix") {
    auto seen = [&](const KernelSpec& s) {
      return std::any_of(out.begin(), out.end(), [&](const KernelSpec& o) {
        return o.kind == s.kind && o.dtype == s.dtype && o.n == s.n && o.m == s.m && o.k == s.k;
      });
    };
    auto add_new = [&](const KernelSpec& s) {
      if (fits(s) && !seen(s)) out.push_back(s);
    };
    for (const auto& s : kernels::register_shapes()) add_new(s);
    for (auto kind : kernels::all_kinds())
      for (auto dtype : {DType::F64, DType::F32}) {
        KernelSpec probe{kind, 1, 1, 1, dtype};
        for (int64_t n : {1, 2, 4, 8})
          for (int64_t m : {1, 3, 4, 8, 16, 24})
            for (int64_t k : {1, 4, 8, 16}) {
              if (!probe.has_k() && k != 1) continue;
              add_new({kind, n, m, k, dtype});
            }
        int64_t k = probe.has_k() ? 16 : 1;
        add_new({kind, 4, largest_fitting_m(kind, dtype, 4, k), k, dtype});
      }
  } else {
    throw std::invalid_argument("unknown suite '" + name + "'");
  }
  return out;
}

std::string csv_header() {
  return "kernel,dtype,n,m,k,stages,cycles,flops,throughput,utilization,loads,stores,fmadd,frep,frep_static,"
         "fp_used,fp_pool,int_used,int_pool,status";
}

std::string csv_row(const RunRecord& r) {
  const auto& s = r.spec;
  const auto& m = r.metrics;
  char ratio[64];
  std::snprintf(ratio, sizeof ratio, "%.4f,%.4f", m.throughput(), m.fpu_utilization());
  std::ostringstream os;
  os << kernels::kind_name(s.kind) << ',' << kernels::dtype_name(s.dtype) << ',' << s.n << ',' << s.m << ','
     << (s.has_k() ? std::to_string(s.k) : std::string()) << ',' << r.config.str() << ',' << m.cycles << ','
     << m.flops << ',' << ratio << ',' << m.loads << ',' << m.stores << ',' << m.fmadd << ',' << m.frep_launches
     << ',' << r.static_freps << ',' << r.registers.fp_used << ',' << r.registers.fp_pool << ','
     << r.registers.int_used << ',' << r.registers.int_pool << ',' << status_name(r.status);
  return os.str();
}

}  // namespace ukc::driver
