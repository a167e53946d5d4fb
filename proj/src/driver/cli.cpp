#include "ukc/driver/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ukc/diagnostics.hpp"
#include "ukc/driver/driver.hpp"
#include "ukc/ir/text.hpp"

namespace ukc::driver {

namespace {

struct Options {
  std::string kernel;
  std::vector<int64_t> n, m, k;
  std::string dtype = "f64";
  uint64_t seed = 1;
  std::string out, trace, csv, input, asm_file, suite_name;
  bool no_streams = false, no_scalar_replacement = false, no_frep = false, no_fuse_fill = false,
       no_unroll_and_jam = false;
  int64_t unroll_factor = 0;
  int threads = 0;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_spec_flags(CLI::App* cmd, Options& o, bool lists) {
  cmd->add_option("--kernel", o.kernel, "fill, sum, relu, conv3x3, maxpool3x3, sumpool3x3, matmul, matmult");
  if (lists) {
    cmd->add_option("--n", o.n, "rows (comma-separated list)")->delimiter(',');
    cmd->add_option("--m", o.m, "columns (comma-separated list)")->delimiter(',');
    cmd->add_option("--k", o.k, "inner dimension (comma-separated list)")->delimiter(',');
  } else {
    cmd->add_option("--n", o.n, "rows")->expected(1);
    cmd->add_option("--m", o.m, "columns")->expected(1);
    cmd->add_option("--k", o.k, "inner dimension of matmul / matmult")->expected(1);
  }
  cmd->add_option("--dtype", o.dtype, "f64 or f32")->check(CLI::IsMember({"f64", "f32"}));
}

void add_stage_flags(CLI::App* cmd, Options& o) {
  cmd->add_flag("--no-streams", o.no_streams, "disable stream semantic registers");
  cmd->add_flag("--no-scalar-replacement", o.no_scalar_replacement, "keep accumulators in memory");
  cmd->add_flag("--no-frep", o.no_frep, "do not use hardware loops");
  cmd->add_flag("--no-fuse-fill", o.no_fuse_fill, "keep the output fill as a separate loop");
  cmd->add_flag("--no-unroll-and-jam", o.no_unroll_and_jam, "do not interleave outer iterations");
  cmd->add_option("--unroll-factor", o.unroll_factor, "fixed unroll-and-jam factor")->check(CLI::PositiveNumber);
}

transforms::PipelineConfig config_of(const Options& o) {
  transforms::PipelineConfig c;
  c.streams = !o.no_streams;
  c.scalar_replacement = !o.no_scalar_replacement;
  c.frep = !o.no_frep;
  c.fuse_fill = !o.no_fuse_fill;
  c.unroll_and_jam = !o.no_unroll_and_jam;
  if (o.unroll_factor > 0) c.unroll_factor_override = o.unroll_factor;
  return c;
}

kernels::KernelKind kind_of(const Options& o) {
  if (o.kernel.empty()) throw UsageError("--kernel is required");
  auto kind = kernels::parse_kind(o.kernel);
  if (!kind) throw UsageError("unknown kernel '" + o.kernel + "'");
  return *kind;
}

std::vector<kernels::KernelSpec> specs_of(const Options& o) {
  auto kind = kind_of(o);
  if (o.n.empty() || o.m.empty()) throw UsageError("--n and --m are required");
  kernels::KernelSpec proto{kind, 1, 1, 1, *kernels::parse_dtype(o.dtype)};
  if (proto.has_k() && o.k.empty()) throw UsageError("--k is required for " + o.kernel);
  if (!proto.has_k() && !o.k.empty()) throw UsageError("--k does not apply to " + o.kernel);
  std::vector<int64_t> ks = proto.has_k() ? o.k : std::vector<int64_t>{1};
  std::vector<kernels::KernelSpec> out;
  for (auto n : o.n)
    for (auto m : o.m)
      for (auto k : ks) {
        auto s = proto;
        s.n = n;
        s.m = m;
        s.k = k;
        out.push_back(s);
      }
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Writes to --out when given, else to `out`.
void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty())
    out << text;
  else
    write_file(o.out, text);
}

std::string records_csv(const std::vector<RunRecord>& records) {
  std::string s = csv_header() + "\n";
  for (const auto& r : records) s += csv_row(r) + "\n";
  return s;
}

int exit_code(const std::vector<RunRecord>& records) {
  int code = kExitOk;
  for (const auto& r : records) {
    if (r.status == Status::CompileError) return kExitCompile;
    if (!r.ok()) code = kExitValidation;
  }
  return code;
}

void report_failures(const std::vector<RunRecord>& records, std::ostream& err) {
  for (const auto& r : records)
    if (!r.ok()) err << "error: " << r.spec.label() << " [" << r.config.str() << "]: " << r.message << "\n";
}

int cmd_compile(const Options& o, std::ostream& out, std::ostream& err) {
  std::string assembly;
  regalloc::AllocationReport rep;
  std::string kernel = o.kernel, dtype = o.dtype;
  if (!o.input.empty()) {
    if (!o.kernel.empty()) throw UsageError("give either an input file or --kernel, not both");
    auto module = ir::parse(read_file(o.input));
    std::vector<regalloc::AllocationReport> reports;
    ir::run_pipeline(*module, transforms::schedule_passes(config_of(o), &reports));
    ir::run_pipeline(*module, transforms::finalize_passes());
    assembly = transforms::emit_assembly(*module);
    if (!reports.empty()) rep = reports.front();
    kernel = rep.function;
    dtype = "";
  } else {
    auto specs = specs_of(o);
    auto c = compile(specs.front(), config_of(o));
    assembly = c.assembly;
    rep = c.registers;
    kernel = kernels::kind_name(specs.front().kind);
  }
  emit(o, out, assembly);
  err << rep.function << ": " << rep.fp_used << "/" << rep.fp_pool << " FP, " << rep.int_used << "/" << rep.int_pool
      << " integer registers\n";
  if (!o.csv.empty())
    write_file(o.csv, "kernel,dtype,fp_used,fp_pool,int_used,int_pool\n" + kernel + "," + dtype + "," +
                          std::to_string(rep.fp_used) + "," + std::to_string(rep.fp_pool) + "," +
                          std::to_string(rep.int_used) + "," + std::to_string(rep.int_pool) + "\n");
  return kExitOk;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  auto spec = specs_of(o).front();
  RunSettings settings;
  settings.seed = o.seed;
  settings.trace = !o.trace.empty();
  RunRecord r;
  if (o.asm_file.empty()) {
    r = run(spec, config_of(o), settings);
  } else {
    r = run_assembly(spec, read_file(o.asm_file), kernels::kind_name(spec.kind), settings);
    r.config = config_of(o);
  }
  if (!o.trace.empty()) write_file(o.trace, r.trace);
  if (!o.csv.empty()) write_file(o.csv, records_csv({r}));

  std::ostringstream s;
  const auto& m = r.metrics;
  s << "kernel       " << r.spec.label() << "\n"
    << "stages       " << r.config.str() << "\n"
    << "status       " << status_name(r.status) << "\n";
  if (r.status != Status::CompileError && r.status != Status::SimError) {
    s << "cycles       " << m.cycles << "\n"
      << "flops        " << m.flops << "\n"
      << std::fixed << std::setprecision(4) << "throughput   " << m.throughput() << "\n"
      << "utilization  " << m.fpu_utilization() << "\n"
      << "loads        " << m.loads << "\n"
      << "stores       " << m.stores << "\n"
      << "fmadd        " << m.fmadd << "\n"
      << "frep         " << m.frep_launches << " launched, " << r.static_freps << " in code\n";
    if (o.asm_file.empty())
      s << "registers    " << r.registers.fp_used << "/" << r.registers.fp_pool << " FP, " << r.registers.int_used
        << "/" << r.registers.int_pool << " integer\n";
  }
  emit(o, out, s.str());
  report_failures({r}, err);
  return exit_code({r});
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  auto spec = specs_of(o).front();
  RunSettings settings;
  settings.seed = o.seed;
  auto records = ablate(spec, settings);
  auto text = records_csv(records);
  emit(o, out, text);
  if (!o.csv.empty()) write_file(o.csv, text);
  report_failures(records, err);
  return exit_code(records);
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<kernels::KernelSpec> specs;
  if (!o.suite_name.empty()) {
    if (!o.kernel.empty()) throw UsageError("give either --suite or --kernel, not both");
    try {
      specs = suite(o.suite_name);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else {
    for (const auto& s : specs_of(o)) {
      try {
        kernels::validate(s);
        specs.push_back(s);
      } catch (const CompileError& e) {
        err << "note: skipping " << s.label() << ": " << e.what() << "\n";
      }
    }
  }
  std::vector<std::pair<kernels::KernelSpec, transforms::PipelineConfig>> jobs;
  for (const auto& s : specs) jobs.emplace_back(s, config_of(o));
  RunSettings settings;
  settings.seed = o.seed;
  auto records = run_all(jobs, settings, o.threads > 0 ? static_cast<unsigned>(o.threads) : 0);
  auto text = records_csv(records);
  emit(o, out, text);
  if (!o.csv.empty()) write_file(o.csv, text);
  report_failures(records, err);
  return exit_code(records);
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Micro-kernel compiler and Snitch core simulator", "ukc"};
  app.require_subcommand(1);
  Options o;

  auto* compile_cmd = app.add_subcommand("compile", "compile a kernel to assembly");
  compile_cmd->add_option("input", o.input, "IR file at the func / linalg level")->check(CLI::ExistingFile);
  add_spec_flags(compile_cmd, o, false);
  add_stage_flags(compile_cmd, o);
  compile_cmd->add_option("--out", o.out, "assembly output file (default: stdout)");
  compile_cmd->add_option("--csv", o.csv, "write the register report as CSV");

  auto* run_cmd = app.add_subcommand("run", "compile, simulate and validate one kernel");
  add_spec_flags(run_cmd, o, false);
  add_stage_flags(run_cmd, o);
  run_cmd->add_option("--asm", o.asm_file, "simulate this assembly file instead of compiling")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", o.seed, "input data seed");
  run_cmd->add_option("--out", o.out, "summary output file (default: stdout)");
  run_cmd->add_option("--trace", o.trace, "write an instruction trace to this file");
  run_cmd->add_option("--csv", o.csv, "write the run record as CSV");

  auto* ablate_cmd = app.add_subcommand("ablate", "run the six cumulative optimization stages");
  add_spec_flags(ablate_cmd, o, false);
  ablate_cmd->add_option("--seed", o.seed, "input data seed");
  ablate_cmd->add_option("--out", o.out, "CSV output file (default: stdout)");
  ablate_cmd->add_option("--csv", o.csv, "also write the CSV to this file");

  auto* bench_cmd = app.add_subcommand("bench", "sweep a grid of shapes");
  bench_cmd->add_option("--suite", o.suite_name, "registers, f32, f64, matmul or matrix");
  add_spec_flags(bench_cmd, o, true);
  add_stage_flags(bench_cmd, o);
  bench_cmd->add_option("--seed", o.seed, "input data seed");
  bench_cmd->add_option("--threads", o.threads, "parallel simulations (default: UKC_THREADS or all cores)");
  bench_cmd->add_option("--out", o.out, "CSV output file (default: stdout)");
  bench_cmd->add_option("--csv", o.csv, "also write the CSV to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e, out, err);
    err << "usage error: " << e.what() << "\nrun 'ukc --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(compile_cmd)) return cmd_compile(o, out, err);
    if (app.got_subcommand(run_cmd)) return cmd_run(o, out, err);
    if (app.got_subcommand(ablate_cmd)) return cmd_ablate(o, out, err);
    return cmd_bench(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << o.input << ":" << e.what() << "\n";
    return kExitCompile;
  } catch (const CompileError& e) {
    err << "error: " << e.what() << "\n";
    return kExitCompile;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace ukc::driver
