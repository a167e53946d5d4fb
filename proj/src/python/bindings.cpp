#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ukc/diagnostics.hpp"
#include "ukc/driver/driver.hpp"
#include "ukc/ir/text.hpp"
#include "ukc/ir/verifier.hpp"

namespace py = pybind11;
using namespace ukc;

namespace {

kernels::KernelSpec make_spec(const std::string& kernel, int64_t n, int64_t m, int64_t k, const std::string& dtype) {
  auto kind = kernels::parse_kind(kernel);
  if (!kind) throw py::value_error("unknown kernel '" + kernel + "'");
  auto dt = kernels::parse_dtype(dtype);
  if (!dt) throw py::value_error("unknown dtype '" + dtype + "'");
  return {*kind, n, m, k, *dt};
}

transforms::PipelineConfig make_config(bool streams, bool scalar_replacement, bool frep, bool fuse_fill,
                                       bool unroll_and_jam, std::optional<int64_t> unroll_factor) {
  return {streams, scalar_replacement, frep, fuse_fill, unroll_and_jam, unroll_factor};
}

py::dict metrics_dict(const sim::Metrics& m) {
  py::dict d;
  d["cycles"] = m.cycles;
  d["instructions"] = m.instructions;
  d["flops"] = m.flops;
  d["fpu_busy_cycles"] = m.fpu_busy_cycles;
  d["loads"] = m.loads;
  d["stores"] = m.stores;
  d["fmadd"] = m.fmadd;
  d["frep_launches"] = m.frep_launches;
  d["ssr_elements"] = m.ssr_elements;
  d["ssr_accesses"] = m.ssr_accesses;
  d["throughput"] = m.throughput();
  d["fpu_utilization"] = m.fpu_utilization();
  return d;
}

py::dict registers_dict(const regalloc::AllocationReport& r) {
  py::dict d;
  d["function"] = r.function;
  d["fp_used"] = r.fp_used;
  d["fp_pool"] = r.fp_pool;
  d["int_used"] = r.int_used;
  d["int_pool"] = r.int_pool;
  d["fp_regs"] = r.fp_regs;
  d["int_regs"] = r.int_regs;
  return d;
}

py::dict record_dict(const driver::RunRecord& r) {
  py::dict d;
  d["kernel"] = r.spec.label();
  d["stages"] = r.config.str();
  d["status"] = driver::status_name(r.status);
  d["ok"] = r.ok();
  d["message"] = r.message;
  d["mismatches"] = r.mismatches;
  d["static_freps"] = r.static_freps;
  d["metrics"] = metrics_dict(r.metrics);
  d["registers"] = registers_dict(r.registers);
  d["csv"] = driver::csv_row(r);
  if (!r.trace.empty()) d["trace"] = r.trace;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ukc, m) {
  m.doc() = "Micro-kernel compiler for a Snitch-like RISC-V core, with its cycle-level simulator";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  auto compile_error = py::register_exception<CompileError>(m, "CompileError", base.ptr());
  py::register_exception<OutOfRegisters>(m, "OutOfRegisters", compile_error.ptr());
  py::register_exception<SimError>(m, "SimError", base.ptr());

  m.def("kernels", [] {
    std::vector<std::string> names;
    for (auto k : kernels::all_kinds()) names.push_back(kernels::kind_name(k));
    return names;
  });

  m.def("flop_count",
        [](const std::string& kernel, int64_t n, int64_t m, int64_t k, const std::string& dtype) {
          return kernels::flop_count(make_spec(kernel, n, m, k, dtype));
        },
        py::arg("kernel"), py::arg("n"), py::arg("m"), py::arg("k") = 1, py::arg("dtype") = "f64");

  m.def("compile",
        [](const std::string& kernel, int64_t n, int64_t m, int64_t k, const std::string& dtype, bool streams,
           bool scalar_replacement, bool frep, bool fuse_fill, bool unroll_and_jam,
           std::optional<int64_t> unroll_factor) {
          auto spec = make_spec(kernel, n, m, k, dtype);
          kernels::validate(spec);
          auto c = driver::compile(
              spec, make_config(streams, scalar_replacement, frep, fuse_fill, unroll_and_jam, unroll_factor));
          py::dict d;
          d["assembly"] = c.assembly;
          d["symbol"] = c.symbol;
          d["registers"] = registers_dict(c.registers);
          d["static_freps"] = driver::count_freps(c.assembly);
          return d;
        },
        "Compile one kernel and return its assembly and register report.", py::arg("kernel"), py::arg("n"),
        py::arg("m"), py::arg("k") = 1, py::arg("dtype") = "f64", py::kw_only(), py::arg("streams") = true,
        py::arg("scalar_replacement") = true, py::arg("frep") = true, py::arg("fuse_fill") = true,
        py::arg("unroll_and_jam") = true, py::arg("unroll_factor") = py::none());

  m.def("run",
        [](const std::string& kernel, int64_t n, int64_t m, int64_t k, const std::string& dtype, uint64_t seed,
           bool trace, bool streams, bool scalar_replacement, bool frep, bool fuse_fill, bool unroll_and_jam,
           std::optional<int64_t> unroll_factor) {
          driver::RunSettings s;
          s.seed = seed;
          s.trace = trace;
          auto spec = make_spec(kernel, n, m, k, dtype);
          auto config = make_config(streams, scalar_replacement, frep, fuse_fill, unroll_and_jam, unroll_factor);
          driver::RunRecord r;
          {
            py::gil_scoped_release release;
            r = driver::run(spec, config, s);
          }
          return record_dict(r);
        },
        "Compile, simulate and validate one kernel against the reference.", py::arg("kernel"), py::arg("n"),
        py::arg("m"), py::arg("k") = 1, py::arg("dtype") = "f64", py::kw_only(), py::arg("seed") = 1,
        py::arg("trace") = false, py::arg("streams") = true, py::arg("scalar_replacement") = true,
        py::arg("frep") = true, py::arg("fuse_fill") = true, py::arg("unroll_and_jam") = true,
        py::arg("unroll_factor") = py::none());

  m.def("run_assembly",
        [](const std::string& assembly, const std::string& kernel, int64_t n, int64_t m, int64_t k,
           const std::string& dtype, uint64_t seed) {
          driver::RunSettings s;
          s.seed = seed;
          auto spec = make_spec(kernel, n, m, k, dtype);
          return record_dict(driver::run_assembly(spec, assembly, kernels::kind_name(spec.kind), s));
        },
        "Simulate existing assembly for a kernel shape and validate the output.", py::arg("assembly"),
        py::arg("kernel"), py::arg("n"), py::arg("m"), py::arg("k") = 1, py::arg("dtype") = "f64", py::kw_only(),
        py::arg("seed") = 1);

  m.def("ablate",
        [](const std::string& kernel, int64_t n, int64_t m, int64_t k, const std::string& dtype, uint64_t seed) {
          driver::RunSettings s;
          s.seed = seed;
          std::vector<driver::RunRecord> rows;
          auto spec = make_spec(kernel, n, m, k, dtype);
          {
            py::gil_scoped_release release;
            rows = driver::ablate(spec, s);
          }
          py::list out;
          for (const auto& r : rows) out.append(record_dict(r));
          return out;
        },
        "Run the six cumulative optimization stages.", py::arg("kernel"), py::arg("n"), py::arg("m"),
        py::arg("k") = 1, py::arg("dtype") = "f64", py::kw_only(), py::arg("seed") = 1);

  m.def("suite",
        [](const std::string& name) {
          std::vector<kernels::KernelSpec> specs;
          try {
            specs = driver::suite(name);
          } catch (const std::invalid_argument& e) {
            throw py::value_error(e.what());
          }
          py::list out;
          for (const auto& s : specs)
            out.append(py::make_tuple(kernels::kind_name(s.kind), s.n, s.m, s.k, kernels::dtype_name(s.dtype)));
          return out;
        },
        "Shapes of a named sweep as (kernel, n, m, k, dtype) tuples.", py::arg("name"));
  m.def("suite_names", &driver::suite_names);
  m.def("csv_header", &driver::csv_header);

  m.def("roundtrip",
        [](const std::string& text) {
          auto module = ir::parse(text);
          auto report = ir::verify(*module);
          if (!report.ok()) throw CompileError(report.str());
          return ir::print(*module);
        },
        "Parse, verify and print an IR module.", py::arg("text"));
}
