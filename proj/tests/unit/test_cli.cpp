#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ukc/driver/cli.hpp"
#include "ukc/driver/driver.hpp"

using namespace ukc::driver;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ukc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) v.push_back(l);
  return v;
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ukc_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("ablate prints the pinned CSV") {
  auto r = cli({"ablate", "--kernel", "matmul", "--n", "1", "--m", "5", "--k", "200"});
  REQUIRE(r.code == kExitOk);
  auto rows = lines(r.out);
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] ==
        "kernel,dtype,n,m,k,stages,cycles,flops,throughput,utilization,loads,stores,fmadd,frep,frep_static,"
        "fp_used,fp_pool,int_used,int_pool,status");
  CHECK(rows[0] == csv_header());
  CHECK(rows[1] == "matmul,f64,1,5,200,baseline,36077,2000,0.0554,0.0277,3000,1005,1000,0,0,3,20,12,15,ok");
  CHECK(rows[6] ==
        "matmul,f64,1,5,200,streams+scalar_replacement+frep+fuse_fill+unroll_and_jam,1038,2000,1.9268,0.9740,"
        "0,0,1000,1,1,8,20,7,15,ok");
  std::vector<std::string> loads;
  for (size_t i = 1; i < rows.size(); ++i) {
    std::istringstream ls(rows[i]);
    std::string field;
    for (int f = 0; f <= 10; ++f) std::getline(ls, field, ',');
    loads.push_back(field);
  }
  CHECK(loads == std::vector<std::string>{"3000", "1000", "5", "5", "0", "0"});
}

TEST_CASE("compile emits assembly and a register report") {
  auto r = cli({"compile", "--kernel", "matmul", "--n", "1", "--m", "5", "--k", "200"});
  REQUIRE(r.code == kExitOk);
  CHECK(count(r.out, "frep.o ") == 1);
  CHECK(count(r.out, "fld") == 0);
  CHECK(r.out.find(".globl matmul") != std::string::npos);
  CHECK(r.err.find("matmul: 8/20 FP, 7/15 integer registers") != std::string::npos);

  auto base = cli({"compile", "--kernel", "matmul", "--n", "1", "--m", "5", "--k", "200", "--no-streams",
                   "--no-scalar-replacement", "--no-frep", "--no-fuse-fill", "--no-unroll-and-jam"});
  REQUIRE(base.code == kExitOk);
  CHECK(count(base.out, "fld ") > 0);
  CHECK(count(base.out, "fsd ") > 0);
  CHECK(count(base.out, "frep.o") == 0);
  CHECK(count(base.out, "ssr.enable") == 0);

  auto asm_path = scratch("sum.s");
  auto csv_path = scratch("sum_regs.csv");
  auto f = cli({"compile", "--kernel", "sum", "--n", "4", "--m", "4", "--out", asm_path.string(), "--csv",
                csv_path.string()});
  REQUIRE(f.code == kExitOk);
  CHECK(f.out.empty());
  CHECK(slurp(asm_path).find("sum:") != std::string::npos);
  CHECK(slurp(csv_path) == "kernel,dtype,fp_used,fp_pool,int_used,int_pool\nsum,f64,3,20,7,15\n");
}

TEST_CASE("run summary and determinism") {
  auto a = cli({"run", "--kernel", "sum", "--n", "4", "--m", "4", "--seed", "7"});
  auto b = cli({"run", "--kernel", "sum", "--n", "4", "--m", "4", "--seed", "7"});
  REQUIRE(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out.find("status       ok") != std::string::npos);
  CHECK(a.out.find("cycles       41") != std::string::npos);
  CHECK(a.out.find("registers    3/20 FP, 7/15 integer") != std::string::npos);

  auto trace = scratch("sum.trace");
  auto t = cli({"run", "--kernel", "sum", "--n", "4", "--m", "4", "--trace", trace.string()});
  REQUIRE(t.code == kExitOk);
  auto tl = lines(slurp(trace));
  REQUIRE_FALSE(tl.empty());
  CHECK(tl.front().rfind("0 0x0 mv ", 0) == 0);
  CHECK(tl.back().find(" ret") != std::string::npos);
}

TEST_CASE("run validates external assembly") {
  auto c = cli({"compile", "--kernel", "sum", "--n", "4", "--m", "4"});
  REQUIRE(c.code == kExitOk);

  auto good = scratch("good.s");
  std::ofstream(good) << c.out;
  auto ok = cli({"run", "--kernel", "sum", "--n", "4", "--m", "4", "--asm", good.string()});
  CHECK(ok.code == kExitOk);

  // Wrong arithmetic: the result no longer matches the oracle.
  auto wrong = c.out;
  wrong.replace(wrong.find("fadd.d"), 6, "fsub.d");
  auto bad = scratch("bad.s");
  std::ofstream(bad) << wrong;
  auto mismatch = cli({"run", "--kernel", "sum", "--n", "4", "--m", "4", "--asm", bad.string()});
  CHECK(mismatch.code == kExitValidation);
  CHECK(mismatch.out.find("status       mismatch") != std::string::npos);

  // Assembly for a smaller shape leaves part of the output untouched.
  auto small = cli({"run", "--kernel", "sum", "--n", "4", "--m", "8", "--asm", good.string()});
  CHECK(small.code == kExitValidation);
  CHECK(small.err.find("16 output elements differ") != std::string::npos);

  // One repetition short: the streams under-run.
  auto shortened = c.out;
  auto frep = shortened.find("frep.o");
  auto li = shortened.rfind("li ", frep);
  REQUIRE(li != std::string::npos);
  auto comma = shortened.find(", ", li);
  shortened.replace(comma + 2, shortened.find('\n', comma) - comma - 2, "6");
  auto under = scratch("under.s");
  std::ofstream(under) << shortened;
  auto u = cli({"run", "--kernel", "sum", "--n", "4", "--m", "4", "--asm", under.string()});
  CHECK(u.code == kExitValidation);
  CHECK(u.out.find("status       sim_error") != std::string::npos);
  CHECK(u.err.find("under-run") != std::string::npos);
}

TEST_CASE("exit codes for usage and compile errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"compile", "--kernel", "matmul", "--n", "1", "--m", "5"}).code == kExitUsage);
  CHECK(cli({"compile", "--kernel", "nosuch", "--n", "1", "--m", "5"}).code == kExitUsage);
  CHECK(cli({"bench", "--suite", "nosuch"}).code == kExitUsage);
  CHECK(cli({"run", "--kernel", "sum", "--n", "4", "--m", "4", "--asm", "/nonexistent.s"}).code == kExitUsage);

  // f64-only kernel requested in f32.
  CHECK(cli({"compile", "--kernel", "conv", "--dtype", "f32", "--n", "4", "--m", "4"}).code == kExitCompile);
  // Baseline conv on a non-square shape runs out of integer registers.
  auto oor = cli({"run", "--kernel", "conv", "--n", "4", "--m", "8", "--no-streams", "--no-scalar-replacement",
                  "--no-frep", "--no-fuse-fill", "--no-unroll-and-jam"});
  CHECK(oor.code == kExitCompile);
  CHECK(oor.err.find("no free integer register") != std::string::npos);

  auto parse = scratch("broken.ir");
  std::ofstream(parse) << "builtin.module() ({\n  func.func(\n";
  CHECK(cli({"compile", parse.string()}).code == kExitCompile);

  auto help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("bench") != std::string::npos);
}

TEST_CASE("bench sweeps") {
  SUBCASE("single point") {
    auto r = cli({"bench", "--kernel", "relu", "--n", "4", "--m", "16", "--threads", "1"});
    REQUIRE(r.code == kExitOk);
    auto rows = lines(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rfind("relu,f64,4,16,,streams+", 0) == 0);
  }
  SUBCASE("grid with a shape that does not fit") {
    auto r = cli({"bench", "--kernel", "sum", "--n", "4,64", "--m", "8,512"});
    REQUIRE(r.code == kExitOk);
    CHECK(lines(r.out).size() == 1 + 3);
    CHECK(r.err.find("note: skipping sum_f64_64x512") != std::string::npos);
  }
  SUBCASE("thread count does not change the output") {
    auto one = cli({"bench", "--suite", "registers", "--threads", "1"});
    auto many = cli({"bench", "--suite", "registers", "--threads", "4"});
    REQUIRE(one.code == kExitOk);
    CHECK(one.out == many.out);
    CHECK(lines(one.out).size() == 1 + suite("registers").size());
  }
}
