#include <algorithm>
#include <cctype>
#include <sstream>

#include "ukc/diagnostics.hpp"
#include "ukc/dialects/rv.hpp"
#include "ukc/sim/isa.hpp"

namespace ukc::sim {

namespace {

enum class Format {
  None,      // ret
  IntRRR,    // rd, rs1, rs2
  IntRRI,    // rd, rs1, imm
  IntRI,     // rd, imm
  IntRR,     // rd, rs
  Branch,    // rs1, rs2, label
  Jump,      // label
  FLoad,     // frd, imm(rs1)
  FStore,    // frs2, imm(rs1)
  FRR,       // frd, frs1
  FRRR,      // frd, frs1, frs2
  FRRRR,     // frd, frs1, frs2, frs3
  FRX,       // frd, rs1
  ScfgDim,   // stream, dim, rs1
  ScfgRep,   // stream, rs1
  ScfgBase,  // stream, rank, r|w, rs1
  Frep,      // rs1, count
};

struct Entry {
  Opcode op;
  Format format;
};

const std::map<std::string, Entry>& table() {
  static const std::map<std::string, Entry> t = {
      {"li", {Opcode::Li, Format::IntRI}},
      {"mv", {Opcode::Mv, Format::IntRR}},
      {"add", {Opcode::Add, Format::IntRRR}},
      {"sub", {Opcode::Sub, Format::IntRRR}},
      {"mul", {Opcode::Mul, Format::IntRRR}},
      {"addi", {Opcode::Addi, Format::IntRRI}},
      {"slli", {Opcode::Slli, Format::IntRRI}},
      {"blt", {Opcode::Blt, Format::Branch}},
      {"bge", {Opcode::Bge, Format::Branch}},
      {"bne", {Opcode::Bne, Format::Branch}},
      {"beq", {Opcode::Beq, Format::Branch}},
      {"j", {Opcode::J, Format::Jump}},
      {"ret", {Opcode::Ret, Format::None}},
      {"fld", {Opcode::Fld, Format::FLoad}},
      {"flw", {Opcode::Flw, Format::FLoad}},
      {"fsd", {Opcode::Fsd, Format::FStore}},
      {"fsw", {Opcode::Fsw, Format::FStore}},
      {"fadd.d", {Opcode::FaddD, Format::FRRR}},
      {"fsub.d", {Opcode::FsubD, Format::FRRR}},
      {"fmul.d", {Opcode::FmulD, Format::FRRR}},
      {"fmax.d", {Opcode::FmaxD, Format::FRRR}},
      {"fadd.s", {Opcode::FaddS, Format::FRRR}},
      {"fsub.s", {Opcode::FsubS, Format::FRRR}},
      {"fmul.s", {Opcode::FmulS, Format::FRRR}},
      {"fmax.s", {Opcode::FmaxS, Format::FRRR}},
      {"fmadd.d", {Opcode::FmaddD, Format::FRRRR}},
      {"fmadd.s", {Opcode::FmaddS, Format::FRRRR}},
      {"fmv.d", {Opcode::FmvD, Format::FRR}},
      {"fcvt.d.w", {Opcode::FcvtDW, Format::FRX}},
      {"fmv.d.x", {Opcode::FmvDX, Format::FRX}},
      {"vfadd.s", {Opcode::VfaddS, Format::FRRR}},
      {"vfmul.s", {Opcode::VfmulS, Format::FRRR}},
      {"vfmax.s", {Opcode::VfmaxS, Format::FRRR}},
      {"vfcpka.s.s", {Opcode::VfcpkaSS, Format::FRRR}},
      {"vfmac.s", {Opcode::VfmacS, Format::FRRR}},
      {"vfsum.s", {Opcode::VfsumS, Format::FRR}},
      {"scfg.bound", {Opcode::ScfgBound, Format::ScfgDim}},
      {"scfg.stride", {Opcode::ScfgStride, Format::ScfgDim}},
      {"scfg.rep", {Opcode::ScfgRep, Format::ScfgRep}},
      {"scfg.base", {Opcode::ScfgBase, Format::ScfgBase}},
      {"ssr.enable", {Opcode::SsrEnable, Format::None}},
      {"ssr.disable", {Opcode::SsrDisable, Format::None}},
      {"frep.o", {Opcode::FrepO, Format::Frep}},
  };
  return t;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class OperandParser {
 public:
  OperandParser(const std::string& mnemonic, const std::string& operands, int line) : mnemonic_(mnemonic), line_(line) {
    std::string cur;
    for (char c : operands) {
      if (c == ',') {
        items_.push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty() || !items_.empty()) items_.push_back(trim(cur));
  }

  void expect(size_t n) const {
    if (items_.size() != n)
      fail("expects " + std::to_string(n) + " operands, got " + std::to_string(items_.size()));
  }

  int xreg(size_t i) const {
    int r = rv::int_reg_number(items_[i]);
    if (r < 0) fail("'" + items_[i] + "' is not an integer register");
    return r;
  }
  int freg(size_t i) const {
    int r = rv::float_reg_number(items_[i]);
    if (r < 0) fail("'" + items_[i] + "' is not a floating-point register");
    return r;
  }
  int64_t imm(size_t i) const { return parse_int(items_[i]); }
  const std::string& raw(size_t i) const { return items_[i]; }

  /// "imm(reg)"
  std::pair<int64_t, int> memory(size_t i) const {
    const auto& s = items_[i];
    auto open = s.find('('), close = s.find(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      fail("'" + s + "' is not a memory operand imm(reg)");
    int64_t off = open == 0 ? 0 : parse_int(trim(s.substr(0, open)));
    std::string reg = trim(s.substr(open + 1, close - open - 1));
    int r = rv::int_reg_number(reg);
    if (r < 0) fail("'" + reg + "' is not an integer register");
    return {off, r};
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SimError("line " + std::to_string(line_) + ": " + mnemonic_ + " " + msg);
  }

 private:
  int64_t parse_int(const std::string& s) const {
    try {
      size_t used = 0;
      int64_t v = std::stoll(s, &used, 0);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail("'" + s + "' is not an integer");
    }
  }

  std::string mnemonic_;
  int line_;
  std::vector<std::string> items_;
};

}  // namespace

size_t Program::entry(const std::string& symbol) const {
  auto it = labels.find(symbol);
  if (it == labels.end()) throw SimError("undefined symbol '" + symbol + "'");
  return it->second;
}

Instr parse_instruction(const std::string& text, int line) {
  std::string t = trim(text);
  size_t sp = t.find_first_of(" \t");
  std::string mnemonic = t.substr(0, sp);
  std::string rest = sp == std::string::npos ? "" : t.substr(sp + 1);
  auto it = table().find(mnemonic);
  if (it == table().end()) throw SimError("line " + std::to_string(line) + ": unknown mnemonic '" + mnemonic + "'");

  Instr in;
  in.op = it->second.op;
  in.text = t;
  in.line = line;
  OperandParser p(mnemonic, rest, line);
  switch (it->second.format) {
    case Format::None:
      p.expect(0);
      break;
    case Format::IntRRR:
      p.expect(3);
      in.rd = p.xreg(0), in.rs1 = p.xreg(1), in.rs2 = p.xreg(2);
      break;
    case Format::IntRRI:
      p.expect(3);
      in.rd = p.xreg(0), in.rs1 = p.xreg(1), in.imm = p.imm(2);
      break;
    case Format::IntRI:
      p.expect(2);
      in.rd = p.xreg(0), in.imm = p.imm(1);
      break;
    case Format::IntRR:
      p.expect(2);
      in.rd = p.xreg(0), in.rs1 = p.xreg(1);
      break;
    case Format::Branch:
      p.expect(3);
      in.rs1 = p.xreg(0), in.rs2 = p.xreg(1), in.label = p.raw(2);
      break;
    case Format::Jump:
      p.expect(1);
      in.label = p.raw(0);
      break;
    case Format::FLoad: {
      p.expect(2);
      in.rd = p.freg(0);
      auto [off, base] = p.memory(1);
      in.imm = off, in.rs1 = base;
      break;
    }
    case Format::FStore: {
      p.expect(2);
      in.rs2 = p.freg(0);
      auto [off, base] = p.memory(1);
      in.imm = off, in.rs1 = base;
      break;
    }
    case Format::FRR:
      p.expect(2);
      in.rd = p.freg(0), in.rs1 = p.freg(1);
      break;
    case Format::FRRR:
      p.expect(3);
      in.rd = p.freg(0), in.rs1 = p.freg(1), in.rs2 = p.freg(2);
      break;
    case Format::FRRRR:
      p.expect(4);
      in.rd = p.freg(0), in.rs1 = p.freg(1), in.rs2 = p.freg(2), in.rs3 = p.freg(3);
      break;
    case Format::FRX:
      p.expect(2);
      in.rd = p.freg(0), in.rs1 = p.xreg(1);
      break;
    case Format::ScfgDim:
      p.expect(3);
      in.stream = static_cast<int>(p.imm(0)), in.dim = static_cast<int>(p.imm(1)), in.rs1 = p.xreg(2);
      break;
    case Format::ScfgRep:
      p.expect(2);
      in.stream = static_cast<int>(p.imm(0)), in.rs1 = p.xreg(1);
      break;
    case Format::ScfgBase: {
      p.expect(4);
      in.stream = static_cast<int>(p.imm(0)), in.rank = static_cast<int>(p.imm(1));
      const auto& dir = p.raw(2);
      if (dir != "r" && dir != "w") p.fail("direction must be r or w, got '" + dir + "'");
      in.write = dir == "w";
      in.rs1 = p.xreg(3);
      break;
    }
    case Format::Frep:
      p.expect(2);
      in.rs1 = p.xreg(0), in.imm = p.imm(1);
      break;
  }
  if ((in.op == Opcode::ScfgBound || in.op == Opcode::ScfgStride || in.op == Opcode::ScfgRep ||
       in.op == Opcode::ScfgBase) &&
      (in.stream < 0 || in.stream >= rv::kNumStreams))
    p.fail("stream " + std::to_string(in.stream) + " out of range");
  if ((in.op == Opcode::ScfgBound || in.op == Opcode::ScfgStride) && (in.dim < 0 || in.dim >= 4))
    p.fail("dimension " + std::to_string(in.dim) + " out of range");
  if (in.op == Opcode::ScfgBase && (in.rank < 1 || in.rank > 4)) p.fail("rank must be in [1, 4]");
  if (in.op == Opcode::FrepO && in.imm < 1) p.fail("body must hold at least one instruction");
  return in;
}

Program assemble(const std::string& text) {
  Program prog;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    auto hash = raw.find('#');
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.back() == ':') {
      std::string name = s.substr(0, s.size() - 1);
      if (name.empty() || name.find_first_of(" \t") != std::string::npos)
        throw SimError("line " + std::to_string(line) + ": malformed label '" + s + "'");
      if (!prog.labels.emplace(name, prog.instrs.size()).second)
        throw SimError("line " + std::to_string(line) + ": duplicate label '" + name + "'");
      continue;
    }
    if (s[0] == '.') {
      std::istringstream ds(s);
      std::string directive, arg;
      ds >> directive >> arg;
      if (directive == ".globl") {
        if (arg.empty()) throw SimError("line " + std::to_string(line) + ": .globl needs a symbol");
        prog.globals.push_back(arg);
      } else if (directive != ".text" && directive != ".p2align") {
        throw SimError("line " + std::to_string(line) + ": unsupported directive '" + directive + "'");
      }
      continue;
    }
    prog.instrs.push_back(parse_instruction(s, line));
  }
  for (auto& in : prog.instrs) {
    if (in.label.empty()) continue;
    auto it = prog.labels.find(in.label);
    if (it == prog.labels.end())
      throw SimError("line " + std::to_string(in.line) + ": unresolved label '" + in.label + "'");
    in.target = it->second;
  }
  for (const auto& g : prog.globals)
    if (!prog.labels.count(g)) throw SimError("global symbol '" + g + "' has no definition");
  for (size_t i = 0; i < prog.instrs.size(); ++i) {
    const auto& in = prog.instrs[i];
    if (in.op != Opcode::FrepO) continue;
    auto n = static_cast<size_t>(in.imm);
    if (i + n >= prog.instrs.size())
      throw SimError("line " + std::to_string(in.line) + ": frep body runs past the end of the program");
    for (size_t k = i + 1; k <= i + n; ++k)
      if (!is_fp_compute(prog.instrs[k].op))
        throw SimError("line " + std::to_string(prog.instrs[k].line) + ": '" + prog.instrs[k].text +
                       "' cannot appear in an frep body");
  }
  return prog;
}

bool is_fp_compute(Opcode op) {
  switch (op) {
    case Opcode::FaddD: case Opcode::FsubD: case Opcode::FmulD: case Opcode::FmaxD:
    case Opcode::FaddS: case Opcode::FsubS: case Opcode::FmulS: case Opcode::FmaxS:
    case Opcode::FmaddD: case Opcode::FmaddS: case Opcode::FmvD: case Opcode::FcvtDW: case Opcode::FmvDX:
    case Opcode::VfaddS: case Opcode::VfmulS: case Opcode::VfmaxS: case Opcode::VfcpkaSS:
    case Opcode::VfmacS: case Opcode::VfsumS:
      return true;
    default:
      return false;
  }
}

bool is_branch(Opcode op) {
  return op == Opcode::Blt || op == Opcode::Bge || op == Opcode::Bne || op == Opcode::Beq || op == Opcode::J;
}

int flops(Opcode op) {
  switch (op) {
    case Opcode::FmaddD: case Opcode::FmaddS:
      return 2;
    case Opcode::FaddD: case Opcode::FsubD: case Opcode::FmulD: case Opcode::FmaxD:
    case Opcode::FaddS: case Opcode::FsubS: case Opcode::FmulS: case Opcode::FmaxS:
    case Opcode::VfsumS:
      return 1;
    case Opcode::VfaddS: case Opcode::VfmulS: case Opcode::VfmaxS:
      return 2;
    case Opcode::VfmacS:
      return 4;
    default:
      return 0;
  }
}

}  // namespace ukc::sim
