#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ukc::sim {

enum class Opcode {
  Li, Mv, Add, Sub, Mul, Addi, Slli,
  Blt, Bge, Bne, Beq, J, Ret,
  Fld, Flw, Fsd, Fsw,
  FaddD, FsubD, FmulD, FmaxD, FaddS, FsubS, FmulS, FmaxS,
  FmaddD, FmaddS, FmvD, FcvtDW, FmvDX,
  VfaddS, VfmulS, VfmaxS, VfcpkaSS, VfmacS, VfsumS,
  ScfgBound, ScfgStride, ScfgRep, ScfgBase, SsrEnable, SsrDisable,
  FrepO,
};

/// One decoded instruction. Register fields hold hardware numbers, -1 when
/// unused; which file (x or f) they index follows from the opcode.
struct Instr {
  Opcode op = Opcode::Ret;
  int rd = -1, rs1 = -1, rs2 = -1, rs3 = -1;
  int64_t imm = 0;
  int stream = 0, dim = 0, rank = 0;
  bool write = false;
  std::string label;   // branch target before resolution
  size_t target = 0;   // resolved instruction index
  std::string text;    // mnemonic and operands as written
  int line = 0;
};

struct Program {
  std::vector<Instr> instrs;
  std::map<std::string, size_t> labels;
  std::vector<std::string> globals;

  /// Index of a label or global symbol. Throws SimError when missing.
  size_t entry(const std::string& symbol) const;
};

/// Parses one instruction (no label, no directive). Throws SimError.
Instr parse_instruction(const std::string& text, int line = 0);

/// Assembles the text emitted by the compiler: directives, labels, and one
/// instruction per line. `#` starts a comment. Throws SimError on unknown
/// mnemonics, malformed operands, duplicate or unresolved labels.
Program assemble(const std::string& text);

// Instruction classes used by the timing model and the FREP checks.
bool is_fp_compute(Opcode op);  // executes in the FPU
bool is_branch(Opcode op);
/// FLOPs of one execution: fmadd 2, scalar add/sub/mul/max 1, packed
/// add/mul/max 2, vfmac 4, vfsum 1, moves and conversions 0.
int flops(Opcode op);

}  // namespace ukc::sim
