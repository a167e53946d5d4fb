#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ukc/ir/ir.hpp"

namespace ukc::ir {

constexpr int kVariadic = -1;

/// Static description of one operation kind.
struct OpDef {
  std::string name;
  int num_operands = 0;  // kVariadic for any count
  int num_results = 0;   // kVariadic for any count
  int num_regions = 0;
  std::vector<std::string> required_attrs;
  bool terminator = false;
  /// When >= 0, result 0 must live in the same register as this operand.
  int tied_operand = -1;
  /// Per-position type classes: 'i' integer register, 'f' float register,
  /// 'F' f64/f32/vector<2xf32>, 'm' memref, 's' stream, 'x' index, '*' any.
  /// The last class repeats for variadic positions. Empty means unchecked.
  std::string operand_classes;
  std::string result_classes;
  /// Dialect-specific checks; append one message per violation.
  std::function<void(const Operation&, std::vector<std::string>&)> verify;
};

class Registry {
 public:
  void add(OpDef def);
  const OpDef* lookup(const std::string& name) const;
  bool knows_dialect(const std::string& dialect) const;
  std::vector<std::string> op_names() const;

 private:
  std::map<std::string, OpDef> defs_;
};

/// Registry with every dialect of the project loaded.
const Registry& registry();

}  // namespace ukc::ir
