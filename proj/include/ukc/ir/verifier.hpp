#pragma once

#include <string>
#include <vector>

#include "ukc/ir/ir.hpp"

namespace ukc::ir {

struct VerifyReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string str() const;
};

/// Checks SSA dominance, operation schemas and dialect constraints.
/// Violations are collected, never thrown.
VerifyReport verify(const Operation& root);

}  // namespace ukc::ir
