#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ukc/ir/ir.hpp"

namespace ukc::ir {

struct Pass {
  std::string name;
  /// The pass fails unless at least one op of one of these dialects is present.
  std::vector<std::string> requires_dialects;
  std::vector<std::string> consumes;
  std::vector<std::string> produces;
  std::function<void(Operation& module)> run;
};

struct PipelineOptions {
  bool verify_each = true;
  /// Called after every pass with the pass name and the module.
  std::function<void(const std::string&, const Operation&)> after_pass;
};

/// Dialects of every op nested under `root` (excluding root itself).
std::vector<std::string> dialects_present(const Operation& root);

/// Runs passes in order. Throws CompileError naming the pass on failure or
/// when the module stops verifying.
void run_pipeline(Operation& module, const std::vector<Pass>& passes, const PipelineOptions& options = {});

}  // namespace ukc::ir
