#pragma once

#include <memory>
#include <string>

#include "ukc/ir/ir.hpp"

namespace ukc::ir {

/// Parses the generic textual form. Returns a `builtin.module`; a text holding
/// anything other than a single module is wrapped into a fresh one.
/// Throws ParseError with the 1-based line/column of the offending token.
std::unique_ptr<Operation> parse(const std::string& text);

/// Prints the generic textual form. Values are renumbered %0, %1, ... and
/// blocks ^bb0, ^bb1, ... in print order, so output is deterministic.
std::string print(const Operation& op);

}  // namespace ukc::ir
