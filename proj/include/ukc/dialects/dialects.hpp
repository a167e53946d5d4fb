#pragma once

#include "ukc/ir/registry.hpp"

namespace ukc::dialects {

void register_builtin(ir::Registry& r);        // builtin, func, arith, vector, linalg
void register_memref_stream(ir::Registry& r);
void register_rv(ir::Registry& r);             // rv, rv_cf, rv_scf, rv_func
void register_snitch(ir::Registry& r);         // rv_snitch, snitch_stream

/// Nearest enclosing streaming region (either level), or null.
const ir::Operation* enclosing_streaming_region(const ir::Operation& op);

}  // namespace ukc::dialects
