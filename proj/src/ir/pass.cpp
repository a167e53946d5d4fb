#include "ukc/ir/pass.hpp"

#include <algorithm>
#include <set>

#include "ukc/diagnostics.hpp"
#include "ukc/ir/verifier.hpp"

namespace ukc::ir {

std::vector<std::string> dialects_present(const Operation& root) {
  std::set<std::string> seen;
  for (const auto& r : root.regions())
    for (const auto& b : r->blocks())
      for (const auto& op : b->op_list())
        walk(op.get(), [&](Operation* o) { seen.insert(o->dialect()); });
  return {seen.begin(), seen.end()};
}

void run_pipeline(Operation& module, const std::vector<Pass>& passes, const PipelineOptions& options) {
  for (const auto& pass : passes) {
    if (!pass.requires_dialects.empty()) {
      auto present = dialects_present(module);
      bool found = std::any_of(pass.requires_dialects.begin(), pass.requires_dialects.end(), [&](const auto& d) {
        return std::find(present.begin(), present.end(), d) != present.end();
      });
      if (!found) {
        std::string want;
        for (const auto& d : pass.requires_dialects) want += (want.empty() ? "" : ", ") + d;
        throw CompileError("pass '" + pass.name + "' requires dialect(s) " + want + " but none is present");
      }
    }
    try {
      pass.run(module);
    } catch (const OutOfRegisters&) {
      throw;
    } catch (const CompileError& e) {
      throw CompileError("pass '" + pass.name + "': " + e.what());
    }
    if (options.verify_each) {
      auto report = verify(module);
      if (!report.ok()) throw CompileError("module does not verify after pass '" + pass.name + "':\n" + report.str());
    }
    if (options.after_pass) options.after_pass(pass.name, module);
  }
}

}  // namespace ukc::ir
