#include "ukc/ir/registry.hpp"

#include "ukc/diagnostics.hpp"
#include "ukc/dialects/dialects.hpp"

namespace ukc::ir {

void Registry::add(OpDef def) {
  std::string name = def.name;
  if (!defs_.emplace(name, std::move(def)).second) throw Error("operation registered twice: " + name);
}

const OpDef* Registry::lookup(const std::string& name) const {
  auto it = defs_.find(name);
  return it == defs_.end() ? nullptr : &it->second;
}

bool Registry::knows_dialect(const std::string& dialect) const {
  for (const auto& [name, def] : defs_)
    if (name.compare(0, dialect.size() + 1, dialect + ".") == 0) return true;
  return false;
}

std::vector<std::string> Registry::op_names() const {
  std::vector<std::string> out;
  for (const auto& [name, def] : defs_) out.push_back(name);
  return out;
}

const Registry& registry() {
  static const Registry r = [] {
    Registry reg;
    dialects::register_builtin(reg);
    dialects::register_memref_stream(reg);
    dialects::register_rv(reg);
    dialects::register_snitch(reg);
    return reg;
  }();
  return r;
}

}  // namespace ukc::ir
