#include <sstream>
#include <unordered_map>

#include "ukc/ir/text.hpp"

namespace ukc::ir {

namespace {

class Printer {
 public:
  std::string run(const Operation& op) {
    print_op(op, 0);
    return os_.str();
  }

 private:
  std::string name_of(const Value* v) {
    auto it = names_.find(v);
    if (it != names_.end()) return it->second;
    // Defined outside the printed tree.
    return "%<external>";
  }

  std::string define(const Value* v) {
    std::string n = "%" + std::to_string(next_value_++);
    names_[v] = n;
    return n;
  }

  void indent(int depth) {
    for (int i = 0; i < depth; ++i) os_ << "  ";
  }

  static bool is_bare_name(const std::string& n) {
    if (n.empty() || !(std::isalpha(static_cast<unsigned char>(n[0])) || n[0] == '_')) return false;
    for (char c : n)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$')) return false;
    return true;
  }

  void print_op(const Operation& op, int depth) {
    indent(depth);
    if (op.num_results() > 0) {
      for (unsigned i = 0; i < op.num_results(); ++i) os_ << (i ? ", " : "") << define(op.result(i));
      os_ << " = ";
    }
    if (is_bare_name(op.name()))
      os_ << op.name();
    else
      os_ << Attribute(op.name()).str();
    os_ << '(';
    for (unsigned i = 0; i < op.num_operands(); ++i) os_ << (i ? ", " : "") << name_of(op.operand(i));
    os_ << ')';
    if (!op.attrs().empty()) {
      os_ << " {";
      bool first = true;
      for (const auto& [k, v] : op.attrs()) {
        os_ << (first ? "" : ", ") << (is_bare_name(k) ? k : Attribute(k).str());
        if (!v.is_unit()) os_ << " = " << v.str();
        first = false;
      }
      os_ << '}';
    }
    if (op.num_results() == 1) {
      os_ << " : " << op.result(0)->type().str();
    } else if (op.num_results() > 1) {
      os_ << " : (";
      for (unsigned i = 0; i < op.num_results(); ++i) os_ << (i ? ", " : "") << op.result(i)->type().str();
      os_ << ')';
    }
    if (op.num_regions() > 0) {
      os_ << " (";
      for (unsigned r = 0; r < op.num_regions(); ++r) {
        if (r) os_ << ", ";
        print_region(op.region(r), depth);
      }
      os_ << ')';
    }
    os_ << '\n';
  }

  void print_region(const Region& region, int depth) {
    os_ << "{\n";
    bool need_labels = region.blocks().size() > 1;
    for (const auto& b : region.blocks()) {
      if (need_labels || b->num_args() > 0 || b->empty()) {
        indent(depth);
        os_ << "^bb" << next_block_++;
        if (b->num_args() > 0) {
          os_ << '(';
          for (unsigned i = 0; i < b->num_args(); ++i)
            os_ << (i ? ", " : "") << define(b->arg(i)) << " : " << b->arg(i)->type().str();
          os_ << ')';
        }
        os_ << ":\n";
      }
      for (const auto& op : b->op_list()) print_op(*op, depth + 1);
    }
    indent(depth);
    os_ << '}';
  }

  std::ostringstream os_;
  std::unordered_map<const Value*, std::string> names_;
  unsigned next_value_ = 0;
  unsigned next_block_ = 0;
};

}  // namespace

std::string print(const Operation& op) { return Printer().run(op); }

}  // namespace ukc::ir
