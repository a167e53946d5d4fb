#include "ukc/ir/ir.hpp"

#include <algorithm>

#include "ukc/diagnostics.hpp"

namespace ukc::ir {

// ---------------------------------------------------------------------------
// Value

void Operation::remove_use(Value* v, Operation* user, unsigned index) {
  auto& uses = v->uses_;
  for (auto it = uses.begin(); it != uses.end(); ++it) {
    if (it->user == user && it->operand_index == index) {
      uses.erase(it);
      return;
    }
  }
}

void Operation::add_use(Value* v, Operation* user, unsigned index) { v->uses_.push_back({user, index}); }

void Value::replace_all_uses_with(Value* other) {
  if (other == this) return;
  auto uses = uses_;
  for (const auto& u : uses) u.user->set_operand(u.operand_index, other);
}

Block* Value::parent_block() const { return block_ ? block_ : op_->parent_block(); }

// ---------------------------------------------------------------------------
// Region

Block* Region::add_block() {
  blocks_.push_back(std::make_unique<Block>(this));
  return blocks_.back().get();
}

Block* Region::insert_block(size_t position) {
  auto it = blocks_.insert(blocks_.begin() + static_cast<std::ptrdiff_t>(position), std::make_unique<Block>(this));
  return it->get();
}

void Region::erase_block(Block* block) {
  auto it = std::find_if(blocks_.begin(), blocks_.end(), [&](const auto& b) { return b.get() == block; });
  if (it == blocks_.end()) throw CompileError("erase_block: block not in region");
  for (auto* op : block->ops()) op->drop_all_references();
  blocks_.erase(it);
}

void Region::take_blocks(Region& other) {
  for (auto& b : other.blocks_) {
    b->parent_ = this;
    blocks_.push_back(std::move(b));
  }
  other.blocks_.clear();
}

size_t Region::block_index(const Block* block) const {
  for (size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].get() == block) return i;
  throw CompileError("block not in region");
}

// ---------------------------------------------------------------------------
// Block

Block::~Block() {
  for (auto& op : ops_) op->drop_all_references();
}

Value* Block::add_arg(Type type) { return insert_arg(num_args(), std::move(type)); }

Value* Block::insert_arg(unsigned position, Type type) {
  auto v = std::unique_ptr<Value>(new Value(std::move(type), nullptr, this, position));
  Value* raw = v.get();
  args_.insert(args_.begin() + position, std::move(v));
  for (unsigned i = 0; i < args_.size(); ++i) args_[i]->index_ = i;
  return raw;
}

void Block::erase_arg(unsigned position) {
  if (args_.at(position)->has_uses()) throw CompileError("erase_arg: argument still in use");
  args_.erase(args_.begin() + position);
  for (unsigned i = 0; i < args_.size(); ++i) args_[i]->index_ = i;
}

std::vector<Operation*> Block::ops() const {
  std::vector<Operation*> out;
  out.reserve(ops_.size());
  for (const auto& op : ops_) out.push_back(op.get());
  return out;
}

Operation* Block::insert(Operation* before, std::unique_ptr<Operation> op) {
  if (op->parent_) throw CompileError("insert: operation already has a parent");
  auto pos = before ? before->self_ : ops_.end();
  if (before && before->parent_ != this) throw CompileError("insert: anchor not in this block");
  auto it = ops_.insert(pos, std::move(op));
  (*it)->self_ = it;
  (*it)->parent_ = this;
  return it->get();
}

size_t Block::index_of(const Operation* op) const {
  size_t i = 0;
  for (const auto& o : ops_) {
    if (o.get() == op) return i;
    ++i;
  }
  throw CompileError("operation not in block");
}

// ---------------------------------------------------------------------------
// Operation

std::unique_ptr<Operation> Operation::create(std::string name, const std::vector<Value*>& operands,
                                             const std::vector<Type>& result_types, AttrMap attrs,
                                             unsigned num_regions) {
  std::unique_ptr<Operation> op(new Operation());
  op->name_ = std::move(name);
  for (auto* v : operands) op->add_operand(v);
  for (const auto& t : result_types) op->add_result(t);
  op->attrs_ = std::move(attrs);
  for (unsigned i = 0; i < num_regions; ++i) op->add_region();
  return op;
}

Operation::~Operation() { drop_all_references(); }

std::string Operation::dialect() const {
  auto dot = name_.find('.');
  return dot == std::string::npos ? std::string() : name_.substr(0, dot);
}

void Operation::set_operand(unsigned i, Value* v) {
  if (!v) throw CompileError("null operand for " + name_);
  Value*& slot = operands_.at(i);
  if (slot) remove_use(slot, this, i);
  slot = v;
  add_use(v, this, i);
}

void Operation::set_operands(const std::vector<Value*>& values) {
  while (num_operands() > 0) erase_operand(num_operands() - 1);
  for (auto* v : values) add_operand(v);
}

void Operation::add_operand(Value* v) {
  if (!v) throw CompileError("null operand for " + name_);
  operands_.push_back(v);
  add_use(v, this, num_operands() - 1);
}

void Operation::insert_operand(unsigned i, Value* v) {
  std::vector<Value*> vals = operands_;
  vals.insert(vals.begin() + i, v);
  set_operands(vals);
}

void Operation::erase_operand(unsigned i) {
  std::vector<Value*> vals = operands_;
  for (unsigned k = 0; k < operands_.size(); ++k) remove_use(operands_[k], this, k);
  vals.erase(vals.begin() + i);
  operands_ = vals;
  for (unsigned k = 0; k < operands_.size(); ++k) add_use(operands_[k], this, k);
}

Value* Operation::add_result(Type type) {
  results_.push_back(std::unique_ptr<Value>(new Value(std::move(type), this, nullptr, num_results())));
  return results_.back().get();
}

void Operation::erase_result(unsigned i) {
  if (results_.at(i)->has_uses()) throw CompileError("erase_result: result still in use");
  results_.erase(results_.begin() + i);
  for (unsigned k = 0; k < results_.size(); ++k) results_[k]->index_ = k;
}

const Attribute& Operation::attr(const std::string& key) const {
  auto it = attrs_.find(key);
  if (it == attrs_.end()) throw CompileError(name_ + ": missing attribute '" + key + "'");
  return it->second;
}

Region* Operation::add_region() {
  regions_.push_back(std::make_unique<Region>(this));
  return regions_.back().get();
}

bool Operation::is_ancestor_of(const Operation* other) const {
  for (const Operation* p = other; p; p = p->parent_op())
    if (p == this) return true;
  return false;
}

Operation* Operation::next() const {
  if (!parent_) return nullptr;
  auto it = std::next(self_);
  return it == parent_->ops_.end() ? nullptr : it->get();
}

Operation* Operation::prev() const {
  if (!parent_ || self_ == parent_->ops_.begin()) return nullptr;
  return std::prev(self_)->get();
}

std::unique_ptr<Operation> Operation::detach() {
  if (!parent_) throw CompileError("detach: operation has no parent");
  auto owned = std::move(*self_);
  parent_->ops_.erase(self_);
  parent_ = nullptr;
  return owned;
}

void Operation::move_before(Operation* other) {
  auto owned = detach();
  other->parent_block()->insert(other, std::move(owned));
}

void Operation::move_to_end(Block* block) {
  auto owned = detach();
  block->push_back(std::move(owned));
}

void Operation::erase() {
  for (const auto& r : results_)
    if (r->has_uses())
      throw CompileError("erase: result of " + name_ + " still used by " + r->uses().front().user->name());
  drop_all_references();
  if (parent_) detach();
}

void Operation::drop_all_references() {
  for (unsigned k = 0; k < operands_.size(); ++k)
    if (operands_[k]) remove_use(operands_[k], this, k);
  operands_.clear();
  for (auto& r : regions_)
    for (auto& b : r->blocks())
      for (auto& op : b->op_list()) op->drop_all_references();
}

// ---------------------------------------------------------------------------
// Cloning

Value* IRMapping::lookup(Value* v) const {
  auto it = values_.find(v);
  return it == values_.end() ? v : it->second;
}

Value* IRMapping::lookup_or_null(const Value* v) const {
  auto it = values_.find(v);
  return it == values_.end() ? nullptr : it->second;
}

Block* IRMapping::lookup(const Block* b) const {
  auto it = blocks_.find(b);
  return it == blocks_.end() ? nullptr : it->second;
}

void clone_region_into(const Region& src, Region& dst, IRMapping& mapping) {
  std::vector<Block*> new_blocks;
  for (const auto& b : src.blocks()) {
    Block* nb = dst.add_block();
    mapping.map(b.get(), nb);
    for (const auto& a : b->args()) mapping.map(a.get(), nb->add_arg(a->type()));
    new_blocks.push_back(nb);
  }
  for (size_t i = 0; i < src.blocks().size(); ++i)
    for (const auto& op : src.blocks()[i]->op_list()) new_blocks[i]->push_back(clone(*op, mapping));
}

std::unique_ptr<Operation> clone(const Operation& op, IRMapping& mapping) {
  std::vector<Value*> operands;
  for (auto* v : op.operands()) operands.push_back(mapping.lookup(v));
  std::vector<Type> types;
  for (const auto& r : op.results()) types.push_back(r->type());
  auto copy = Operation::create(op.name(), operands, types, op.attrs(), 0);
  for (unsigned i = 0; i < op.num_results(); ++i) mapping.map(op.result(i), copy->result(i));
  for (const auto& r : op.regions()) clone_region_into(*r, *copy->add_region(), mapping);
  return copy;
}

std::unique_ptr<Operation> clone(const Operation& op) {
  IRMapping m;
  return clone(op, m);
}

// ---------------------------------------------------------------------------
// Walks

void walk(Operation* root, const std::function<void(Operation*)>& fn) {
  fn(root);
  for (const auto& r : root->regions())
    for (const auto& b : r->blocks())
      for (auto* op : b->ops()) walk(op, fn);
}

std::vector<Operation*> collect(Operation* root, const std::function<bool(Operation*)>& pred) {
  std::vector<Operation*> out;
  walk(root, [&](Operation* op) {
    if (!pred || pred(op)) out.push_back(op);
  });
  return out;
}

std::vector<Operation*> collect(Operation* root, const char* name) {
  return collect(root, [name](Operation* op) { return op->name() == name; });
}

// ---------------------------------------------------------------------------
// Structural equality

namespace {
struct Equiv {
  std::unordered_map<const Value*, const Value*> values;

  bool same_value(const Value* a, const Value* b) {
    auto it = values.find(a);
    if (it != values.end()) return it->second == b;
    // Both defined outside the compared trees.
    return a == b;
  }

  bool ops(const Operation& a, const Operation& b) {
    if (a.name() != b.name() || a.attrs() != b.attrs()) return false;
    if (a.num_operands() != b.num_operands() || a.num_results() != b.num_results() ||
        a.num_regions() != b.num_regions())
      return false;
    for (unsigned i = 0; i < a.num_operands(); ++i)
      if (!same_value(a.operand(i), b.operand(i))) return false;
    for (unsigned i = 0; i < a.num_results(); ++i) {
      if (a.result(i)->type() != b.result(i)->type()) return false;
      values[a.result(i)] = b.result(i);
    }
    for (unsigned r = 0; r < a.num_regions(); ++r)
      if (!regions(a.region(r), b.region(r))) return false;
    return true;
  }

  bool regions(const Region& a, const Region& b) {
    if (a.blocks().size() != b.blocks().size()) return false;
    for (size_t i = 0; i < a.blocks().size(); ++i) {
      const Block& x = *a.blocks()[i];
      const Block& y = *b.blocks()[i];
      if (x.num_args() != y.num_args() || x.op_list().size() != y.op_list().size()) return false;
      for (unsigned k = 0; k < x.num_args(); ++k) {
        if (x.arg(k)->type() != y.arg(k)->type()) return false;
        values[x.arg(k)] = y.arg(k);
      }
    }
    for (size_t i = 0; i < a.blocks().size(); ++i) {
      auto ix = a.blocks()[i]->op_list().begin();
      auto iy = b.blocks()[i]->op_list().begin();
      for (; ix != a.blocks()[i]->op_list().end(); ++ix, ++iy)
        if (!ops(**ix, **iy)) return false;
    }
    return true;
  }
};
}  // namespace

bool structurally_equal(const Operation& a, const Operation& b) {
  Equiv e;
  return e.ops(a, b);
}

// ---------------------------------------------------------------------------
// Builder

void Builder::set_insertion_point_after(Operation* op) {
  block_ = op->parent_block();
  before_ = op->next();
}

Operation* Builder::create(std::string name, const std::vector<Value*>& operands,
                           const std::vector<Type>& result_types, Operation::AttrMap attrs, unsigned num_regions) {
  return insert(Operation::create(std::move(name), operands, result_types, std::move(attrs), num_regions));
}

Operation* Builder::insert(std::unique_ptr<Operation> op) {
  if (!block_) throw CompileError("builder has no insertion point");
  return block_->insert(before_, std::move(op));
}

std::unique_ptr<Operation> make_module() {
  auto m = Operation::create("builtin.module", {}, {}, {}, 1);
  m->region(0).add_block();
  return m;
}

}  // namespace ukc::ir
