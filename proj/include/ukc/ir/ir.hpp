#pragma once

#include <functional>
#include <list>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ukc/ir/attributes.hpp"
#include "ukc/ir/types.hpp"

namespace ukc::ir {

class Block;
class Operation;
class Region;

struct Use {
  Operation* user;
  unsigned operand_index;
};

/// SSA value: either an operation result or a block argument.
class Value {
 public:
  const Type& type() const { return type_; }
  void set_type(Type t) { type_ = std::move(t); }

  Operation* defining_op() const { return op_; }
  Block* owner_block() const { return block_; }
  bool is_block_arg() const { return block_ != nullptr; }
  /// Result number or argument number.
  unsigned index() const { return index_; }

  const std::vector<Use>& uses() const { return uses_; }
  bool has_uses() const { return !uses_.empty(); }
  size_t num_uses() const { return uses_.size(); }

  /// Redirects every use of this value to `other`.
  void replace_all_uses_with(Value* other);

  /// Block that contains the definition (the parent block of the op for results).
  Block* parent_block() const;

 private:
  friend class Operation;
  friend class Block;
  Value(Type t, Operation* op, Block* block, unsigned index) : type_(std::move(t)), op_(op), block_(block), index_(index) {}

  Type type_;
  Operation* op_;
  Block* block_;
  unsigned index_;
  std::vector<Use> uses_;
};

class Region {
 public:
  explicit Region(Operation* parent) : parent_(parent) {}

  Operation* parent_op() const { return parent_; }
  const std::vector<std::unique_ptr<Block>>& blocks() const { return blocks_; }
  bool empty() const { return blocks_.empty(); }
  Block& front() const { return *blocks_.front(); }
  Block* add_block();
  Block* insert_block(size_t position);
  void erase_block(Block* block);
  /// Moves all blocks of `other` to the end of this region.
  void take_blocks(Region& other);
  size_t block_index(const Block* block) const;

 private:
  Operation* parent_;
  std::vector<std::unique_ptr<Block>> blocks_;
};

class Block {
 public:
  using OpList = std::list<std::unique_ptr<Operation>>;

  explicit Block(Region* parent) : parent_(parent) {}
  ~Block();

  Region* parent_region() const { return parent_; }
  Operation* parent_op() const { return parent_ ? parent_->parent_op() : nullptr; }

  const std::vector<std::unique_ptr<Value>>& args() const { return args_; }
  Value* arg(unsigned i) const { return args_.at(i).get(); }
  unsigned num_args() const { return static_cast<unsigned>(args_.size()); }
  Value* add_arg(Type type);
  Value* insert_arg(unsigned position, Type type);
  /// Removes an argument that has no remaining uses.
  void erase_arg(unsigned position);

  OpList& op_list() { return ops_; }
  const OpList& op_list() const { return ops_; }
  /// Snapshot of the operations, safe to iterate while mutating the block.
  std::vector<Operation*> ops() const;
  bool empty() const { return ops_.empty(); }
  Operation* front() const { return ops_.empty() ? nullptr : ops_.front().get(); }
  Operation* back() const { return ops_.empty() ? nullptr : ops_.back().get(); }
  Operation* terminator() const { return back(); }

  /// Takes ownership of `op` and inserts it before `before` (end if null).
  Operation* insert(Operation* before, std::unique_ptr<Operation> op);
  Operation* push_back(std::unique_ptr<Operation> op) { return insert(nullptr, std::move(op)); }

  /// Position of each operation in this block; recomputed on demand.
  size_t index_of(const Operation* op) const;

 private:
  friend class Operation;
  friend class Region;
  Region* parent_;
  std::vector<std::unique_ptr<Value>> args_;
  OpList ops_;
};

class Operation {
 public:
  using AttrMap = std::map<std::string, Attribute>;

  static std::unique_ptr<Operation> create(std::string name, const std::vector<Value*>& operands,
                                           const std::vector<Type>& result_types, AttrMap attrs = {},
                                           unsigned num_regions = 0);
  ~Operation();

  const std::string& name() const { return name_; }
  std::string dialect() const;
  bool is(const char* n) const { return name_ == n; }

  // Operands.
  unsigned num_operands() const { return static_cast<unsigned>(operands_.size()); }
  Value* operand(unsigned i) const { return operands_.at(i); }
  const std::vector<Value*>& operands() const { return operands_; }
  void set_operand(unsigned i, Value* v);
  void set_operands(const std::vector<Value*>& values);
  void add_operand(Value* v);
  void insert_operand(unsigned i, Value* v);
  void erase_operand(unsigned i);

  // Results.
  unsigned num_results() const { return static_cast<unsigned>(results_.size()); }
  Value* result(unsigned i = 0) const { return results_.at(i).get(); }
  const std::vector<std::unique_ptr<Value>>& results() const { return results_; }
  Value* add_result(Type type);
  /// Removes a result that has no remaining uses.
  void erase_result(unsigned i);

  // Attributes.
  const AttrMap& attrs() const { return attrs_; }
  bool has_attr(const std::string& key) const { return attrs_.count(key) != 0; }
  const Attribute& attr(const std::string& key) const;
  void set_attr(const std::string& key, Attribute value) { attrs_[key] = std::move(value); }
  void remove_attr(const std::string& key) { attrs_.erase(key); }
  int64_t int_attr(const std::string& key) const { return attr(key).as_int(); }

  // Regions.
  unsigned num_regions() const { return static_cast<unsigned>(regions_.size()); }
  Region& region(unsigned i = 0) const { return *regions_.at(i); }
  const std::vector<std::unique_ptr<Region>>& regions() const { return regions_; }
  Region* add_region();
  /// Entry block of region `i`.
  Block& body(unsigned i = 0) const { return region(i).front(); }

  // Position in the tree.
  Block* parent_block() const { return parent_; }
  Region* parent_region() const { return parent_ ? parent_->parent_region() : nullptr; }
  Operation* parent_op() const { return parent_ ? parent_->parent_op() : nullptr; }
  bool is_ancestor_of(const Operation* other) const;
  Operation* next() const;
  Operation* prev() const;

  /// Unlinks from the parent block and returns ownership.
  std::unique_ptr<Operation> detach();
  /// Moves this op right before `other` (possibly into another block).
  void move_before(Operation* other);
  void move_to_end(Block* block);
  /// Destroys the op. Its results must have no uses left.
  void erase();
  /// Drops every operand reference in this op and nested ops.
  void drop_all_references();

 private:
  friend class Block;
  Operation() = default;
  static void add_use(Value* v, Operation* user, unsigned index);
  static void remove_use(Value* v, Operation* user, unsigned index);

  std::string name_;
  std::vector<Value*> operands_;
  std::vector<std::unique_ptr<Value>> results_;
  AttrMap attrs_;
  std::vector<std::unique_ptr<Region>> regions_;
  Block* parent_ = nullptr;
  Block::OpList::iterator self_;
};

/// Maps values and blocks of a source tree to their clones.
class IRMapping {
 public:
  void map(const Value* from, Value* to) { values_[from] = to; }
  void map(const Block* from, Block* to) { blocks_[from] = to; }
  Value* lookup(Value* v) const;
  Value* lookup_or_null(const Value* v) const;
  Block* lookup(const Block* b) const;

 private:
  std::unordered_map<const Value*, Value*> values_;
  std::unordered_map<const Block*, Block*> blocks_;
};

/// Deep copy; operands not in the mapping refer to the original values.
std::unique_ptr<Operation> clone(const Operation& op, IRMapping& mapping);
std::unique_ptr<Operation> clone(const Operation& op);
/// Clones each op of `src` into `dst` before `before`.
void clone_region_into(const Region& src, Region& dst, IRMapping& mapping);

/// Pre-order walk (op before its regions), deterministic.
void walk(Operation* root, const std::function<void(Operation*)>& fn);
/// Pre-order list of every op under `root` (including it) matching `pred`.
std::vector<Operation*> collect(Operation* root, const std::function<bool(Operation*)>& pred = {});
std::vector<Operation*> collect(Operation* root, const char* name);

/// Structural equality: same ops, attributes, types and dataflow; names ignored.
bool structurally_equal(const Operation& a, const Operation& b);

/// Insertion helper.
class Builder {
 public:
  Builder() = default;
  explicit Builder(Block* block) { set_insertion_point_to_end(block); }

  void set_insertion_point_to_end(Block* block) {
    block_ = block;
    before_ = nullptr;
  }
  void set_insertion_point(Operation* before) {
    block_ = before->parent_block();
    before_ = before;
  }
  void set_insertion_point_after(Operation* op);
  void set_insertion_point_to_start(Block* block) {
    block_ = block;
    before_ = block->front();
  }
  Block* block() const { return block_; }

  Operation* create(std::string name, const std::vector<Value*>& operands, const std::vector<Type>& result_types,
                    Operation::AttrMap attrs = {}, unsigned num_regions = 0);
  Operation* insert(std::unique_ptr<Operation> op);

 private:
  Block* block_ = nullptr;
  Operation* before_ = nullptr;
};

/// Top-level container: a `builtin.module` operation with one region and one block.
std::unique_ptr<Operation> make_module();

}  // namespace ukc::ir
