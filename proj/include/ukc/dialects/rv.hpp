#pragma once

#include <string>
#include <vector>

#include "ukc/ir/ir.hpp"

namespace ukc::rv {

/// Number of stream registers; stream k is bound to ft{k}.
inline constexpr int kNumStreams = 3;

/// Hardware number (x0..x31 / f0..f31) of an ABI or raw register name, -1 if unknown.
int int_reg_number(const std::string& name);
int float_reg_number(const std::string& name);
std::string int_reg_name(int number);
std::string float_reg_name(int number);

/// Caller-saved allocation pools in hand-out order.
const std::vector<std::string>& int_pool();
const std::vector<std::string>& float_pool();

std::string stream_reg(int stream);
/// Stream index of a reserved stream register name, -1 otherwise.
int stream_index(const std::string& reg);

/// True for ops whose operands and results are all float registers.
bool is_fp_register_op(const ir::Operation& op);

// Builders for the flat instruction dialect. Result types default to unallocated.
ir::Value* li(ir::Builder& b, int64_t imm, ir::Type t = ir::Type::int_reg());
ir::Value* get_register(ir::Builder& b, ir::Type t);
ir::Value* binary(ir::Builder& b, const char* name, ir::Value* lhs, ir::Value* rhs, ir::Type t);
ir::Value* unary(ir::Builder& b, const char* name, ir::Value* src, ir::Type t);
ir::Value* imm_op(ir::Builder& b, const char* name, ir::Value* src, int64_t imm, ir::Type t = ir::Type::int_reg());

}  // namespace ukc::rv
