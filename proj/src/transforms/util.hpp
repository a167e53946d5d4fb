#pragma once

#include <vector>

#include "ukc/dialects/memref_stream.hpp"
#include "ukc/ir/ir.hpp"

namespace ukc::transforms::detail {

/// Substitutes dims and renormalizes each result to its linear form when possible.
ir::AffineMap substitute_map(const ir::AffineMap& map, const std::vector<ir::AffineExpr>& replacements,
                             unsigned new_num_dims);

/// Re-expresses a full-domain output map over the non-reduction dims only.
ir::AffineMap reduce_map(const ir::AffineMap& map, const std::vector<std::string>& iterator_types);

/// Extents of the non-reduction dims.
std::vector<int64_t> reduced_bounds(const std::vector<int64_t>& bounds, const std::vector<std::string>& iterator_types);

/// True when the output maps are expressed over the non-reduction dims.
bool outputs_reduced(const ms::GenericView& g);

/// Parallel dims first, then reductions, then at most one trailing interleaved dim.
bool dims_ordered(const std::vector<std::string>& iterator_types);

std::vector<ir::Operation*> generics(ir::Operation& module);

ir::Attribute maps_attr(const std::vector<ir::AffineMap>& maps);

}  // namespace ukc::transforms::detail
