#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cgback/geometry.hpp"

namespace cgback {

// All unordered index pairs with squared distance < cutoff^2, found via a
// uniform cell grid and returned sorted by (i, j) so that downstream
// accumulation matches a plain double loop term for term.
std::vector<std::pair<int, int>> neighbor_pairs_within(std::span<const Vec3> points,
                                                       double cutoff);

} // namespace cgback
