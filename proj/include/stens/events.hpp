#pragma once

#include <cstddef>
#include <vector>

#include "stens/grid.hpp"
#include "stens/patching.hpp"

namespace stens {

/// Half-open time interval in seconds.
struct TimeRange {
    double t_begin = 0;
    double t_end = 0;
    bool operator==(const TimeRange&) const = default;
};

/// Time span covered by patch `index`. Throws for indices past the last patch.
TimeRange patch_to_range(std::size_t index, const PatchSpec& spec, const GridSpec& grid);

/// Indices of every patch whose span intersects `range`, ascending.
std::vector<std::size_t> range_to_patches(const TimeRange& range, const PatchSpec& spec, const GridSpec& grid);

} // namespace stens
