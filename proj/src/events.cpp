#include "stens/events.hpp"

#include <fmt/format.h>

#include "stens/error.hpp"

namespace stens {

TimeRange patch_to_range(std::size_t index, const PatchSpec& spec, const GridSpec& grid) {
    const auto count = patch_count(grid, spec);
    if (index >= count) {
        throw input_error(fmt::format("patch index {} out of range ({} patches)", index, count), "patch");
    }
    const double span = static_cast<double>(spec.temporal_size) * grid.dt;
    return {grid.t_min + static_cast<double>(index) * span, grid.t_min + static_cast<double>(index + 1) * span};
}

std::vector<std::size_t> range_to_patches(const TimeRange& range, const PatchSpec& spec, const GridSpec& grid) {
    if (!(range.t_begin < range.t_end)) throw input_error("time range must satisfy t_begin < t_end", "range");
    std::vector<std::size_t> out;
    const auto count = patch_count(grid, spec);
    for (std::size_t k = 0; k < count; ++k) {
        const auto r = patch_to_range(k, spec, grid);
        if (r.t_begin < range.t_end && range.t_begin < r.t_end) out.push_back(k);
    }
    return out;
}

} // namespace stens
