#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stens/grid.hpp"
#include "stens/volume.hpp"

namespace stens {

struct SubSize {
    std::size_t width = 16;   // cells along x
    std::size_t height = 32;  // cells along y
    bool operator==(const SubSize&) const = default;
};

/// Spatiotemporal decomposition parameters.
struct PatchSpec {
    std::size_t temporal_size = 3;
    std::size_t spatial_downsample = 1;
    std::optional<SubSize> subdivide;

    void validate(const GridSpec& grid) const;
    bool operator==(const PatchSpec&) const = default;
};

/// Spatial shape of a (possibly downsampled) frame.
struct FrameShape {
    std::size_t nx = 0;
    std::size_t ny = 0;
    bool operator==(const FrameShape&) const = default;
};

FrameShape downsampled_shape(const GridSpec& grid, std::size_t factor);

/// Number of whole temporal blocks; trailing steps that do not fill a block are dropped.
std::size_t patch_count(const GridSpec& grid, const PatchSpec& spec);

struct SubPatch {
    std::size_t index = 0;
    CellRange x;  // cells of the downsampled frame
    CellRange y;
};

/// Non-overlapping tiling of a frame, row-major over tiles, partial edge
/// tiles dropped.
std::vector<SubPatch> sub_patch_layout(FrameShape shape, SubSize size);

/// One temporal block of a run over the full spatial window.
/// Field spans are [t][y][x] with the window's shape; `keepalive` owns them.
struct Patch {
    std::string run_id;
    std::size_t index = 0;
    std::size_t t_begin = 0;  // step indices, half-open
    std::size_t t_end = 0;
    CellRange x;
    CellRange y;
    std::span<const double> saturation;
    std::span<const double> concentration;
    std::vector<SubPatch> subs;
    std::shared_ptr<const void> keepalive;

    std::size_t steps() const { return t_end - t_begin; }
    std::size_t size() const { return saturation.size(); }
};

/// Block-averages every frame by `factor` in x and y; edge blocks average
/// the cells they cover.
SpaceTimeVolume downsample(const SpaceTimeVolume& volume, std::size_t factor);

std::vector<Patch> extract_patches(std::shared_ptr<const SpaceTimeVolume> volume, const PatchSpec& spec);
std::vector<Patch> extract_patches(const SpaceTimeVolume& volume, const PatchSpec& spec);

} // namespace stens
