#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stens/volume.hpp"

namespace stens {

/// Float brick as served to the renderer: "PMVB", version byte, nt, ny, nx
/// as u32 LE, then nt*ny*nx f32 LE in t-major, y, x order.
struct Brick {
    std::size_t nt = 0, ny = 0, nx = 0;
    std::vector<float> values;
};

std::string encode_pmvb(const Brick& brick);
Brick decode_pmvb(std::string_view bytes);

/// Lossless on-disk cache of aligned runs written by `stens ingest`.
void write_volume_cache(const SpaceTimeVolume& volume, const std::filesystem::path& file);
SpaceTimeVolume read_volume_cache(const std::filesystem::path& file);
void write_segmentation_cache(const SegmentationVolume& seg, const std::filesystem::path& file);
SegmentationVolume read_segmentation_cache(const std::filesystem::path& file);

} // namespace stens
