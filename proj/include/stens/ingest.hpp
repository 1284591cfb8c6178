#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stens/grid.hpp"
#include "stens/volume.hpp"

namespace stens {

/// How raw tables are laid out on disk.
struct FormatConfig {
    char delimiter = ',';
    /// Applied to the file name; the first capture group is the frame time in seconds.
    std::string time_pattern = R"((\d+)\.[^.]+$)";
};

struct Sample {
    double x = 0;
    double y = 0;
    double saturation = 0;
    double concentration = 0;
};

struct RawFrame {
    double time = 0;
    std::vector<Sample> samples;
};

struct SegSample {
    double x = 0;
    double y = 0;
    std::uint8_t cls = 0;
};

struct SegFrame {
    double time = 0;
    std::vector<SegSample> samples;
};

/// Reads every frame file of a run directory, sorted by time.
/// Required columns: x, y, saturation, concentration (any order, any case).
std::vector<RawFrame> parse_spatial_maps(const std::filesystem::path& dir, const FormatConfig& format = {});

/// Resamples frames onto `grid` with the gap rules: a missing step repeats
/// the previous step once any step was measured, and is zero before that.
SpaceTimeVolume align_volume(std::string run_id, std::span<const RawFrame> frames, const GridSpec& grid);

/// Segmentation frames: columns x, y, class with class in {0,1,2}.
std::vector<SegFrame> parse_segmentation_frames(const std::filesystem::path& dir, const FormatConfig& format = {});

SegmentationVolume align_segmentation(std::string run_id, std::span<const SegFrame> frames, const GridSpec& grid);

SegmentationVolume parse_segmentation_maps(const std::filesystem::path& dir, const FormatConfig& format,
                                           const GridSpec& grid, std::string run_id);

struct TimeSeriesColumn {
    std::string name;
    std::vector<double> values;
    std::vector<FillFlag> flags;

    bool operator==(const TimeSeriesColumn&) const = default;
};

/// Scalar measurables of one run on the canonical time axis.
struct TimeSeriesTable {
    std::string run_id;
    std::vector<double> times;
    std::vector<TimeSeriesColumn> columns;

    const TimeSeriesColumn* find(std::string_view name) const;

    bool operator==(const TimeSeriesTable&) const = default;
};

/// First column is time in seconds; other columns are measurables. Empty
/// cells count as missing and are gap-filled per column.
TimeSeriesTable parse_time_series(const std::filesystem::path& file, const FormatConfig& format,
                                  const GridSpec& grid, std::string run_id);

/// Canonical step a time maps to (|t - t_k| < dt/2), or -1.
std::ptrdiff_t canonical_step(const GridSpec& grid, double time);

} // namespace stens
