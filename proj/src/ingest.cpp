#include "stens/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <regex>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "stens/error.hpp"
#include "stens/text.hpp"

namespace fs = std::filesystem;

namespace stens {

namespace {

struct FrameFile {
    double time;
    fs::path path;
};

std::vector<FrameFile> list_frame_files(const fs::path& dir, const FormatConfig& format) {
    if (!fs::is_directory(dir)) throw input_error("not a directory: " + dir.string(), dir.string());
    std::regex pattern;
    try {
        pattern = std::regex(format.time_pattern);
    } catch (const std::regex_error& e) {
        throw input_error(fmt::format("invalid time pattern '{}': {}", format.time_pattern, e.what()), "time_pattern");
    }
    std::vector<FrameFile> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_search(name, m, pattern) || m.size() < 2) {
            spdlog::debug("skipping {}: name does not match time pattern", name);
            continue;
        }
        const auto t = text::parse_double(m[1].str());
        if (!t) throw input_error(fmt::format("{}: cannot read frame time from '{}'", name, m[1].str()), name);
        files.push_back({*t, entry.path()});
    }
    std::sort(files.begin(), files.end(), [](const FrameFile& a, const FrameFile& b) {
        return a.time < b.time || (a.time == b.time && a.path < b.path);
    });
    for (std::size_t i = 1; i < files.size(); ++i) {
        if (files[i].time == files[i - 1].time) {
            throw input_error(fmt::format("duplicate frame time {} s: {} and {}", files[i].time,
                                          files[i - 1].path.filename().string(), files[i].path.filename().string()),
                              files[i].path.string());
        }
    }
    return files;
}

std::vector<std::size_t> header_columns(std::string_view header_line, char delimiter,
                                        std::span<const std::string_view> required, const std::string& file) {
    const auto fields = text::split(header_line, delimiter);
    std::vector<std::size_t> idx(required.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t c = 0; c < fields.size(); ++c) {
        const auto name = text::lower(text::trim(fields[c]));
        for (std::size_t r = 0; r < required.size(); ++r) {
            if (name == required[r]) idx[r] = c;
        }
    }
    for (std::size_t r = 0; r < required.size(); ++r) {
        if (idx[r] == std::numeric_limits<std::size_t>::max()) {
            throw input_error(fmt::format("{}: missing required column '{}'", file, required[r]), file);
        }
    }
    return idx;
}

double field_value(const std::vector<std::string_view>& fields, std::size_t col, const std::string& file,
                   std::size_t line) {
    if (col >= fields.size()) {
        throw input_error(fmt::format("{}:{}: expected at least {} columns", file, line, col + 1), file);
    }
    const auto v = text::parse_double(fields[col]);
    if (!v || !std::isfinite(*v)) {
        throw input_error(fmt::format("{}:{}: cannot parse '{}' in column {}", file, line, text::trim(fields[col]),
                                      col + 1),
                          file);
    }
    return *v;
}

struct PointKey {
    std::uint64_t x, y;
    bool operator==(const PointKey&) const = default;
};

struct PointKeyHash {
    std::size_t operator()(const PointKey& k) const noexcept {
        return std::hash<std::uint64_t>{}(k.x * 0x9E3779B97F4A7C15ull ^ k.y);
    }
};

PointKey point_key(double x, double y) {
    // +0.0 and -0.0 are the same location
    return {std::bit_cast<std::uint64_t>(x + 0.0), std::bit_cast<std::uint64_t>(y + 0.0)};
}

/// Reads one table and hands each parsed row to `on_row(fields, line)`.
template <typename OnRow>
void read_rows(const fs::path& path, const FormatConfig& format, std::span<const std::string_view> required,
               OnRow&& on_row) {
    const auto file = path.string();
    const auto buffer = text::read_file(file);
    text::LineReader reader(buffer);
    std::string_view line;
    bool have_header = false;
    std::vector<std::size_t> cols;
    while (reader.next(line)) {
        if (text::trim(line).empty()) continue;
        if (!have_header) {
            cols = header_columns(line, format.delimiter, required, file);
            have_header = true;
            continue;
        }
        on_row(text::split(line, format.delimiter), cols, file, reader.line_number());
    }
    if (!have_header) throw input_error(file + ": empty file, header row required", file);
}

/// For every cell of one grid frame, the index of the closest sample within
/// max(dx, dy) of the cell center, or -1. Ties go to the earlier sample.
std::vector<std::ptrdiff_t> nearest_samples(std::span<const double> xs, std::span<const double> ys,
                                            const GridSpec& grid) {
    const auto nx = static_cast<std::ptrdiff_t>(grid.nx());
    const auto ny = static_cast<std::ptrdiff_t>(grid.ny());
    const double radius = std::max(grid.dx, grid.dy);
    const double radius2 = radius * radius;
    const auto rx = static_cast<std::ptrdiff_t>(std::ceil(radius / grid.dx)) + 1;
    const auto ry = static_cast<std::ptrdiff_t>(std::ceil(radius / grid.dy)) + 1;
    const auto bw = nx + 2 * rx;
    const auto bh = ny + 2 * ry;

    // bucket samples by their nearest cell, CSR layout, sample order preserved
    std::vector<std::ptrdiff_t> bucket_of(xs.size(), -1);
    std::vector<std::size_t> offsets(static_cast<std::size_t>(bw * bh) + 1, 0);
    for (std::size_t s = 0; s < xs.size(); ++s) {
        const double fi = std::floor((xs[s] - grid.x_min) / grid.dx + 0.5);
        const double fj = std::floor((ys[s] - grid.y_min) / grid.dy + 0.5);
        if (!(fi >= -rx && fi < nx + rx && fj >= -ry && fj < ny + ry)) continue;
        const auto b = (static_cast<std::ptrdiff_t>(fj) + ry) * bw + static_cast<std::ptrdiff_t>(fi) + rx;
        bucket_of[s] = b;
        ++offsets[static_cast<std::size_t>(b) + 1];
    }
    for (std::size_t b = 1; b < offsets.size(); ++b) offsets[b] += offsets[b - 1];
    std::vector<std::size_t> members(offsets.back());
    {
        auto fill = offsets;
        for (std::size_t s = 0; s < xs.size(); ++s) {
            if (bucket_of[s] >= 0) members[fill[static_cast<std::size_t>(bucket_of[s])]++] = s;
        }
    }

    std::vector<std::ptrdiff_t> nearest(static_cast<std::size_t>(nx * ny), -1);
    for (std::ptrdiff_t j = 0; j < ny; ++j) {
        const double cy = grid.y_at(static_cast<std::size_t>(j));
        for (std::ptrdiff_t i = 0; i < nx; ++i) {
            const double cx = grid.x_at(static_cast<std::size_t>(i));
            double best = std::numeric_limits<double>::infinity();
            std::ptrdiff_t best_s = -1;
            for (auto bj = j; bj <= j + 2 * ry; ++bj) {
                for (auto bi = i; bi <= i + 2 * rx; ++bi) {
                    const auto b = static_cast<std::size_t>(bj * bw + bi);
                    for (auto m = offsets[b]; m < offsets[b + 1]; ++m) {
                        const auto s = members[m];
                        const double ddx = xs[s] - cx;
                        const double ddy = ys[s] - cy;
                        const double d2 = ddx * ddx + ddy * ddy;
                        if (d2 < best || (d2 == best && static_cast<std::ptrdiff_t>(s) < best_s)) {
                            best = d2;
                            best_s = static_cast<std::ptrdiff_t>(s);
                        }
                    }
                }
            }
            if (best_s >= 0 && best <= radius2) nearest[static_cast<std::size_t>(j * nx + i)] = best_s;
        }
    }
    return nearest;
}

/// Assigns each frame a canonical step; throws when two frames collide.
template <typename Frame>
std::vector<const Frame*> frames_by_step(std::span<const Frame> frames, const GridSpec& grid,
                                         const std::string& run_id) {
    std::vector<const Frame*> by_step(grid.nt(), nullptr);
    for (const auto& frame : frames) {
        const auto k = canonical_step(grid, frame.time);
        if (k < 0) {
            spdlog::debug("run {}: frame at t={} s lies outside the time axis, ignored", run_id, frame.time);
            continue;
        }
        auto& slot = by_step[static_cast<std::size_t>(k)];
        if (slot != nullptr) {
            throw input_error(fmt::format("run {}: frames at t={} s and t={} s both map to step {}", run_id,
                                          slot->time, frame.time, k),
                              run_id);
        }
        slot = &frame;
    }
    return by_step;
}

/// Walks the time axis applying the gap rules. `fill_measured(k, frame)`
/// writes step k from a frame, `copy_previous(k)` duplicates step k-1.
template <typename Frame, typename Measured, typename Repeat>
std::vector<FillFlag> apply_gap_rules(const std::vector<const Frame*>& by_step, Measured&& fill_measured,
                                      Repeat&& copy_previous) {
    std::vector<FillFlag> flags(by_step.size(), FillFlag::ZeroFilled);
    bool seen = false;
    for (std::size_t k = 0; k < by_step.size(); ++k) {
        if (by_step[k] != nullptr) {
            fill_measured(k, *by_step[k]);
            flags[k] = FillFlag::Measured;
            seen = true;
        } else if (seen) {
            copy_previous(k);
            flags[k] = FillFlag::Repeated;
        }
    }
    return flags;
}

} // namespace

std::ptrdiff_t canonical_step(const GridSpec& grid, double time) {
    const double pos = (time - grid.t_min) / grid.dt;
    const double k = std::round(pos);
    if (k < 0 || k >= static_cast<double>(grid.nt())) return -1;
    if (std::abs(time - grid.t_at(static_cast<std::size_t>(k))) < 0.5 * grid.dt) {
        return static_cast<std::ptrdiff_t>(k);
    }
    return -1;
}

std::vector<RawFrame> parse_spatial_maps(const fs::path& dir, const FormatConfig& format) {
    static constexpr std::string_view required[] = {"x", "y", "saturation", "concentration"};
    std::vector<RawFrame> frames;
    for (const auto& file : list_frame_files(dir, format)) {
        RawFrame frame;
        frame.time = file.time;
        std::unordered_set<PointKey, PointKeyHash> seen;
        std::size_t clamped = 0;
        read_rows(file.path, format, required,
                  [&](const std::vector<std::string_view>& fields, const std::vector<std::size_t>& cols,
                      const std::string& name, std::size_t line) {
                      Sample s;
                      s.x = field_value(fields, cols[0], name, line);
                      s.y = field_value(fields, cols[1], name, line);
                      s.saturation = field_value(fields, cols[2], name, line);
                      s.concentration = field_value(fields, cols[3], name, line);
                      if (!seen.insert(point_key(s.x, s.y)).second) {
                          throw input_error(fmt::format("{}:{}: duplicate sample at ({}, {})", name, line, s.x, s.y),
                                            name);
                      }
                      if (s.saturation < 0 || s.saturation > 1 || s.concentration < 0) {
                          s.saturation = std::clamp(s.saturation, 0.0, 1.0);
                          s.concentration = std::max(s.concentration, 0.0);
                          ++clamped;
                      }
                      frame.samples.push_back(s);
                  });
        if (clamped > 0) {
            spdlog::warn("{}: clamped {} out-of-range samples", file.path.filename().string(), clamped);
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

SpaceTimeVolume align_volume(std::string run_id, std::span<const RawFrame> frames, const GridSpec& grid) {
    grid.validate();
    auto volume = SpaceTimeVolume::zeros(std::move(run_id), grid);
    const auto by_step = frames_by_step(frames, grid, volume.run_id);
    const auto n = grid.cells_per_frame();

    volume.provenance = apply_gap_rules(
        by_step,
        [&](std::size_t k, const RawFrame& frame) {
            std::vector<double> xs(frame.samples.size()), ys(frame.samples.size());
            for (std::size_t s = 0; s < frame.samples.size(); ++s) {
                xs[s] = frame.samples[s].x;
                ys[s] = frame.samples[s].y;
            }
            const auto nearest = nearest_samples(xs, ys, grid);
            for (std::size_t c = 0; c < n; ++c) {
                if (nearest[c] < 0) continue;
                const auto& s = frame.samples[static_cast<std::size_t>(nearest[c])];
                volume.saturation[k * n + c] = std::clamp(s.saturation, 0.0, 1.0);
                volume.concentration[k * n + c] = std::max(s.concentration, 0.0);
            }
        },
        [&](std::size_t k) {
            std::copy_n(volume.saturation.begin() + static_cast<std::ptrdiff_t>((k - 1) * n), n,
                        volume.saturation.begin() + static_cast<std::ptrdiff_t>(k * n));
            std::copy_n(volume.concentration.begin() + static_cast<std::ptrdiff_t>((k - 1) * n), n,
                        volume.concentration.begin() + static_cast<std::ptrdiff_t>(k * n));
        });
    return volume;
}

std::vector<SegFrame> parse_segmentation_frames(const fs::path& dir, const FormatConfig& format) {
    static constexpr std::string_view required[] = {"x", "y", "class"};
    std::vector<SegFrame> frames;
    for (const auto& file : list_frame_files(dir, format)) {
        SegFrame frame;
        frame.time = file.time;
        std::unordered_set<PointKey, PointKeyHash> seen;
        read_rows(file.path, format, required,
                  [&](const std::vector<std::string_view>& fields, const std::vector<std::size_t>& cols,
                      const std::string& name, std::size_t line) {
                      SegSample s;
                      s.x = field_value(fields, cols[0], name, line);
                      s.y = field_value(fields, cols[1], name, line);
                      const double cls = field_value(fields, cols[2], name, line);
                      if (cls != 0.0 && cls != 1.0 && cls != 2.0) {
                          throw input_error(
                              fmt::format("{}:{}: segmentation class {} outside {{0,1,2}}", name, line, cls), name);
                      }
                      s.cls = static_cast<std::uint8_t>(cls);
                      if (!seen.insert(point_key(s.x, s.y)).second) {
                          throw input_error(fmt::format("{}:{}: duplicate sample at ({}, {})", name, line, s.x, s.y),
                                            name);
                      }
                      frame.samples.push_back(s);
                  });
        frames.push_back(std::move(frame));
    }
    return frames;
}

SegmentationVolume align_segmentation(std::string run_id, std::span<const SegFrame> frames, const GridSpec& grid) {
    grid.validate();
    auto volume = SegmentationVolume::zeros(std::move(run_id), grid);
    const auto by_step = frames_by_step(frames, grid, volume.run_id);
    const auto n = grid.cells_per_frame();
    volume.provenance = apply_gap_rules(
        by_step,
        [&](std::size_t k, const SegFrame& frame) {
            std::vector<double> xs(frame.samples.size()), ys(frame.samples.size());
            for (std::size_t s = 0; s < frame.samples.size(); ++s) {
                xs[s] = frame.samples[s].x;
                ys[s] = frame.samples[s].y;
            }
            const auto nearest = nearest_samples(xs, ys, grid);
            for (std::size_t c = 0; c < n; ++c) {
                if (nearest[c] >= 0) volume.classes[k * n + c] = frame.samples[static_cast<std::size_t>(nearest[c])].cls;
            }
        },
        [&](std::size_t k) {
            std::copy_n(volume.classes.begin() + static_cast<std::ptrdiff_t>((k - 1) * n), n,
                        volume.classes.begin() + static_cast<std::ptrdiff_t>(k * n));
        });
    return volume;
}

SegmentationVolume parse_segmentation_maps(const fs::path& dir, const FormatConfig& format, const GridSpec& grid,
                                           std::string run_id) {
    const auto frames = parse_segmentation_frames(dir, format);
    return align_segmentation(std::move(run_id), frames, grid);
}

const TimeSeriesColumn* TimeSeriesTable::find(std::string_view name) const {
    for (const auto& c : columns) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

TimeSeriesTable parse_time_series(const fs::path& path, const FormatConfig& format, const GridSpec& grid,
                                  std::string run_id) {
    grid.validate();
    const auto file = path.string();
    const auto buffer = text::read_file(file);
    text::LineReader reader(buffer);
    std::string_view line;

    TimeSeriesTable table;
    table.run_id = std::move(run_id);
    const auto nt = grid.nt();
    for (std::size_t k = 0; k < nt; ++k) table.times.push_back(grid.t_at(k));

    std::vector<std::vector<std::optional<double>>> raw;
    std::vector<bool> step_seen(nt, false);
    bool have_header = false;
    while (reader.next(line)) {
        if (text::trim(line).empty()) continue;
        const auto fields = text::split(line, format.delimiter);
        if (!have_header) {
            if (fields.size() < 2) throw input_error(file + ": header needs a time column and at least one measurable", file);
            for (std::size_t c = 1; c < fields.size(); ++c) {
                table.columns.push_back({std::string(text::trim(fields[c])), {}, {}});
            }
            raw.assign(table.columns.size(), std::vector<std::optional<double>>(nt));
            have_header = true;
            continue;
        }
        const auto row = reader.line_number();
        if (fields.size() != table.columns.size() + 1) {
            throw input_error(fmt::format("{}:{}: expected {} columns, found {}", file, row, table.columns.size() + 1,
                                          fields.size()),
                              file);
        }
        const auto t = text::parse_double(fields[0]);
        if (!t) throw input_error(fmt::format("{}: row {} column 1: non-numeric time '{}'", file, row, fields[0]), file);
        const auto k = canonical_step(grid, *t);
        if (k < 0) continue;
        if (step_seen[static_cast<std::size_t>(k)]) {
            throw input_error(fmt::format("{}: row {}: second sample for t={} s", file, row, grid.t_at(k)), file);
        }
        step_seen[static_cast<std::size_t>(k)] = true;
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (text::trim(fields[c]).empty()) continue;
            const auto v = text::parse_double(fields[c]);
            if (!v || !std::isfinite(*v)) {
                throw input_error(
                    fmt::format("{}: row {} column {}: non-numeric value '{}'", file, row, c + 1, text::trim(fields[c])),
                    file);
            }
            raw[c - 1][static_cast<std::size_t>(k)] = *v;
        }
    }
    if (!have_header) throw input_error(file + ": empty file, header row required", file);

    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        auto& col = table.columns[c];
        col.values.assign(nt, 0.0);
        col.flags.assign(nt, FillFlag::ZeroFilled);
        bool seen = false;
        for (std::size_t k = 0; k < nt; ++k) {
            if (raw[c][k]) {
                col.values[k] = *raw[c][k];
                col.flags[k] = FillFlag::Measured;
                seen = true;
            } else if (seen) {
                col.values[k] = col.values[k - 1];
                col.flags[k] = FillFlag::Repeated;
            }
        }
    }
    return table;
}

} // namespace stens
