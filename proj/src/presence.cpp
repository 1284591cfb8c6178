#include "stens/presence.hpp"

#include <fmt/format.h>

#include "stens/error.hpp"

namespace stens {

const char* to_string(Channel channel) {
    switch (channel) {
    case Channel::Saturation: return "saturation";
    case Channel::Concentration: return "concentration";
    case Channel::GasPresence: return "gas_presence";
    case Channel::Co2Presence: return "co2_presence";
    }
    return "unknown";
}

Channel parse_channel(std::string_view s) {
    for (auto c : {Channel::Saturation, Channel::Concentration, Channel::GasPresence, Channel::Co2Presence}) {
        if (s == to_string(c)) return c;
    }
    throw input_error(fmt::format("unknown channel '{}'", s), "channel");
}

namespace {

struct BoxCells {
    CellRange x, y;
};

BoxCells box_cells(const GridSpec& grid, const Box& box) {
    box.validate(grid);
    BoxCells cells{box.x_cells(grid), box.y_cells(grid)};
    if (cells.x.empty() || cells.y.empty()) {
        throw input_error(fmt::format("box {} contains no grid cells", box.name), "box");
    }
    return cells;
}

template <typename Present>
std::optional<double> scan(const GridSpec& grid, const BoxCells& cells, Present&& present) {
    const auto nx = grid.nx(), ny = grid.ny(), nt = grid.nt();
    for (std::size_t k = 0; k < nt; ++k) {
        for (auto j = cells.y.begin; j < cells.y.end; ++j) {
            for (auto i = cells.x.begin; i < cells.x.end; ++i) {
                if (present((k * ny + j) * nx + i)) return grid.t_at(k) / 60.0;
            }
        }
    }
    return std::nullopt;
}

} // namespace

std::optional<double> first_presence_time(const SpaceTimeVolume& volume, const Box& box, Channel channel,
                                          double threshold) {
    if (!(threshold >= 0)) throw input_error("threshold must be >= 0", "threshold");
    volume.check_shape();
    const auto cells = box_cells(volume.grid, box);
    const auto& s = volume.saturation;
    const auto& c = volume.concentration;
    switch (channel) {
    case Channel::Saturation:
    case Channel::GasPresence:
        return scan(volume.grid, cells, [&](std::size_t i) { return s[i] > threshold; });
    case Channel::Concentration:
        return scan(volume.grid, cells, [&](std::size_t i) { return c[i] > threshold; });
    case Channel::Co2Presence:
        return scan(volume.grid, cells, [&](std::size_t i) { return s[i] > threshold || c[i] > threshold; });
    }
    return std::nullopt;
}

std::optional<double> first_presence_time(const SegmentationVolume& seg, const Box& box, Channel channel) {
    seg.check_shape();
    const auto cells = box_cells(seg.grid, box);
    const auto& cls = seg.classes;
    switch (channel) {
    case Channel::GasPresence: return scan(seg.grid, cells, [&](std::size_t i) { return cls[i] == 2; });
    case Channel::Co2Presence: return scan(seg.grid, cells, [&](std::size_t i) { return cls[i] >= 1; });
    default:
        throw input_error(fmt::format("channel {} is not available on segmentation maps", to_string(channel)),
                          "channel");
    }
}

} // namespace stens
