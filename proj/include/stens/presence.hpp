#pragma once

#include <optional>
#include <string_view>

#include "stens/grid.hpp"
#include "stens/volume.hpp"

namespace stens {

/// What counts as "present" in a cell.
enum class Channel {
    Saturation,     // saturation > threshold
    Concentration,  // concentration > threshold
    GasPresence,    // class 2 (simulation: saturation > threshold)
    Co2Presence,    // class >= 1 (simulation: saturation or concentration > threshold)
};

const char* to_string(Channel channel);
Channel parse_channel(std::string_view s);

/// Earliest canonical time, in minutes, at which any cell of `box` is
/// present on `channel`; nullopt if that never happens.
std::optional<double> first_presence_time(const SpaceTimeVolume& volume, const Box& box, Channel channel,
                                          double threshold);

/// Segmentation maps only support the two presence channels.
std::optional<double> first_presence_time(const SegmentationVolume& seg, const Box& box, Channel channel);

} // namespace stens
