#pragma once

#include "stens/volume.hpp"

namespace stens {

/// Per cell: gas if saturation > threshold, else dissolved if concentration
/// > threshold, else water.
SegmentationVolume segment(const SpaceTimeVolume& volume, double threshold);

/// Binary encoding of the classes. The result's saturation field carries
/// gas presence (class == 2) and its concentration field CO2 presence
/// (class >= 1), so every metric applies to segmented data unchanged.
SpaceTimeVolume segmentation_channels(const SegmentationVolume& seg);

/// Inverse of segmentation_channels.
SegmentationVolume classes_from_channels(const SpaceTimeVolume& channels);

} // namespace stens
