#include "stens/segmentation.hpp"

#include "stens/error.hpp"

namespace stens {

SegmentationVolume segment(const SpaceTimeVolume& volume, double threshold) {
    if (!(threshold >= 0)) throw input_error("segmentation threshold must be >= 0", "threshold");
    volume.check_shape();
    SegmentationVolume seg;
    seg.run_id = volume.run_id;
    seg.grid = volume.grid;
    seg.provenance = volume.provenance;
    seg.classes.resize(volume.saturation.size());
    for (std::size_t c = 0; c < seg.classes.size(); ++c) {
        if (volume.saturation[c] > threshold) {
            seg.classes[c] = static_cast<std::uint8_t>(SegClass::Gas);
        } else if (volume.concentration[c] > threshold) {
            seg.classes[c] = static_cast<std::uint8_t>(SegClass::Dissolved);
        } else {
            seg.classes[c] = static_cast<std::uint8_t>(SegClass::Water);
        }
    }
    return seg;
}

SpaceTimeVolume segmentation_channels(const SegmentationVolume& seg) {
    seg.check_shape();
    SpaceTimeVolume out;
    out.run_id = seg.run_id;
    out.grid = seg.grid;
    out.provenance = seg.provenance;
    out.saturation.resize(seg.classes.size());
    out.concentration.resize(seg.classes.size());
    for (std::size_t c = 0; c < seg.classes.size(); ++c) {
        out.saturation[c] = seg.classes[c] == 2 ? 1.0 : 0.0;
        out.concentration[c] = seg.classes[c] >= 1 ? 1.0 : 0.0;
    }
    return out;
}

SegmentationVolume classes_from_channels(const SpaceTimeVolume& channels) {
    channels.check_shape();
    SegmentationVolume seg;
    seg.run_id = channels.run_id;
    seg.grid = channels.grid;
    seg.provenance = channels.provenance;
    seg.classes.resize(channels.saturation.size());
    for (std::size_t c = 0; c < seg.classes.size(); ++c) {
        const bool gas = channels.saturation[c] != 0.0;
        const bool co2 = channels.concentration[c] != 0.0;
        if (gas && !co2) throw input_error("channel pair (1,0) is not a valid class encoding", "channels");
        seg.classes[c] = static_cast<std::uint8_t>(gas ? 2 : (co2 ? 1 : 0));
    }
    return seg;
}

} // namespace stens
