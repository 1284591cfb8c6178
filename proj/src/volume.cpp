#include "stens/volume.hpp"

#include <fmt/format.h>

#include "stens/error.hpp"

namespace stens {

const char* to_string(FillFlag flag) {
    switch (flag) {
    case FillFlag::Measured: return "measured";
    case FillFlag::Repeated: return "repeated";
    case FillFlag::ZeroFilled: return "zero-filled";
    }
    return "unknown";
}

SpaceTimeVolume SpaceTimeVolume::zeros(std::string run_id, const GridSpec& grid) {
    SpaceTimeVolume v;
    v.run_id = std::move(run_id);
    v.grid = grid;
    v.saturation.assign(grid.cell_count(), 0.0);
    v.concentration.assign(grid.cell_count(), 0.0);
    v.provenance.assign(grid.nt(), FillFlag::ZeroFilled);
    return v;
}

std::span<const double> SpaceTimeVolume::saturation_frame(std::size_t k) const {
    const auto n = grid.cells_per_frame();
    return std::span<const double>(saturation).subspan(k * n, n);
}

std::span<const double> SpaceTimeVolume::concentration_frame(std::size_t k) const {
    const auto n = grid.cells_per_frame();
    return std::span<const double>(concentration).subspan(k * n, n);
}

void SpaceTimeVolume::check_shape() const {
    const auto n = grid.cell_count();
    if (saturation.size() != n || concentration.size() != n || provenance.size() != grid.nt()) {
        throw input_error(fmt::format("volume {}: array sizes do not match grid {}x{}x{}", run_id, grid.nt(),
                                      grid.ny(), grid.nx()));
    }
}

SegmentationVolume SegmentationVolume::zeros(std::string run_id, const GridSpec& grid) {
    SegmentationVolume v;
    v.run_id = std::move(run_id);
    v.grid = grid;
    v.classes.assign(grid.cell_count(), 0);
    v.provenance.assign(grid.nt(), FillFlag::ZeroFilled);
    return v;
}

void SegmentationVolume::check_shape() const {
    if (classes.size() != grid.cell_count() || provenance.size() != grid.nt()) {
        throw input_error(fmt::format("segmentation {}: array sizes do not match grid", run_id));
    }
}

} // namespace stens
