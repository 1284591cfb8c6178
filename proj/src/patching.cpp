#include "stens/patching.hpp"

#include <fmt/format.h>

#include "stens/error.hpp"

namespace stens {

void PatchSpec::validate(const GridSpec& grid) const {
    if (temporal_size < 1) throw input_error("patch temporal size must be >= 1", "temporal_size");
    if (spatial_downsample < 1) throw input_error("downsample factor must be >= 1", "downsample");
    if (temporal_size > grid.nt()) {
        throw input_error(fmt::format("patch temporal size {} exceeds {} time steps", temporal_size, grid.nt()),
                          "temporal_size");
    }
    if (subdivide) {
        const auto shape = downsampled_shape(grid, spatial_downsample);
        if (subdivide->width < 1 || subdivide->height < 1 || subdivide->width > shape.nx ||
            subdivide->height > shape.ny) {
            throw input_error(fmt::format("sub-patch {}x{} does not fit frame {}x{}", subdivide->width,
                                          subdivide->height, shape.nx, shape.ny),
                              "subdivide");
        }
    }
}

FrameShape downsampled_shape(const GridSpec& grid, std::size_t factor) {
    return {(grid.nx() + factor - 1) / factor, (grid.ny() + factor - 1) / factor};
}

std::size_t patch_count(const GridSpec& grid, const PatchSpec& spec) {
    return grid.nt() / spec.temporal_size;
}

std::vector<SubPatch> sub_patch_layout(FrameShape shape, SubSize size) {
    std::vector<SubPatch> subs;
    const auto cols = shape.nx / size.width;
    const auto rows = shape.ny / size.height;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            subs.push_back({subs.size(), {c * size.width, (c + 1) * size.width},
                            {r * size.height, (r + 1) * size.height}});
        }
    }
    return subs;
}

SpaceTimeVolume downsample(const SpaceTimeVolume& volume, std::size_t factor) {
    if (factor < 1) throw input_error("downsample factor must be >= 1", "downsample");
    if (factor == 1) return volume;
    const auto& g = volume.grid;
    const auto nx = g.nx(), ny = g.ny(), nt = g.nt();
    const auto shape = downsampled_shape(g, factor);

    SpaceTimeVolume out;
    out.run_id = volume.run_id;
    // the coarse grid keeps the origin and widens the spacing; extents are
    // rounded up so every coarse cell has a center
    out.grid = g;
    out.grid.dx = g.dx * static_cast<double>(factor);
    out.grid.dy = g.dy * static_cast<double>(factor);
    out.grid.x_max = g.x_min + static_cast<double>(shape.nx - 1) * out.grid.dx;
    out.grid.y_max = g.y_min + static_cast<double>(shape.ny - 1) * out.grid.dy;
    out.provenance = volume.provenance;
    out.saturation.assign(nt * shape.nx * shape.ny, 0.0);
    out.concentration.assign(nt * shape.nx * shape.ny, 0.0);

    for (std::size_t k = 0; k < nt; ++k) {
        for (std::size_t bj = 0; bj < shape.ny; ++bj) {
            const auto j1 = std::min(ny, (bj + 1) * factor);
            for (std::size_t bi = 0; bi < shape.nx; ++bi) {
                const auto i1 = std::min(nx, (bi + 1) * factor);
                double s = 0, c = 0;
                std::size_t count = 0;
                for (auto j = bj * factor; j < j1; ++j) {
                    const auto row = (k * ny + j) * nx;
                    for (auto i = bi * factor; i < i1; ++i) {
                        s += volume.saturation[row + i];
                        c += volume.concentration[row + i];
                        ++count;
                    }
                }
                const auto o = (k * shape.ny + bj) * shape.nx + bi;
                out.saturation[o] = s / static_cast<double>(count);
                out.concentration[o] = c / static_cast<double>(count);
            }
        }
    }
    return out;
}

std::vector<Patch> extract_patches(std::shared_ptr<const SpaceTimeVolume> volume, const PatchSpec& spec) {
    volume->check_shape();
    spec.validate(volume->grid);
    if (spec.spatial_downsample > 1) {
        volume = std::make_shared<const SpaceTimeVolume>(downsample(*volume, spec.spatial_downsample));
    }
    const auto& g = volume->grid;
    const FrameShape shape{g.nx(), g.ny()};
    const auto frame = shape.nx * shape.ny;
    const auto block = frame * spec.temporal_size;
    const auto count = patch_count(g, spec);
    const auto subs = spec.subdivide ? sub_patch_layout(shape, *spec.subdivide) : std::vector<SubPatch>{};

    std::vector<Patch> patches;
    patches.reserve(count);
    for (std::size_t p = 0; p < count; ++p) {
        Patch patch;
        patch.run_id = volume->run_id;
        patch.index = p;
        patch.t_begin = p * spec.temporal_size;
        patch.t_end = patch.t_begin + spec.temporal_size;
        patch.x = {0, shape.nx};
        patch.y = {0, shape.ny};
        patch.saturation = std::span<const double>(volume->saturation).subspan(p * block, block);
        patch.concentration = std::span<const double>(volume->concentration).subspan(p * block, block);
        patch.subs = subs;
        patch.keepalive = volume;
        patches.push_back(std::move(patch));
    }
    return patches;
}

std::vector<Patch> extract_patches(const SpaceTimeVolume& volume, const PatchSpec& spec) {
    return extract_patches(std::make_shared<const SpaceTimeVolume>(volume), spec);
}

} // namespace stens
