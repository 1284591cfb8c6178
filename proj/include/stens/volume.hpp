#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stens/grid.hpp"

namespace stens {

enum class FillFlag : std::uint8_t { Measured = 0, Repeated = 1, ZeroFilled = 2 };

const char* to_string(FillFlag flag);

/// Dense (saturation, concentration) fields of one run on the ensemble grid.
/// Storage order is t-major, then y, then x: index = (k * ny + j) * nx + i.
struct SpaceTimeVolume {
    std::string run_id;
    GridSpec grid;
    std::vector<double> saturation;
    std::vector<double> concentration;
    std::vector<FillFlag> provenance;  // one per time step

    /// All-zero volume, every step flagged zero-filled.
    static SpaceTimeVolume zeros(std::string run_id, const GridSpec& grid);

    std::size_t index(std::size_t k, std::size_t j, std::size_t i) const {
        return (k * grid.ny() + j) * grid.nx() + i;
    }

    std::span<const double> saturation_frame(std::size_t k) const;
    std::span<const double> concentration_frame(std::size_t k) const;

    /// Throws when array sizes disagree with the grid.
    void check_shape() const;

    bool operator==(const SpaceTimeVolume&) const = default;
};

enum class SegClass : std::uint8_t { Water = 0, Dissolved = 1, Gas = 2 };

/// Ternary per-cell classification, same layout as SpaceTimeVolume.
struct SegmentationVolume {
    std::string run_id;
    GridSpec grid;
    std::vector<std::uint8_t> classes;
    std::vector<FillFlag> provenance;

    static SegmentationVolume zeros(std::string run_id, const GridSpec& grid);

    void check_shape() const;

    bool operator==(const SegmentationVolume&) const = default;
};

} // namespace stens
