#pragma once

#include <cstddef>
#include <string>

namespace stens {

/// Regular space-time lattice shared by every run of an ensemble.
/// Coordinates are cell centers in meters, times in seconds.
struct GridSpec {
    double x_min = 0.005;
    double x_max = 2.855;
    double y_min = 0.005;
    double y_max = 1.225;
    double dx = 0.01;
    double dy = 0.01;
    double t_min = 0.0;
    double t_max = 86400.0;
    double dt = 600.0;

    /// Default benchmark lattice: 286 x 123 cells, 145 ten-minute steps.
    static GridSpec canonical() { return {}; }

    /// Throws InvalidInput when extents are inverted, steps non-positive or
    /// the step does not divide the extent.
    void validate() const;

    std::size_t nx() const;
    std::size_t ny() const;
    std::size_t nt() const;
    std::size_t cells_per_frame() const { return nx() * ny(); }
    std::size_t cell_count() const { return nt() * nx() * ny(); }

    double x_at(std::size_t i) const { return x_min + static_cast<double>(i) * dx; }
    double y_at(std::size_t j) const { return y_min + static_cast<double>(j) * dy; }
    double t_at(std::size_t k) const { return t_min + static_cast<double>(k) * dt; }

    bool operator==(const GridSpec&) const = default;
};

/// Half-open cell index range [begin, end).
struct CellRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end > begin ? end - begin : 0; }
    bool empty() const { return end <= begin; }
    bool operator==(const CellRange&) const = default;
};

/// Named rectangular evaluation region.
struct Box {
    std::string name;
    double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;

    void validate(const GridSpec& grid) const;

    /// Cells whose centers lie inside the closed rectangle.
    CellRange x_cells(const GridSpec& grid) const;
    CellRange y_cells(const GridSpec& grid) const;
};

} // namespace stens
