#include "stens/grid.hpp"

#include <cmath>

#include <fmt/format.h>

#include "stens/error.hpp"

namespace stens {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Conflict: return "conflict";
    }
    return "unknown";
}

namespace {

std::size_t count_steps(double lo, double hi, double step, const char* axis) {
    const double steps = (hi - lo) / step;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, std::abs(steps))) {
        throw input_error(fmt::format("grid axis {}: extent {} is not a multiple of step {}", axis, hi - lo, step),
                          axis);
    }
    return static_cast<std::size_t>(rounded) + 1;
}

} // namespace

void GridSpec::validate() const {
    if (!(x_min < x_max)) throw input_error("grid: x_min must be < x_max", "x");
    if (!(y_min < y_max)) throw input_error("grid: y_min must be < y_max", "y");
    if (!(t_min < t_max)) throw input_error("grid: t_min must be < t_max", "t");
    if (!(dx > 0) || !(dy > 0) || !(dt > 0)) throw input_error("grid: steps must be positive", "step");
    count_steps(x_min, x_max, dx, "x");
    count_steps(y_min, y_max, dy, "y");
    count_steps(t_min, t_max, dt, "t");
}

std::size_t GridSpec::nx() const { return count_steps(x_min, x_max, dx, "x"); }
std::size_t GridSpec::ny() const { return count_steps(y_min, y_max, dy, "y"); }
std::size_t GridSpec::nt() const { return count_steps(t_min, t_max, dt, "t"); }

namespace {

CellRange cells_within(double lo, double hi, double origin, double step, std::size_t n) {
    // first center >= lo, last center <= hi, with a small tolerance for
    // coordinates that sit exactly on a center
    const double eps = 1e-9;
    const double first = std::ceil((lo - origin) / step - eps);
    const double last = std::floor((hi - origin) / step + eps);
    const double b = std::max(first, 0.0);
    const double e = std::min(last + 1.0, static_cast<double>(n));
    if (e <= b) return {};
    return {static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
}

} // namespace

void Box::validate(const GridSpec& grid) const {
    if (!(x_lo < x_hi) || !(y_lo < y_hi)) {
        throw input_error(fmt::format("box {}: lower bounds must be below upper bounds", name), "box");
    }
    const double tol = 0.5 * std::max(grid.dx, grid.dy);
    if (x_lo < grid.x_min - tol || x_hi > grid.x_max + tol || y_lo < grid.y_min - tol ||
        y_hi > grid.y_max + tol) {
        throw input_error(fmt::format("box {}: region exceeds grid extents", name), "box");
    }
}

CellRange Box::x_cells(const GridSpec& grid) const {
    return cells_within(x_lo, x_hi, grid.x_min, grid.dx, grid.nx());
}

CellRange Box::y_cells(const GridSpec& grid) const {
    return cells_within(y_lo, y_hi, grid.y_min, grid.dy, grid.ny());
}

} // namespace stens
