#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "stens/grid.hpp"
#include "stens/volume.hpp"

namespace stens::testing {

/// 10 x 5 cells, 10 steps.
inline GridSpec tiny_grid() {
    GridSpec g;
    g.x_min = 0.05;
    g.x_max = 0.95;
    g.y_min = 0.05;
    g.y_max = 0.45;
    g.dx = 0.1;
    g.dy = 0.1;
    g.t_min = 0;
    g.t_max = 5400;
    g.dt = 600;
    return g;
}

/// Canonical extents and time axis at a coarser spacing (58 x 62 cells).
inline GridSpec coarse_grid() {
    GridSpec g;
    g.dx = 0.05;
    g.dy = 0.02;
    return g;
}

inline SpaceTimeVolume random_volume(std::string id, const GridSpec& grid, std::mt19937_64& rng,
                                     double concentration_scale = 2.0) {
    auto v = SpaceTimeVolume::zeros(std::move(id), grid);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // sparse plumes are closer to real data than uniform noise
    for (auto& s : v.saturation) s = u(rng) < 0.3 ? u(rng) : 0.0;
    for (auto& c : v.concentration) c = u(rng) < 0.5 ? concentration_scale * u(rng) : 0.0;
    for (auto& f : v.provenance) f = FillFlag::Measured;
    return v;
}

/// Random histogram with `bins` entries summing to one; some bins empty.
inline std::vector<double> random_histogram(int bins, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> h(static_cast<std::size_t>(bins));
    double sum = 0;
    for (auto& x : h) {
        x = u(rng) < 0.25 ? 0.0 : u(rng);
        sum += x;
    }
    if (sum == 0) {
        h[0] = 1;
        sum = 1;
    }
    for (auto& x : h) x /= sum;
    return h;
}

/// Random symmetric distance matrix with zero diagonal.
inline std::vector<double> random_distance_matrix(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = u(rng);
    }
    return d;
}

inline std::vector<double> euclidean_distances(const std::vector<double>& pts, std::size_t dim) {
    const std::size_t n = pts.size() / dim;
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double diff = pts[i * dim + c] - pts[j * dim + c];
                s += diff * diff;
            }
            d[i * n + j] = std::sqrt(s);
        }
    }
    return d;
}

class TempDir {
public:
    TempDir() {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("stens_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& file, const std::string& text) {
    std::filesystem::create_directories(file.parent_path());
    std::ofstream f(file, std::ios::binary);
    f << text;
}

} // namespace stens::testing
