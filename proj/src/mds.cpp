#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "stens/error.hpp"
#include "stens/projection.hpp"

namespace stens {

double raw_stress(std::span<const double> d, std::span<const double> x, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double ex = x[2 * i] - x[2 * j];
            const double ey = x[2 * i + 1] - x[2 * j + 1];
            const double r = d[i * n + j] - std::sqrt(ex * ex + ey * ey);
            s += r * r;
        }
    }
    return s;
}

SmacofTrace smacof(std::span<const double> d, std::size_t n, std::vector<double> init, int max_iterations,
                   double tolerance) {
    SmacofTrace trace;
    trace.coords = std::move(init);
    trace.stress.push_back(raw_stress(d, trace.coords, n));
    std::vector<double> next(2 * n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int it = 0; it < max_iterations; ++it) {
        const auto& x = trace.coords;
        // Guttman transform, unit weights: x_i <- (1/n) sum_j r_ij (x_i - x_j)
        for (std::size_t i = 0; i < n; ++i) {
            double ax = 0, ay = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double ex = x[2 * i] - x[2 * j];
                const double ey = x[2 * i + 1] - x[2 * j + 1];
                const double len = std::sqrt(ex * ex + ey * ey);
                if (len <= 0) continue;
                const double r = d[i * n + j] / len;
                ax += r * ex;
                ay += r * ey;
            }
            next[2 * i] = ax * inv_n;
            next[2 * i + 1] = ay * inv_n;
        }
        trace.coords.swap(next);
        const double prev = trace.stress.back();
        const double cur = raw_stress(d, trace.coords, n);
        trace.stress.push_back(cur);
        trace.iterations = it + 1;
        if (cur == 0 || prev - cur < tolerance * prev) break;
    }
    return trace;
}

ProjectionResult project_mds(const DistanceMatrix& matrix, const ProjectionConfig& cfg) {
    cfg.validate();
    const auto n = matrix.size();
    if (n < 2) throw input_error(fmt::format("MDS needs at least 2 items, got {}", n), "runs");

    ProjectionResult result;
    result.config = cfg;
    result.config.algorithm = Algorithm::Mds;
    result.mode = matrix.mode;

    double total_sq = 0, mean = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            total_sq += matrix(i, j) * matrix(i, j);
            mean += matrix(i, j);
        }
    }
    mean /= static_cast<double>(n * (n - 1) / 2);

    std::vector<double> best;
    if (total_sq == 0) {
        best.assign(2 * n, 0.0);
        result.quality = 0;
    } else {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        double best_stress = std::numeric_limits<double>::infinity();
        // items at distance zero from an earlier item share its start; the
        // Guttman transform then keeps them exactly coincident
        std::vector<std::size_t> twin(n);
        for (std::size_t i = 0; i < n; ++i) {
            twin[i] = i;
            for (std::size_t j = 0; j < i; ++j) {
                if (matrix(i, j) == 0 && twin[j] == j) {
                    twin[i] = j;
                    break;
                }
            }
        }
        for (int r = 0; r < cfg.mds.restarts; ++r) {
            std::vector<double> init(2 * n);
            // scale the start with the data so the iteration is scale-equivariant
            for (auto& v : init) v = uniform(rng) * mean;
            for (std::size_t i = 0; i < n; ++i) {
                init[2 * i] = init[2 * twin[i]];
                init[2 * i + 1] = init[2 * twin[i] + 1];
            }
            auto trace = smacof(matrix.values, n, std::move(init), cfg.mds.max_iterations, cfg.mds.stress_tolerance);
            if (trace.stress.back() < best_stress) {
                best_stress = trace.stress.back();
                best = std::move(trace.coords);
            }
        }
        result.quality = best_stress / total_sq;
    }
    for (std::size_t i = 0; i < n; ++i) result.points.push_back({matrix.labels[i], best[2 * i], best[2 * i + 1]});
    return result;
}

} // namespace stens
