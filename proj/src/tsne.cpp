#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "stens/error.hpp"
#include "stens/projection.hpp"

namespace stens {

namespace {

constexpr double kMinProbability = 1e-12;

void check_perplexity(std::size_t n, double perplexity) {
    if (n < 4) throw input_error(fmt::format("t-SNE needs at least 4 items, got {}", n), "runs");
    if (!(perplexity > 0) || !(3.0 * perplexity < static_cast<double>(n - 1))) {
        throw input_error(fmt::format("perplexity {} too large for {} items (must be < {:.3f})", perplexity, n,
                                      static_cast<double>(n - 1) / 3.0),
                          "perplexity");
    }
}

double kl_divergence(std::span<const double> p, std::span<const double> y, std::size_t n) {
    double z = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double ex = y[2 * i] - y[2 * j], ey = y[2 * i + 1] - y[2 * j + 1];
            z += 1.0 / (1.0 + ex * ex + ey * ey);
        }
    }
    double kl = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || p[i * n + j] <= 0) continue;
            const double ex = y[2 * i] - y[2 * j], ey = y[2 * i + 1] - y[2 * j + 1];
            const double q = std::max(1.0 / (1.0 + ex * ex + ey * ey) / z, kMinProbability);
            kl += p[i * n + j] * std::log(p[i * n + j] / q);
        }
    }
    return kl;
}

} // namespace

std::vector<double> tsne_joint_probabilities(std::span<const double> d, std::size_t n, double perplexity) {
    check_perplexity(n, perplexity);
    std::vector<double> sq(n * n);
    double max_sq = 0;
    for (std::size_t i = 0; i < n * n; ++i) {
        sq[i] = d[i] * d[i];
        max_sq = std::max(max_sq, sq[i]);
    }
    if (max_sq > 0) {
        for (auto& v : sq) v /= max_sq;
    }

    const double target = std::log(perplexity);
    std::vector<double> cond(n * n, 0.0);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        double shift = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) shift = std::min(shift, sq[i * n + j]);
        }
        double beta = 1.0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (int step = 0; step < 64; ++step) {
            double sum = 0, weighted = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    row[j] = 0;
                    continue;
                }
                const double e = sq[i * n + j] - shift;
                row[j] = std::exp(-beta * e);
                sum += row[j];
                weighted += e * row[j];
            }
            const double entropy = std::log(sum) + beta * weighted / sum;
            for (std::size_t j = 0; j < n; ++j) cond[i * n + j] = row[j] / sum;
            const double diff = entropy - target;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = std::isinf(lo) ? beta / 2.0 : 0.5 * (beta + lo);
            }
        }
    }

    std::vector<double> p(n * n, 0.0);
    const double norm = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (cond[i * n + j] + cond[j * n + i]) * norm;
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
    }
    return p;
}

TsneTrace tsne(std::span<const double> d, std::size_t n, const TsneOptions& opt, std::uint64_t seed) {
    const auto p = tsne_joint_probabilities(d, n, opt.perplexity);
    TsneTrace trace;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1e-4);
    auto& y = trace.coords;
    y.resize(2 * n);
    for (auto& v : y) v = normal(rng);

    std::vector<double> grad(2 * n), update(2 * n, 0.0), gains(2 * n, 1.0), num(n * n);
    for (int it = 0; it < opt.iterations; ++it) {
        const double exaggeration = it < opt.exaggeration_iterations ? opt.early_exaggeration : 1.0;
        const double momentum = it < opt.momentum_switch_iteration ? opt.initial_momentum : opt.final_momentum;

        double z = 0;
        for (std::size_t i = 0; i < n; ++i) {
            num[i * n + i] = 0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double ex = y[2 * i] - y[2 * j], ey = y[2 * i + 1] - y[2 * j + 1];
                const double q = 1.0 / (1.0 + ex * ex + ey * ey);
                num[i * n + j] = q;
                num[j * n + i] = q;
                z += 2.0 * q;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            double gx = 0, gy = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double q = std::max(num[i * n + j] / z, kMinProbability);
                const double mult = (exaggeration * p[i * n + j] - q) * num[i * n + j];
                gx += mult * (y[2 * i] - y[2 * j]);
                gy += mult * (y[2 * i + 1] - y[2 * j + 1]);
            }
            grad[2 * i] = 4.0 * gx;
            grad[2 * i + 1] = 4.0 * gy;
        }
        for (std::size_t k = 0; k < 2 * n; ++k) {
            gains[k] = (grad[k] > 0) != (update[k] > 0) ? gains[k] + 0.2 : gains[k] * 0.8;
            gains[k] = std::max(gains[k], 0.01);
            update[k] = momentum * update[k] - opt.learning_rate * gains[k] * grad[k];
            y[k] += update[k];
        }
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += y[2 * i];
            my += y[2 * i + 1];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }
        if ((it + 1) % 50 == 0) trace.kl.push_back(kl_divergence(p, y, n));
    }
    if (opt.iterations % 50 != 0 || opt.iterations == 0) trace.kl.push_back(kl_divergence(p, y, n));
    return trace;
}

ProjectionResult project_tsne(const DistanceMatrix& matrix, const ProjectionConfig& cfg) {
    cfg.validate();
    const auto n = matrix.size();
    check_perplexity(n, cfg.tsne.perplexity);
    const auto trace = tsne(matrix.values, n, cfg.tsne, cfg.seed);
    ProjectionResult result;
    result.config = cfg;
    result.config.algorithm = Algorithm::Tsne;
    result.mode = matrix.mode;
    result.quality = trace.kl.back();
    for (std::size_t i = 0; i < n; ++i) {
        result.points.push_back({matrix.labels[i], trace.coords[2 * i], trace.coords[2 * i + 1]});
    }
    return result;
}

} // namespace stens
