#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stens/distance_matrix.hpp"

namespace stens {

enum class Algorithm { Mds, Tsne };

const char* to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view s);

struct MdsOptions {
    int max_iterations = 300;
    double stress_tolerance = 1e-6;  // relative decrease between iterations
    int restarts = 4;
};

struct TsneOptions {
    double perplexity = 10.0;
    int iterations = 1000;
    double learning_rate = 100.0;
    double early_exaggeration = 4.0;
    int exaggeration_iterations = 100;
    int momentum_switch_iteration = 250;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
};

struct ProjectionConfig {
    Algorithm algorithm = Algorithm::Mds;
    MdsOptions mds;
    TsneOptions tsne;
    std::uint64_t seed = 1;

    void validate() const;
};

struct ProjectedPoint {
    ItemLabel label;
    double x = 0;
    double y = 0;
};

struct ProjectionResult {
    ProjectionConfig config;
    MatrixMode mode = MatrixMode::Patch;
    double quality = 0;  // normalized stress (MDS) or KL divergence (t-SNE)
    std::vector<ProjectedPoint> points;
};

// ---------------------------------------------------------------------------
// SMACOF
// ---------------------------------------------------------------------------

/// Raw stress sum_{i<j} (d_ij - |x_i - x_j|)^2 of a 2-D layout.
double raw_stress(std::span<const double> distances, std::span<const double> coords, std::size_t n);

struct SmacofTrace {
    std::vector<double> coords;   // n x 2, row-major
    std::vector<double> stress;   // raw stress after init and after every iteration
    int iterations = 0;
};

/// Guttman-transform iteration from `init` until the relative stress
/// decrease falls below `tolerance` or `max_iterations` is reached.
SmacofTrace smacof(std::span<const double> distances, std::size_t n, std::vector<double> init, int max_iterations,
                   double tolerance);

/// Best-of-restarts SMACOF from seeded random layouts.
ProjectionResult project_mds(const DistanceMatrix& matrix, const ProjectionConfig& cfg);

// ---------------------------------------------------------------------------
// t-SNE
// ---------------------------------------------------------------------------

/// Symmetric joint probabilities: per-row Gaussian bandwidths matched to the
/// perplexity by bisection, then (P + P^T) / 2n.
std::vector<double> tsne_joint_probabilities(std::span<const double> distances, std::size_t n, double perplexity);

struct TsneTrace {
    std::vector<double> coords;
    std::vector<double> kl;  // KL divergence every 50 iterations and at the end
};

TsneTrace tsne(std::span<const double> distances, std::size_t n, const TsneOptions& options, std::uint64_t seed);

ProjectionResult project_tsne(const DistanceMatrix& matrix, const ProjectionConfig& cfg);

ProjectionResult project(const DistanceMatrix& matrix, const ProjectionConfig& cfg);

// ---------------------------------------------------------------------------

struct TimeCurve {
    std::string run;
    std::vector<ProjectedPoint> vertices;  // ascending patch index
};

/// One polyline per run, runs in order of first appearance.
std::vector<TimeCurve> time_curves(const ProjectionResult& result);

nlohmann::ordered_json config_json(const ProjectionConfig& cfg);

/// `{algorithm, config, quality, points:[{run, patch|null, x, y}]}`.
nlohmann::ordered_json to_json(const ProjectionResult& result);

} // namespace stens
