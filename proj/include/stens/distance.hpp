#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stens/embeddings.hpp"
#include "stens/patching.hpp"

namespace stens {

enum class MetricKind { Euclidean, Manhattan, Wasserstein, Embedding, EmbeddingSubdivided };
enum class Variable { Saturation, Concentration, Both };

/// How the Wasserstein histogram range is chosen. `Global` uses one fixed
/// range per variable for every patch; `PerPair` spans the min/max of the
/// two patches being compared (not a metric across triples).
enum class RangeMode { Global, PerPair };

struct ValueRange {
    double lo = 0;
    double hi = 1;
    bool operator==(const ValueRange&) const = default;
};

struct MetricConfig {
    MetricKind kind = MetricKind::Euclidean;
    Variable variable = Variable::Both;
    bool segmented = false;
    double segmentation_threshold = 0.001;
    int histogram_bins = 256;
    RangeMode range_mode = RangeMode::Global;
    std::optional<ValueRange> saturation_range;     // default [0, 1]
    std::optional<ValueRange> concentration_range;  // default [0, max over compared data]

    void validate() const;
    bool is_embedding() const { return kind == MetricKind::Embedding || kind == MetricKind::EmbeddingSubdivided; }

    bool operator==(const MetricConfig&) const = default;
};

const char* to_string(MetricKind kind);
const char* to_string(Variable variable);
const char* to_string(RangeMode mode);
MetricKind parse_metric_kind(std::string_view s);
Variable parse_variable(std::string_view s);
RangeMode parse_range_mode(std::string_view s);

/// l1 (p = 1) or l2 (p = 2) distance of the linearized patches; `Both`
/// concatenates saturation then concentration.
double dist_lp(const Patch& a, const Patch& b, int p, Variable variable);

/// Normalized histogram: `bins` equal bins over [lo, hi]; values at or above
/// hi land in the last bin, values below lo in the first.
std::vector<double> histogram(std::span<const double> values, int bins, ValueRange range);

/// W1 between two normalized histograms with ground distance |i - j| / bins,
/// computed as the l1 distance of their CDFs.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

/// Per-patch histograms for both variables.
struct PatchHistograms {
    std::vector<double> saturation;
    std::vector<double> concentration;
};

PatchHistograms patch_histograms(const Patch& patch, int bins, ValueRange saturation_range,
                                 ValueRange concentration_range);

double wasserstein_from_histograms(const PatchHistograms& a, const PatchHistograms& b, Variable variable);

/// Histogram Wasserstein distance of two patches, averaged over the selected
/// variables. Unset ranges default to [0,1] for saturation and
/// [0, max of both patches] for concentration.
double dist_wasserstein(const Patch& a, const Patch& b, const MetricConfig& cfg);

/// l1 distance between feature vectors; with `subdivided`, the sum of l1
/// distances between sub-patch vectors at the same positions.
double dist_embedding(const PatchKey& a, const PatchKey& b, const EmbeddingTable& embeddings, bool subdivided);

double l1(std::span<const double> a, std::span<const double> b);

} // namespace stens
