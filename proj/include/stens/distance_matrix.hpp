#pragma once

#include <compare>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stens/distance.hpp"
#include "stens/embeddings.hpp"
#include "stens/patching.hpp"
#include "stens/volume.hpp"

namespace stens {

enum class RunKind { Simulation, Experiment };
enum class MatrixMode { Group, Patch };

const char* to_string(RunKind kind);
const char* to_string(MatrixMode mode);
RunKind parse_run_kind(std::string_view s);
MatrixMode parse_matrix_mode(std::string_view s);

/// One ensemble member as seen by the metrics. Simulations carry a volume,
/// experiments a segmentation; `embeddings` must match the metric (whole or
/// subdivided, raw or segmented) when an embedding metric is used.
struct MetricRun {
    std::string id;
    RunKind kind = RunKind::Simulation;
    std::shared_ptr<const SpaceTimeVolume> volume;
    std::shared_ptr<const SegmentationVolume> segmentation;
    std::shared_ptr<const EmbeddingTable> embeddings;

    const GridSpec& grid() const;
};

struct ItemLabel {
    std::string run;
    std::optional<std::size_t> patch;  // empty in group mode

    auto operator<=>(const ItemLabel&) const = default;
    bool operator==(const ItemLabel&) const = default;
};

/// Symmetric, zero-diagonal, row-major pairwise distances.
struct DistanceMatrix {
    std::vector<ItemLabel> labels;
    std::vector<double> values;
    MetricConfig metric;
    MatrixMode mode = MatrixMode::Patch;
    /// Set when an embedding metric was applied to segmented data; the
    /// feature model was not trained on segmentations.
    bool embedding_on_segmented = false;

    std::size_t size() const { return labels.size(); }
    double operator()(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }

    /// Throws unless symmetric, zero on the diagonal, finite and non-negative.
    void validate() const;
};

/// Fills ranges left unset in `cfg`: saturation [0,1] and concentration
/// [0, max over the runs], both [0,1] when segmented.
MetricConfig resolve_ranges(const MetricConfig& cfg, std::span<const MetricRun> runs);

/// Distances between every (run, patch) item of the runs.
DistanceMatrix patch_distance_matrix(std::span<const MetricRun> runs, const PatchSpec& spec,
                                     const MetricConfig& cfg);

/// D(G, H) = mean over k of d(G_k, H_k), from a patch-mode matrix.
DistanceMatrix group_distance_matrix(const DistanceMatrix& patch_matrix);

/// Same result as group_distance_matrix(patch_distance_matrix(...)) but
/// evaluates only the time-aligned pairs.
DistanceMatrix group_distance_matrix(std::span<const MetricRun> runs, const PatchSpec& spec,
                                     const MetricConfig& cfg);

/// Binary block: "PMDM", version byte, n as u32 LE, n*n f64 LE row-major.
std::string encode_pmdm(const DistanceMatrix& m);

struct DecodedMatrix {
    std::size_t n = 0;
    std::vector<double> values;
};
DecodedMatrix decode_pmdm(std::string_view bytes);

/// Delimited text with the labels as header row and first column.
std::string to_csv(const DistanceMatrix& m, char delimiter = ',');

std::string label_text(const ItemLabel& label);

} // namespace stens
