#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "stens/distance_matrix.hpp"
#include "stens/embeddings.hpp"
#include "stens/ingest.hpp"
#include "stens/manifest.hpp"
#include "stens/presence.hpp"
#include "stens/projection.hpp"
#include "stens/volume_io.hpp"

namespace stens {

/// One ingested ensemble member.
struct LoadedRun {
    RunEntry entry;
    std::shared_ptr<const SpaceTimeVolume> volume;           // simulations
    std::shared_ptr<const SegmentationVolume> segmentation;  // experiments
    std::shared_ptr<const TimeSeriesTable> series;
    std::map<EmbeddingKind, std::shared_ptr<const EmbeddingTable>> embeddings;
};

/// Immutable, fully ingested ensemble.
class Ensemble {
public:
    /// Ingests every run of the manifest. With `cache_dir`, aligned volumes
    /// written by write_cache are read from there when present.
    static std::shared_ptr<const Ensemble> load(const Manifest& manifest,
                                                const std::optional<std::filesystem::path>& cache_dir = {});
    static std::shared_ptr<const Ensemble> from_runs(Manifest manifest, std::vector<LoadedRun> runs);

    const Manifest& manifest() const { return manifest_; }
    const std::vector<LoadedRun>& runs() const { return runs_; }
    const LoadedRun* find(std::string_view id) const;

    /// Largest concentration over all simulation runs.
    double concentration_max() const { return concentration_max_; }

    /// Writes one lossless cache file per run into `dir`.
    void write_cache(const std::filesystem::path& dir) const;

private:
    Manifest manifest_;
    std::vector<LoadedRun> runs_;
    double concentration_max_ = 0;
};

using Params = std::map<std::string, std::string>;

/// Metric + projection request, as sent by the UI or given on the command line.
struct Query {
    MetricConfig metric;
    MatrixMode mode = MatrixMode::Group;
    std::vector<std::string> runs;  // empty: all admissible runs
    ProjectionConfig projection;
};

/// Recognized keys: metric, variable, segmented, threshold, bins, range,
/// algo, mode, runs, seed, perplexity, iterations, learning_rate, restarts,
/// tolerance. Unknown keys are rejected.
Query parse_query(const Params& params);

struct BrickRequest {
    std::string variable = "saturation";  // saturation | concentration | segmentation
    std::optional<std::size_t> t0, t1, x0, x1, y0, y1;
    std::size_t downsample = 1;
    double threshold = 0.001;
};

BrickRequest parse_brick_request(const Params& params);

/// Computation entry points shared by the CLI and the HTTP server, so both
/// produce byte-identical artifacts for identical parameters.
class Engine {
public:
    explicit Engine(std::shared_ptr<const Ensemble> ensemble, std::size_t cache_size = 16);

    const Ensemble& ensemble() const { return *ensemble_; }

    /// Distance matrix for the query, served from the cache when possible.
    std::shared_ptr<const DistanceMatrix> matrix(const Query& query);

    ProjectionResult projection(const Query& query);
    std::string projection_document(const Query& query);
    std::string distances_json(const Query& query);
    std::string distances_pmdm(const Query& query);

    std::string ensemble_document() const;
    Brick volume_brick(std::string_view run, const BrickRequest& request) const;
    std::string timeseries_document(std::string_view run, std::string_view measurable) const;

    std::optional<double> first_presence(std::string_view run, std::string_view box, Channel channel,
                                         double threshold) const;
    std::string first_presence_document(std::string_view run, std::string_view box, Channel channel,
                                        double threshold) const;

    std::size_t cached_matrices() const;
    std::size_t cache_hits() const;

    /// Resolved run list and the cache key for a query.
    std::vector<std::string> selected_runs(const Query& query) const;
    std::string cache_key(const Query& query) const;

private:
    MetricConfig resolved_metric(const Query& query) const;
    const LoadedRun& run_or_throw(std::string_view id) const;

    std::shared_ptr<const Ensemble> ensemble_;
    std::size_t capacity_;
    mutable std::shared_mutex mutex_;
    std::list<std::string> order_;  // insertion order, oldest first
    std::unordered_map<std::string, std::pair<std::shared_ptr<const DistanceMatrix>, std::list<std::string>::iterator>>
        cache_;
    std::atomic<std::size_t> hits_{0};
};

nlohmann::ordered_json metric_json(const MetricConfig& cfg);

} // namespace stens
