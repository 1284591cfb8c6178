#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stens/distance_matrix.hpp"
#include "stens/grid.hpp"
#include "stens/ingest.hpp"
#include "stens/patching.hpp"

namespace stens {

/// Which precomputed feature file a run provides.
enum class EmbeddingKind { Whole, Subdivided, SegmentedWhole, SegmentedSubdivided };

const char* to_string(EmbeddingKind kind);
EmbeddingKind embedding_kind_for(MetricKind metric, bool segmented);

struct RunEntry {
    std::string id;
    std::string color = "#808080";
    RunKind kind = RunKind::Simulation;
    std::filesystem::path data;                     // frame directory
    std::optional<std::filesystem::path> timeseries;
    std::map<EmbeddingKind, std::filesystem::path> embeddings;
};

/// Patch layout of the ensemble. Distance metrics on fields use full
/// resolution; feature files are keyed to the downsampled layout.
struct PatchLayout {
    std::size_t temporal_size = 3;
    std::size_t embedding_downsample = 2;
    SubSize sub_size;

    PatchSpec field_spec() const { return {temporal_size, 1, std::nullopt}; }
    PatchSpec embedding_spec(bool subdivided) const {
        return {temporal_size, embedding_downsample, subdivided ? std::optional<SubSize>(sub_size) : std::nullopt};
    }
};

/// Ensemble description: grid, file format, boxes and runs. Relative paths
/// resolve against the manifest's directory.
struct Manifest {
    GridSpec grid;
    FormatConfig format;
    PatchLayout patch;
    std::vector<Box> boxes;
    std::vector<RunEntry> runs;
    std::filesystem::path base_dir;

    /// Accepts the manifest file itself, a directory holding manifest.json,
    /// or a path that exists once ".json" is appended.
    static Manifest load(const std::filesystem::path& path);
    static Manifest from_json_text(const std::string& text, const std::filesystem::path& base_dir);

    void save(const std::filesystem::path& file) const;
    std::string to_json_text() const;

    void validate() const;
    const RunEntry* find_run(std::string_view id) const;
    const Box* find_box(std::string_view name) const;
    std::filesystem::path resolve(const std::filesystem::path& p) const;
};

} // namespace stens
