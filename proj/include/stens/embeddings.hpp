#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stens/ingest.hpp"

namespace stens {

/// Identifies a patch, or one sub-patch of it.
struct PatchKey {
    std::string run;
    std::size_t patch = 0;
    std::optional<std::size_t> sub;

    auto operator<=>(const PatchKey&) const = default;
    bool operator==(const PatchKey&) const = default;
};

std::string to_string(const PatchKey& key);

/// Precomputed per-patch feature vectors of uniform dimension.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dimension) : dim_(dimension) {}

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }

    /// Throws on dimension mismatch, non-finite components or a repeated key.
    void insert(PatchKey key, std::vector<double> values);

    /// nullptr when absent.
    const std::vector<double>* find(const PatchKey& key) const;

    /// Throws NotFound naming the key.
    const std::vector<double>& at(const PatchKey& key) const;

    /// Sub-indices stored for a patch, ascending; empty for whole-patch rows.
    std::vector<std::size_t> sub_indices(const std::string& run, std::size_t patch) const;

    const std::map<PatchKey, std::vector<double>>& entries() const { return vectors_; }

private:
    std::size_t dim_ = 0;
    std::map<PatchKey, std::vector<double>> vectors_;
};

/// Reads `run,patch,sub,f0..f{D-1}` rows. Every run in `expected_patches`
/// must have all its patches (and, when `expected_subs` is set, that many
/// sub-patches per patch); otherwise the error lists the gaps.
EmbeddingTable load_embeddings(const std::filesystem::path& file,
                               const std::map<std::string, std::size_t>& expected_patches,
                               std::optional<std::size_t> expected_subs = std::nullopt,
                               const FormatConfig& format = {});

void write_embeddings(const std::filesystem::path& file, const EmbeddingTable& table);

} // namespace stens
