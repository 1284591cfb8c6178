#include "stens/distance_matrix.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <algorithm>
#include <functional>

#include <fmt/format.h>

#include "stens/error.hpp"
#include "stens/parallel.hpp"
#include "stens/segmentation.hpp"
#include "stens/text.hpp"

namespace stens {

const char* to_string(RunKind kind) {
    return kind == RunKind::Simulation ? "simulation" : "experiment";
}

const char* to_string(MatrixMode mode) {
    return mode == MatrixMode::Group ? "group" : "patch";
}

RunKind parse_run_kind(std::string_view s) {
    if (s == "simulation") return RunKind::Simulation;
    if (s == "experiment") return RunKind::Experiment;
    throw input_error(fmt::format("unknown run kind '{}'", s), "kind");
}

MatrixMode parse_matrix_mode(std::string_view s) {
    if (s == "group") return MatrixMode::Group;
    if (s == "patch") return MatrixMode::Patch;
    throw input_error(fmt::format("unknown mode '{}'", s), "mode");
}

const GridSpec& MetricRun::grid() const {
    if (volume) return volume->grid;
    if (segmentation) return segmentation->grid;
    throw input_error("run " + id + " carries no data", "runs");
}

void DistanceMatrix::validate() const {
    const auto n = labels.size();
    if (values.size() != n * n) throw input_error("distance matrix size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i * n + i] != 0.0) throw input_error("distance matrix diagonal must be zero");
        for (std::size_t j = 0; j < n; ++j) {
            const double v = values[i * n + j];
            if (!std::isfinite(v) || v < 0) throw input_error("distance matrix entries must be finite and >= 0");
            if (v != values[j * n + i]) throw input_error("distance matrix must be symmetric");
        }
    }
}

std::string label_text(const ItemLabel& label) {
    return label.patch ? fmt::format("{}#{}", label.run, *label.patch) : label.run;
}

MetricConfig resolve_ranges(const MetricConfig& cfg, std::span<const MetricRun> runs) {
    MetricConfig out = cfg;
    if (cfg.segmented) {
        if (!out.saturation_range) out.saturation_range = ValueRange{0.0, 1.0};
        if (!out.concentration_range) out.concentration_range = ValueRange{0.0, 1.0};
        return out;
    }
    if (!out.saturation_range) out.saturation_range = ValueRange{0.0, 1.0};
    if (!out.concentration_range) {
        double hi = 0;
        for (const auto& run : runs) {
            if (!run.volume) continue;
            for (double v : run.volume->concentration) hi = std::max(hi, v);
        }
        out.concentration_range = ValueRange{0.0, hi > 0 ? hi : 1.0};
    }
    return out;
}

namespace {

/// Everything needed to evaluate d(item_i, item_j) for the flattened
/// (run, patch) items of a run list.
struct PreparedItems {
    MetricConfig cfg;
    bool embedding_on_segmented = false;
    std::vector<std::string> run_ids;
    std::size_t patches_per_run = 0;
    std::vector<std::vector<Patch>> patches;  // [run][patch], empty for embedding metrics
    std::vector<PatchHistograms> histograms;  // flat, Wasserstein with global range only
    std::shared_ptr<const EmbeddingTable> embeddings;  // covers every run

    std::size_t item_count() const { return run_ids.size() * patches_per_run; }

    double distance(std::size_t i, std::size_t j) const {
        const auto ri = i / patches_per_run, pi = i % patches_per_run;
        const auto rj = j / patches_per_run, pj = j % patches_per_run;
        switch (cfg.kind) {
        case MetricKind::Euclidean: return dist_lp(patches[ri][pi], patches[rj][pj], 2, cfg.variable);
        case MetricKind::Manhattan: return dist_lp(patches[ri][pi], patches[rj][pj], 1, cfg.variable);
        case MetricKind::Wasserstein:
            if (!histograms.empty()) return wasserstein_from_histograms(histograms[i], histograms[j], cfg.variable);
            return dist_wasserstein(patches[ri][pi], patches[rj][pj], cfg);
        case MetricKind::Embedding:
        case MetricKind::EmbeddingSubdivided:
            return dist_embedding({run_ids[ri], pi, std::nullopt}, {run_ids[rj], pj, std::nullopt}, *embeddings,
                                  cfg.kind == MetricKind::EmbeddingSubdivided);
        }
        return 0;
    }
};

PreparedItems prepare(std::span<const MetricRun> runs, const PatchSpec& spec, const MetricConfig& cfg_in) {
    cfg_in.validate();
    if (runs.empty()) throw input_error("no runs selected", "runs");
    const auto& grid = runs.front().grid();
    grid.validate();
    spec.validate(grid);
    for (const auto& run : runs) {
        if (!(run.grid() == grid)) throw input_error("run " + run.id + " uses a different grid", "runs");
        if (run.kind == RunKind::Experiment && !cfg_in.segmented) {
            throw conflict("experiment run " + run.id + " can only be compared with segmented=true", "segmented");
        }
        if (run.kind == RunKind::Experiment && !run.segmentation) {
            throw input_error("experiment run " + run.id + " has no segmentation maps", "runs");
        }
        if (run.kind == RunKind::Simulation && !run.volume) {
            throw input_error("simulation run " + run.id + " has no volume", "runs");
        }
    }

    PreparedItems prep;
    prep.cfg = resolve_ranges(cfg_in, runs);
    prep.patches_per_run = patch_count(grid, spec);
    prep.embedding_on_segmented = prep.cfg.segmented && prep.cfg.is_embedding();
    for (const auto& run : runs) prep.run_ids.push_back(run.id);

    if (prep.cfg.is_embedding()) {
        for (const auto& run : runs) {
            if (!run.embeddings) {
                throw input_error(fmt::format("run {} has no {}{} embeddings", run.id,
                                              prep.cfg.segmented ? "segmented " : "",
                                              prep.cfg.kind == MetricKind::EmbeddingSubdivided ? "subdivided" : "whole"),
                                  "metric");
            }
        }
        const bool shared = std::all_of(runs.begin(), runs.end(),
                                        [&](const MetricRun& r) { return r.embeddings == runs.front().embeddings; });
        if (shared) {
            prep.embeddings = runs.front().embeddings;
        } else {
            auto merged = std::make_shared<EmbeddingTable>(runs.front().embeddings->dimension());
            for (const auto& run : runs) {
                const auto& entries = run.embeddings->entries();
                for (auto it = entries.lower_bound({run.id, 0, std::nullopt}); it != entries.end() && it->first.run == run.id;
                     ++it) {
                    if (!merged->find(it->first)) merged->insert(it->first, it->second);
                }
            }
            prep.embeddings = std::move(merged);
        }
        return prep;
    }

    prep.patches.resize(runs.size());
    parallel_for(runs.size(), [&](std::size_t r) {
        const auto& run = runs[r];
        std::shared_ptr<const SpaceTimeVolume> fields;
        if (!prep.cfg.segmented) {
            fields = run.volume;
        } else if (run.kind == RunKind::Experiment) {
            fields = std::make_shared<const SpaceTimeVolume>(segmentation_channels(*run.segmentation));
        } else {
            fields = std::make_shared<const SpaceTimeVolume>(
                segmentation_channels(segment(*run.volume, prep.cfg.segmentation_threshold)));
        }
        prep.patches[r] = extract_patches(fields, spec);
    });

    if (prep.cfg.kind == MetricKind::Wasserstein && prep.cfg.range_mode == RangeMode::Global) {
        prep.histograms.resize(prep.item_count());
        parallel_for(prep.item_count(), [&](std::size_t i) {
            const auto& p = prep.patches[i / prep.patches_per_run][i % prep.patches_per_run];
            prep.histograms[i] = patch_histograms(p, prep.cfg.histogram_bins, *prep.cfg.saturation_range,
                                                  *prep.cfg.concentration_range);
        });
    }
    return prep;
}

} // namespace

DistanceMatrix patch_distance_matrix(std::span<const MetricRun> runs, const PatchSpec& spec, const MetricConfig& cfg) {
    const auto prep = prepare(runs, spec, cfg);
    const auto n = prep.item_count();
    DistanceMatrix m;
    m.metric = prep.cfg;
    m.mode = MatrixMode::Patch;
    m.embedding_on_segmented = prep.embedding_on_segmented;
    for (const auto& id : prep.run_ids) {
        for (std::size_t p = 0; p < prep.patches_per_run; ++p) m.labels.push_back({id, p});
    }
    m.values.assign(n * n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = prep.distance(i, j);
            m.values[i * n + j] = d;
            m.values[j * n + i] = d;
        }
    });
    return m;
}

namespace {

DistanceMatrix aggregate_groups(const std::vector<std::string>& run_ids, std::size_t per_run,
                                const MetricConfig& cfg, bool emb_seg,
                                const std::function<double(std::size_t, std::size_t)>& item_distance) {
    const auto g = run_ids.size();
    DistanceMatrix m;
    m.metric = cfg;
    m.mode = MatrixMode::Group;
    m.embedding_on_segmented = emb_seg;
    for (const auto& id : run_ids) m.labels.push_back({id, std::nullopt});
    m.values.assign(g * g, 0.0);
    if (per_run == 0) return m;
    parallel_for(g, [&](std::size_t a) {
        for (std::size_t b = a + 1; b < g; ++b) {
            double sum = 0;
            for (std::size_t k = 0; k < per_run; ++k) sum += item_distance(a * per_run + k, b * per_run + k);
            const double d = sum / static_cast<double>(per_run);
            m.values[a * g + b] = d;
            m.values[b * g + a] = d;
        }
    });
    return m;
}

} // namespace

DistanceMatrix group_distance_matrix(const DistanceMatrix& pm) {
    if (pm.mode != MatrixMode::Patch) throw input_error("group aggregation needs a patch-mode matrix", "mode");
    std::vector<std::string> run_ids;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < pm.labels.size(); ++i) {
        const auto& l = pm.labels[i];
        if (!l.patch) throw input_error("patch-mode matrix has a label without patch index", "labels");
        if (run_ids.empty() || run_ids.back() != l.run) {
            run_ids.push_back(l.run);
            counts.push_back(0);
        }
        if (*l.patch != counts.back()) {
            throw input_error(fmt::format("run {}: patches must be listed contiguously in index order", l.run),
                              "labels");
        }
        ++counts.back();
    }
    for (std::size_t r = 1; r < counts.size(); ++r) {
        if (counts[r] != counts[0]) {
            throw input_error(fmt::format("runs {} and {} have different patch counts ({} vs {})", run_ids[0],
                                          run_ids[r], counts[0], counts[r]),
                              "runs");
        }
    }
    const auto per_run = counts.empty() ? 0 : counts[0];
    return aggregate_groups(run_ids, per_run, pm.metric, pm.embedding_on_segmented,
                            [&](std::size_t i, std::size_t j) { return pm(i, j); });
}

DistanceMatrix group_distance_matrix(std::span<const MetricRun> runs, const PatchSpec& spec, const MetricConfig& cfg) {
    const auto prep = prepare(runs, spec, cfg);
    return aggregate_groups(prep.run_ids, prep.patches_per_run, prep.cfg, prep.embedding_on_segmented,
                            [&](std::size_t i, std::size_t j) { return prep.distance(i, j); });
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t get_le(std::string_view bytes, std::size_t at, int width) {
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + b])) << (8 * b);
    return v;
}

} // namespace

std::string encode_pmdm(const DistanceMatrix& m) {
    const auto n = m.size();
    std::string out = "PMDM";
    out.push_back(static_cast<char>(1));
    put_u32(out, static_cast<std::uint32_t>(n));
    out.reserve(out.size() + n * n * 8);
    for (double v : m.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

DecodedMatrix decode_pmdm(std::string_view bytes) {
    if (bytes.size() < 9 || bytes.substr(0, 4) != "PMDM") throw input_error("not a PMDM block", "body");
    if (static_cast<unsigned char>(bytes[4]) != 1) throw input_error("unsupported PMDM version", "body");
    DecodedMatrix d;
    d.n = static_cast<std::size_t>(get_le(bytes, 5, 4));
    if (bytes.size() != 9 + d.n * d.n * 8) throw input_error("PMDM block has wrong length", "body");
    d.values.resize(d.n * d.n);
    for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = std::bit_cast<double>(get_le(bytes, 9 + 8 * i, 8));
    return d;
}

std::string to_csv(const DistanceMatrix& m, char delimiter) {
    std::string out = "label";
    for (const auto& l : m.labels) {
        out += delimiter;
        out += label_text(l);
    }
    out += '\n';
    const auto n = m.size();
    for (std::size_t i = 0; i < n; ++i) {
        out += label_text(m.labels[i]);
        for (std::size_t j = 0; j < n; ++j) {
            out += delimiter;
            out += text::format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

} // namespace stens
