#include "stens/manifest.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "stens/error.hpp"
#include "stens/text.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace stens {

const char* to_string(EmbeddingKind kind) {
    switch (kind) {
    case EmbeddingKind::Whole: return "whole";
    case EmbeddingKind::Subdivided: return "subdivided";
    case EmbeddingKind::SegmentedWhole: return "segmented_whole";
    case EmbeddingKind::SegmentedSubdivided: return "segmented_subdivided";
    }
    return "unknown";
}

EmbeddingKind embedding_kind_for(MetricKind metric, bool segmented) {
    const bool sub = metric == MetricKind::EmbeddingSubdivided;
    if (segmented) return sub ? EmbeddingKind::SegmentedSubdivided : EmbeddingKind::SegmentedWhole;
    return sub ? EmbeddingKind::Subdivided : EmbeddingKind::Whole;
}

namespace {

EmbeddingKind parse_embedding_kind(const std::string& s) {
    for (auto k : {EmbeddingKind::Whole, EmbeddingKind::Subdivided, EmbeddingKind::SegmentedWhole,
                   EmbeddingKind::SegmentedSubdivided}) {
        if (s == to_string(k)) return k;
    }
    throw input_error(fmt::format("manifest: unknown embedding kind '{}'", s), "embeddings");
}

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw input_error(fmt::format("manifest: field '{}': {}", key, e.what()), key);
    }
}

template <typename T>
T require(const ordered_json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw input_error(fmt::format("manifest: {} is missing '{}'", where, key), key);
    return get_or<T>(j, key, T{});
}

} // namespace

Manifest Manifest::from_json_text(const std::string& text, const fs::path& base_dir) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw input_error(fmt::format("manifest: {}", e.what()), "manifest");
    }
    Manifest m;
    m.base_dir = base_dir;
    if (!doc.contains("grid")) throw input_error("manifest: missing 'grid'", "grid");
    const auto& g = doc["grid"];
    m.grid.x_min = require<double>(g, "x_min", "grid");
    m.grid.x_max = require<double>(g, "x_max", "grid");
    m.grid.y_min = require<double>(g, "y_min", "grid");
    m.grid.y_max = require<double>(g, "y_max", "grid");
    m.grid.dx = require<double>(g, "dx", "grid");
    m.grid.dy = require<double>(g, "dy", "grid");
    m.grid.t_min = require<double>(g, "t_min", "grid");
    m.grid.t_max = require<double>(g, "t_max", "grid");
    m.grid.dt = require<double>(g, "dt", "grid");

    if (doc.contains("format")) {
        const auto& f = doc["format"];
        const auto delim = get_or<std::string>(f, "delimiter", ",");
        if (delim.size() != 1) throw input_error("manifest: delimiter must be a single character", "delimiter");
        m.format.delimiter = delim[0];
        m.format.time_pattern = get_or<std::string>(f, "time_pattern", m.format.time_pattern);
    }
    if (doc.contains("patch")) {
        const auto& p = doc["patch"];
        m.patch.temporal_size = get_or<std::size_t>(p, "temporal_size", m.patch.temporal_size);
        m.patch.embedding_downsample = get_or<std::size_t>(p, "embedding_downsample", m.patch.embedding_downsample);
        m.patch.sub_size.width = get_or<std::size_t>(p, "sub_width", m.patch.sub_size.width);
        m.patch.sub_size.height = get_or<std::size_t>(p, "sub_height", m.patch.sub_size.height);
    }
    for (const auto& b : doc.value("boxes", ordered_json::array())) {
        Box box;
        box.name = require<std::string>(b, "name", "box");
        box.x_lo = require<double>(b, "x_lo", "box " + box.name);
        box.x_hi = require<double>(b, "x_hi", "box " + box.name);
        box.y_lo = require<double>(b, "y_lo", "box " + box.name);
        box.y_hi = require<double>(b, "y_hi", "box " + box.name);
        m.boxes.push_back(box);
    }
    for (const auto& r : doc.value("runs", ordered_json::array())) {
        RunEntry run;
        run.id = require<std::string>(r, "id", "run");
        run.color = get_or<std::string>(r, "color", run.color);
        run.kind = parse_run_kind(get_or<std::string>(r, "kind", "simulation"));
        run.data = require<std::string>(r, "data", "run " + run.id);
        if (r.contains("timeseries")) run.timeseries = r["timeseries"].get<std::string>();
        if (r.contains("embeddings")) {
            for (const auto& [kind, file] : r["embeddings"].items()) {
                run.embeddings[parse_embedding_kind(kind)] = file.get<std::string>();
            }
        }
        m.runs.push_back(std::move(run));
    }
    m.validate();
    return m;
}

Manifest Manifest::load(const fs::path& path) {
    fs::path file = path;
    if (fs::is_directory(file)) {
        file /= "manifest.json";
    } else if (!fs::exists(file) && fs::exists(fs::path(path.string() + ".json"))) {
        file = path.string() + ".json";
    }
    if (!fs::is_regular_file(file)) throw input_error("manifest not found: " + path.string(), "manifest");
    return from_json_text(text::read_file(file.string()), file.parent_path());
}

std::string Manifest::to_json_text() const {
    ordered_json doc;
    doc["grid"] = {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"y_min", grid.y_min}, {"y_max", grid.y_max},
                   {"dx", grid.dx},       {"dy", grid.dy},       {"t_min", grid.t_min}, {"t_max", grid.t_max},
                   {"dt", grid.dt}};
    doc["format"] = {{"delimiter", std::string(1, format.delimiter)}, {"time_pattern", format.time_pattern}};
    doc["patch"] = {{"temporal_size", patch.temporal_size},
                    {"embedding_downsample", patch.embedding_downsample},
                    {"sub_width", patch.sub_size.width},
                    {"sub_height", patch.sub_size.height}};
    doc["boxes"] = ordered_json::array();
    for (const auto& b : boxes) {
        doc["boxes"].push_back({{"name", b.name}, {"x_lo", b.x_lo}, {"x_hi", b.x_hi}, {"y_lo", b.y_lo}, {"y_hi", b.y_hi}});
    }
    doc["runs"] = ordered_json::array();
    for (const auto& r : runs) {
        ordered_json run{{"id", r.id}, {"color", r.color}, {"kind", to_string(r.kind)}, {"data", r.data.generic_string()}};
        if (r.timeseries) run["timeseries"] = r.timeseries->generic_string();
        if (!r.embeddings.empty()) {
            ordered_json emb = ordered_json::object();
            for (const auto& [kind, file] : r.embeddings) emb[to_string(kind)] = file.generic_string();
            run["embeddings"] = std::move(emb);
        }
        doc["runs"].push_back(std::move(run));
    }
    return doc.dump(2) + "\n";
}

void Manifest::save(const fs::path& file) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw input_error("cannot write manifest " + file.string(), file.string());
    out << to_json_text();
    if (!out) throw input_error("write failed: " + file.string(), file.string());
}

void Manifest::validate() const {
    grid.validate();
    patch.field_spec().validate(grid);
    std::set<std::string> names;
    for (const auto& b : boxes) {
        b.validate(grid);
        if (!names.insert(b.name).second) throw input_error("manifest: box " + b.name + " defined twice", "boxes");
    }
    std::set<std::string> ids;
    for (const auto& r : runs) {
        if (r.id.empty() || r.id.find_first_of(",#/ ") != std::string::npos) {
            throw input_error(fmt::format("manifest: invalid run id '{}'", r.id), "runs");
        }
        if (!ids.insert(r.id).second) throw input_error("manifest: run " + r.id + " listed twice", "runs");
    }
}

const RunEntry* Manifest::find_run(std::string_view id) const {
    for (const auto& r : runs) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

const Box* Manifest::find_box(std::string_view name) const {
    for (const auto& b : boxes) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

fs::path Manifest::resolve(const fs::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
}

} // namespace stens
