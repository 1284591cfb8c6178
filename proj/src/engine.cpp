#include "stens/engine.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "stens/error.hpp"
#include "stens/parallel.hpp"
#include "stens/patching.hpp"
#include "stens/segmentation.hpp"
#include "stens/text.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace stens {

// ---------------------------------------------------------------------------
// Ensemble
// ---------------------------------------------------------------------------

std::shared_ptr<const Ensemble> Ensemble::load(const Manifest& manifest, const std::optional<fs::path>& cache_dir) {
    manifest.validate();
    const auto& grid = manifest.grid;
    const auto patches = patch_count(grid, manifest.patch.field_spec());
    const auto subs =
        sub_patch_layout(downsampled_shape(grid, manifest.patch.embedding_downsample), manifest.patch.sub_size).size();

    std::vector<LoadedRun> runs(manifest.runs.size());
    parallel_for(runs.size(), [&](std::size_t r) {
        const auto& entry = manifest.runs[r];
        auto& run = runs[r];
        run.entry = entry;
        if (entry.kind == RunKind::Simulation) {
            const auto cached = cache_dir ? *cache_dir / (entry.id + ".pmav") : fs::path();
            if (cache_dir && fs::exists(cached)) {
                auto v = read_volume_cache(cached);
                if (!(v.grid == grid)) throw input_error("cached volume " + cached.string() + " uses another grid");
                run.volume = std::make_shared<const SpaceTimeVolume>(std::move(v));
            } else {
                const auto frames = parse_spatial_maps(manifest.resolve(entry.data), manifest.format);
                run.volume = std::make_shared<const SpaceTimeVolume>(align_volume(entry.id, frames, grid));
            }
            if (entry.timeseries) {
                run.series = std::make_shared<const TimeSeriesTable>(
                    parse_time_series(manifest.resolve(*entry.timeseries), manifest.format, grid, entry.id));
            }
        } else {
            const auto cached = cache_dir ? *cache_dir / (entry.id + ".pmas") : fs::path();
            if (cache_dir && fs::exists(cached)) {
                auto v = read_segmentation_cache(cached);
                if (!(v.grid == grid)) throw input_error("cached segmentation " + cached.string() + " uses another grid");
                run.segmentation = std::make_shared<const SegmentationVolume>(std::move(v));
            } else {
                run.segmentation = std::make_shared<const SegmentationVolume>(
                    parse_segmentation_maps(manifest.resolve(entry.data), manifest.format, grid, entry.id));
            }
        }
        for (const auto& [kind, file] : entry.embeddings) {
            const bool subdivided = kind == EmbeddingKind::Subdivided || kind == EmbeddingKind::SegmentedSubdivided;
            run.embeddings[kind] = std::make_shared<const EmbeddingTable>(
                load_embeddings(manifest.resolve(file), {{entry.id, patches}},
                                subdivided ? std::optional<std::size_t>(subs) : std::nullopt, manifest.format));
        }
    });
    return from_runs(manifest, std::move(runs));
}

std::shared_ptr<const Ensemble> Ensemble::from_runs(Manifest manifest, std::vector<LoadedRun> runs) {
    auto e = std::make_shared<Ensemble>();
    e->manifest_ = std::move(manifest);
    e->runs_ = std::move(runs);
    for (const auto& r : e->runs_) {
        if (!r.volume) continue;
        for (double v : r.volume->concentration) e->concentration_max_ = std::max(e->concentration_max_, v);
    }
    return e;
}

const LoadedRun* Ensemble::find(std::string_view id) const {
    for (const auto& r : runs_) {
        if (r.entry.id == id) return &r;
    }
    return nullptr;
}

void Ensemble::write_cache(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw input_error("cannot create cache directory " + dir.string(), dir.string());
    for (const auto& r : runs_) {
        if (r.volume) write_volume_cache(*r.volume, dir / (r.entry.id + ".pmav"));
        if (r.segmentation) write_segmentation_cache(*r.segmentation, dir / (r.entry.id + ".pmas"));
    }
}

// ---------------------------------------------------------------------------
// Parameter parsing
// ---------------------------------------------------------------------------

namespace {

double number_param(const std::string& key, const std::string& value) {
    const auto v = text::parse_double(value);
    if (!v || !std::isfinite(*v)) throw input_error(fmt::format("parameter {}: '{}' is not a number", key, value), key);
    return *v;
}

std::size_t count_param(const std::string& key, const std::string& value) {
    const double v = number_param(key, value);
    if (v < 0 || std::floor(v) != v || v > 1e12) {
        throw input_error(fmt::format("parameter {}: '{}' is not a non-negative integer", key, value), key);
    }
    return static_cast<std::size_t>(v);
}

bool bool_param(const std::string& key, const std::string& value) {
    const auto v = text::lower(value);
    if (v.empty() || v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw input_error(fmt::format("parameter {}: '{}' is not a boolean", key, value), key);
}

template <typename Parse>
auto wrap_param(const std::string& key, Parse&& parse) {
    try {
        return parse();
    } catch (const Error& e) {
        throw Error(e.kind(), e.what(), key);
    }
}

} // namespace

Query parse_query(const Params& params) {
    static const std::set<std::string> known = {"metric",     "variable", "segmented",  "threshold",     "bins",
                                                "range",      "algo",     "mode",       "runs",          "seed",
                                                "perplexity", "iterations", "learning_rate", "restarts", "tolerance"};
    Query q;
    for (const auto& [key, value] : params) {
        if (!known.contains(key)) throw input_error(fmt::format("unknown parameter '{}'", key), key);
    }
    auto get = [&](const char* key) -> const std::string* {
        const auto it = params.find(key);
        return it == params.end() ? nullptr : &it->second;
    };
    if (auto v = get("metric")) q.metric.kind = wrap_param("metric", [&] { return parse_metric_kind(*v); });
    if (auto v = get("variable")) q.metric.variable = wrap_param("variable", [&] { return parse_variable(*v); });
    if (auto v = get("segmented")) q.metric.segmented = bool_param("segmented", *v);
    if (auto v = get("threshold")) q.metric.segmentation_threshold = number_param("threshold", *v);
    if (auto v = get("bins")) {
        const auto bins = count_param("bins", *v);
        if (bins > 1u << 20) throw input_error("parameter bins: too many bins", "bins");
        q.metric.histogram_bins = static_cast<int>(bins);
    }
    if (auto v = get("range")) q.metric.range_mode = wrap_param("range", [&] { return parse_range_mode(*v); });
    if (auto v = get("algo")) q.projection.algorithm = wrap_param("algo", [&] { return parse_algorithm(*v); });
    if (auto v = get("mode")) q.mode = wrap_param("mode", [&] { return parse_matrix_mode(*v); });
    if (auto v = get("runs")) {
        for (auto part : text::split(*v, ',')) {
            const auto id = std::string(text::trim(part));
            if (id.empty()) continue;
            if (std::find(q.runs.begin(), q.runs.end(), id) != q.runs.end()) {
                throw input_error("run " + id + " listed twice", "runs");
            }
            q.runs.push_back(id);
        }
    }
    if (auto v = get("seed")) q.projection.seed = count_param("seed", *v);
    if (auto v = get("perplexity")) q.projection.tsne.perplexity = number_param("perplexity", *v);
    if (auto v = get("iterations")) {
        const auto it = static_cast<int>(std::min<std::size_t>(count_param("iterations", *v), 1000000));
        q.projection.mds.max_iterations = it;
        q.projection.tsne.iterations = it;
    }
    if (auto v = get("learning_rate")) q.projection.tsne.learning_rate = number_param("learning_rate", *v);
    if (auto v = get("restarts")) {
        q.projection.mds.restarts = static_cast<int>(std::min<std::size_t>(count_param("restarts", *v), 1000));
    }
    if (auto v = get("tolerance")) q.projection.mds.stress_tolerance = number_param("tolerance", *v);
    q.metric.validate();
    q.projection.validate();
    return q;
}

BrickRequest parse_brick_request(const Params& params) {
    static const std::set<std::string> known = {"variable", "t0", "t1", "x0", "x1", "y0", "y1", "downsample", "threshold"};
    BrickRequest b;
    for (const auto& [key, value] : params) {
        if (!known.contains(key)) throw input_error(fmt::format("unknown parameter '{}'", key), key);
        if (key == "variable") {
            if (value != "saturation" && value != "concentration" && value != "segmentation") {
                throw input_error(fmt::format("unknown variable '{}'", value), key);
            }
            b.variable = value;
        } else if (key == "threshold") {
            b.threshold = number_param(key, value);
            if (b.threshold < 0) throw input_error("threshold must be >= 0", key);
        } else if (key == "downsample") {
            b.downsample = count_param(key, value);
            if (b.downsample < 1) throw input_error("downsample must be >= 1", key);
        } else {
            const auto v = count_param(key, value);
            if (key == "t0") b.t0 = v;
            if (key == "t1") b.t1 = v;
            if (key == "x0") b.x0 = v;
            if (key == "x1") b.x1 = v;
            if (key == "y0") b.y0 = v;
            if (key == "y1") b.y1 = v;
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

ordered_json metric_json(const MetricConfig& cfg) {
    ordered_json j;
    j["kind"] = to_string(cfg.kind);
    j["variable"] = to_string(cfg.variable);
    j["segmented"] = cfg.segmented;
    j["threshold"] = cfg.segmentation_threshold;
    j["bins"] = cfg.histogram_bins;
    j["range_mode"] = to_string(cfg.range_mode);
    if (cfg.saturation_range) j["saturation_range"] = {cfg.saturation_range->lo, cfg.saturation_range->hi};
    if (cfg.concentration_range) j["concentration_range"] = {cfg.concentration_range->lo, cfg.concentration_range->hi};
    return j;
}

Engine::Engine(std::shared_ptr<const Ensemble> ensemble, std::size_t cache_size)
    : ensemble_(std::move(ensemble)), capacity_(cache_size) {
    if (capacity_ < 1) throw input_error("cache size must be >= 1", "cache_size");
}

const LoadedRun& Engine::run_or_throw(std::string_view id) const {
    if (const auto* r = ensemble_->find(id)) return *r;
    throw not_found(fmt::format("unknown run '{}'", id), "run");
}

std::vector<std::string> Engine::selected_runs(const Query& query) const {
    std::vector<std::string> ids;
    if (query.runs.empty()) {
        for (const auto& r : ensemble_->runs()) {
            if (query.metric.segmented || r.entry.kind == RunKind::Simulation) ids.push_back(r.entry.id);
        }
        return ids;
    }
    for (const auto& id : query.runs) {
        if (!ensemble_->find(id)) throw input_error(fmt::format("unknown run '{}'", id), "runs");
        ids.push_back(id);
    }
    return ids;
}

MetricConfig Engine::resolved_metric(const Query& query) const {
    auto cfg = query.metric;
    if (!cfg.segmented && cfg.range_mode == RangeMode::Global && !cfg.concentration_range) {
        // one ensemble-wide range keeps distances comparable across run subsets
        const double hi = ensemble_->concentration_max();
        cfg.concentration_range = ValueRange{0.0, hi > 0 ? hi : 1.0};
    }
    return cfg;
}

std::string Engine::cache_key(const Query& query) const {
    std::string key = metric_json(resolved_metric(query)).dump();
    key += '|';
    key += to_string(query.mode);
    for (const auto& id : selected_runs(query)) key += '|' + id;
    return key;
}

std::shared_ptr<const DistanceMatrix> Engine::matrix(const Query& query) {
    const auto key = cache_key(query);
    {
        std::shared_lock lock(mutex_);
        if (const auto it = cache_.find(key); it != cache_.end()) {
            ++hits_;
            return it->second.first;
        }
    }

    const auto ids = selected_runs(query);
    const auto cfg = resolved_metric(query);
    std::vector<MetricRun> runs;
    for (const auto& id : ids) {
        const auto& r = run_or_throw(id);
        MetricRun m{r.entry.id, r.entry.kind, r.volume, r.segmentation, nullptr};
        if (cfg.is_embedding()) {
            const auto it = r.embeddings.find(embedding_kind_for(cfg.kind, cfg.segmented));
            if (it != r.embeddings.end()) m.embeddings = it->second;
        }
        runs.push_back(std::move(m));
    }
    const auto spec = ensemble_->manifest().patch.field_spec();
    auto computed = std::make_shared<const DistanceMatrix>(query.mode == MatrixMode::Group
                                                               ? group_distance_matrix(runs, spec, cfg)
                                                               : patch_distance_matrix(runs, spec, cfg));

    std::unique_lock lock(mutex_);
    if (const auto it = cache_.find(key); it != cache_.end()) {
        // computed concurrently by another request: replace
        order_.erase(it->second.second);
        cache_.erase(it);
    }
    order_.push_back(key);
    cache_.emplace(key, std::make_pair(computed, std::prev(order_.end())));
    while (cache_.size() > capacity_) {
        cache_.erase(order_.front());
        order_.pop_front();
    }
    return computed;
}

std::size_t Engine::cached_matrices() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

std::size_t Engine::cache_hits() const { return hits_.load(); }

ProjectionResult Engine::projection(const Query& query) {
    return project(*matrix(query), query.projection);
}

std::string Engine::projection_document(const Query& query) {
    const auto m = matrix(query);
    const auto result = project(*m, query.projection);
    auto doc = to_json(result);
    doc["metric"] = metric_json(m->metric);
    doc["embedding_on_segmented"] = m->embedding_on_segmented;
    if (result.mode == MatrixMode::Patch) {
        auto curves = ordered_json::array();
        std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> by_run;
        std::vector<std::string> order;
        for (std::size_t i = 0; i < result.points.size(); ++i) {
            const auto& l = result.points[i].label;
            if (!by_run.contains(l.run)) order.push_back(l.run);
            by_run[l.run].push_back({*l.patch, i});
        }
        for (const auto& run : order) {
            auto& items = by_run[run];
            std::sort(items.begin(), items.end());
            auto idx = ordered_json::array();
            for (const auto& [patch, i] : items) idx.push_back(i);
            curves.push_back({{"run", run}, {"points", std::move(idx)}});
        }
        doc["time_curves"] = std::move(curves);
    }
    return doc.dump(2) + "\n";
}

std::string Engine::distances_json(const Query& query) {
    const auto m = matrix(query);
    ordered_json doc;
    doc["mode"] = to_string(m->mode);
    doc["metric"] = metric_json(m->metric);
    doc["embedding_on_segmented"] = m->embedding_on_segmented;
    auto labels = ordered_json::array();
    for (const auto& l : m->labels) {
        labels.push_back({{"run", l.run}, {"patch", l.patch ? ordered_json(*l.patch) : ordered_json(nullptr)}});
    }
    doc["labels"] = std::move(labels);
    auto rows = ordered_json::array();
    for (std::size_t i = 0; i < m->size(); ++i) {
        auto row = ordered_json::array();
        for (std::size_t j = 0; j < m->size(); ++j) row.push_back((*m)(i, j));
        rows.push_back(std::move(row));
    }
    doc["values"] = std::move(rows);
    return doc.dump() + "\n";
}

std::string Engine::distances_pmdm(const Query& query) {
    return encode_pmdm(*matrix(query));
}

std::string Engine::ensemble_document() const {
    const auto& m = ensemble_->manifest();
    const auto& g = m.grid;
    ordered_json doc;
    doc["grid"] = {{"x_min", g.x_min}, {"x_max", g.x_max}, {"y_min", g.y_min}, {"y_max", g.y_max},
                   {"dx", g.dx},       {"dy", g.dy},       {"t_min", g.t_min}, {"t_max", g.t_max},
                   {"dt", g.dt},       {"nx", g.nx()},     {"ny", g.ny()},     {"nt", g.nt()}};
    doc["patch"] = {{"temporal_size", m.patch.temporal_size},
                    {"patches", patch_count(g, m.patch.field_spec())},
                    {"embedding_downsample", m.patch.embedding_downsample},
                    {"sub_width", m.patch.sub_size.width},
                    {"sub_height", m.patch.sub_size.height}};
    auto boxes = ordered_json::array();
    for (const auto& b : m.boxes) {
        boxes.push_back({{"name", b.name}, {"x_lo", b.x_lo}, {"x_hi", b.x_hi}, {"y_lo", b.y_lo}, {"y_hi", b.y_hi}});
    }
    doc["boxes"] = std::move(boxes);
    std::vector<std::string> measurables;
    for (const auto& r : ensemble_->runs()) {
        if (!r.series) continue;
        for (const auto& c : r.series->columns) {
            if (std::find(measurables.begin(), measurables.end(), c.name) == measurables.end()) {
                measurables.push_back(c.name);
            }
        }
    }
    doc["measurables"] = measurables;
    auto runs = ordered_json::array();
    for (const auto& r : ensemble_->runs()) {
        auto emb = ordered_json::array();
        for (const auto& [kind, table] : r.embeddings) emb.push_back(to_string(kind));
        runs.push_back({{"id", r.entry.id},
                        {"color", r.entry.color},
                        {"kind", to_string(r.entry.kind)},
                        {"has_timeseries", r.series != nullptr},
                        {"embeddings", std::move(emb)}});
    }
    doc["runs"] = std::move(runs);
    return doc.dump(2) + "\n";
}

Brick Engine::volume_brick(std::string_view run_id, const BrickRequest& req) const {
    const auto& run = run_or_throw(run_id);
    const auto& g = ensemble_->manifest().grid;
    const auto nt = g.nt(), ny = g.ny(), nx = g.nx();
    const auto t0 = req.t0.value_or(0), t1 = req.t1.value_or(nt);
    const auto y0 = req.y0.value_or(0), y1 = req.y1.value_or(ny);
    const auto x0 = req.x0.value_or(0), x1 = req.x1.value_or(nx);
    if (!(t0 < t1 && t1 <= nt)) throw input_error(fmt::format("time range [{}, {}) invalid for {} steps", t0, t1, nt), "t0");
    if (!(y0 < y1 && y1 <= ny)) throw input_error(fmt::format("y range [{}, {}) invalid for {} rows", y0, y1, ny), "y0");
    if (!(x0 < x1 && x1 <= nx)) throw input_error(fmt::format("x range [{}, {}) invalid for {} columns", x0, x1, nx), "x0");
    if (req.downsample < 1) throw input_error("downsample must be >= 1", "downsample");

    // per-cell value accessor for the requested variable
    std::shared_ptr<const SegmentationVolume> seg = run.segmentation;
    if (!seg && req.variable == "segmentation") {
        seg = std::make_shared<const SegmentationVolume>(segment(*run.volume, req.threshold));
    }
    const std::vector<double>* field = nullptr;
    if (!seg) field = req.variable == "concentration" ? &run.volume->concentration : &run.volume->saturation;
    auto value = [&](std::size_t idx) -> double { return seg ? static_cast<double>(seg->classes[idx]) : (*field)[idx]; };

    const auto f = req.downsample;
    Brick b;
    b.nt = t1 - t0;
    b.ny = (y1 - y0 + f - 1) / f;
    b.nx = (x1 - x0 + f - 1) / f;
    b.values.reserve(b.nt * b.ny * b.nx);
    for (auto k = t0; k < t1; ++k) {
        for (std::size_t bj = 0; bj < b.ny; ++bj) {
            const auto ja = y0 + bj * f, jb = std::min(y1, ja + f);
            for (std::size_t bi = 0; bi < b.nx; ++bi) {
                const auto ia = x0 + bi * f, ib = std::min(x1, ia + f);
                double sum = 0;
                for (auto j = ja; j < jb; ++j) {
                    for (auto i = ia; i < ib; ++i) sum += value((k * ny + j) * nx + i);
                }
                b.values.push_back(static_cast<float>(sum / static_cast<double>((jb - ja) * (ib - ia))));
            }
        }
    }
    return b;
}

std::string Engine::timeseries_document(std::string_view run_id, std::string_view measurable) const {
    const auto& run = run_or_throw(run_id);
    if (!run.series) throw not_found(fmt::format("run '{}' has no time series", run_id), "run");
    const auto* col = run.series->find(measurable);
    if (!col) throw not_found(fmt::format("run '{}' has no measurable '{}'", run_id, measurable), "measurable");
    ordered_json doc;
    doc["run"] = run.entry.id;
    doc["measurable"] = col->name;
    doc["times"] = run.series->times;
    doc["values"] = col->values;
    auto flags = ordered_json::array();
    for (auto f : col->flags) flags.push_back(to_string(f));
    doc["flags"] = std::move(flags);
    return doc.dump() + "\n";
}

std::optional<double> Engine::first_presence(std::string_view run_id, std::string_view box_name, Channel channel,
                                             double threshold) const {
    const auto* box = ensemble_->manifest().find_box(box_name);
    if (!box) throw input_error(fmt::format("unknown box '{}'", box_name), "box");
    const auto& run = run_or_throw(run_id);
    if (run.segmentation) return first_presence_time(*run.segmentation, *box, channel);
    return first_presence_time(*run.volume, *box, channel, threshold);
}

std::string Engine::first_presence_document(std::string_view run_id, std::string_view box, Channel channel,
                                            double threshold) const {
    const auto minutes = first_presence(run_id, box, channel, threshold);
    ordered_json doc;
    doc["run"] = std::string(run_id);
    doc["box"] = std::string(box);
    doc["channel"] = to_string(channel);
    doc["threshold"] = threshold;
    doc["minutes"] = minutes ? ordered_json(*minutes) : ordered_json(nullptr);
    return doc.dump() + "\n";
}

} // namespace stens
