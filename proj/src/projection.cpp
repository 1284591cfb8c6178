#include "stens/projection.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "stens/error.hpp"

namespace stens {

const char* to_string(Algorithm algorithm) {
    return algorithm == Algorithm::Mds ? "mds" : "tsne";
}

Algorithm parse_algorithm(std::string_view s) {
    if (s == "mds") return Algorithm::Mds;
    if (s == "tsne") return Algorithm::Tsne;
    throw input_error(fmt::format("unknown projection algorithm '{}'", s), "algo");
}

void ProjectionConfig::validate() const {
    if (mds.max_iterations < 1) throw input_error("MDS iterations must be >= 1", "iterations");
    if (!(mds.stress_tolerance >= 0)) throw input_error("MDS tolerance must be >= 0", "tolerance");
    if (mds.restarts < 1) throw input_error("MDS restarts must be >= 1", "restarts");
    if (tsne.iterations < 1) throw input_error("t-SNE iterations must be >= 1", "iterations");
    if (!(tsne.perplexity > 0)) throw input_error("perplexity must be > 0", "perplexity");
    if (!(tsne.learning_rate > 0)) throw input_error("learning rate must be > 0", "learning_rate");
}

ProjectionResult project(const DistanceMatrix& matrix, const ProjectionConfig& cfg) {
    return cfg.algorithm == Algorithm::Mds ? project_mds(matrix, cfg) : project_tsne(matrix, cfg);
}

std::vector<TimeCurve> time_curves(const ProjectionResult& result) {
    if (result.mode != MatrixMode::Patch) throw input_error("time curves need a patch-mode projection", "mode");
    std::vector<TimeCurve> curves;
    std::map<std::string, std::size_t> slot;
    for (const auto& p : result.points) {
        if (!p.label.patch) throw input_error("patch-mode point without patch index", "mode");
        auto [it, inserted] = slot.emplace(p.label.run, curves.size());
        if (inserted) curves.push_back({p.label.run, {}});
        curves[it->second].vertices.push_back(p);
    }
    for (auto& c : curves) {
        std::stable_sort(c.vertices.begin(), c.vertices.end(),
                         [](const ProjectedPoint& a, const ProjectedPoint& b) { return *a.label.patch < *b.label.patch; });
    }
    return curves;
}

nlohmann::ordered_json config_json(const ProjectionConfig& cfg) {
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    if (cfg.algorithm == Algorithm::Mds) {
        j["max_iterations"] = cfg.mds.max_iterations;
        j["stress_tolerance"] = cfg.mds.stress_tolerance;
        j["restarts"] = cfg.mds.restarts;
    } else {
        j["perplexity"] = cfg.tsne.perplexity;
        j["iterations"] = cfg.tsne.iterations;
        j["learning_rate"] = cfg.tsne.learning_rate;
        j["early_exaggeration"] = cfg.tsne.early_exaggeration;
        j["exaggeration_iterations"] = cfg.tsne.exaggeration_iterations;
    }
    return j;
}

nlohmann::ordered_json to_json(const ProjectionResult& result) {
    nlohmann::ordered_json doc;
    doc["algorithm"] = to_string(result.config.algorithm);
    doc["config"] = config_json(result.config);
    doc["quality"] = result.quality;
    doc["mode"] = to_string(result.mode);
    auto points = nlohmann::ordered_json::array();
    for (const auto& p : result.points) {
        nlohmann::ordered_json pt;
        pt["run"] = p.label.run;
        pt["patch"] = p.label.patch ? nlohmann::ordered_json(*p.label.patch) : nlohmann::ordered_json(nullptr);
        pt["x"] = p.x;
        pt["y"] = p.y;
        points.push_back(std::move(pt));
    }
    doc["points"] = std::move(points);
    return doc;
}

} // namespace stens
