#include <gtest/gtest.h>

#include "ensemble_fixture.hpp"
#include "stens/error.hpp"
#include "stens/segmentation.hpp"

namespace stens {
namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::InvalidInput;
}

std::string param_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.param();
    }
    return "<none>";
}

TEST(Query, Defaults) {
    const auto q = parse_query({});
    EXPECT_EQ(q.metric, MetricConfig{});
    EXPECT_EQ(q.mode, MatrixMode::Group);
    EXPECT_TRUE(q.runs.empty());
    EXPECT_EQ(q.projection.algorithm, Algorithm::Mds);
    EXPECT_EQ(q.projection.seed, 1u);
}

TEST(Query, AllKeys) {
    const auto q = parse_query({{"metric", "wasserstein"},
                                {"variable", "concentration"},
                                {"segmented", "true"},
                                {"threshold", "0.01"},
                                {"bins", "64"},
                                {"range", "per_pair"},
                                {"algo", "tsne"},
                                {"mode", "patch"},
                                {"runs", "a, b"},
                                {"seed", "7"},
                                {"perplexity", "4"},
                                {"iterations", "500"},
                                {"learning_rate", "50"}});
    EXPECT_EQ(q.metric.kind, MetricKind::Wasserstein);
    EXPECT_EQ(q.metric.variable, Variable::Concentration);
    EXPECT_TRUE(q.metric.segmented);
    EXPECT_EQ(q.metric.segmentation_threshold, 0.01);
    EXPECT_EQ(q.metric.histogram_bins, 64);
    EXPECT_EQ(q.metric.range_mode, RangeMode::PerPair);
    EXPECT_EQ(q.projection.algorithm, Algorithm::Tsne);
    EXPECT_EQ(q.mode, MatrixMode::Patch);
    EXPECT_EQ(q.runs, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(q.projection.seed, 7u);
    EXPECT_EQ(q.projection.tsne.perplexity, 4);
    EXPECT_EQ(q.projection.tsne.iterations, 500);
    EXPECT_EQ(q.projection.tsne.learning_rate, 50);
}

TEST(Query, ErrorsNameTheParameter) {
    EXPECT_EQ(param_of([] { parse_query({{"colour", "red"}}); }), "colour");
    EXPECT_EQ(param_of([] { parse_query({{"metric", "cosine"}}); }), "metric");
    EXPECT_EQ(param_of([] { parse_query({{"bins", "1.5"}}); }), "bins");
    EXPECT_EQ(param_of([] { parse_query({{"bins", "1"}}); }), "bins");
    EXPECT_EQ(param_of([] { parse_query({{"seed", "-1"}}); }), "seed");
    EXPECT_EQ(param_of([] { parse_query({{"segmented", "maybe"}}); }), "segmented");
    EXPECT_EQ(param_of([] { parse_query({{"threshold", "nan"}}); }), "threshold");
    EXPECT_EQ(param_of([] { parse_query({{"runs", "a,a"}}); }), "runs");
    EXPECT_EQ(param_of([] { parse_brick_request({{"downsample", "0"}}); }), "downsample");
    EXPECT_EQ(param_of([] { parse_brick_request({{"variable", "pressure"}}); }), "variable");
}

class EngineTest : public ::testing::Test {
protected:
    std::shared_ptr<const Ensemble> ens = testing::small_ensemble();
};

TEST_F(EngineTest, DefaultRunSelection) {
    Engine e(ens);
    EXPECT_EQ(e.selected_runs(parse_query({})), (std::vector<std::string>{"sim1", "sim2", "sim3"}));
    EXPECT_EQ(e.selected_runs(parse_query({{"segmented", "1"}})),
              (std::vector<std::string>{"sim1", "sim2", "sim3", "exp1"}));
    EXPECT_EQ(kind_of([&] { e.selected_runs(parse_query({{"runs", "sim9"}})); }), ErrorKind::InvalidInput);
}

TEST_F(EngineTest, ExperimentWithoutSegmentationConflicts) {
    Engine e(ens);
    EXPECT_EQ(kind_of([&] { e.matrix(parse_query({{"runs", "exp1,sim1"}})); }), ErrorKind::Conflict);
    const auto m = e.matrix(parse_query({{"runs", "exp1,sim1"}, {"segmented", "true"}, {"metric", "wasserstein"}}));
    EXPECT_EQ(m->size(), 2u);
}

TEST_F(EngineTest, CacheIsTransparent) {
    Engine cached(ens, 4);
    const Params p = {{"metric", "manhattan"}, {"mode", "patch"}};
    const auto first = cached.projection_document(parse_query(p));
    EXPECT_EQ(cached.cached_matrices(), 1u);
    const auto second = cached.projection_document(parse_query(p));
    EXPECT_EQ(cached.cache_hits(), 1u);
    EXPECT_EQ(first, second);
    Engine fresh(ens, 4);
    EXPECT_EQ(fresh.projection_document(parse_query(p)), first);
}

TEST_F(EngineTest, CacheKeyIgnoresProjectionSettings) {
    Engine e(ens);
    EXPECT_EQ(e.cache_key(parse_query({{"seed", "3"}})), e.cache_key(parse_query({{"algo", "tsne"}})));
    EXPECT_NE(e.cache_key(parse_query({})), e.cache_key(parse_query({{"mode", "patch"}})));
    EXPECT_NE(e.cache_key(parse_query({})), e.cache_key(parse_query({{"runs", "sim1,sim2"}})));
    EXPECT_NE(e.cache_key(parse_query({{"runs", "sim2,sim1"}})), e.cache_key(parse_query({{"runs", "sim1,sim2"}})));
}

TEST_F(EngineTest, CacheEvictsOldest) {
    Engine e(ens, 2);
    e.matrix(parse_query({{"metric", "euclidean"}}));
    e.matrix(parse_query({{"metric", "manhattan"}}));
    e.matrix(parse_query({{"metric", "wasserstein"}}));
    EXPECT_EQ(e.cached_matrices(), 2u);
    e.matrix(parse_query({{"metric", "manhattan"}}));
    EXPECT_EQ(e.cache_hits(), 1u);
    e.matrix(parse_query({{"metric", "euclidean"}}));
    EXPECT_EQ(e.cache_hits(), 1u);
    EXPECT_THROW(Engine(ens, 0), Error);
}

TEST_F(EngineTest, GlobalRangeIndependentOfRunSubset) {
    Engine e(ens);
    const auto all = e.matrix(parse_query({{"metric", "wasserstein"}}));
    const auto pair = e.matrix(parse_query({{"metric", "wasserstein"}, {"runs", "sim1,sim3"}}));
    EXPECT_EQ((*pair)(0, 1), (*all)(0, 2));
    EXPECT_EQ(all->metric.concentration_range->hi, ens->concentration_max());
}

TEST_F(EngineTest, DistancesJsonMatchesPmdm) {
    Engine e(ens);
    const auto q = parse_query({{"metric", "embedding_subdivided"}, {"mode", "patch"}, {"runs", "sim1,sim2"}});
    const auto doc = nlohmann::json::parse(e.distances_json(q));
    const auto bin = decode_pmdm(e.distances_pmdm(q));
    ASSERT_EQ(bin.n, 96u);
    ASSERT_EQ(doc["labels"].size(), 96u);
    EXPECT_EQ(doc["labels"][50]["run"], "sim2");
    EXPECT_EQ(doc["labels"][50]["patch"], 2);
    for (std::size_t i = 0; i < 96; i += 7) {
        for (std::size_t j = 0; j < 96; j += 5) EXPECT_EQ(doc["values"][i][j].get<double>(), bin.values[i * 96 + j]);
    }
    EXPECT_EQ(doc["metric"]["kind"], "embedding_subdivided");
}

TEST_F(EngineTest, ProjectionDocumentHasTimeCurves) {
    Engine e(ens);
    const auto doc = nlohmann::json::parse(e.projection_document(parse_query({{"mode", "patch"}, {"runs", "sim1,sim2"}})));
    ASSERT_EQ(doc["points"].size(), 96u);
    ASSERT_EQ(doc["time_curves"].size(), 2u);
    EXPECT_EQ(doc["time_curves"][1]["run"], "sim2");
    EXPECT_EQ(doc["time_curves"][1]["points"][0], 48);
    const auto group = nlohmann::json::parse(e.projection_document(parse_query({})));
    EXPECT_EQ(group["points"].size(), 3u);
    EXPECT_FALSE(group.contains("time_curves"));
}

TEST_F(EngineTest, FullBrick) {
    Engine e(ens);
    const auto b = e.volume_brick("sim1", {});
    const auto& g = ens->manifest().grid;
    EXPECT_EQ(b.nt, g.nt());
    EXPECT_EQ(b.ny, g.ny());
    EXPECT_EQ(b.nx, g.nx());
    const auto& v = *ens->find("sim1")->volume;
    for (std::size_t c = 0; c < v.saturation.size(); c += 997) EXPECT_EQ(b.values[c], static_cast<float>(v.saturation[c]));
}

TEST_F(EngineTest, DownsampledBrickIsBlockMean) {
    Engine e(ens);
    BrickRequest full, half;
    full.variable = half.variable = "concentration";
    full.t0 = half.t0 = 30;
    full.t1 = half.t1 = 33;
    half.downsample = 2;
    const auto a = e.volume_brick("sim2", full);
    const auto b = e.volume_brick("sim2", half);
    EXPECT_EQ(b.ny, (a.ny + 1) / 2);
    EXPECT_EQ(b.nx, (a.nx + 1) / 2);
    for (std::size_t k = 0; k < b.nt; ++k) {
        for (std::size_t j = 0; j < b.ny; ++j) {
            for (std::size_t i = 0; i < b.nx; ++i) {
                double sum = 0;
                int n = 0;
                for (std::size_t jj = 2 * j; jj < std::min(a.ny, 2 * j + 2); ++jj) {
                    for (std::size_t ii = 2 * i; ii < std::min(a.nx, 2 * i + 2); ++ii) {
                        sum += a.values[(k * a.ny + jj) * a.nx + ii];
                        ++n;
                    }
                }
                EXPECT_NEAR(b.values[(k * b.ny + j) * b.nx + i], sum / n, 1e-5);
            }
        }
    }
}

TEST_F(EngineTest, BrickRangesAndSegmentation) {
    Engine e(ens);
    BrickRequest r;
    r.t0 = 3;
    r.t1 = 3;
    EXPECT_EQ(kind_of([&] { e.volume_brick("sim1", r); }), ErrorKind::InvalidInput);
    r.t1 = 200;
    EXPECT_EQ(kind_of([&] { e.volume_brick("sim1", r); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([&] { e.volume_brick("nope", {}); }), ErrorKind::NotFound);

    BrickRequest sub;
    sub.x0 = 10;
    sub.x1 = 20;
    sub.y0 = 30;
    sub.y1 = 31;
    sub.t0 = 100;
    sub.t1 = 101;
    const auto b = e.volume_brick("exp1", sub);
    EXPECT_EQ(b.values.size(), 10u);
    const auto& seg = *ens->find("exp1")->segmentation;
    const auto& g = seg.grid;
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(b.values[i], seg.classes[(100 * g.ny() + 30) * g.nx() + 10 + i]);
    }
    BrickRequest th;
    th.variable = "segmentation";
    th.threshold = 0.05;
    const auto s = e.volume_brick("sim1", th);
    const auto want = segment(*ens->find("sim1")->volume, 0.05);
    for (std::size_t c = 0; c < want.classes.size(); c += 101) EXPECT_EQ(s.values[c], want.classes[c]);
}

TEST_F(EngineTest, TimeSeries) {
    Engine e(ens);
    const auto doc = nlohmann::json::parse(e.timeseries_document("sim1", "dissolved_B"));
    ASSERT_EQ(doc["values"].size(), 145u);
    ASSERT_EQ(doc["flags"].size(), 145u);
    const auto* col = ens->find("sim1")->series->find("dissolved_B");
    for (std::size_t k = 0; k < 145; ++k) EXPECT_EQ(doc["values"][k].get<double>(), col->values[k]);
    EXPECT_EQ(doc["flags"][0], "measured");
    EXPECT_EQ(kind_of([&] { e.timeseries_document("exp1", "dissolved_B"); }), ErrorKind::NotFound);
    EXPECT_EQ(kind_of([&] { e.timeseries_document("sim1", "nope"); }), ErrorKind::NotFound);
}

TEST_F(EngineTest, FirstPresence) {
    Engine e(ens);
    EXPECT_EQ(e.first_presence("sim1", "B", Channel::Co2Presence, 0.001), 220.0);
    EXPECT_EQ(e.first_presence("sim3", "B", Channel::Co2Presence, 0.001), 240.0);
    EXPECT_EQ(e.first_presence("exp1", "B", Channel::Co2Presence, 0.001), 250.0);
    EXPECT_EQ(kind_of([&] { e.first_presence("sim1", "Z", Channel::Co2Presence, 0.001); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([&] { e.first_presence("x", "B", Channel::Co2Presence, 0.001); }), ErrorKind::NotFound);
    const auto doc = nlohmann::json::parse(e.first_presence_document("sim2", "B", Channel::Co2Presence, 0.001));
    EXPECT_EQ(doc["minutes"], 230.0);
}

TEST_F(EngineTest, EnsembleDocument) {
    Engine e(ens);
    const auto doc = nlohmann::json::parse(e.ensemble_document());
    EXPECT_EQ(doc["runs"].size(), 4u);
    EXPECT_EQ(doc["runs"][3]["kind"], "experiment");
    EXPECT_EQ(doc["grid"]["nx"], 58);
    EXPECT_EQ(doc["patch"]["patches"], 48);
    EXPECT_EQ(doc["boxes"].size(), 3u);
    EXPECT_EQ(doc["measurables"].size(), synth::measurable_names().size());
    EXPECT_EQ(e.ensemble_document(), e.ensemble_document());
}

TEST_F(EngineTest, CacheDirectoryRoundTrip) {
    testing::TempDir tmp;
    ens->write_cache(tmp.path());
    const auto again = Ensemble::load(ens->manifest(), tmp.path());
    for (const auto& r : ens->runs()) {
        const auto* other = again->find(r.entry.id);
        ASSERT_NE(other, nullptr);
        if (r.volume) EXPECT_TRUE(*r.volume == *other->volume);
        if (r.segmentation) EXPECT_TRUE(*r.segmentation == *other->segmentation);
    }
}

TEST(EmptyEnsemble, NoRuns) {
    Manifest m;
    Engine e(Ensemble::from_runs(m, {}));
    const auto doc = nlohmann::json::parse(e.ensemble_document());
    EXPECT_TRUE(doc["runs"].empty());
    EXPECT_EQ(kind_of([&] { e.matrix(parse_query({})); }), ErrorKind::InvalidInput);
}

} // namespace
} // namespace stens
