#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stens/distance.hpp"
#include "stens/embeddings.hpp"
#include "stens/error.hpp"
#include "stens/patching.hpp"
#include "support.hpp"

namespace stens {
namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
    auto v = to_vec(a);
    v.insert(v.end(), b.begin(), b.end());
    return v;
}

class PatchPairs : public ::testing::Test {
protected:
    void SetUp() override {
        std::mt19937_64 rng(42);
        a = testing::random_volume("a", testing::tiny_grid(), rng);
        b = testing::random_volume("b", testing::tiny_grid(), rng);
        pa = extract_patches(a, PatchSpec{});
        pb = extract_patches(b, PatchSpec{});
    }
    SpaceTimeVolume a, b;
    std::vector<Patch> pa, pb;
};

TEST_F(PatchPairs, LpMatchesNaiveLoops) {
    for (std::size_t k = 0; k < pa.size(); ++k) {
        const auto& x = pa[k];
        const auto& y = pb[k];
        for (int p : {1, 2}) {
            EXPECT_NEAR(dist_lp(x, y, p, Variable::Saturation),
                        oracle::lp(to_vec(x.saturation), to_vec(y.saturation), p), 1e-12);
            EXPECT_NEAR(dist_lp(x, y, p, Variable::Concentration),
                        oracle::lp(to_vec(x.concentration), to_vec(y.concentration), p), 1e-12);
            EXPECT_NEAR(dist_lp(x, y, p, Variable::Both),
                        oracle::lp(concat(x.saturation, x.concentration), concat(y.saturation, y.concentration), p),
                        1e-12);
        }
    }
    EXPECT_THROW(dist_lp(pa[0], pb[0], 3, Variable::Both), Error);
}

TEST_F(PatchPairs, WassersteinMatchesTransportOracle) {
    MetricConfig cfg;
    cfg.kind = MetricKind::Wasserstein;
    cfg.histogram_bins = 16;
    cfg.concentration_range = ValueRange{0, 2};
    for (std::size_t k = 0; k < pa.size(); ++k) {
        const auto& x = pa[k];
        const auto& y = pb[k];
        const double ws = oracle::transport_cost(oracle::histogram(to_vec(x.saturation), 16, 0, 1),
                                                 oracle::histogram(to_vec(y.saturation), 16, 0, 1));
        const double wc = oracle::transport_cost(oracle::histogram(to_vec(x.concentration), 16, 0, 2),
                                                 oracle::histogram(to_vec(y.concentration), 16, 0, 2));
        cfg.variable = Variable::Saturation;
        EXPECT_NEAR(dist_wasserstein(x, y, cfg), ws, 1e-9);
        cfg.variable = Variable::Concentration;
        EXPECT_NEAR(dist_wasserstein(x, y, cfg), wc, 1e-9);
        cfg.variable = Variable::Both;
        EXPECT_NEAR(dist_wasserstein(x, y, cfg), 0.5 * (ws + wc), 1e-9);
    }
}

TEST_F(PatchPairs, PerPairRangeUsesPairExtent) {
    MetricConfig cfg;
    cfg.kind = MetricKind::Wasserstein;
    cfg.range_mode = RangeMode::PerPair;
    cfg.variable = Variable::Concentration;
    cfg.histogram_bins = 8;
    const auto xs = to_vec(pa[0].concentration), ys = to_vec(pb[0].concentration);
    double lo = 1e300, hi = -1e300;
    for (auto* v : {&xs, &ys}) {
        for (double c : *v) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    EXPECT_NEAR(dist_wasserstein(pa[0], pb[0], cfg),
                oracle::transport_cost(oracle::histogram(xs, 8, lo, hi), oracle::histogram(ys, 8, lo, hi)), 1e-9);
}

TEST(Wasserstein, RandomHistogramsAgainstOracle) {
    std::mt19937_64 rng(7);
    for (int bins : {2, 3, 8, 16, 33}) {
        for (int trial = 0; trial < 40; ++trial) {
            const auto a = testing::random_histogram(bins, rng);
            const auto b = testing::random_histogram(bins, rng);
            EXPECT_NEAR(wasserstein_1d(a, b), oracle::transport_cost(a, b), 1e-9) << bins;
        }
    }
}

TEST(Wasserstein, PointMassesAtEnds) {
    for (int bins : {2, 8, 16, 256}) {
        std::vector<double> a(bins, 0.0), b(bins, 0.0);
        a.front() = 1;
        b.back() = 1;
        EXPECT_EQ(wasserstein_1d(a, b), static_cast<double>(bins - 1) / bins);
    }
}

TEST(Wasserstein, HistogramBinning) {
    const std::vector<double> v = {0.0, 0.24, 0.25, 0.99, 1.0, 1.5, -0.5};
    const auto h = histogram(v, 4, {0, 1});
    EXPECT_EQ(h, oracle::histogram(v, 4, 0, 1));
    EXPECT_DOUBLE_EQ(h[0], 3.0 / 7);
    EXPECT_DOUBLE_EQ(h[3], 3.0 / 7);
    EXPECT_THROW(histogram(v, 1, {0, 1}), Error);
    EXPECT_THROW(histogram(v, 4, {1, 1}), Error);
    EXPECT_THROW(histogram({}, 4, {0, 1}), Error);
}

TEST(Metric, ConfigValidation) {
    MetricConfig cfg;
    cfg.histogram_bins = 1;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.segmentation_threshold = -1;
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_THROW(parse_metric_kind("cosine"), Error);
    EXPECT_EQ(parse_metric_kind("embedding_subdivided"), MetricKind::EmbeddingSubdivided);
    EXPECT_EQ(parse_variable("both"), Variable::Both);
    EXPECT_EQ(parse_range_mode("per_pair"), RangeMode::PerPair);
}

TEST(Embeddings, LoadAndCompare) {
    testing::TempDir tmp;
    testing::write_text(tmp / "e.csv", "run,patch,sub,f0,f1\nr,0,,1,2\nr,1,,3,-1\ns,0,,0,0\ns,1,,1,1\n");
    const auto t = load_embeddings(tmp / "e.csv", {{"r", 2}, {"s", 2}});
    EXPECT_EQ(t.dimension(), 2u);
    EXPECT_EQ(dist_embedding({"r", 0, {}}, {"r", 1, {}}, t, false), 5.0);
    EXPECT_EQ(dist_embedding({"r", 0, {}}, {"s", 0, {}}, t, false), 3.0);
    EXPECT_THROW(dist_embedding({"r", 0, {}}, {"q", 0, {}}, t, false), Error);
}

TEST(Embeddings, SubdividedSumsOverSubPositions) {
    EmbeddingTable t;
    t.insert({"r", 0, 0}, {1, 0});
    t.insert({"r", 0, 1}, {0, 5});
    t.insert({"s", 0, 0}, {0, 0});
    t.insert({"s", 0, 1}, {1, 1});
    EXPECT_EQ(dist_embedding({"r", 0, {}}, {"s", 0, {}}, t, true), 1.0 + 5.0);
    t.insert({"q", 0, 0}, {0, 0});
    EXPECT_THROW(dist_embedding({"r", 0, {}}, {"q", 0, {}}, t, true), Error);
}

TEST(Embeddings, MissingPatchIsListed) {
    testing::TempDir tmp;
    testing::write_text(tmp / "e.csv", "run,patch,sub,f0\nr,0,,1\nr,2,,1\n");
    try {
        load_embeddings(tmp / "e.csv", {{"r", 3}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("r patch 1"), std::string::npos) << e.what();
    }
}

TEST(Embeddings, DimensionMismatchIsAnError) {
    testing::TempDir tmp;
    testing::write_text(tmp / "e.csv", "run,patch,sub,f0,f1\nr,0,,1,2\nr,1,,1\n");
    EXPECT_THROW(load_embeddings(tmp / "e.csv", {{"r", 2}}), Error);
    testing::write_text(tmp / "h.csv", "patch,run,sub,f0\n");
    EXPECT_THROW(load_embeddings(tmp / "h.csv", {}), Error);
    EmbeddingTable t(2);
    EXPECT_THROW(t.insert({"r", 0, {}}, {1, 2, 3}), Error);
    EXPECT_THROW(t.insert({"r", 0, {}}, {1, std::nan("")}), Error);
    t.insert({"r", 0, {}}, {1, 2});
    EXPECT_THROW(t.insert({"r", 0, {}}, {1, 2}), Error);
}

TEST(Embeddings, WriteReadRoundTrip) {
    testing::TempDir tmp;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01;
    EmbeddingTable t(5);
    for (std::size_t p = 0; p < 4; ++p) {
        for (std::size_t s = 0; s < 3; ++s) {
            std::vector<double> v(5);
            for (auto& x : v) x = n01(rng);
            t.insert({"run", p, s}, v);
        }
    }
    write_embeddings(tmp / "e.csv", t);
    const auto back = load_embeddings(tmp / "e.csv", {{"run", 4}}, 3);
    EXPECT_EQ(back.entries(), t.entries());
}

} // namespace
} // namespace stens
