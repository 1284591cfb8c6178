#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stens/error.hpp"
#include "stens/projection.hpp"
#include "support.hpp"

namespace stens {
namespace {

DistanceMatrix make_matrix(std::vector<double> d, MatrixMode mode = MatrixMode::Group) {
    const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d.size()))));
    DistanceMatrix m;
    m.mode = mode;
    for (std::size_t i = 0; i < n; ++i) {
        m.labels.push_back({"r" + std::to_string(mode == MatrixMode::Group ? i : i / 4),
                            mode == MatrixMode::Group ? std::nullopt : std::optional<std::size_t>(i % 4)});
    }
    m.values = std::move(d);
    return m;
}

std::vector<double> random_points(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> p(2 * n);
    for (auto& v : p) v = u(rng);
    return p;
}

TEST(Smacof, StressNeverIncreases) {
    std::mt19937_64 rng(100);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = testing::random_distance_matrix(15, rng);
        const auto trace = smacof(d, 15, random_points(15, rng), 200, 0.0);
        for (std::size_t k = 1; k < trace.stress.size(); ++k) {
            ASSERT_LE(trace.stress[k], trace.stress[k - 1] * (1 + 1e-12)) << "iteration " << k;
        }
    }
}

TEST(Smacof, RawStressMatchesDefinition) {
    std::mt19937_64 rng(4);
    const auto x = random_points(6, rng);
    const auto d = testing::random_distance_matrix(6, rng);
    const auto e = testing::euclidean_distances(x, 2);
    double s = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            if (i < j) s += (d[i * 6 + j] - e[i * 6 + j]) * (d[i * 6 + j] - e[i * 6 + j]);
        }
    }
    EXPECT_NEAR(raw_stress(d, x, 6), s, 1e-12);
}

TEST(Mds, RecoversPlanarConfiguration) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const auto pts = random_points(10, rng);
        const auto m = make_matrix(testing::euclidean_distances(pts, 2));
        const auto r = project_mds(m, ProjectionConfig{});
        std::vector<double> got;
        for (const auto& p : r.points) {
            got.push_back(p.x);
            got.push_back(p.y);
        }
        EXPECT_LT(r.quality, 1e-8);
        EXPECT_LT(oracle::procrustes_residual(pts, got), 1e-4);
    }
}

TEST(Mds, DeterministicInSeed) {
    std::mt19937_64 rng(3);
    const auto m = make_matrix(testing::random_distance_matrix(8, rng));
    ProjectionConfig cfg;
    const auto a = to_json(project_mds(m, cfg)).dump();
    EXPECT_EQ(a, to_json(project_mds(m, cfg)).dump());
    cfg.seed = 2;
    EXPECT_NE(a, to_json(project_mds(m, cfg)).dump());
}

TEST(Mds, ScaleEquivariant) {
    std::mt19937_64 rng(12);
    auto d = testing::random_distance_matrix(7, rng);
    const auto a = project_mds(make_matrix(d), ProjectionConfig{});
    for (auto& v : d) v *= 1000.0;
    const auto b = project_mds(make_matrix(d), ProjectionConfig{});
    EXPECT_NEAR(a.quality, b.quality, 1e-9);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_NEAR(a.points[i].x * 1000.0, b.points[i].x, 1e-6);
        EXPECT_NEAR(a.points[i].y * 1000.0, b.points[i].y, 1e-6);
    }
}

TEST(Mds, DuplicatesCoincideExactly) {
    std::mt19937_64 rng(6);
    auto base = testing::random_distance_matrix(5, rng);
    // item 5 duplicates item 2
    std::vector<double> d(36, 0.0);
    auto src = [](std::size_t i) { return i == 5 ? 2 : i; };
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) d[i * 6 + j] = base[src(i) * 5 + src(j)];
    }
    const auto r = project_mds(make_matrix(d), ProjectionConfig{});
    EXPECT_EQ(r.points[2].x, r.points[5].x);
    EXPECT_EQ(r.points[2].y, r.points[5].y);
}

TEST(Mds, DegenerateInputs) {
    EXPECT_THROW(project_mds(make_matrix({0.0}), ProjectionConfig{}), Error);
    const auto r = project_mds(make_matrix(std::vector<double>(9, 0.0)), ProjectionConfig{});
    EXPECT_EQ(r.quality, 0.0);
    for (const auto& p : r.points) {
        EXPECT_EQ(p.x, 0.0);
        EXPECT_EQ(p.y, 0.0);
    }
    ProjectionConfig bad;
    bad.mds.restarts = 0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Tsne, JointProbabilitiesAreADistribution) {
    std::mt19937_64 rng(31);
    for (std::size_t n : {5u, 12u, 40u}) {
        const auto d = testing::random_distance_matrix(n, rng);
        const double perp = std::min(10.0, (static_cast<double>(n) - 1.5) / 3.0);
        const auto p = tsne_joint_probabilities(d, n, perp);
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_EQ(p[i * n + i], 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                EXPECT_GE(p[i * n + j], 0.0);
                EXPECT_EQ(p[i * n + j], p[j * n + i]);
                sum += p[i * n + j];
            }
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

// On a regular polygon every conditional row has the same profile, so P is
// the conditional matrix divided by n and each row's entropy is observable.
TEST(Tsne, BandwidthMatchesPerplexity) {
    const std::size_t n = 24;
    std::vector<double> pts(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 2 * M_PI * static_cast<double>(i) / n;
        pts[2 * i] = std::cos(a);
        pts[2 * i + 1] = std::sin(a);
    }
    const auto d = testing::euclidean_distances(pts, 2);
    for (double perp : {2.0, 5.0, 7.5}) {
        const auto p = tsne_joint_probabilities(d, n, perp);
        for (std::size_t i = 0; i < n; ++i) {
            double h = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const double c = p[i * n + j] * static_cast<double>(n);
                if (c > 0) h -= c * std::log(c);
            }
            EXPECT_NEAR(h, std::log(perp), 1e-5) << "row " << i;
        }
    }
}

TEST(Tsne, SeparatesTwoClusters) {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0, 0.1);
    const std::size_t n = 30;
    std::vector<double> pts(2 * n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i < n / 2 ? 0 : 1;
        pts[2 * i] = g(rng) + (labels[i] ? 5.0 : 0.0);
        pts[2 * i + 1] = g(rng);
    }
    ProjectionConfig cfg;
    cfg.algorithm = Algorithm::Tsne;
    cfg.tsne.perplexity = 5;
    const auto r = project_tsne(make_matrix(testing::euclidean_distances(pts, 2)), cfg);
    std::vector<double> y;
    for (const auto& p : r.points) {
        y.push_back(p.x);
        y.push_back(p.y);
    }
    EXPECT_GT(oracle::silhouette(testing::euclidean_distances(y, 2), labels), 0.5);
}

TEST(Tsne, EqualDistancesStayFinite) {
    const std::size_t n = 12;
    std::vector<double> d(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0;
    ProjectionConfig cfg;
    cfg.algorithm = Algorithm::Tsne;
    cfg.tsne.perplexity = 3;
    const auto r = project_tsne(make_matrix(d), cfg);
    EXPECT_TRUE(std::isfinite(r.quality));
    for (const auto& p : r.points) {
        EXPECT_TRUE(std::isfinite(p.x));
        EXPECT_TRUE(std::isfinite(p.y));
    }
}

TEST(Tsne, KlRecordedEvery50Iterations) {
    std::mt19937_64 rng(2);
    const auto d = testing::random_distance_matrix(10, rng);
    TsneOptions opt;
    opt.perplexity = 2;
    opt.iterations = 300;
    const auto t = tsne(d, 10, opt, 1);
    EXPECT_EQ(t.kl.size(), 6u);
    opt.iterations = 120;
    EXPECT_EQ(tsne(d, 10, opt, 1).kl.size(), 3u);
}

TEST(Tsne, RejectsBadSizes) {
    std::mt19937_64 rng(2);
    EXPECT_THROW(tsne_joint_probabilities(testing::random_distance_matrix(3, rng), 3, 0.5), Error);
    EXPECT_THROW(tsne_joint_probabilities(testing::random_distance_matrix(10, rng), 10, 3.0), Error);
    EXPECT_NO_THROW(tsne_joint_probabilities(testing::random_distance_matrix(10, rng), 10, 2.9));
}

TEST(Projection, JsonDocumentShape) {
    std::mt19937_64 rng(5);
    const auto m = make_matrix(testing::random_distance_matrix(8, rng), MatrixMode::Patch);
    const auto r = project(m, ProjectionConfig{});
    const auto j = to_json(r);
    EXPECT_EQ(j["algorithm"], "mds");
    EXPECT_EQ(j["mode"], "patch");
    ASSERT_EQ(j["points"].size(), 8u);
    EXPECT_EQ(j["points"][5]["run"], "r1");
    EXPECT_EQ(j["points"][5]["patch"], 1);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"algorithm", "config", "quality", "mode", "points"}));
}

TEST(Projection, TimeCurvesOrderedByPatch) {
    std::mt19937_64 rng(5);
    auto m = make_matrix(testing::random_distance_matrix(8, rng), MatrixMode::Patch);
    std::swap(m.labels[0], m.labels[3]);
    const auto curves = time_curves(project(m, ProjectionConfig{}));
    ASSERT_EQ(curves.size(), 2u);
    EXPECT_EQ(curves[0].run, "r0");
    for (const auto& c : curves) {
        ASSERT_EQ(c.vertices.size(), 4u);
        for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(*c.vertices[k].label.patch, k);
    }
    const auto g = make_matrix(testing::random_distance_matrix(4, rng));
    EXPECT_THROW(time_curves(project(g, ProjectionConfig{})), Error);
}

} // namespace
} // namespace stens
