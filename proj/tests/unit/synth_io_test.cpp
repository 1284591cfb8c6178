#include <gtest/gtest.h>

#include <cstring>

#include "stens/distance_matrix.hpp"
#include "stens/error.hpp"
#include "stens/manifest.hpp"
#include "stens/presence.hpp"
#include "stens/segmentation.hpp"
#include "stens/synth.hpp"
#include "stens/text.hpp"
#include "stens/volume_io.hpp"
#include "support.hpp"

namespace stens {
namespace {

using testing::TempDir;

synth::PhantomParams spill_at_minutes(double minutes) {
    synth::PhantomParams p;
    p.spill_time = minutes / 60.0;
    return p;
}

TEST(Synth, DeterministicInParameters) {
    const auto g = testing::coarse_grid();
    const auto a = synth::generate_run("r", spill_at_minutes(250), g);
    const auto b = synth::generate_run("r", spill_at_minutes(250), g);
    EXPECT_EQ(a.volume, b.volume);
    EXPECT_EQ(a.series, b.series);
    auto other = spill_at_minutes(250);
    other.seed = 2;
    EXPECT_NE(synth::generate_run("r", other, g).volume, a.volume);
}

TEST(Synth, FieldsInPhysicalRange) {
    const auto run = synth::generate_run("r", spill_at_minutes(250), testing::coarse_grid());
    for (double s : run.volume.saturation) {
        ASSERT_GE(s, 0.0);
        ASSERT_LE(s, 1.0);
    }
    for (double c : run.volume.concentration) ASSERT_GE(c, 0.0);
    EXPECT_EQ(run.series.columns.size(), synth::measurable_names().size());
}

TEST(Synth, SpillDetectedAtConfiguredTime) {
    for (double minutes : {200.0, 250.0, 260.0, 270.0}) {
        for (const auto& g : {testing::coarse_grid(), GridSpec::canonical()}) {
            const auto run = synth::generate_run("r", spill_at_minutes(minutes), g);
            const auto boxes = synth::phantom_boxes();
            EXPECT_EQ(first_presence_time(run.volume, boxes[1], Channel::Co2Presence, 0.001), minutes);
            const auto seg = segment(run.volume, 0.001);
            EXPECT_EQ(first_presence_time(seg, boxes[1], Channel::Co2Presence), minutes);
        }
    }
    synth::PhantomParams never;
    const auto run = synth::generate_run("r", never, testing::coarse_grid());
    EXPECT_FALSE(first_presence_time(run.volume, synth::phantom_boxes()[1], Channel::Co2Presence, 0.001));
}

TEST(Synth, FrameRoundTripIsExact) {
    TempDir tmp;
    const auto g = testing::coarse_grid();
    const auto run = synth::generate_run("r", spill_at_minutes(250), g);
    synth::write_frames(run.volume, tmp / "frames");
    const auto back = align_volume("r", parse_spatial_maps(tmp / "frames"), g);
    EXPECT_TRUE(back == run.volume);

    synth::write_time_series(run.series, tmp / "ts.csv");
    EXPECT_EQ(parse_time_series(tmp / "ts.csv", {}, g, "r"), run.series);

    const auto seg = segment(run.volume, 0.001);
    synth::write_segmentation_frames(seg, tmp / "seg");
    EXPECT_EQ(parse_segmentation_maps(tmp / "seg", {}, g, "r"), seg);
}

TEST(Synth, TimeSeriesIsBoxIntegral) {
    const auto g = testing::coarse_grid();
    const auto run = synth::generate_run("r", spill_at_minutes(250), g);
    const auto* dissolved_b = run.series.find("dissolved_B");
    ASSERT_NE(dissolved_b, nullptr);
    // before the spill nothing is dissolved in box B; afterwards there is
    EXPECT_EQ(dissolved_b->values[24], 0.0);
    EXPECT_GT(dissolved_b->values[25], 0.0);
}

TEST(Synth, SketchEmbeddingsRespectIdentity) {
    const auto g = testing::coarse_grid();
    const auto run = synth::generate_run("r", spill_at_minutes(250), g);
    const PatchSpec whole{3, 2, std::nullopt};
    const auto a = synth::sketch_embeddings(run.volume, whole, 16);
    auto renamed = run.volume;
    renamed.run_id = "q";
    const auto b = synth::sketch_embeddings(renamed, whole, 16);
    EXPECT_EQ(a.size(), 48u);
    for (std::size_t p = 0; p < 48; ++p) EXPECT_EQ(a.at({"r", p, {}}), b.at({"q", p, {}}));
    EXPECT_NE(a.at({"r", 0, {}}), a.at({"r", 40, {}}));

    const PatchSpec sub{3, 2, SubSize{8, 8}};
    const auto s = synth::sketch_embeddings(run.volume, sub, 4);
    // 29 x 31 downsampled cells hold 3 x 3 full tiles
    EXPECT_EQ(s.size(), 48u * 9u);
    EXPECT_EQ(s.sub_indices("r", 5).size(), 9u);
}

TEST(Synth, GrowthRateMovesRunsApart) {
    const auto g = testing::coarse_grid();
    synth::PhantomParams base;
    base.spill_time = 4;
    std::vector<MetricRun> runs;
    for (double f : {1.0, 1.2, 1.5, 2.0}) {
        auto p = base;
        p.growth_rate = base.growth_rate * f;
        auto v = std::make_shared<const SpaceTimeVolume>(synth::generate_run("g" + text::format_double(f), p, g).volume);
        runs.push_back({v->run_id, RunKind::Simulation, v, nullptr, nullptr});
    }
    const auto m = group_distance_matrix(runs, PatchSpec{}, MetricConfig{});
    EXPECT_LT(m(0, 1), m(0, 2));
    EXPECT_LT(m(0, 2), m(0, 3));
}

TEST(Synth, EnsembleOnDiskLoads) {
    TempDir tmp;
    synth::EnsembleSpec spec;
    spec.grid = testing::coarse_grid();
    spec.patch.sub_size = {8, 8};
    spec.embedding_dimension = 8;
    spec.members = synth::default_members(2, 1);
    const auto written = synth::generate_ensemble(spec, tmp.path());
    const auto m = Manifest::load(tmp.path());
    ASSERT_EQ(m.runs.size(), 3u);
    EXPECT_EQ(m.runs[2].kind, RunKind::Experiment);
    EXPECT_FALSE(m.runs[2].timeseries);
    EXPECT_EQ(m.runs[0].embeddings.size(), 4u);
    EXPECT_EQ(m.runs[2].embeddings.size(), 2u);
    EXPECT_EQ(m.grid, spec.grid);
    EXPECT_EQ(m.to_json_text(), written.to_json_text());
}

TEST(Synth, ParamValidation) {
    synth::PhantomParams p;
    p.growth_rate = -1;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.spill_time = -1;
    EXPECT_THROW(p.validate(), Error);
    EXPECT_THROW(synth::parse_pulse_mode("sometimes"), Error);
}

TEST(Manifest, JsonRoundTrip) {
    Manifest m;
    m.grid = testing::coarse_grid();
    m.format.delimiter = ';';
    m.boxes = synth::phantom_boxes();
    RunEntry r;
    r.id = "a";
    r.data = "a/frames";
    r.timeseries = "a/ts.csv";
    r.embeddings[EmbeddingKind::Subdivided] = "a/emb.csv";
    m.runs.push_back(r);
    r.id = "b";
    r.kind = RunKind::Experiment;
    r.timeseries.reset();
    m.runs.push_back(r);
    const auto back = Manifest::from_json_text(m.to_json_text(), "/base");
    EXPECT_EQ(back.to_json_text(), m.to_json_text());
    EXPECT_EQ(back.resolve("a/frames"), std::filesystem::path("/base/a/frames"));
    EXPECT_EQ(back.resolve("/abs"), std::filesystem::path("/abs"));
    EXPECT_EQ(back.find_run("b")->kind, RunKind::Experiment);
    EXPECT_EQ(back.find_box("C")->name, "C");
    EXPECT_EQ(back.find_box("D"), nullptr);
}

TEST(Manifest, Validation) {
    Manifest m;
    RunEntry r;
    r.id = "a";
    m.runs = {r, r};
    EXPECT_THROW(m.validate(), Error);
    m.runs = {r};
    m.runs[0].id = "a,b";
    EXPECT_THROW(m.validate(), Error);
    EXPECT_THROW(Manifest::from_json_text("{", "/"), Error);
    EXPECT_THROW(Manifest::from_json_text("{}", "/"), Error);
    EXPECT_THROW(Manifest::load("/nonexistent/manifest"), Error);
    EXPECT_EQ(embedding_kind_for(MetricKind::EmbeddingSubdivided, true), EmbeddingKind::SegmentedSubdivided);
}

TEST(VolumeIo, PmvbLayout) {
    Brick b{2, 1, 3, {0.5f, -1.f, 2.f, 3.f, 4.f, 1e-30f}};
    const auto bytes = encode_pmvb(b);
    ASSERT_EQ(bytes.size(), 4 + 1 + 12 + 6 * 4u);
    EXPECT_EQ(bytes.substr(0, 4), "PMVB");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5], 2);   // nt
    EXPECT_EQ(bytes[9], 1);   // ny
    EXPECT_EQ(bytes[13], 3);  // nx
    float first = 0;
    std::memcpy(&first, bytes.data() + 17, 4);  // host is little-endian
    EXPECT_EQ(first, 0.5f);
    const auto back = decode_pmvb(bytes);
    EXPECT_EQ(back.values, b.values);
    EXPECT_EQ(back.nx, 3u);
    EXPECT_THROW(decode_pmvb(bytes + "x"), Error);
    EXPECT_THROW(decode_pmvb(bytes.substr(0, 10)), Error);
}

TEST(VolumeIo, CachesAreLossless) {
    TempDir tmp;
    std::mt19937_64 rng(4);
    auto v = testing::random_volume("r", testing::tiny_grid(), rng);
    v.provenance[0] = FillFlag::ZeroFilled;
    v.provenance[3] = FillFlag::Repeated;
    write_volume_cache(v, tmp / "r.pmav");
    EXPECT_EQ(read_volume_cache(tmp / "r.pmav"), v);
    const auto seg = segment(v, 0.5);
    write_segmentation_cache(seg, tmp / "r.pmas");
    EXPECT_EQ(read_segmentation_cache(tmp / "r.pmas"), seg);
    EXPECT_THROW(read_volume_cache(tmp / "r.pmas"), Error);
    testing::write_text(tmp / "bad.pmav", "PMAV");
    EXPECT_THROW(read_volume_cache(tmp / "bad.pmav"), Error);
}

} // namespace
} // namespace stens
