#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stens/embeddings.hpp"
#include "stens/ingest.hpp"
#include "stens/manifest.hpp"

namespace stens::synth {

/// Development behaviour of the concentration fingers.
enum class PulseMode { Initial, Recurring, Continuous };

const char* to_string(PulseMode mode);
PulseMode parse_pulse_mode(std::string_view s);

struct PhantomParams {
    std::uint64_t seed = 1;
    int n_fingers = 6;
    double finger_width = 0.04;   // m
    double growth_rate = 0.03;    // m/h
    PulseMode pulse = PulseMode::Continuous;
    double pulse_period = 4.0;    // h
    double injection_stop = 5.0;  // h
    std::optional<double> spill_time;  // h

    void validate() const;
};

/// Fixed geometry of the phantom reservoir, in meters.
struct Geometry {
    double caprock_y = 0.55;
    double plume_x_lo = 1.40;
    double plume_x_hi = 2.40;
    double max_gas_thickness = 0.12;
    double gas_shrink_hours = 30.0;
    double max_saturation = 0.85;
    double max_concentration = 1.8;  // kg/m^3
    double spill_x = 0.955;
    double spill_y = 0.705;
    double spill_max_radius = 0.10;
};

/// Evaluation boxes A, B, C matching the phantom geometry.
std::vector<Box> phantom_boxes();

/// Column names written to every phantom time-series file.
const std::vector<std::string>& measurable_names();

struct PhantomRun {
    SpaceTimeVolume volume;
    TimeSeriesTable series;
};

/// Analytic gas layer under a caprock plus descending dissolved-CO2 fingers,
/// and a secondary plume in box B from `spill_time` on. Deterministic in the
/// parameters.
PhantomRun generate_run(std::string run_id, const PhantomParams& params, const GridSpec& grid,
                        const Geometry& geometry = {});

/// Deterministic stand-in for a learned patch encoder: a fixed seeded
/// random projection of each (downsampled, optionally subdivided) patch.
/// Identical patches map to identical vectors.
EmbeddingTable sketch_embeddings(const SpaceTimeVolume& fields, const PatchSpec& spec, std::size_t dimension = 64,
                                 std::uint64_t projection_seed = 0x5eed);

struct Member {
    std::string id;
    RunKind kind = RunKind::Simulation;
    PhantomParams params;
    std::string color;
    double segmentation_threshold = 0.001;  // experiments only
};

struct EnsembleSpec {
    GridSpec grid;
    PatchLayout patch;
    std::vector<Member> members;
    std::size_t embedding_dimension = 64;
    bool write_embeddings = true;
};

/// `sims` simulation runs sim1..simN and `exps` experiment runs exp1..expM
/// perturbed around `base`.
std::vector<Member> default_members(std::size_t sims, std::size_t exps, const PhantomParams& base = {});

/// Writes frames, time series, feature files and manifest.json under `out`.
Manifest generate_ensemble(const EnsembleSpec& spec, const std::filesystem::path& out);

/// In-memory equivalents of what generate_ensemble writes for one member.
struct MemberData {
    std::optional<SpaceTimeVolume> volume;
    std::optional<SegmentationVolume> segmentation;
    std::optional<TimeSeriesTable> series;
};
MemberData generate_member(const Member& member, const GridSpec& grid);

void write_frames(const SpaceTimeVolume& volume, const std::filesystem::path& dir);
void write_segmentation_frames(const SegmentationVolume& seg, const std::filesystem::path& dir);
void write_time_series(const TimeSeriesTable& table, const std::filesystem::path& file);

} // namespace stens::synth
