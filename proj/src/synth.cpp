#include "stens/synth.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "stens/error.hpp"
#include "stens/segmentation.hpp"
#include "stens/text.hpp"

namespace fs = std::filesystem;

namespace stens::synth {

const char* to_string(PulseMode mode) {
    switch (mode) {
    case PulseMode::Initial: return "initial";
    case PulseMode::Recurring: return "recurring";
    case PulseMode::Continuous: return "continuous";
    }
    return "unknown";
}

PulseMode parse_pulse_mode(std::string_view s) {
    for (auto m : {PulseMode::Initial, PulseMode::Recurring, PulseMode::Continuous}) {
        if (s == to_string(m)) return m;
    }
    throw input_error(fmt::format("unknown pulse mode '{}'", s), "pulse");
}

void PhantomParams::validate() const {
    if (n_fingers < 0) throw input_error("n_fingers must be >= 0", "n_fingers");
    if (!(growth_rate >= 0)) throw input_error("growth_rate must be >= 0", "growth_rate");
    if (!(finger_width > 0)) throw input_error("finger_width must be > 0", "finger_width");
    if (pulse == PulseMode::Recurring && !(pulse_period > 0)) {
        throw input_error("pulse_period must be > 0 for recurring pulses", "pulse_period");
    }
    if (!(injection_stop > 0)) throw input_error("injection_stop must be > 0", "injection_stop");
    if (spill_time && !(*spill_time >= 0)) throw input_error("spill_time must be >= 0", "spill_time");
}

std::vector<Box> phantom_boxes() {
    return {{"A", 1.1, 2.8, 0.0, 0.6}, {"B", 0.0, 1.1, 0.6, 1.2}, {"C", 1.1, 2.6, 0.1, 0.4}};
}

const std::vector<std::string>& measurable_names() {
    static const std::vector<std::string> names = {"mobile_A",    "mobile_B",    "mobile_C",   "dissolved_A",
                                                   "dissolved_B", "dissolved_C", "pressure_1", "pressure_2",
                                                   "total_mass",  "convection"};
    return names;
}

namespace {

constexpr double kPorosity = 0.44;
constexpr double kDepth = 0.019;       // m
constexpr double kGasDensity = 1.8;    // kg/m^3
constexpr double kSpillConcentration = 1.0;

struct Finger {
    double center;
    double rate;       // m/h
    double amplitude;  // kg/m^3
};

/// Hours during which fingers have been growing by time `hours`.
double growth_hours(const PhantomParams& p, double hours) {
    switch (p.pulse) {
    case PulseMode::Continuous: return hours;
    case PulseMode::Initial: return std::min(hours, p.injection_stop);
    case PulseMode::Recurring: {
        const double half = 0.5 * p.pulse_period;
        const double cycles = std::floor(hours / p.pulse_period);
        return cycles * half + std::min(hours - cycles * p.pulse_period, half);
    }
    }
    return hours;
}

double gas_thickness(const PhantomParams& p, const Geometry& geo, double hours) {
    if (hours <= p.injection_stop) return geo.max_gas_thickness * hours / p.injection_stop;
    return geo.max_gas_thickness * std::max(0.0, 1.0 - (hours - p.injection_stop) / geo.gas_shrink_hours);
}

std::vector<Finger> place_fingers(const PhantomParams& p, const Geometry& geo) {
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Finger> fingers;
    if (p.n_fingers == 0) return fingers;
    const double lo = geo.plume_x_lo + p.finger_width;
    const double hi = geo.plume_x_hi - p.finger_width;
    const double spacing = (hi - lo) / static_cast<double>(p.n_fingers);
    for (int f = 0; f < p.n_fingers; ++f) {
        const double jitter = (unit(rng) - 0.5) * 0.6 * spacing;
        const double center = lo + (static_cast<double>(f) + 0.5) * spacing + jitter;
        const double rate = p.growth_rate * (0.9 + 0.2 * unit(rng));
        const double amplitude = geo.max_concentration * (0.8 + 0.2 * unit(rng));
        fingers.push_back({center, rate, amplitude});
    }
    return fingers;
}

struct BoxIdx {
    CellRange x, y;
    bool contains(std::size_t i, std::size_t j) const {
        return i >= x.begin && i < x.end && j >= y.begin && j < y.end;
    }
};

} // namespace

PhantomRun generate_run(std::string run_id, const PhantomParams& params, const GridSpec& grid,
                        const Geometry& geo) {
    params.validate();
    grid.validate();
    const auto nx = grid.nx(), ny = grid.ny(), nt = grid.nt();
    PhantomRun run;
    run.volume = SpaceTimeVolume::zeros(run_id, grid);
    run.volume.provenance.assign(nt, FillFlag::Measured);
    auto& sat = run.volume.saturation;
    auto& con = run.volume.concentration;

    const auto fingers = place_fingers(params, geo);
    std::mt19937_64 rng(params.seed ^ 0x9E3779B97F4A7C15ull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double pressure_amp = 800.0 + 200.0 * unit(rng);
    const double spill_r0 = std::max(0.03, 0.75 * std::max(grid.dx, grid.dy));

    for (std::size_t k = 0; k < nt; ++k) {
        const double t = grid.t_at(k);
        const double hours = t / 3600.0;
        const double h = gas_thickness(params, geo, hours);
        const double grown = growth_hours(params, hours);
        const bool spilled = params.spill_time && t >= *params.spill_time * 3600.0 - 1e-6;
        const double spill_r =
            spilled ? std::min(spill_r0 + 0.01 * (t / 3600.0 - *params.spill_time), geo.spill_max_radius) : 0.0;

        for (std::size_t j = 0; j < ny; ++j) {
            const double y = grid.y_at(j);
            for (std::size_t i = 0; i < nx; ++i) {
                const double x = grid.x_at(i);
                double s = 0, c = 0;
                if (h > 0 && x >= geo.plume_x_lo && x <= geo.plume_x_hi && y <= geo.caprock_y &&
                    y >= geo.caprock_y - h) {
                    s = geo.max_saturation * (1.0 - 0.5 * (geo.caprock_y - y) / h);
                }
                if (y <= geo.caprock_y) {
                    for (const auto& f : fingers) {
                        const double off = x - f.center;
                        if (std::abs(off) > 0.5 * params.finger_width) continue;
                        const double depth = h + f.rate * grown;
                        if (depth <= 0 || y < geo.caprock_y - depth) continue;
                        const double shape = std::cos(std::numbers::pi * off / params.finger_width);
                        c = std::max(c, f.amplitude * shape * shape);
                    }
                }
                if (spilled) {
                    const double d = std::hypot(x - geo.spill_x, y - geo.spill_y);
                    if (d <= spill_r) s = std::max(s, 0.6 * (1.0 - 0.5 * d / spill_r));
                    if (d <= 1.2 * spill_r) c = std::max(c, kSpillConcentration * (1.0 - 0.5 * d / (1.2 * spill_r)));
                }
                const auto idx = (k * ny + j) * nx + i;
                sat[idx] = s;
                con[idx] = c;
            }
        }
    }

    // time series as box integrals of the generated fields
    auto& series = run.series;
    series.run_id = run_id;
    for (std::size_t k = 0; k < nt; ++k) series.times.push_back(grid.t_at(k));
    for (const auto& name : measurable_names()) {
        series.columns.push_back({name, std::vector<double>(nt, 0.0), std::vector<FillFlag>(nt, FillFlag::Measured)});
    }
    auto column = [&](std::size_t c) -> std::vector<double>& { return series.columns[c].values; };
    const auto boxes = phantom_boxes();
    std::vector<BoxIdx> box_idx;
    for (const auto& b : boxes) box_idx.push_back({b.x_cells(grid), b.y_cells(grid)});
    const double cell_volume = grid.dx * grid.dy * kDepth;

    for (std::size_t k = 0; k < nt; ++k) {
        const double hours = grid.t_at(k) / 3600.0;
        double total = 0, convection = 0;
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const auto idx = (k * ny + j) * nx + i;
                const double gas = sat[idx] * kPorosity * kGasDensity * cell_volume;
                const double dissolved = con[idx] * kPorosity * cell_volume;
                total += gas + dissolved;
                for (std::size_t b = 0; b < box_idx.size(); ++b) {
                    if (!box_idx[b].contains(i, j)) continue;
                    column(b)[k] += gas;
                    column(3 + b)[k] += dissolved;
                }
                if (box_idx[2].contains(i, j) && i + 1 < nx && j + 1 < ny) {
                    const double gx = (con[idx + 1] - con[idx]) / grid.dx;
                    const double gy = (con[idx + nx] - con[idx]) / grid.dy;
                    convection += std::hypot(gx, gy) / geo.max_concentration * grid.dx * grid.dy;
                }
            }
        }
        const double stop = params.injection_stop;
        const double rise = hours <= stop ? 1.0 - std::exp(-hours / 0.5)
                                          : (1.0 - std::exp(-stop / 0.5)) * std::exp(-(hours - stop) / 2.0);
        column(6)[k] = 1.1e5 + pressure_amp * rise;
        column(7)[k] = 1.1e5 + 0.7 * pressure_amp * rise;
        column(8)[k] = total;
        column(9)[k] = convection;
    }
    return run;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// dimension x length matrix with entries uniform in [-1, 1).
std::vector<double> projection_matrix(std::size_t dimension, std::size_t length, std::uint64_t seed) {
    std::vector<double> m(dimension * length);
    const std::uint64_t base = splitmix64(seed ^ (static_cast<std::uint64_t>(length) << 20));
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto bits = splitmix64(base + i) >> 11;
        m[i] = static_cast<double>(bits) * 0x1.0p-52 - 1.0;
    }
    return m;
}

std::vector<double> project_values(const std::vector<double>& matrix, std::span<const double> values,
                                   std::size_t dimension) {
    const auto len = values.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(len));
    std::vector<double> out(dimension);
    for (std::size_t d = 0; d < dimension; ++d) {
        const double* row = matrix.data() + d * len;
        double acc = 0;
        for (std::size_t i = 0; i < len; ++i) acc += row[i] * values[i];
        out[d] = acc * scale;
    }
    return out;
}

} // namespace

EmbeddingTable sketch_embeddings(const SpaceTimeVolume& fields, const PatchSpec& spec, std::size_t dimension,
                                 std::uint64_t projection_seed) {
    const auto patches = extract_patches(fields, spec);
    EmbeddingTable table(dimension);
    if (patches.empty()) return table;
    const auto& first = patches.front();
    const auto wx = first.x.size(), wy = first.y.size();

    if (!spec.subdivide) {
        const auto matrix = projection_matrix(dimension, 2 * first.size(), projection_seed);
        std::vector<double> values(2 * first.size());
        for (const auto& p : patches) {
            std::copy(p.saturation.begin(), p.saturation.end(), values.begin());
            std::copy(p.concentration.begin(), p.concentration.end(),
                      values.begin() + static_cast<std::ptrdiff_t>(p.size()));
            table.insert({fields.run_id, p.index, std::nullopt}, project_values(matrix, values, dimension));
        }
        return table;
    }

    const auto sub = *spec.subdivide;
    const auto len = 2 * first.steps() * sub.width * sub.height;
    const auto matrix = projection_matrix(dimension, len, projection_seed);
    std::vector<double> values(len);
    for (const auto& p : patches) {
        for (const auto& s : p.subs) {
            std::size_t o = 0;
            for (const auto field : {p.saturation, p.concentration}) {
                for (std::size_t k = 0; k < p.steps(); ++k) {
                    for (auto j = s.y.begin; j < s.y.end; ++j) {
                        for (auto i = s.x.begin; i < s.x.end; ++i) values[o++] = field[(k * wy + j) * wx + i];
                    }
                }
            }
            table.insert({fields.run_id, p.index, s.index}, project_values(matrix, values, dimension));
        }
    }
    return table;
}

std::vector<Member> default_members(std::size_t sims, std::size_t exps, const PhantomParams& base) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
    static const PulseMode modes[] = {PulseMode::Continuous, PulseMode::Initial, PulseMode::Recurring};
    std::vector<Member> members;
    for (std::size_t i = 0; i < sims; ++i) {
        Member m;
        m.id = fmt::format("sim{}", i + 1);
        m.params = base;
        m.params.seed = base.seed + 101 * i;
        m.params.growth_rate = base.growth_rate * (1.0 + 0.25 * static_cast<double>(i));
        m.params.pulse = modes[i % 3];
        m.params.n_fingers = base.n_fingers + static_cast<int>(i % 3);
        m.params.spill_time = (220.0 + 10.0 * static_cast<double>(i)) / 60.0;
        m.color = palette[i % std::size(palette)];
        members.push_back(std::move(m));
    }
    for (std::size_t e = 0; e < exps; ++e) {
        Member m;
        m.id = fmt::format("exp{}", e + 1);
        m.kind = RunKind::Experiment;
        m.params = base;
        m.params.seed = base.seed + 1000 + 7 * e;
        m.params.spill_time = (250.0 + 10.0 * static_cast<double>(e)) / 60.0;
        m.color = "#000000";
        members.push_back(std::move(m));
    }
    return members;
}

MemberData generate_member(const Member& member, const GridSpec& grid) {
    auto run = generate_run(member.id, member.params, grid);
    MemberData data;
    if (member.kind == RunKind::Simulation) {
        data.volume = std::move(run.volume);
        data.series = std::move(run.series);
    } else {
        data.segmentation = segment(run.volume, member.segmentation_threshold);
    }
    return data;
}

namespace {

void append_number(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

void write_text(const fs::path& file, const std::string& body) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw input_error("cannot write " + file.string(), file.string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw input_error("write failed: " + file.string(), file.string());
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw input_error("cannot create directory " + dir.string(), dir.string());
}

} // namespace

void write_frames(const SpaceTimeVolume& volume, const fs::path& dir) {
    make_dirs(dir);
    const auto& g = volume.grid;
    const auto nx = g.nx(), ny = g.ny();
    std::string body;
    for (std::size_t k = 0; k < g.nt(); ++k) {
        body.assign("x,y,saturation,concentration\n");
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const auto idx = (k * ny + j) * nx + i;
                append_number(body, g.x_at(i));
                body += ',';
                append_number(body, g.y_at(j));
                body += ',';
                append_number(body, volume.saturation[idx]);
                body += ',';
                append_number(body, volume.concentration[idx]);
                body += '\n';
            }
        }
        write_text(dir / ("frame_" + text::format_double(g.t_at(k)) + ".csv"), body);
    }
}

void write_segmentation_frames(const SegmentationVolume& seg, const fs::path& dir) {
    make_dirs(dir);
    const auto& g = seg.grid;
    const auto nx = g.nx(), ny = g.ny();
    std::string body;
    for (std::size_t k = 0; k < g.nt(); ++k) {
        body.assign("x,y,class\n");
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                append_number(body, g.x_at(i));
                body += ',';
                append_number(body, g.y_at(j));
                body += ',';
                body += static_cast<char>('0' + seg.classes[(k * ny + j) * nx + i]);
                body += '\n';
            }
        }
        write_text(dir / ("seg_" + text::format_double(g.t_at(k)) + ".csv"), body);
    }
}

void write_time_series(const TimeSeriesTable& table, const fs::path& file) {
    std::string body = "time";
    for (const auto& c : table.columns) body += "," + c.name;
    body += '\n';
    for (std::size_t k = 0; k < table.times.size(); ++k) {
        append_number(body, table.times[k]);
        for (const auto& c : table.columns) {
            body += ',';
            append_number(body, c.values[k]);
        }
        body += '\n';
    }
    write_text(file, body);
}

Manifest generate_ensemble(const EnsembleSpec& spec, const fs::path& out) {
    spec.grid.validate();
    make_dirs(out);
    Manifest manifest;
    manifest.grid = spec.grid;
    manifest.patch = spec.patch;
    manifest.boxes = phantom_boxes();
    manifest.base_dir = out;

    const auto whole = spec.patch.embedding_spec(false);
    const auto subdivided = spec.patch.embedding_spec(true);
    for (const auto& member : spec.members) {
        const auto data = generate_member(member, spec.grid);
        RunEntry entry;
        entry.id = member.id;
        entry.kind = member.kind;
        entry.color = member.color.empty() ? entry.color : member.color;
        const fs::path run_dir = out / member.id;
        make_dirs(run_dir);
        entry.data = fs::path(member.id) / "frames";

        auto emit = [&](EmbeddingKind kind, const SpaceTimeVolume& fields, const PatchSpec& ps) {
            const auto name = fmt::format("embeddings_{}.csv", to_string(kind));
            write_embeddings(run_dir / name, sketch_embeddings(fields, ps, spec.embedding_dimension));
            entry.embeddings[kind] = fs::path(member.id) / name;
        };

        if (data.volume) {
            write_frames(*data.volume, run_dir / "frames");
            write_time_series(*data.series, run_dir / "timeseries.csv");
            entry.timeseries = fs::path(member.id) / "timeseries.csv";
            if (spec.write_embeddings) {
                emit(EmbeddingKind::Whole, *data.volume, whole);
                emit(EmbeddingKind::Subdivided, *data.volume, subdivided);
                const auto channels = segmentation_channels(segment(*data.volume, 0.001));
                emit(EmbeddingKind::SegmentedWhole, channels, whole);
                emit(EmbeddingKind::SegmentedSubdivided, channels, subdivided);
            }
        } else {
            write_segmentation_frames(*data.segmentation, run_dir / "frames");
            if (spec.write_embeddings) {
                const auto channels = segmentation_channels(*data.segmentation);
                emit(EmbeddingKind::SegmentedWhole, channels, whole);
                emit(EmbeddingKind::SegmentedSubdivided, channels, subdivided);
            }
        }
        manifest.runs.push_back(std::move(entry));
    }
    manifest.validate();
    manifest.save(out / "manifest.json");
    return manifest;
}

} // namespace stens::synth
