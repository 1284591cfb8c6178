#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/color.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "stens/engine.hpp"
#include "stens/error.hpp"
#include "stens/server.hpp"
#include "stens/synth.hpp"
#include "stens/text.hpp"

namespace fs = std::filesystem;

namespace stens::cli {
namespace {

/// Flags that mirror the server's query parameters. Only flags given on the
/// command line are forwarded, so defaults live in one place (parse_query).
struct QueryFlags {
    std::map<std::string, std::string> values;
    bool segmented = false;

    void add(CLI::App* app) {
        for (const char* key : {"metric", "variable", "threshold", "bins", "range", "algo", "mode", "runs", "seed",
                                "perplexity", "iterations", "learning_rate", "restarts", "tolerance"}) {
            app->add_option(fmt::format("--{}", key), values[key])->default_str("");
        }
        app->add_flag("--segmented", segmented, "compare segmented fields");
    }

    Params params(const CLI::App* app) const {
        Params p;
        for (const auto& [key, value] : values) {
            if (app->count("--" + key) > 0) p[key] = value;
        }
        if (segmented) p["segmented"] = "true";
        return p;
    }
};

void write_output(const std::string& bytes, const std::string& out_path, std::ostream& out) {
    if (out_path.empty() || out_path == "-") {
        out << bytes;
        out.flush();
        return;
    }
    const fs::path path(out_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw input_error("cannot write " + out_path, "out");
}

std::shared_ptr<const Ensemble> load_ensemble(const std::string& manifest, const std::string& cache_dir) {
    if (manifest.empty()) throw input_error("--manifest is required", "manifest");
    const auto m = Manifest::load(manifest);
    std::optional<fs::path> cache;
    if (!cache_dir.empty()) cache = fs::path(cache_dir);
    return Ensemble::load(m, cache);
}

bool use_color(std::ostream& out) {
    if (std::getenv("NO_COLOR") != nullptr) return false;
    return &out == &std::cout && ::isatty(STDOUT_FILENO);
}

Params parse_query_string(const std::string& s) {
    Params p;
    for (auto part : text::split(s, '&')) {
        if (part.empty()) continue;
        const auto eq = part.find('=');
        const auto key = std::string(part.substr(0, eq));
        const auto value = eq == std::string_view::npos ? std::string() : std::string(part.substr(eq + 1));
        p[key] = value;
    }
    return p;
}

Server* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatiotemporal ensemble similarity tools"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a TOML/INI file");
    app.fallthrough();

    std::string manifest, cache_dir, out_path;
    QueryFlags qflags;

    auto* ingest = app.add_subcommand("ingest", "validate an ensemble and write aligned volumes to a cache directory");
    ingest->add_option("--manifest", manifest, "manifest file or directory")->required();
    ingest->add_option("--out", out_path, "cache directory")->required();

    std::size_t synth_runs = 3, synth_exps = 1;
    std::uint64_t synth_seed = 1;
    double synth_dx = 0, synth_dy = 0;
    bool synth_no_embeddings = false;
    synth::EnsembleSpec synth_spec;
    auto* synth = app.add_subcommand("synth", "generate a phantom ensemble");
    synth->add_option("--runs", synth_runs, "number of simulation runs")->check(CLI::Range(1, 1000));
    synth->add_option("--experiments", synth_exps, "number of experiment runs")->check(CLI::Range(0, 1000));
    synth->add_option("--seed", synth_seed, "base seed");
    synth->add_option("--dx", synth_dx, "cell width (default: canonical grid)");
    synth->add_option("--dy", synth_dy, "cell height (default: canonical grid)");
    synth->add_option("--sub-width", synth_spec.patch.sub_size.width, "sub-patch width in downsampled cells")
        ->check(CLI::PositiveNumber);
    synth->add_option("--sub-height", synth_spec.patch.sub_size.height, "sub-patch height in downsampled cells")
        ->check(CLI::PositiveNumber);
    synth->add_option("--dimension", synth_spec.embedding_dimension, "feature vector length")
        ->check(CLI::PositiveNumber);
    synth->add_flag("--no-embeddings", synth_no_embeddings, "skip feature files");
    synth->add_option("--out", out_path, "output directory")->required();

    std::string format = "pmdm";
    auto* distances = app.add_subcommand("distances", "compute a distance matrix");
    distances->add_option("--manifest", manifest)->required();
    distances->add_option("--cache", cache_dir, "cache directory written by ingest");
    distances->add_option("--format", format, "pmdm, json or csv")->check(CLI::IsMember({"pmdm", "json", "csv"}));
    distances->add_option("--out", out_path, "output file (default stdout)");
    qflags.add(distances);

    auto* project = app.add_subcommand("project", "project a distance matrix to 2-D");
    project->add_option("--manifest", manifest)->required();
    project->add_option("--cache", cache_dir, "cache directory written by ingest");
    project->add_option("--out", out_path, "output file (default stdout)");
    qflags.add(project);

    std::string box, channel = "co2_presence";
    double ev_threshold = 0.001;
    std::string ev_runs;
    auto* events = app.add_subcommand("events", "print first-presence times per run");
    events->add_option("--manifest", manifest)->required();
    events->add_option("--cache", cache_dir, "cache directory written by ingest");
    events->add_option("--box", box, "box name")->required();
    events->add_option("--channel", channel, "saturation, concentration, gas_presence or co2_presence");
    events->add_option("--threshold", ev_threshold)->check(CLI::NonNegativeNumber);
    events->add_option("--runs", ev_runs, "comma separated run ids (default all)");
    events->add_option("--out", out_path, "output file (default stdout)");

    ServerConfig scfg;
    std::vector<std::string> precompute;
    auto* serve = app.add_subcommand("serve", "start the HTTP server");
    serve->add_option("--manifest", manifest)->required();
    serve->add_option("--cache", cache_dir, "cache directory written by ingest");
    serve->add_option("--host", scfg.host);
    serve->add_option("--port", scfg.port)->check(CLI::Range(0, 65535));
    serve->add_option("--cache-size", scfg.cache_size)->check(CLI::PositiveNumber);
    serve->add_option("--precompute", precompute, "query string, e.g. metric=wasserstein&mode=patch");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        if (e.get_exit_code() != 0) err << app.help();
        return 1;
    }

    try {
        if (*ingest) {
            const auto ens = load_ensemble(manifest, "");
            ens->write_cache(out_path);
            for (const auto& r : ens->runs()) {
                out << fmt::format("{}\t{}\tok\n", r.entry.id, to_string(r.entry.kind));
            }
            return 0;
        }
        if (*synth) {
            auto spec = synth_spec;
            if (synth_dx > 0) spec.grid.dx = synth_dx;
            if (synth_dy > 0) spec.grid.dy = synth_dy;
            spec.grid.validate();
            spec.patch.embedding_spec(true).validate(spec.grid);
            synth::PhantomParams base;
            base.seed = synth_seed;
            spec.members = synth::default_members(synth_runs, synth_exps, base);
            spec.write_embeddings = !synth_no_embeddings;
            const auto m = synth::generate_ensemble(spec, out_path);
            out << fmt::format("wrote {} runs to {}\n", m.runs.size(), out_path);
            return 0;
        }
        if (*distances) {
            Engine engine(load_ensemble(manifest, cache_dir));
            const auto q = parse_query(qflags.params(distances));
            std::string bytes;
            if (format == "pmdm") bytes = engine.distances_pmdm(q);
            else if (format == "json") bytes = engine.distances_json(q);
            else bytes = to_csv(*engine.matrix(q));
            write_output(bytes, out_path, out);
            return 0;
        }
        if (*project) {
            Engine engine(load_ensemble(manifest, cache_dir));
            write_output(engine.projection_document(parse_query(qflags.params(project))), out_path, out);
            return 0;
        }
        if (*events) {
            Engine engine(load_ensemble(manifest, cache_dir));
            const auto ch = parse_channel(channel);
            std::vector<std::string> ids;
            for (auto part : text::split(ev_runs, ',')) {
                if (!text::trim(part).empty()) ids.emplace_back(text::trim(part));
            }
            if (ids.empty()) {
                for (const auto& r : engine.ensemble().runs()) ids.push_back(r.entry.id);
            }
            const bool color = out_path.empty() && use_color(out);
            std::string table;
            const auto header = fmt::format("{:<16} {:<6} {:<14} {}\n", "run", "box", "channel", "minutes");
            table += color ? fmt::format(fmt::emphasis::bold, "{}", header) : header;
            for (const auto& id : ids) {
                const auto minutes = engine.first_presence(id, box, ch, ev_threshold);
                table += fmt::format("{:<16} {:<6} {:<14} {}\n", id, box, channel,
                                     minutes ? text::format_double(*minutes) : std::string("none"));
            }
            write_output(table, out_path, out);
            return 0;
        }
        if (*serve) {
            scfg.manifest = manifest;
            if (!cache_dir.empty()) scfg.cache_dir = fs::path(cache_dir);
            for (const auto& s : precompute) scfg.precompute.push_back(parse_query_string(s));
            scfg.validate();
            Server server(load_ensemble(manifest, cache_dir), scfg);
            server.precompute();
            const int port = server.bind();
            spdlog::info("listening on http://{}:{}", scfg.host, port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            server.listen();
            g_server = nullptr;
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

} // namespace stens::cli
