#include "stens/server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "stens/error.hpp"
#include "stens/text.hpp"

namespace stens {

void ServerConfig::validate() const {
    if (port < 0 || port > 65535) throw input_error("port must be in [0, 65535]", "port");
    if (cache_size < 1) throw input_error("cache size must be >= 1", "cache_size");
    if (host.empty()) throw input_error("bind address is empty", "host");
}

std::string error_body(const std::string& code, const std::string& message, const std::string& param) {
    nlohmann::ordered_json j;
    j["code"] = code;
    j["message"] = message;
    j["param"] = param.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(param);
    return j.dump() + "\n";
}

namespace {

int status_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidInput: return 400;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    }
    return 500;
}

Params without(Params params, std::initializer_list<const char*> keys) {
    for (const char* k : keys) params.erase(k);
    return params;
}

const std::string& required(const Params& params, const char* key) {
    const auto it = params.find(key);
    if (it == params.end() || it->second.empty()) throw input_error(std::string("missing parameter ") + key, key);
    return it->second;
}

bool wants_binary(const std::string& accept) {
    return accept.find("application/octet-stream") != std::string::npos;
}

} // namespace

Server::Server(std::shared_ptr<const Ensemble> ensemble, const ServerConfig& config)
    : engine_(std::move(ensemble), config.cache_size), config_(config), http_(std::make_unique<httplib::Server>()) {
    config_.validate();

    http_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Accept, Content-Type"}});
    http_->Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    http_->Get(R"(/api/.*)", [this](const httplib::Request& req, httplib::Response& res) {
        Params params;
        for (const auto& [k, v] : req.params) {
            if (!params.emplace(k, v).second) {
                res.status = 400;
                res.set_content(error_body("invalid_input", "parameter " + k + " given twice", k), "application/json");
                return;
            }
        }
        auto out = handle(req.path, params, req.get_header_value("Accept"));
        res.status = out.status;
        res.set_content(std::move(out.body), out.content_type);
    });
    http_->set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        res.set_content(error_body(res.status == 404 ? "not_found" : "invalid_input",
                                   "no route for " + req.method + " " + req.path, ""),
                        "application/json");
    });
}

Server::~Server() = default;

Response Server::handle(const std::string& path, const Params& params, const std::string& accept) {
    const std::string volume_prefix = "/api/volume/";
    const std::string series_prefix = "/api/timeseries/";
    try {
        if (path == "/api/ensemble") {
            if (!params.empty()) throw input_error("unknown parameter '" + params.begin()->first + "'", params.begin()->first);
            return {200, "application/json", engine_.ensemble_document()};
        }
        if (path == "/api/projection") {
            return {200, "application/json", engine_.projection_document(parse_query(params))};
        }
        if (path == "/api/distances") {
            const auto q = parse_query(params);
            if (wants_binary(accept)) return {200, "application/octet-stream", engine_.distances_pmdm(q)};
            return {200, "application/json", engine_.distances_json(q)};
        }
        if (path.rfind(volume_prefix, 0) == 0 && path.size() > volume_prefix.size()) {
            const auto run = path.substr(volume_prefix.size());
            const auto brick = engine_.volume_brick(run, parse_brick_request(params));
            return {200, "application/octet-stream", encode_pmvb(brick)};
        }
        if (path.rfind(series_prefix, 0) == 0 && path.size() > series_prefix.size()) {
            const auto run = path.substr(series_prefix.size());
            const auto rest = without(params, {"measurable"});
            if (!rest.empty()) throw input_error("unknown parameter '" + rest.begin()->first + "'", rest.begin()->first);
            return {200, "application/json", engine_.timeseries_document(run, required(params, "measurable"))};
        }
        if (path == "/api/events/first_presence") {
            const auto rest = without(params, {"run", "box", "channel", "threshold"});
            if (!rest.empty()) throw input_error("unknown parameter '" + rest.begin()->first + "'", rest.begin()->first);
            const auto& run = required(params, "run");
            const auto& box = required(params, "box");
            auto channel = Channel::Co2Presence;
            if (const auto it = params.find("channel"); it != params.end()) {
                try {
                    channel = parse_channel(it->second);
                } catch (const Error& e) {
                    throw input_error(e.what(), "channel");
                }
            }
            double threshold = 0.001;
            if (const auto it = params.find("threshold"); it != params.end()) {
                const auto v = text::parse_double(it->second);
                if (!v || !(*v >= 0)) throw input_error("threshold must be a number >= 0", "threshold");
                threshold = *v;
            }
            return {200, "application/json", engine_.first_presence_document(run, box, channel, threshold)};
        }
        return {404, "application/json", error_body("not_found", "no route for " + path, "")};
    } catch (const Error& e) {
        return {status_for(e.kind()), "application/json", error_body(to_string(e.kind()), e.what(), e.param())};
    } catch (const std::exception& e) {
        spdlog::error("{}: {}", path, e.what());
        return {500, "application/json", error_body("internal", e.what(), "")};
    }
}

void Server::precompute() {
    for (const auto& p : config_.precompute) {
        const auto q = parse_query(p);
        spdlog::info("precomputing {}", engine_.cache_key(q));
        engine_.matrix(q);
    }
}

int Server::bind() {
    if (config_.port == 0) {
        const int port = http_->bind_to_any_port(config_.host);
        if (port < 0) throw input_error("cannot bind " + config_.host, "host");
        return port;
    }
    if (!http_->bind_to_port(config_.host, config_.port)) {
        throw input_error("cannot bind " + config_.host + ":" + std::to_string(config_.port), "port");
    }
    return config_.port;
}

void Server::listen() { http_->listen_after_bind(); }

void Server::stop() { http_->stop(); }

} // namespace stens
