#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stens/engine.hpp"

namespace httplib {
class Server;
}

namespace stens {

struct ServerConfig {
    std::filesystem::path manifest;
    std::optional<std::filesystem::path> cache_dir;
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 binds any free port
    std::size_t cache_size = 16;
    std::vector<Params> precompute;  // queries whose matrices are computed at startup

    void validate() const;
};

/// Response independent of the transport, so handlers can be exercised
/// without a socket.
struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

class Server {
public:
    Server(std::shared_ptr<const Ensemble> ensemble, const ServerConfig& config);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Routes one GET request. `path` excludes the query string.
    Response handle(const std::string& path, const Params& params, const std::string& accept = {});

    /// Computes the configured precompute matrices.
    void precompute();

    /// Binds the socket and returns the bound port.
    int bind();
    /// Serves until stop(). bind() must have succeeded.
    void listen();
    void stop();

    Engine& engine() { return engine_; }

private:
    Engine engine_;
    ServerConfig config_;
    std::unique_ptr<httplib::Server> http_;
};

/// JSON error body: {code, message, param}.
std::string error_body(const std::string& code, const std::string& message, const std::string& param);

} // namespace stens
