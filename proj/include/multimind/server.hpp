#pragma once

#include "multimind/api.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <thread>

namespace multimind {

// Loopback-only HTTP/1.1 front end for Api.
class GatewayServer {
public:
    explicit GatewayServer(Api& api);
    ~GatewayServer();

    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    // Binds 127.0.0.1:port (0 picks a free port). Returns the bound port;
    // throws std::runtime_error when the port is taken.
    int bind(int port);
    // Serves until stop(); requires bind().
    void listen();
    // listen() on a background thread.
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
};

// Thrown by RemoteClient when the daemon cannot be reached.
class ConnectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EngineClient {
public:
    virtual ~EngineClient() = default;
    virtual ApiReply call(std::string_view method, std::string_view path,
                          const Json& body = Json::object()) = 0;
};

class LocalClient final : public EngineClient {
public:
    explicit LocalClient(Api& api) : api_(api) {}
    ApiReply call(std::string_view method, std::string_view path, const Json& body) override;

private:
    Api& api_;
};

class RemoteClient final : public EngineClient {
public:
    RemoteClient(std::string host, int port, std::optional<std::string> token = std::nullopt);
    ApiReply call(std::string_view method, std::string_view path, const Json& body) override;

private:
    std::string host_;
    int port_;
    std::optional<std::string> token_;
};

} // namespace multimind
