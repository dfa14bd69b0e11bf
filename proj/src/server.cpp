#include "multimind/server.hpp"

#include <httplib.h>

namespace multimind {

namespace {

std::string dump(const Json& j) {
    return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

} // namespace

struct GatewayServer::Impl {
    explicit Impl(Api& a) : api(a) {}

    Api& api;
    httplib::Server server;
};

GatewayServer::GatewayServer(Api& api) : impl_(std::make_unique<Impl>(api)) {
    auto& server = impl_->server;
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string_view> auth;
        if (req.has_header("Authorization")) auth = req.get_header_value("Authorization");
        ApiReply reply = impl_->api.handle(req.method, req.path, req.body, auth);
        res.status = reply.status;
        res.set_content(dump(reply.body), "application/json");
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Put(".*", handler);
    server.Delete(".*", handler);
    server.Patch(".*", handler);

    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string message = "unexpected error";
            try {
                if (ep) std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                message = e.what();
            } catch (...) {
            }
            res.status = 500;
            res.set_content(dump(api_error(500, "internal", message).body), "application/json");
        });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        const char* kind = res.status == 404 ? "not_found" : "http_error";
        res.set_content(
            dump(api_error(res.status, kind, "HTTP status " + std::to_string(res.status)).body),
            "application/json");
    });
}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::bind(int port) {
    auto& server = impl_->server;
    int bound = port == 0 ? server.bind_to_any_port("127.0.0.1")
                          : (server.bind_to_port("127.0.0.1", port) ? port : -1);
    if (bound <= 0) {
        throw std::runtime_error("cannot bind 127.0.0.1:" + std::to_string(port));
    }
    return bound;
}

void GatewayServer::listen() { impl_->server.listen_after_bind(); }

void GatewayServer::start() {
    thread_ = std::thread([this] { listen(); });
    impl_->server.wait_until_ready();
}

void GatewayServer::stop() {
    if (impl_) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

ApiReply LocalClient::call(std::string_view method, std::string_view path, const Json& body) {
    const auto& token = api_.engine().config().auth_token;
    std::optional<std::string> auth;
    if (token) auth = "Bearer " + *token;
    return api_.handle(method, path, dump(body),
                       auth ? std::optional<std::string_view>(*auth) : std::nullopt);
}

RemoteClient::RemoteClient(std::string host, int port, std::optional<std::string> token)
    : host_(std::move(host)), port_(port), token_(std::move(token)) {}

ApiReply RemoteClient::call(std::string_view method, std::string_view path, const Json& body) {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(600, 0);
    httplib::Headers headers;
    if (token_) headers.emplace("Authorization", "Bearer " + *token_);

    httplib::Result result = method == "GET"
                                 ? client.Get(std::string(path), headers)
                                 : client.Post(std::string(path), headers, dump(body),
                                               "application/json");
    if (!result) {
        throw ConnectionError("cannot reach multimind daemon at " + host_ + ":" +
                              std::to_string(port_) + ": " + httplib::to_string(result.error()));
    }
    auto doc = Json::parse(result->body, nullptr, false);
    if (doc.is_discarded()) {
        throw ConnectionError("daemon returned a non-JSON body (HTTP " +
                              std::to_string(result->status) + ")");
    }
    return {result->status, std::move(doc)};
}

} // namespace multimind
