#pragma once

#include "multimind/codec.hpp"
#include "multimind/engine.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace multimind {

struct ApiReply {
    int status = 200;
    Json body;
};

Json to_json(const CommentActionResult& result);
Json to_json(const ChatSession& session);
CommentActionRequest comment_request_from_json(const Json& j);

// Transport-independent JSON API. The HTTP server and the in-process CLI
// client both route through handle(), so they behave identically.
//
//   GET  /v1/health
//   GET  /v1/drivers
//   GET  /v1/drivers/{id}/activity
//   POST /v1/actions/comment
//   POST /v1/tasks/{id}/run
//   POST /v1/workflows/{id}/run
//   POST /v1/chat/sessions
//   GET  /v1/chat/sessions/{id}
//   POST /v1/chat/sessions/{id}/messages
//   POST /v1/chat/sessions/{id}/select
//
// Errors are {"kind": ..., "message": ...} with 400 (malformed JSON),
// 401 (bad token), 404 (unknown route or id), 405, 422 (invariant) or 500.
class Api {
public:
    explicit Api(Engine& engine) : engine_(engine) {}

    ApiReply handle(std::string_view method, std::string_view path, std::string_view body,
                    std::optional<std::string_view> authorization = std::nullopt);

    Engine& engine() noexcept { return engine_; }

private:
    ApiReply route(std::string_view method, const std::vector<std::string>& segments,
                   std::string_view body);

    Engine& engine_;
};

ApiReply api_error(int status, std::string_view kind, std::string_view message);

} // namespace multimind
