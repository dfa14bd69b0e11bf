#include "multimind/api.hpp"

namespace multimind {

namespace {

std::vector<std::string> split_path(std::string_view path) {
    if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        auto slash = path.find('/', pos);
        auto part = path.substr(pos, slash == std::string_view::npos ? std::string_view::npos
                                                                     : slash - pos);
        if (!part.empty()) out.emplace_back(part);
        if (slash == std::string_view::npos) break;
        pos = slash + 1;
    }
    return out;
}

// Error raised for syntactically bad request bodies.
struct MalformedRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Error raised when a route exists but not for the method.
struct MethodNotAllowed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Json parse_body(std::string_view body) {
    if (body.empty()) return Json::object();
    auto doc = Json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw MalformedRequest("request body is not valid JSON");
    if (!doc.is_object()) throw MalformedRequest("request body must be a JSON object");
    return doc;
}

Bindings bindings_from_json(const Json& j) {
    Bindings out;
    if (j.is_null()) return out;
    if (!j.is_object()) throw InvariantError("'bindings' must be an object of strings");
    for (const auto& [name, value] : j.items()) {
        if (!value.is_string()) throw InvariantError("binding '" + name + "' must be a string");
        out.emplace(name, value.get<std::string>());
    }
    return out;
}

std::string required_string(const Json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_string()) {
        throw InvariantError(std::string("field '") + name + "' must be a string");
    }
    return it->get<std::string>();
}

void require_method(std::string_view actual, std::string_view expected) {
    if (actual != expected) {
        throw MethodNotAllowed("use " + std::string(expected) + " for this endpoint");
    }
}

} // namespace

ApiReply api_error(int status, std::string_view kind, std::string_view message) {
    return {status, Json{{"kind", kind}, {"message", message}}};
}

Json to_json(const CommentActionResult& r) {
    Json errors = Json::array();
    for (const auto& e : r.errors) errors.push_back(to_json(e));
    return {{"status", to_string(r.status)},
            {"comment", r.comment ? Json(*r.comment) : Json(nullptr)},
            {"feedback", r.feedback ? Json(*r.feedback) : Json(nullptr)},
            {"annotated_file", r.annotated_file ? Json(*r.annotated_file) : Json(nullptr)},
            {"iterations", r.iterations},
            {"errors", std::move(errors)},
            {"workflow", to_json(r.workflow)}};
}

Json to_json(const ChatSession& session) {
    Json turns = Json::array();
    for (const auto& t : session.turns) {
        turns.push_back({{"user_text", t.user_text},
                         {"candidates", to_json(t.candidates)},
                         {"selected_driver",
                          t.selected_driver ? Json(t.selected_driver->str()) : Json(nullptr)},
                         {"timestamp", t.timestamp}});
    }
    return {{"session_id", session.session_id},
            {"created_at", session.created_at},
            {"turns", std::move(turns)}};
}

CommentActionRequest comment_request_from_json(const Json& j) {
    CommentActionRequest req;
    auto sel = j.find("selection");
    if (sel == j.end() || !sel->is_object()) throw InvariantError("'selection' object is required");
    req.selection = selection_from_json(*sel);
    if (auto it = j.find("workflow"); it != j.end() && !it->is_null()) {
        req.workflow = required_string(j, "workflow");
    }
    if (auto it = j.find("apply"); it != j.end()) {
        if (!it->is_boolean()) throw InvariantError("'apply' must be a boolean");
        req.apply = it->get<bool>();
    }
    if (auto it = j.find("file_content"); it != j.end() && !it->is_null()) {
        req.file_content = required_string(j, "file_content");
    }
    if (auto it = j.find("max_iterations"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw InvariantError("'max_iterations' must be an integer");
        req.max_iterations = it->get<int>();
    }
    return req;
}

ApiReply Api::handle(std::string_view method, std::string_view path, std::string_view body,
                     std::optional<std::string_view> authorization) {
    if (const auto& token = engine_.config().auth_token) {
        if (!authorization || *authorization != "Bearer " + *token) {
            return api_error(401, "unauthorized", "missing or invalid bearer token");
        }
    }
    try {
        return route(method, split_path(path), body);
    } catch (const MalformedRequest& e) {
        return api_error(400, "malformed_request", e.what());
    } catch (const MethodNotAllowed& e) {
        return api_error(405, "method_not_allowed", e.what());
    } catch (const NotFoundError& e) {
        return api_error(404, "not_found", e.what());
    } catch (const InvariantError& e) {
        return api_error(422, "invariant_violation", e.what());
    } catch (const Json::exception& e) {
        return api_error(422, "invariant_violation", e.what());
    } catch (const std::exception& e) {
        return api_error(500, "internal", e.what());
    }
}

ApiReply Api::route(std::string_view method, const std::vector<std::string>& s,
                     std::string_view body) {
    const auto n = s.size();
    if (n < 2 || s[0] != "v1") throw NotFoundError("no such endpoint");

    if (n == 2 && s[1] == "health") {
        require_method(method, "GET");
        return {200, {{"status", "ok"}}};
    }

    if (s[1] == "drivers") {
        auto& manager = DriverManager::instance();
        if (n == 2) {
            require_method(method, "GET");
            Json drivers = Json::array();
            for (const auto& config : manager.list()) drivers.push_back(to_json(config));
            return {200, {{"drivers", std::move(drivers)}}};
        }
        if (n == 4 && s[3] == "activity") {
            require_method(method, "GET");
            if (!DriverId::is_valid(s[2])) throw NotFoundError("unknown driver '" + s[2] + "'");
            Json j = to_json(manager.activity(DriverId(s[2])));
            j["driver_id"] = s[2];
            return {200, std::move(j)};
        }
    }

    if (n == 3 && s[1] == "actions" && s[2] == "comment") {
        require_method(method, "POST");
        auto req = comment_request_from_json(parse_body(body));
        return {200, to_json(engine_.handle_comment_action(req))};
    }

    if (n == 4 && s[1] == "tasks" && s[3] == "run") {
        require_method(method, "POST");
        auto doc = parse_body(body);
        std::vector<Message> history;
        if (auto it = doc.find("history"); it != doc.end()) history = messages_from_json(*it);
        auto bindings = bindings_from_json(doc.value("bindings", Json(nullptr)));
        if (auto it = doc.find("input"); it != doc.end()) {
            if (!it->is_string()) throw InvariantError("'input' must be a string");
            bindings.insert_or_assign(engine_.config().tasks.get(s[2]).primary_input,
                                      it->get<std::string>());
        }
        auto result = engine_.run_task(s[2], bindings, history);
        Json j = to_json(result);
        if (engine_.config().tasks.get(s[2]).output == OutputFormat::verdict && result.ok()) {
            j["verdict"] = to_json(parse_verdict(result.selected->content));
        }
        return {200, std::move(j)};
    }

    if (n == 4 && s[1] == "workflows" && s[3] == "run") {
        require_method(method, "POST");
        auto doc = parse_body(body);
        std::string input;
        if (auto it = doc.find("input"); it != doc.end()) input = required_string(doc, "input");
        auto bindings = bindings_from_json(doc.value("bindings", Json(nullptr)));
        std::optional<CodeSelection> selection;
        if (auto it = doc.find("selection"); it != doc.end() && !it->is_null()) {
            selection = selection_from_json(*it);
        }
        std::optional<int> max_iterations;
        if (auto it = doc.find("max_iterations"); it != doc.end() && !it->is_null()) {
            max_iterations = it->get<int>();
            if (*max_iterations < 1) throw InvariantError("max_iterations must be >= 1");
        }
        return {200, to_json(engine_.run_workflow(s[2], input, bindings, selection,
                                                  max_iterations))};
    }

    if (s[1] == "chat" && n >= 3 && s[2] == "sessions") {
        auto& sessions = engine_.sessions();
        if (n == 3) {
            require_method(method, "POST");
            parse_body(body);
            return {200, {{"session_id", sessions.create()}}};
        }
        if (n == 4) {
            require_method(method, "GET");
            return {200, to_json(sessions.get(s[3]))};
        }
        if (n == 5 && s[4] == "messages") {
            require_method(method, "POST");
            auto doc = parse_body(body);
            auto text = required_string(doc, "text");
            if (text.empty()) throw InvariantError("'text' must not be empty");
            auto targets = targets_from_json(doc.value("targets", Json(nullptr)));
            sessions.get(s[3]);  // 404 before any driver call
            auto index = sessions.post_message(s[3], text, targets);
            auto session = sessions.get(s[3]);
            return {200, {{"session_id", s[3]},
                          {"turn_index", index},
                          {"candidates", to_json(session.turns.at(index).candidates)}}};
        }
        if (n == 5 && s[4] == "select") {
            require_method(method, "POST");
            auto doc = parse_body(body);
            auto turn = doc.find("turn_index");
            if (turn == doc.end() || !turn->is_number_unsigned()) {
                throw InvariantError("'turn_index' must be a non-negative integer");
            }
            DriverId driver(required_string(doc, "driver_id"));
            return {200, to_json(sessions.select(s[3], turn->get<std::size_t>(), driver))};
        }
    }

    throw NotFoundError("no such endpoint");
}

} // namespace multimind
