#include "multimind/codec.hpp"

namespace multimind {

namespace {

const Json& field(const Json& j, const char* name) {
    if (!j.is_object()) throw InvariantError("expected a JSON object");
    auto it = j.find(name);
    if (it == j.end()) throw InvariantError(std::string("missing field '") + name + "'");
    return *it;
}

std::string string_field(const Json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_string()) throw InvariantError(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

template <typename T>
std::optional<T> optional_number(const Json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw InvariantError(std::string("field '") + name + "' must be a number");
    if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) {
            throw InvariantError(std::string("field '") + name + "' must be an integer");
        }
    }
    return it->get<T>();
}

std::optional<std::string> optional_string(const Json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw InvariantError(std::string("field '") + name + "' must be a string");
    return it->get<std::string>();
}

Json error_body(const DriverError& e) {
    return {{"driver_id", e.driver_id.str()},
            {"kind", to_string(e.kind)},
            {"message", e.message},
            {"retryable", e.retryable}};
}

} // namespace

Json to_json(const Message& message) {
    return {{"role", to_string(message.role)}, {"content", message.content}};
}

Json to_json(const std::vector<Message>& messages) {
    Json out = Json::array();
    for (const auto& m : messages) out.push_back(to_json(m));
    return out;
}

Json to_json(const AssistantResponse& r) {
    Json j{{"driver_id", r.driver_id.str()},
           {"content", r.content},
           {"latency_ms", r.latency.count()},
           {"finish_reason", to_string(r.finish_reason)}};
    j["token_usage"] = r.token_usage ? Json{{"prompt", r.token_usage->prompt},
                                            {"completion", r.token_usage->completion}}
                                     : Json(nullptr);
    return j;
}

Json to_json(const DriverError& error) { return error_body(error); }

Json to_json(const DriverOutcome& outcome) {
    if (const auto* r = std::get_if<AssistantResponse>(&outcome)) {
        return {{"ok", true}, {"response", to_json(*r)}};
    }
    return {{"ok", false}, {"error", to_json(std::get<DriverError>(outcome))}};
}

Json to_json(const FanoutOutcome& outcome) {
    Json results = Json::array();
    for (const auto& [id, result] : outcome.results) {
        Json entry = to_json(result);
        entry["driver_id"] = id.str();
        results.push_back(std::move(entry));
    }
    return {{"mode", outcome.mode == FanoutMode::first ? "first" : "all"},
            {"winner", outcome.winner ? Json(outcome.winner->str()) : Json(nullptr)},
            {"results", std::move(results)}};
}

Json to_json(const ActivityCounters& c) {
    return {{"requests", c.requests},
            {"successes", c.successes},
            {"errors", c.errors},
            {"cumulative_latency_ms", c.cumulative_latency_ms}};
}

Json to_json(const DriverConfig& config) {
    Json j{{"id", config.id.str()},
           {"provider", to_string(config.provider)},
           {"timeout_ms", config.timeout.count()},
           {"temperature", config.temperature},
           {"max_output_tokens", config.max_output_tokens}};
    if (is_network_provider(config.provider)) {
        j["endpoint"] = config.endpoint;
        j["model"] = config.model;
        j["credential_env"] = config.credential_env ? Json(*config.credential_env) : Json(nullptr);
    } else if (config.script) {
        j["script_steps"] = config.script->steps.size();
    }
    return j;
}

Json to_json(const CodeSelection& s) {
    return {{"file_path", s.file_path},
            {"language_id", s.language_id},
            {"start_line", s.start_line},
            {"end_line", s.end_line},
            {"text", s.text}};
}

Json to_json(const Verdict& v) {
    return {{"pass", v.pass}, {"feedback", v.feedback}, {"raw", v.raw}};
}

Json to_json(const TaskResult& r) {
    return {{"task_id", r.task_id},
            {"status", to_string(r.status)},
            {"selected", r.selected ? to_json(*r.selected) : Json(nullptr)},
            {"message", r.message},
            {"outcome", to_json(r.outcome)}};
}

Json to_json(const VerdictResult& r) {
    Json j = to_json(r.task);
    j["verdict"] = r.verdict ? to_json(*r.verdict) : Json(nullptr);
    return j;
}

Json to_json(const WorkflowResult& r) {
    Json trace = Json::array();
    for (const auto& entry : r.trace) {
        Json e{{"iteration", entry.iteration},
               {"task_id", entry.task_id},
               {"wall_ms", entry.wall.count()}};
        std::visit([&](const auto& result) { e["result"] = to_json(result); }, entry.result);
        trace.push_back(std::move(e));
    }
    return {{"status", to_string(r.status)},
            {"final_output", r.final_output ? Json(*r.final_output) : Json(nullptr)},
            {"feedback", r.feedback ? Json(*r.feedback) : Json(nullptr)},
            {"iterations", r.iterations},
            {"trace", std::move(trace)}};
}

Json to_json(const WorkflowSpec& spec) {
    Json j{{"id", spec.id}, {"strategy", to_string(spec.strategy)}};
    if (spec.strategy == Strategy::iterative_refine) {
        j["generator"] = spec.generator;
        j["verifier"] = spec.verifier;
        j["max_iterations"] = spec.max_iterations;
    } else {
        j["steps"] = spec.steps;
    }
    return j;
}

Message message_from_json(const Json& j) {
    return Message{role_from_string(string_field(j, "role")), string_field(j, "content")};
}

std::vector<Message> messages_from_json(const Json& j) {
    if (!j.is_array()) throw InvariantError("messages must be an array");
    std::vector<Message> out;
    for (const auto& m : j) out.push_back(message_from_json(m));
    return out;
}

ScriptedBehavior scripted_behavior_from_json(const Json& j) {
    ScriptedBehavior behavior;
    const auto& steps = field(j, "steps");
    if (!steps.is_array()) throw InvariantError("script.steps must be an array");
    for (const auto& s : steps) {
        ScriptedStep step;
        step.delay = Millis{optional_number<long long>(s, "delay_ms").value_or(0)};
        auto content = optional_string(s, "content");
        auto error = optional_string(s, "error");
        if (content.has_value() == error.has_value()) {
            throw InvariantError("script step needs exactly one of 'content' or 'error'");
        }
        if (content) {
            step.outcome = *content;
        } else {
            step.outcome = error_kind_from_string(*error);
        }
        if (auto fr = optional_string(s, "finish_reason")) {
            step.finish_reason = finish_reason_from_string(*fr);
        }
        behavior.steps.push_back(std::move(step));
    }
    if (auto policy = optional_string(j, "on_exhausted")) {
        if (*policy == "repeat_last") {
            behavior.on_exhausted = ExhaustionPolicy::repeat_last;
        } else if (*policy == "error") {
            behavior.on_exhausted = ExhaustionPolicy::error;
        } else {
            throw InvariantError("unknown exhaustion policy '" + *policy + "'");
        }
    }
    behavior.validate();
    return behavior;
}

DriverConfig driver_config_from_json(const Json& j) {
    DriverConfig config;
    config.id = DriverId(string_field(j, "id"));
    config.provider = provider_from_string(string_field(j, "provider"));
    config.endpoint = optional_string(j, "endpoint").value_or("");
    config.model = optional_string(j, "model").value_or("");
    config.credential_env = optional_string(j, "credential_env");
    config.timeout = Millis{optional_number<long long>(j, "timeout_ms").value_or(30000)};
    config.temperature = optional_number<double>(j, "temperature").value_or(0.2);
    config.max_output_tokens = optional_number<int>(j, "max_output_tokens").value_or(1024);
    if (auto it = j.find("script"); it != j.end() && !it->is_null()) {
        config.script = scripted_behavior_from_json(*it);
    }
    config.validate();
    return config;
}

CodeSelection selection_from_json(const Json& j) {
    CodeSelection s;
    s.file_path = optional_string(j, "file_path").value_or("");
    s.language_id = string_field(j, "language_id");
    s.start_line = optional_number<int>(j, "start_line").value_or(0);
    s.end_line = optional_number<int>(j, "end_line").value_or(0);
    s.text = optional_string(j, "text").value_or("");
    return s;
}

WorkflowSpec workflow_spec_from_json(const Json& j) {
    WorkflowSpec spec;
    spec.id = string_field(j, "id");
    spec.strategy = strategy_from_string(string_field(j, "strategy"));
    if (auto it = j.find("steps"); it != j.end()) {
        if (!it->is_array()) throw InvariantError("workflow steps must be an array");
        for (const auto& s : *it) {
            if (!s.is_string()) throw InvariantError("workflow steps must be task ids");
            spec.steps.push_back(s.get<std::string>());
        }
    }
    spec.generator = optional_string(j, "generator").value_or("");
    spec.verifier = optional_string(j, "verifier").value_or("");
    spec.max_iterations = optional_number<int>(j, "max_iterations").value_or(3);
    spec.validate();
    return spec;
}

TargetSelector targets_from_json(const Json& j) {
    if (j.is_null()) return TargetSelector::any();
    if (j.is_string()) {
        if (j.get<std::string>() == "any") return TargetSelector::any();
        return TargetSelector::of({DriverId(j.get<std::string>())});
    }
    if (!j.is_array()) throw InvariantError("targets must be \"any\" or an array of driver ids");
    std::vector<DriverId> ids;
    for (const auto& id : j) {
        if (!id.is_string()) throw InvariantError("targets must contain driver id strings");
        ids.emplace_back(id.get<std::string>());
    }
    return TargetSelector::of(std::move(ids));
}

AssistantResponse response_from_json(const Json& j) {
    AssistantResponse r;
    r.driver_id = DriverId(string_field(j, "driver_id"));
    r.content = string_field(j, "content");
    r.latency = Millis{optional_number<long long>(j, "latency_ms").value_or(0)};
    r.finish_reason = finish_reason_from_string(optional_string(j, "finish_reason").value_or("stop"));
    if (auto it = j.find("token_usage"); it != j.end() && it->is_object()) {
        r.token_usage = TokenUsage{optional_number<int>(*it, "prompt").value_or(0),
                                   optional_number<int>(*it, "completion").value_or(0)};
    }
    return r;
}

DriverError driver_error_from_json(const Json& j) {
    DriverError e;
    e.driver_id = DriverId(string_field(j, "driver_id"));
    e.kind = error_kind_from_string(string_field(j, "kind"));
    e.message = optional_string(j, "message").value_or("");
    auto it = j.find("retryable");
    e.retryable = it != j.end() && it->is_boolean() ? it->get<bool>() : default_retryable(e.kind);
    return e;
}

FanoutOutcome fanout_from_json(const Json& j) {
    FanoutOutcome out;
    out.mode = string_field(j, "mode") == "first" ? FanoutMode::first : FanoutMode::all;
    if (auto w = optional_string(j, "winner")) out.winner = DriverId(*w);
    for (const auto& entry : field(j, "results")) {
        DriverId id(string_field(entry, "driver_id"));
        const auto& ok = field(entry, "ok");
        if (ok.is_boolean() && ok.get<bool>()) {
            out.results.emplace_back(id, response_from_json(field(entry, "response")));
        } else {
            out.results.emplace_back(id, driver_error_from_json(field(entry, "error")));
        }
    }
    return out;
}

} // namespace multimind
