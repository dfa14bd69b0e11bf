#include "multimind/driver.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>

namespace multimind {

using nlohmann::json;

namespace {

json openai_body(const DriverConfig& config, const AssistantRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    return json{
        {"model", config.model},
        {"messages", std::move(messages)},
        {"temperature", request.temperature_override.value_or(config.temperature)},
        {"max_tokens", request.max_tokens_override.value_or(config.max_output_tokens)},
    };
}

json gemini_body(const DriverConfig& config, const AssistantRequest& request) {
    json contents = json::array();
    std::string system_text;
    for (const auto& m : request.messages) {
        if (m.role == Role::system) {
            if (!system_text.empty()) system_text += "\n\n";
            system_text += m.content;
            continue;
        }
        const char* role = m.role == Role::assistant ? "model" : "user";
        contents.push_back({{"role", role}, {"parts", json::array({{{"text", m.content}}})}});
    }
    json body{
        {"contents", std::move(contents)},
        {"generationConfig",
         {{"temperature", request.temperature_override.value_or(config.temperature)},
          {"maxOutputTokens", request.max_tokens_override.value_or(config.max_output_tokens)}}},
    };
    if (!system_text.empty()) {
        body["systemInstruction"] = {{"parts", json::array({{{"text", system_text}}})}};
    }
    return body;
}

DriverError malformed(const DriverConfig& config, std::string message) {
    return DriverError::make(config.id, DriverErrorKind::malformed_response, std::move(message));
}

std::string provider_error_message(std::string_view body) {
    auto doc = json::parse(body, nullptr, false);
    if (doc.is_object() && doc.contains("error")) {
        const auto& err = doc["error"];
        if (err.is_object() && err.contains("message") && err["message"].is_string()) {
            auto text = err["message"].get<std::string>();
            if (text.size() > 200) text.resize(200);
            return text;
        }
    }
    return {};
}

DriverOutcome parse_openai(const DriverConfig& config, const json& doc, Millis elapsed) {
    if (!doc.is_object()) return malformed(config, "reply is not a JSON object");
    auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) {
        return malformed(config, "reply has no choices");
    }
    const auto& choice = (*choices)[0];
    if (!choice.is_object()) return malformed(config, "choice is not an object");
    auto message = choice.find("message");
    if (message == choice.end() || !message->is_object()) {
        return malformed(config, "choice has no message");
    }
    auto content = message->find("content");
    if (content == message->end() || !(content->is_string() || content->is_null())) {
        return malformed(config, "message content is not text");
    }

    AssistantResponse response;
    response.driver_id = config.id;
    response.latency = elapsed;
    if (content->is_string()) response.content = content->get<std::string>();

    response.finish_reason = FinishReason::other;
    if (auto fr = choice.find("finish_reason"); fr != choice.end() && fr->is_string()) {
        const auto& text = fr->get_ref<const std::string&>();
        if (text == "stop") response.finish_reason = FinishReason::stop;
        if (text == "length") response.finish_reason = FinishReason::length;
    }
    if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
        auto p = usage->find("prompt_tokens");
        auto c = usage->find("completion_tokens");
        if (p != usage->end() && p->is_number_integer() && c != usage->end() &&
            c->is_number_integer()) {
            response.token_usage = TokenUsage{p->get<int>(), c->get<int>()};
        }
    }
    if (response.content.empty()) response.finish_reason = FinishReason::other;
    return response;
}

DriverOutcome parse_gemini(const DriverConfig& config, const json& doc, Millis elapsed) {
    if (!doc.is_object()) return malformed(config, "reply is not a JSON object");
    auto candidates = doc.find("candidates");
    if (candidates == doc.end() || !candidates->is_array() || candidates->empty()) {
        return malformed(config, "reply has no candidates");
    }
    const auto& candidate = (*candidates)[0];
    if (!candidate.is_object()) return malformed(config, "candidate is not an object");

    AssistantResponse response;
    response.driver_id = config.id;
    response.latency = elapsed;

    auto content = candidate.find("content");
    if (content != candidate.end()) {
        if (!content->is_object()) return malformed(config, "candidate content is not an object");
        auto parts = content->find("parts");
        if (parts != content->end()) {
            if (!parts->is_array()) return malformed(config, "content parts is not an array");
            for (const auto& part : *parts) {
                if (!part.is_object()) return malformed(config, "content part is not an object");
                auto text = part.find("text");
                if (text == part.end()) continue;
                if (!text->is_string()) return malformed(config, "part text is not a string");
                response.content += text->get<std::string>();
            }
        }
    }

    response.finish_reason = FinishReason::other;
    if (auto fr = candidate.find("finishReason"); fr != candidate.end() && fr->is_string()) {
        const auto& text = fr->get_ref<const std::string&>();
        if (text == "STOP") response.finish_reason = FinishReason::stop;
        if (text == "MAX_TOKENS") response.finish_reason = FinishReason::length;
    }
    if (auto usage = doc.find("usageMetadata"); usage != doc.end() && usage->is_object()) {
        auto p = usage->find("promptTokenCount");
        auto c = usage->find("candidatesTokenCount");
        if (p != usage->end() && p->is_number_integer() && c != usage->end() &&
            c->is_number_integer()) {
            response.token_usage = TokenUsage{p->get<int>(), c->get<int>()};
        }
    }
    if (response.content.empty()) response.finish_reason = FinishReason::other;
    return response;
}

} // namespace

std::variant<WirePayload, DriverError> format_request(const DriverConfig& config,
                                                      const AssistantRequest& request) {
    if (!is_network_provider(config.provider)) {
        throw InvariantError("format_request needs a network provider, driver '" +
                             config.id.str() + "' is scripted");
    }
    request.validate();
    const Endpoint ep = parse_endpoint(config.endpoint);

    const char* key = config.credential_env ? std::getenv(config.credential_env->c_str()) : nullptr;
    if (key == nullptr || *key == '\0') {
        return DriverError::make(
            config.id, DriverErrorKind::auth,
            "credential environment variable '" + config.credential_env.value_or("") +
                "' is not set");
    }

    WirePayload payload;
    payload.method = "POST";
    if (config.provider == ProviderKind::openai_compatible) {
        payload.path = ep.base_path + "/chat/completions";
        payload.headers = {{"Authorization", std::string("Bearer ") + key},
                           {"Content-Type", "application/json"}};
        payload.body = openai_body(config, request).dump(-1, ' ', false, json::error_handler_t::replace);
    } else {
        payload.path = ep.base_path + "/models/" + config.model + ":generateContent";
        payload.headers = {{"x-goog-api-key", key}, {"Content-Type", "application/json"}};
        payload.body = gemini_body(config, request).dump(-1, ' ', false, json::error_handler_t::replace);
    }
    return payload;
}

DriverOutcome parse_response(const DriverConfig& config, int status, std::string_view body,
                             Millis elapsed) {
    if (elapsed.count() < 0) elapsed = Millis{0};
    if (status == 401 || status == 403) {
        auto detail = provider_error_message(body);
        return DriverError::make(config.id, DriverErrorKind::auth,
                                 "provider rejected credentials (HTTP " + std::to_string(status) +
                                     ")" + (detail.empty() ? "" : ": " + detail));
    }
    if (status == 429) {
        return DriverError::make(config.id, DriverErrorKind::rate_limit,
                                 "provider rate limit (HTTP 429)");
    }
    if (status >= 500 && status <= 599) {
        return DriverError::make(config.id, DriverErrorKind::network,
                                 "provider server error (HTTP " + std::to_string(status) + ")");
    }
    if (status < 200 || status > 299) {
        auto detail = provider_error_message(body);
        return malformed(config, "unexpected HTTP status " + std::to_string(status) +
                                     (detail.empty() ? "" : ": " + detail));
    }

    auto doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) return malformed(config, "reply body is not valid JSON");
    try {
        if (config.provider == ProviderKind::gemini_compatible) {
            return parse_gemini(config, doc, elapsed);
        }
        return parse_openai(config, doc, elapsed);
    } catch (const json::exception& e) {
        return malformed(config, std::string("reply body has unexpected shape: ") + e.what());
    }
}

} // namespace multimind
