#include "multimind/driver.hpp"

#include <charconv>

namespace multimind {

std::string_view to_string(ProviderKind kind) noexcept {
    switch (kind) {
        case ProviderKind::openai_compatible: return "openai-compatible";
        case ProviderKind::gemini_compatible: return "gemini-compatible";
        case ProviderKind::scripted: return "scripted";
    }
    return "scripted";
}

ProviderKind provider_from_string(std::string_view text) {
    if (text == "openai-compatible") return ProviderKind::openai_compatible;
    if (text == "gemini-compatible") return ProviderKind::gemini_compatible;
    if (text == "scripted") return ProviderKind::scripted;
    throw InvariantError("unknown provider '" + std::string(text) + "'");
}

void ScriptedBehavior::validate() const {
    if (steps.empty()) throw InvariantError("scripted behavior needs at least one step");
    for (const auto& step : steps) {
        if (step.delay.count() < 0) throw InvariantError("scripted step delay must be >= 0");
    }
}

void DriverConfig::validate() const {
    if (id.empty()) throw InvariantError("driver config has no id");
    if (timeout.count() <= 0) {
        throw InvariantError("driver '" + id.str() + "': timeout must be > 0");
    }
    if (temperature < 0.0 || temperature > 2.0) {
        throw InvariantError("driver '" + id.str() + "': temperature must be in [0, 2]");
    }
    if (max_output_tokens <= 0) {
        throw InvariantError("driver '" + id.str() + "': max_output_tokens must be positive");
    }
    if (provider == ProviderKind::scripted) {
        if (!script) throw InvariantError("scripted driver '" + id.str() + "' requires a script");
        if (!endpoint.empty()) {
            throw InvariantError("scripted driver '" + id.str() + "' must not have an endpoint");
        }
        script->validate();
        return;
    }
    parse_endpoint(endpoint);
    if (model.empty()) throw InvariantError("driver '" + id.str() + "': model is required");
    if (script) throw InvariantError("network driver '" + id.str() + "' cannot carry a script");
}

std::string Endpoint::origin() const {
    return scheme + "://" + host + ":" + std::to_string(port);
}

Endpoint parse_endpoint(std::string_view url) {
    Endpoint ep;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw InvariantError("endpoint '" + std::string(url) + "' is not an absolute URL");
    }
    ep.scheme = std::string(url.substr(0, scheme_end));
    if (ep.scheme != "http" && ep.scheme != "https") {
        throw InvariantError("endpoint '" + std::string(url) + "' must use http or https");
    }
    auto rest = url.substr(scheme_end + 3);
    auto path_start = rest.find('/');
    auto authority = rest.substr(0, path_start);
    if (path_start != std::string_view::npos) ep.base_path = std::string(rest.substr(path_start));
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();

    ep.port = ep.scheme == "https" ? 443 : 80;
    auto colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
        auto port_text = authority.substr(colon + 1);
        int port = 0;
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port <= 0 ||
            port > 65535) {
            throw InvariantError("endpoint '" + std::string(url) + "' has an invalid port");
        }
        ep.port = port;
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) {
        throw InvariantError("endpoint '" + std::string(url) + "' has no host");
    }
    ep.host = std::string(authority);
    return ep;
}

std::shared_ptr<Driver> make_driver(DriverConfig config) {
    config.validate();
    if (config.provider == ProviderKind::scripted) {
        return std::make_shared<ScriptedDriver>(std::move(config));
    }
    return std::make_shared<HttpDriver>(std::move(config));
}

DriverOutcome send(const DriverConfig& config, const AssistantRequest& request) {
    return make_driver(config)->send(request);
}

} // namespace multimind
