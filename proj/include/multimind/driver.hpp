#pragma once

#include "multimind/types.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace multimind {

enum class ProviderKind { openai_compatible, gemini_compatible, scripted };

std::string_view to_string(ProviderKind kind) noexcept;
ProviderKind provider_from_string(std::string_view text);

inline bool is_network_provider(ProviderKind kind) noexcept {
    return kind != ProviderKind::scripted;
}

enum class ExhaustionPolicy { repeat_last, error };

struct ScriptedStep {
    Millis delay{0};
    std::variant<std::string, DriverErrorKind> outcome;
    FinishReason finish_reason = FinishReason::stop;
};

struct ScriptedBehavior {
    std::vector<ScriptedStep> steps;
    ExhaustionPolicy on_exhausted = ExhaustionPolicy::repeat_last;

    void validate() const;
};

struct DriverConfig {
    DriverId id;
    ProviderKind provider = ProviderKind::scripted;
    std::string endpoint;
    std::string model;
    std::optional<std::string> credential_env;
    Millis timeout{30000};
    double temperature = 0.2;
    int max_output_tokens = 1024;
    std::optional<ScriptedBehavior> script;

    // Throws InvariantError describing the first violated invariant.
    void validate() const;
};

struct Endpoint {
    std::string scheme;  // "http" or "https"
    std::string host;
    int port = 0;
    std::string base_path;  // no trailing slash, may be empty

    std::string origin() const;
};

// Parses an absolute http(s) URL; throws InvariantError otherwise.
Endpoint parse_endpoint(std::string_view url);

struct WirePayload {
    std::string method;
    std::string path;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

// Builds the provider-specific HTTP exchange for a network driver. The
// credential is read from the environment variable named by the config and
// placed only in a header. Returns DriverError{auth} when it is missing.
std::variant<WirePayload, DriverError> format_request(const DriverConfig& config,
                                                      const AssistantRequest& request);

// Normalizes a raw provider reply. Total over arbitrary bytes.
DriverOutcome parse_response(const DriverConfig& config, int status, std::string_view body,
                             Millis elapsed);

class Driver {
public:
    explicit Driver(DriverConfig config) : config_(std::move(config)) {}
    virtual ~Driver() = default;

    Driver(const Driver&) = delete;
    Driver& operator=(const Driver&) = delete;

    const DriverConfig& config() const noexcept { return config_; }
    const DriverId& id() const noexcept { return config_.id; }

    // Performs one request/response exchange. A stop request turns an
    // in-flight call into DriverError{cancelled} as soon as practical.
    virtual DriverOutcome send(const AssistantRequest& request, std::stop_token stop = {}) = 0;

private:
    DriverConfig config_;
};

// Network driver for both openai-compatible and gemini-compatible providers.
class HttpDriver final : public Driver {
public:
    explicit HttpDriver(DriverConfig config);

    DriverOutcome send(const AssistantRequest& request, std::stop_token stop = {}) override;

    static constexpr Millis retry_backoff{250};

private:
    DriverOutcome attempt(const WirePayload& payload, std::stop_token stop, Millis budget);

    Endpoint endpoint_;
};

// Deterministic test double; replays its configured steps in order and keeps
// a log of every request it received.
class ScriptedDriver final : public Driver {
public:
    explicit ScriptedDriver(DriverConfig config);

    DriverOutcome send(const AssistantRequest& request, std::stop_token stop = {}) override;

    std::vector<AssistantRequest> request_log() const;
    std::size_t calls() const;

private:
    mutable std::mutex mutex_;
    std::size_t cursor_ = 0;
    std::vector<AssistantRequest> log_;
};

std::shared_ptr<Driver> make_driver(DriverConfig config);

// One-shot convenience: constructs the driver for config and sends.
DriverOutcome send(const DriverConfig& config, const AssistantRequest& request);

} // namespace multimind
