#include "multimind/types.hpp"

#include <array>
#include <utility>

namespace multimind {

DriverId::DriverId(std::string value) : value_(std::move(value)) {
    if (!is_valid(value_)) {
        throw InvariantError("invalid driver id '" + value_ + "': expected [a-z0-9-]{1,64}");
    }
}

bool DriverId::is_valid(std::string_view value) noexcept {
    if (value.empty() || value.size() > 64) return false;
    for (char c : value) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
        if (!ok) return false;
    }
    return true;
}

void AssistantRequest::validate() const {
    if (messages.empty()) throw InvariantError("request has no messages");
    if (messages.back().role != Role::user) {
        throw InvariantError("last request message must have role user");
    }
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (messages[i].content.empty()) {
            throw InvariantError("request message " + std::to_string(i) + " has empty content");
        }
    }
}

bool default_retryable(DriverErrorKind kind) noexcept {
    switch (kind) {
        case DriverErrorKind::network:
        case DriverErrorKind::timeout:
        case DriverErrorKind::rate_limit:
            return true;
        default:
            return false;
    }
}

DriverError DriverError::make(DriverId id, DriverErrorKind kind, std::string message) {
    return DriverError{std::move(id), kind, std::move(message), default_retryable(kind)};
}

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(FinishReason reason) noexcept {
    switch (reason) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::other: return "other";
    }
    return "other";
}

namespace {
constexpr std::array<std::pair<DriverErrorKind, std::string_view>, 7> kErrorKinds{{
    {DriverErrorKind::auth, "auth"},
    {DriverErrorKind::network, "network"},
    {DriverErrorKind::timeout, "timeout"},
    {DriverErrorKind::rate_limit, "rate_limit"},
    {DriverErrorKind::malformed_response, "malformed_response"},
    {DriverErrorKind::cancelled, "cancelled"},
    {DriverErrorKind::script_exhausted, "script_exhausted"},
}};
} // namespace

std::string_view to_string(DriverErrorKind kind) noexcept {
    for (const auto& [k, name] : kErrorKinds) {
        if (k == kind) return name;
    }
    return "network";
}

Role role_from_string(std::string_view text) {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    throw InvariantError("unknown message role '" + std::string(text) + "'");
}

FinishReason finish_reason_from_string(std::string_view text) {
    if (text == "stop") return FinishReason::stop;
    if (text == "length") return FinishReason::length;
    if (text == "other") return FinishReason::other;
    throw InvariantError("unknown finish reason '" + std::string(text) + "'");
}

DriverErrorKind error_kind_from_string(std::string_view text) {
    for (const auto& [k, name] : kErrorKinds) {
        if (name == text) return k;
    }
    throw InvariantError("unknown driver error kind '" + std::string(text) + "'");
}

} // namespace multimind
