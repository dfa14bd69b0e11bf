#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace multimind {

using Millis = std::chrono::milliseconds;

// Raised when a caller violates a documented precondition or a domain
// invariant. Distinct from DriverError, which is an ordinary outcome.
class InvariantError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when an id (driver, task, workflow, session, turn) is unknown.
class NotFoundError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class DriverId {
public:
    DriverId() = default;
    // Throws InvariantError unless the value matches [a-z0-9-]{1,64}.
    explicit DriverId(std::string value);

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    static bool is_valid(std::string_view value) noexcept;

    friend bool operator==(const DriverId&, const DriverId&) = default;
    friend auto operator<=>(const DriverId&, const DriverId&) = default;

private:
    std::string value_;
};

enum class Role { system, user, assistant };

struct Message {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

struct AssistantRequest {
    std::vector<Message> messages;
    std::optional<double> temperature_override;
    std::optional<int> max_tokens_override;
    std::string correlation_id;

    // Throws InvariantError when messages are empty, the last message is
    // not a user message, or any message has empty content.
    void validate() const;
};

enum class FinishReason { stop, length, other };

struct TokenUsage {
    int prompt = 0;
    int completion = 0;
};

struct AssistantResponse {
    DriverId driver_id;
    std::string content;
    Millis latency{0};
    FinishReason finish_reason = FinishReason::stop;
    std::optional<TokenUsage> token_usage;
};

enum class DriverErrorKind {
    auth,
    network,
    timeout,
    rate_limit,
    malformed_response,
    cancelled,
    script_exhausted,
};

struct DriverError {
    DriverId driver_id;
    DriverErrorKind kind = DriverErrorKind::network;
    std::string message;
    bool retryable = false;

    // Builds an error with the retryable flag implied by the kind.
    static DriverError make(DriverId id, DriverErrorKind kind, std::string message);
};

bool default_retryable(DriverErrorKind kind) noexcept;

using DriverOutcome = std::variant<AssistantResponse, DriverError>;

inline bool succeeded(const DriverOutcome& outcome) noexcept {
    return std::holds_alternative<AssistantResponse>(outcome);
}

std::string_view to_string(Role role) noexcept;
std::string_view to_string(FinishReason reason) noexcept;
std::string_view to_string(DriverErrorKind kind) noexcept;

Role role_from_string(std::string_view text);
FinishReason finish_reason_from_string(std::string_view text);
DriverErrorKind error_kind_from_string(std::string_view text);

} // namespace multimind

template <>
struct std::hash<multimind::DriverId> {
    std::size_t operator()(const multimind::DriverId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
