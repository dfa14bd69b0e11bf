#pragma once

#include "multimind/driver.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <vector>

namespace multimind {

// Either an explicit non-empty list of driver ids or every registered driver.
class TargetSelector {
public:
    static TargetSelector any() { return TargetSelector{}; }
    static TargetSelector of(std::vector<DriverId> ids);

    bool is_any() const noexcept { return ids_.empty(); }
    const std::vector<DriverId>& ids() const noexcept { return ids_; }

    friend bool operator==(const TargetSelector&, const TargetSelector&) = default;

private:
    std::vector<DriverId> ids_;
};

enum class FanoutMode { first, all };

struct FanoutOutcome {
    FanoutMode mode = FanoutMode::all;
    // One entry per targeted driver, in registration order.
    std::vector<std::pair<DriverId, DriverOutcome>> results;
    std::optional<DriverId> winner;

    const DriverOutcome* find(const DriverId& id) const;
    // The winner's response in first mode.
    const AssistantResponse* winning_response() const;
    // First successful response in registration order.
    const AssistantResponse* first_success() const;
    std::vector<DriverError> errors() const;
};

struct ActivityCounters {
    std::uint64_t requests = 0;
    std::uint64_t successes = 0;
    std::uint64_t errors = 0;
    std::uint64_t cumulative_latency_ms = 0;

    friend bool operator==(const ActivityCounters&, const ActivityCounters&) = default;
};

// Process-wide registry through which every assistant request passes.
//
// call_back and fetch_all invoke all targeted drivers concurrently. call_back
// resolves as soon as one driver succeeds; remaining calls are cancelled and
// reported as DriverError{cancelled}. Workers that are still unwinding after
// call_back returns never touch the registry.
class DriverManager {
public:
    static DriverManager& instance();

    DriverManager(const DriverManager&) = delete;
    DriverManager& operator=(const DriverManager&) = delete;

    // Throws InvariantError on duplicate id or invalid config.
    DriverId register_driver(DriverConfig config);
    // Registers a pre-built driver (used for custom adapters).
    DriverId register_driver(std::shared_ptr<Driver> driver);

    // Drops every driver and its counters.
    void clear();

    std::vector<DriverConfig> list() const;
    const DriverConfig& lookup(const DriverId& id) const;
    std::shared_ptr<Driver> driver(const DriverId& id) const;
    bool contains(const DriverId& id) const;
    std::size_t size() const;

    ActivityCounters activity(const DriverId& id) const;

    FanoutOutcome call_back(const AssistantRequest& request, const TargetSelector& targets);
    FanoutOutcome fetch_all(const AssistantRequest& request, const TargetSelector& targets);

private:
    DriverManager() = default;

    struct Entry {
        std::shared_ptr<Driver> driver;
        ActivityCounters counters;
    };

    std::vector<std::shared_ptr<Driver>> resolve(const TargetSelector& targets) const;
    FanoutOutcome fan_out(const AssistantRequest& request, const TargetSelector& targets,
                          FanoutMode mode);
    void record(const FanoutOutcome& outcome);

    mutable std::shared_mutex registry_mutex_;
    mutable std::mutex counters_mutex_;
    std::vector<DriverId> order_;
    std::map<DriverId, Entry> entries_;
};

} // namespace multimind
