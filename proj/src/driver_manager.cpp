#include "multimind/driver_manager.hpp"

#include <algorithm>
#include <condition_variable>
#include <thread>

namespace multimind {

TargetSelector TargetSelector::of(std::vector<DriverId> ids) {
    if (ids.empty()) throw InvariantError("explicit target list must not be empty");
    TargetSelector sel;
    sel.ids_ = std::move(ids);
    return sel;
}

const DriverOutcome* FanoutOutcome::find(const DriverId& id) const {
    for (const auto& [driver, outcome] : results) {
        if (driver == id) return &outcome;
    }
    return nullptr;
}

const AssistantResponse* FanoutOutcome::winning_response() const {
    if (!winner) return nullptr;
    const auto* outcome = find(*winner);
    return outcome ? std::get_if<AssistantResponse>(outcome) : nullptr;
}

const AssistantResponse* FanoutOutcome::first_success() const {
    for (const auto& [driver, outcome] : results) {
        if (const auto* r = std::get_if<AssistantResponse>(&outcome)) return r;
    }
    return nullptr;
}

std::vector<DriverError> FanoutOutcome::errors() const {
    std::vector<DriverError> out;
    for (const auto& [driver, outcome] : results) {
        if (const auto* e = std::get_if<DriverError>(&outcome)) out.push_back(*e);
    }
    return out;
}

DriverManager& DriverManager::instance() {
    static DriverManager manager;
    return manager;
}

DriverId DriverManager::register_driver(DriverConfig config) {
    return register_driver(make_driver(std::move(config)));
}

DriverId DriverManager::register_driver(std::shared_ptr<Driver> driver) {
    if (!driver) throw InvariantError("cannot register a null driver");
    std::unique_lock lock(registry_mutex_);
    const DriverId id = driver->id();
    if (entries_.contains(id)) {
        throw InvariantError("duplicate driver id '" + id.str() + "'");
    }
    entries_.emplace(id, Entry{std::move(driver), {}});
    order_.push_back(id);
    return id;
}

void DriverManager::clear() {
    std::unique_lock lock(registry_mutex_);
    std::lock_guard counters(counters_mutex_);
    entries_.clear();
    order_.clear();
}

std::vector<DriverConfig> DriverManager::list() const {
    std::shared_lock lock(registry_mutex_);
    std::vector<DriverConfig> out;
    out.reserve(order_.size());
    for (const auto& id : order_) out.push_back(entries_.at(id).driver->config());
    return out;
}

const DriverConfig& DriverManager::lookup(const DriverId& id) const {
    return driver(id)->config();
}

std::shared_ptr<Driver> DriverManager::driver(const DriverId& id) const {
    std::shared_lock lock(registry_mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) throw NotFoundError("unknown driver '" + id.str() + "'");
    return it->second.driver;
}

bool DriverManager::contains(const DriverId& id) const {
    std::shared_lock lock(registry_mutex_);
    return entries_.contains(id);
}

std::size_t DriverManager::size() const {
    std::shared_lock lock(registry_mutex_);
    return order_.size();
}

ActivityCounters DriverManager::activity(const DriverId& id) const {
    std::shared_lock lock(registry_mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) throw NotFoundError("unknown driver '" + id.str() + "'");
    std::lock_guard counters(counters_mutex_);
    return it->second.counters;
}

// Caller holds registry_mutex_ (shared).
std::vector<std::shared_ptr<Driver>> DriverManager::resolve(const TargetSelector& targets) const {
    std::vector<std::shared_ptr<Driver>> out;
    if (targets.is_any()) {
        for (const auto& id : order_) out.push_back(entries_.at(id).driver);
    } else {
        for (const auto& id : targets.ids()) {
            if (!entries_.contains(id)) {
                throw NotFoundError("target driver '" + id.str() + "' is not registered");
            }
        }
        // Registration order, duplicates collapsed.
        for (const auto& id : order_) {
            if (std::find(targets.ids().begin(), targets.ids().end(), id) != targets.ids().end()) {
                out.push_back(entries_.at(id).driver);
            }
        }
    }
    if (out.empty()) throw InvariantError("target selection resolved to no drivers");
    return out;
}

namespace {

struct FanoutState {
    std::mutex mutex;
    std::condition_variable cv;
    std::vector<std::optional<DriverOutcome>> results;
    std::size_t completed = 0;
    std::optional<std::size_t> winner;
    std::stop_source stop;
};

} // namespace

FanoutOutcome DriverManager::fan_out(const AssistantRequest& request,
                                     const TargetSelector& targets, FanoutMode mode) {
    request.validate();
    std::shared_lock registry_lock(registry_mutex_);
    const auto drivers = resolve(targets);

    auto state = std::make_shared<FanoutState>();
    state->results.resize(drivers.size());
    auto shared_request = std::make_shared<const AssistantRequest>(request);

    for (std::size_t i = 0; i < drivers.size(); ++i) {
        std::thread([state, shared_request, driver = drivers[i], i, mode] {
            DriverOutcome outcome = [&]() -> DriverOutcome {
                try {
                    return driver->send(*shared_request, state->stop.get_token());
                } catch (const std::exception& e) {
                    return DriverError::make(driver->id(), DriverErrorKind::network,
                                             std::string("driver raised: ") + e.what());
                }
            }();
            std::lock_guard lock(state->mutex);
            if (mode == FanoutMode::first && !state->winner && succeeded(outcome)) {
                state->winner = i;
            }
            state->results[i] = std::move(outcome);
            ++state->completed;
            state->cv.notify_all();
        }).detach();
    }

    FanoutOutcome outcome;
    outcome.mode = mode;
    {
        std::unique_lock lock(state->mutex);
        state->cv.wait(lock, [&] {
            return state->completed == drivers.size() ||
                   (mode == FanoutMode::first && state->winner.has_value());
        });
        if (mode == FanoutMode::first && state->winner) {
            state->stop.request_stop();
            outcome.winner = drivers[*state->winner]->id();
        }
        for (std::size_t i = 0; i < drivers.size(); ++i) {
            const auto& id = drivers[i]->id();
            auto& slot = state->results[i];
            bool keep = slot.has_value();
            if (keep && outcome.winner && i != *state->winner && succeeded(*slot)) {
                keep = false;  // late success after the race was decided
            }
            if (keep) {
                outcome.results.emplace_back(id, *slot);
            } else {
                outcome.results.emplace_back(
                    id, DriverError::make(id, DriverErrorKind::cancelled,
                                          "cancelled after another driver answered first"));
            }
        }
    }
    record(outcome);
    return outcome;
}

void DriverManager::record(const FanoutOutcome& outcome) {
    std::lock_guard lock(counters_mutex_);
    for (const auto& [id, result] : outcome.results) {
        auto it = entries_.find(id);
        if (it == entries_.end()) continue;
        auto& c = it->second.counters;
        ++c.requests;
        if (const auto* r = std::get_if<AssistantResponse>(&result)) {
            ++c.successes;
            c.cumulative_latency_ms += static_cast<std::uint64_t>(r->latency.count());
        } else {
            ++c.errors;
        }
    }
}

FanoutOutcome DriverManager::call_back(const AssistantRequest& request,
                                       const TargetSelector& targets) {
    return fan_out(request, targets, FanoutMode::first);
}

FanoutOutcome DriverManager::fetch_all(const AssistantRequest& request,
                                       const TargetSelector& targets) {
    return fan_out(request, targets, FanoutMode::all);
}

} // namespace multimind
