#include "multimind/driver.hpp"

#include <condition_variable>

namespace multimind {

ScriptedDriver::ScriptedDriver(DriverConfig config) : Driver(std::move(config)) {
    if (!this->config().script) throw InvariantError("scripted driver requires a script");
    this->config().script->validate();
}

DriverOutcome ScriptedDriver::send(const AssistantRequest& request, std::stop_token stop) {
    const auto start = std::chrono::steady_clock::now();
    request.validate();

    const ScriptedBehavior& script = *config().script;
    std::optional<ScriptedStep> step;
    {
        std::lock_guard lock(mutex_);
        log_.push_back(request);
        if (cursor_ < script.steps.size()) {
            step = script.steps[cursor_];
        } else if (script.on_exhausted == ExhaustionPolicy::repeat_last) {
            step = script.steps.back();
        }
        ++cursor_;
    }
    if (!step) {
        return DriverError::make(id(), DriverErrorKind::script_exhausted,
                                 "script exhausted after " +
                                     std::to_string(script.steps.size()) + " steps");
    }

    std::mutex wait_mutex;
    std::condition_variable_any cv;
    std::unique_lock wait_lock(wait_mutex);
    cv.wait_for(wait_lock, stop, step->delay, [] { return false; });
    if (stop.stop_requested()) {
        return DriverError::make(id(), DriverErrorKind::cancelled, "request cancelled");
    }

    const auto elapsed =
        std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - start);
    if (const auto* kind = std::get_if<DriverErrorKind>(&step->outcome)) {
        return DriverError::make(id(), *kind, "scripted " + std::string(to_string(*kind)) + " error");
    }
    AssistantResponse response;
    response.driver_id = id();
    response.content = std::get<std::string>(step->outcome);
    response.latency = elapsed;
    response.finish_reason = response.content.empty() ? FinishReason::other : step->finish_reason;
    return response;
}

std::vector<AssistantRequest> ScriptedDriver::request_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t ScriptedDriver::calls() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

} // namespace multimind
