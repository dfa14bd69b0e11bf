#include "multimind/driver.hpp"

#include <httplib.h>

#include <atomic>
#include <condition_variable>
#include <thread>

namespace multimind {

namespace {

using Clock = std::chrono::steady_clock;

// Replaces every occurrence of secret in text.
std::string redact(std::string text, const std::string& secret) {
    if (secret.empty()) return text;
    for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos)) {
        text.replace(pos, secret.size(), "[redacted]");
    }
    return text;
}

bool interruptible_sleep(std::stop_token stop, Millis duration) {
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_for(lock, stop, duration, [] { return false; });
    return !stop.stop_requested();
}

} // namespace

HttpDriver::HttpDriver(DriverConfig config)
    : Driver(std::move(config)), endpoint_(parse_endpoint(this->config().endpoint)) {}

DriverOutcome HttpDriver::attempt(const WirePayload& payload, std::stop_token stop, Millis budget) {
    const auto start = Clock::now();

    httplib::Client client(endpoint_.origin());
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(budget);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(budget - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    if (endpoint_.scheme == "https") client.enable_server_certificate_verification(true);

    std::atomic<bool> deadline_hit{false};
    std::stop_callback on_cancel(stop, [&client] { client.stop(); });
    std::jthread watchdog([&](std::stop_token done) {
        if (interruptible_sleep(done, budget)) {
            deadline_hit = true;
            client.stop();
        }
    });

    httplib::Request req;
    req.method = payload.method;
    req.path = payload.path;
    for (const auto& [name, value] : payload.headers) req.set_header(name, value);
    req.body = payload.body;
    req.progress = [&](uint64_t, uint64_t) { return !stop.stop_requested() && !deadline_hit; };

    httplib::Result result = stop.stop_requested()
                                 ? httplib::Result{nullptr, httplib::Error::Canceled}
                                 : client.send(req);
    watchdog.request_stop();
    watchdog.join();

    const auto elapsed = std::chrono::duration_cast<Millis>(Clock::now() - start);
    if (stop.stop_requested()) {
        return DriverError::make(id(), DriverErrorKind::cancelled, "request cancelled");
    }
    if (deadline_hit) {
        return DriverError::make(id(), DriverErrorKind::timeout,
                                 "no reply within " + std::to_string(budget.count()) + " ms");
    }
    if (!result) {
        const auto err = result.error();
        if (err == httplib::Error::ConnectionTimeout) {
            return DriverError::make(id(), DriverErrorKind::timeout, "connection timed out");
        }
        return DriverError::make(id(), DriverErrorKind::network,
                                 "HTTP exchange with " + endpoint_.host + " failed: " +
                                     httplib::to_string(err));
    }
    return parse_response(config(), result->status, result->body, elapsed);
}

DriverOutcome HttpDriver::send(const AssistantRequest& request, std::stop_token stop) {
    const auto start = Clock::now();
    auto formatted = format_request(config(), request);
    if (auto* err = std::get_if<DriverError>(&formatted)) return *err;
    const auto& payload = std::get<WirePayload>(formatted);

    std::string secret;
    for (const auto& [name, value] : payload.headers) {
        if (name == "Authorization") secret = value.substr(value.find(' ') + 1);
        if (name == "x-goog-api-key") secret = value;
    }

    const auto deadline = start + config().timeout;
    auto remaining = [&] {
        return std::chrono::duration_cast<Millis>(deadline - Clock::now());
    };

    DriverOutcome outcome = attempt(payload, stop, config().timeout);
    if (auto* err = std::get_if<DriverError>(&outcome);
        err && err->retryable && err->kind != DriverErrorKind::timeout) {
        if (remaining() <= retry_backoff) {
            outcome = DriverError::make(id(), DriverErrorKind::timeout,
                                        "deadline reached before retry");
        } else if (!interruptible_sleep(stop, retry_backoff)) {
            outcome = DriverError::make(id(), DriverErrorKind::cancelled, "request cancelled");
        } else {
            outcome = attempt(payload, stop, remaining());
        }
    }

    if (auto* response = std::get_if<AssistantResponse>(&outcome)) {
        response->latency = std::chrono::duration_cast<Millis>(Clock::now() - start);
    } else {
        auto& err = std::get<DriverError>(outcome);
        err.message = redact(std::move(err.message), secret);
    }
    return outcome;
}

} // namespace multimind
