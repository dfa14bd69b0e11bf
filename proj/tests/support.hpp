#pragma once

#include "multimind/driver.hpp"
#include "multimind/driver_manager.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace multimind::test {

inline const std::filesystem::path source_dir{MULTIMIND_SOURCE_DIR};

inline ScriptedStep reply(int delay_ms, std::string content) {
    return ScriptedStep{Millis{delay_ms}, std::move(content), FinishReason::stop};
}

inline ScriptedStep fail(int delay_ms, DriverErrorKind kind) {
    return ScriptedStep{Millis{delay_ms}, kind, FinishReason::stop};
}

inline DriverConfig scripted(const std::string& id, std::vector<ScriptedStep> steps,
                             ExhaustionPolicy policy = ExhaustionPolicy::repeat_last) {
    DriverConfig c;
    c.id = DriverId(id);
    c.provider = ProviderKind::scripted;
    c.script = ScriptedBehavior{std::move(steps), policy};
    return c;
}

inline AssistantRequest user_request(std::string text) {
    AssistantRequest r;
    r.messages.push_back({Role::user, std::move(text)});
    r.correlation_id = "test";
    return r;
}

// Clears the process-wide registry and registers the given drivers.
inline void reset_registry(const std::vector<DriverConfig>& drivers = {}) {
    auto& manager = DriverManager::instance();
    manager.clear();
    for (const auto& d : drivers) manager.register_driver(d);
}

inline std::shared_ptr<ScriptedDriver> scripted_driver(const std::string& id) {
    return std::dynamic_pointer_cast<ScriptedDriver>(DriverManager::instance().driver(DriverId(id)));
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

template <typename F>
long long wall_ms(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start)
        .count();
}

// Sets an environment variable for the lifetime of the object.
class ScopedEnv {
public:
    ScopedEnv(std::string name, const std::string& value) : name_(std::move(name)) {
        if (const char* old = std::getenv(name_.c_str())) previous_ = old;
        setenv(name_.c_str(), value.c_str(), 1);
    }
    ~ScopedEnv() {
        if (previous_) {
            setenv(name_.c_str(), previous_->c_str(), 1);
        } else {
            unsetenv(name_.c_str());
        }
    }
    ScopedEnv(const ScopedEnv&) = delete;
    ScopedEnv& operator=(const ScopedEnv&) = delete;

private:
    std::string name_;
    std::optional<std::string> previous_;
};

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("multimind-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace multimind::test
