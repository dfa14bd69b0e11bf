#pragma once

#include "multimind/driver.hpp"
#include "multimind/task_manager.hpp"
#include "multimind/tasks.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace multimind {

// Configuration file problems: unreadable file, JSON syntax (with line and
// column) or a violated invariant.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int default_listen_port = 7640;
inline constexpr std::string_view default_comment_workflow = "document";

struct EngineConfig {
    std::vector<DriverConfig> drivers;
    TaskCatalog tasks = TaskCatalog::builtin();
    std::map<std::string, WorkflowSpec, std::less<>> workflows;
    int listen_port = default_listen_port;
    std::optional<std::string> auth_token;
    std::optional<std::filesystem::path> journal_path;

    // Checks every cross-reference; throws ConfigError.
    void validate() const;
};

// Parses a multimind.json document. base_dir resolves relative paths
// (prompts_dir, template_file, journal_path).
EngineConfig parse_config(std::string_view text,
                          const std::filesystem::path& base_dir = std::filesystem::path{});
EngineConfig load_config(const std::filesystem::path& path);

// --config value, then MULTIMIND_CONFIG, then ./multimind.json.
std::filesystem::path discover_config(const std::optional<std::string>& flag);

} // namespace multimind
