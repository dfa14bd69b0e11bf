#pragma once

#include "multimind/config.hpp"
#include "multimind/driver_manager.hpp"
#include "multimind/task_manager.hpp"
#include "multimind/tasks.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace multimind {

struct CommentActionRequest {
    CodeSelection selection;
    std::optional<std::string> workflow;  // default: "document"
    bool apply = false;
    // Buffer content; when absent the file at selection.file_path is read.
    std::optional<std::string> file_content;
    std::optional<int> max_iterations;
};

struct CommentActionResult {
    WorkflowStatus status = WorkflowStatus::failed;
    std::optional<std::string> comment;
    std::optional<std::string> feedback;
    std::optional<std::string> annotated_file;
    int iterations = 0;
    std::vector<DriverError> errors;
    WorkflowResult workflow;
};

// Returns file_content with comment inserted as whole lines directly above
// the 1-based start_line, re-indented to that line's leading whitespace.
// Every original line is preserved byte for byte.
std::string insert_comment(std::string_view file_content, int start_line,
                           std::string_view comment);

// Lines [start_line, end_line] of content joined with '\n', without the final
// terminator. Throws InvariantError when the range is outside the content.
std::string extract_lines(std::string_view content, int start_line, int end_line);

// The documentation comment directly above start_line, if any.
std::optional<std::string> comment_above(std::string_view content, int start_line,
                                         std::string_view language_id);

struct ChatTurn {
    std::string user_text;
    FanoutOutcome candidates;
    std::optional<DriverId> selected_driver;
    std::string timestamp;
};

struct ChatSession {
    std::string session_id;
    std::string created_at;
    std::vector<ChatTurn> turns;

    // User texts plus selected assistant replies of the most recent
    // max_turns turns, oldest first.
    std::vector<Message> history(std::size_t max_turns = 20) const;
};

inline constexpr std::size_t max_history_turns = 20;

// In-memory chat sessions, optionally journaled as line-delimited JSON.
// Turns within one session are serialized.
class SessionStore {
public:
    explicit SessionStore(std::optional<std::filesystem::path> journal = std::nullopt);

    std::string create();
    // Returns the index of the new turn.
    std::size_t post_message(const std::string& session_id, const std::string& user_text,
                             const TargetSelector& targets);
    ChatSession select(const std::string& session_id, std::size_t turn_index,
                       const DriverId& driver_id);
    ChatSession get(const std::string& session_id) const;

private:
    struct Slot {
        std::mutex mutex;
        ChatSession session;
    };

    std::shared_ptr<Slot> slot(const std::string& session_id) const;
    void append(const nlohmann::json& record);
    void replay();

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::optional<std::filesystem::path> journal_path_;
    std::mutex journal_mutex_;
};

// Everything behind the gateway: the configured drivers (registered in the
// process-wide DriverManager), tasks, workflows and chat sessions.
class Engine {
public:
    explicit Engine(EngineConfig config);

    const EngineConfig& config() const noexcept { return config_; }
    SessionStore& sessions() noexcept { return sessions_; }

    CommentActionResult handle_comment_action(const CommentActionRequest& request);

    // Runs a catalog task; the primary input binding must be non-empty.
    TaskResult run_task(const std::string& task_id, const Bindings& bindings,
                        const std::vector<Message>& history = {});

    // input feeds the first step (sequential), every step (parallel) or is
    // the code under documentation (iterative_refine, whole input selected).
    WorkflowResult run_workflow(const std::string& workflow_id, const std::string& input,
                                const Bindings& bindings = {},
                                std::optional<CodeSelection> selection = std::nullopt,
                                std::optional<int> max_iterations = std::nullopt);

private:
    EngineConfig config_;
    SessionStore sessions_;
};

} // namespace multimind
