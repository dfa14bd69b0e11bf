#pragma once

#include "multimind/driver_manager.hpp"
#include "multimind/prompt.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace multimind {

enum class TaskKind { defined, open_ended };
enum class InteractionMode { continue_after_first, continue_after_last };

// How a task turns the selected reply into its output.
enum class OutputFormat {
    text,           // passed through unchanged
    comment_block,  // documentation comment only, code echo removed
    code_block,     // contents of the first fenced block, if any
    verdict,        // raw reply, interpreted by parse_verdict
};

std::string_view to_string(TaskKind kind) noexcept;
std::string_view to_string(InteractionMode mode) noexcept;
std::string_view to_string(OutputFormat format) noexcept;
TaskKind task_kind_from_string(std::string_view text);
InteractionMode interaction_mode_from_string(std::string_view text);
OutputFormat output_format_from_string(std::string_view text);

namespace task_ids {
inline constexpr std::string_view comment = "comment";
inline constexpr std::string_view doc_quality = "doc_quality";
inline constexpr std::string_view generate = "generate";
inline constexpr std::string_view doc_review = "doc_review";
inline constexpr std::string_view chat = "chat";
} // namespace task_ids

struct TaskSpec {
    std::string id;
    TaskKind kind = TaskKind::defined;
    InteractionMode mode = InteractionMode::continue_after_first;
    TargetSelector targets = TargetSelector::any();
    PromptTemplate prompt;
    double temperature = 0.2;
    OutputFormat output = OutputFormat::text;
    // Binding that receives the previous step's output in sequential runs.
    std::string primary_input = "input";

    void validate() const;
};

struct CodeSelection {
    std::string file_path;
    std::string language_id;
    int start_line = 1;  // 1-based, inclusive
    int end_line = 1;
    std::string text;

    void validate() const;
};

struct Verdict {
    bool pass = false;
    std::string feedback;
    std::string raw;
};

// First line must be "VERDICT: PASS" or "VERDICT: FAIL" (token case-insensitive,
// leading whitespace ignored). Anything else is a conservative FAIL whose
// feedback is the raw reply. Never throws.
Verdict parse_verdict(std::string_view raw) noexcept;

enum class TaskStatus { ok, failed };
std::string_view to_string(TaskStatus status) noexcept;

struct TaskResult {
    std::string task_id;
    FanoutOutcome outcome;
    std::optional<AssistantResponse> selected;
    TaskStatus status = TaskStatus::failed;
    std::string message;  // why the task failed, empty on success

    bool ok() const noexcept { return status == TaskStatus::ok; }
    bool has_driver_errors() const { return !outcome.errors().empty(); }
};

struct VerdictResult {
    TaskResult task;
    std::optional<Verdict> verdict;  // absent when the fan-out itself failed
};

// Renders the task's prompt, dispatches per its interaction mode and applies
// its output format to the selected reply. history is placed between the
// system prompt and the rendered user message.
TaskResult run_task(const TaskSpec& spec, const Bindings& bindings,
                    const std::vector<Message>& history = {});

TaskResult run_comment_task(const TaskSpec& spec, const CodeSelection& selection,
                            std::string_view feedback = {});
VerdictResult run_doc_quality_task(const TaskSpec& spec, const CodeSelection& selection,
                                   std::string_view comment);
TaskResult run_code_generation_task(const TaskSpec& spec, std::string_view spec_text,
                                    std::string_view language_id);
TaskResult run_doc_review_task(const TaskSpec& spec, const CodeSelection& selection,
                               std::string_view existing_comment,
                               std::string_view feedback = {});
FanoutOutcome run_open_task(std::string_view user_text, const std::vector<Message>& history,
                            const TargetSelector& targets);

std::string strip_code_fence(std::string_view reply);
// Reduces a reply to the documentation comment it carries. The result never
// contains selection_text verbatim.
std::string extract_comment(std::string_view reply, std::string_view selection_text,
                            std::string_view language_id);

// Built-in task definitions plus user overrides, keyed by task id.
class TaskCatalog {
public:
    // comment, doc_quality, generate, doc_review and chat with shipped prompts.
    static TaskCatalog builtin();

    void put(TaskSpec spec);
    const TaskSpec& get(std::string_view id) const;
    bool contains(std::string_view id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, TaskSpec, std::less<>> specs_;
};

// Shipped prompt text by task id (comment, doc_quality, generate, doc_review).
std::string_view builtin_prompt_text(std::string_view task_id);

} // namespace multimind
