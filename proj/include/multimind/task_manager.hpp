#pragma once

#include "multimind/tasks.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace multimind {

enum class Strategy { sequential, parallel, iterative_refine };
std::string_view to_string(Strategy strategy) noexcept;
Strategy strategy_from_string(std::string_view text);

struct WorkflowSpec {
    std::string id;
    Strategy strategy = Strategy::sequential;
    std::vector<std::string> steps;  // sequential / parallel
    std::string generator;           // iterative_refine
    std::string verifier;            // iterative_refine
    int max_iterations = 3;

    void validate() const;
};

enum class WorkflowStatus { accepted, needs_manual_review, failed };
std::string_view to_string(WorkflowStatus status) noexcept;

struct TraceEntry {
    int iteration = 1;
    std::string task_id;
    std::variant<TaskResult, VerdictResult> result;
    Millis wall{0};
};

struct WorkflowResult {
    WorkflowStatus status = WorkflowStatus::failed;
    std::optional<std::string> final_output;
    std::optional<std::string> feedback;  // last verifier feedback (refine only)
    int iterations = 0;
    std::vector<TraceEntry> trace;
};

// Each step's selected output is bound to the next step's primary input. The
// first failing step ends the run with status failed.
WorkflowResult run_sequential(const std::vector<TaskSpec>& steps, const std::string& initial_input,
                              const Bindings& shared_bindings = {});

// Every step receives shared_input on its primary input and runs concurrently.
// Fails only if every step fails; otherwise final_output concatenates the
// successful outputs in step order, each under a "[task-id]" header line.
WorkflowResult run_parallel(const std::vector<TaskSpec>& steps, const std::string& shared_input,
                            const Bindings& shared_bindings = {});

// Generate, verify, and regenerate with the verifier's feedback bound to
// {{feedback}} until a PASS or max_iterations attempts. Exhausting the budget
// yields needs_manual_review with the last attempt and last feedback.
WorkflowResult run_iterative_refine(const TaskSpec& generator, const TaskSpec& verifier,
                                    const CodeSelection& input, int max_iterations = 3);

} // namespace multimind
