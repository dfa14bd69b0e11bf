#include "multimind/task_manager.hpp"

#include <future>

namespace multimind {

namespace {

using Clock = std::chrono::steady_clock;

Millis since(Clock::time_point start) {
    return std::chrono::duration_cast<Millis>(Clock::now() - start);
}

TaskResult run_step(const TaskSpec& spec, const std::string& input, Bindings bindings) {
    bindings.insert_or_assign(spec.primary_input, input);
    bindings.try_emplace("feedback", "");
    try {
        return run_task(spec, bindings);
    } catch (const std::exception& e) {
        TaskResult failed;
        failed.task_id = spec.id;
        failed.status = TaskStatus::failed;
        failed.message = e.what();
        return failed;
    }
}

} // namespace

std::string_view to_string(Strategy strategy) noexcept {
    switch (strategy) {
        case Strategy::sequential: return "sequential";
        case Strategy::parallel: return "parallel";
        case Strategy::iterative_refine: return "iterative_refine";
    }
    return "sequential";
}

Strategy strategy_from_string(std::string_view text) {
    for (auto s : {Strategy::sequential, Strategy::parallel, Strategy::iterative_refine}) {
        if (to_string(s) == text) return s;
    }
    throw InvariantError("unknown workflow strategy '" + std::string(text) + "'");
}

std::string_view to_string(WorkflowStatus status) noexcept {
    switch (status) {
        case WorkflowStatus::accepted: return "accepted";
        case WorkflowStatus::needs_manual_review: return "needs_manual_review";
        case WorkflowStatus::failed: return "failed";
    }
    return "failed";
}

void WorkflowSpec::validate() const {
    if (id.empty()) throw InvariantError("workflow has no id");
    if (strategy == Strategy::iterative_refine) {
        if (generator.empty() || verifier.empty()) {
            throw InvariantError("workflow '" + id + "' needs generator and verifier tasks");
        }
        if (generator == verifier) {
            throw InvariantError("workflow '" + id + "': generator and verifier must differ");
        }
        if (max_iterations < 1) {
            throw InvariantError("workflow '" + id + "': max_iterations must be >= 1");
        }
    } else if (steps.empty()) {
        throw InvariantError("workflow '" + id + "' needs at least one step");
    }
}

WorkflowResult run_sequential(const std::vector<TaskSpec>& steps, const std::string& initial_input,
                              const Bindings& shared_bindings) {
    if (steps.empty()) throw InvariantError("sequential workflow needs at least one step");
    WorkflowResult result;
    std::string input = initial_input;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto start = Clock::now();
        auto step = run_step(steps[i], input, shared_bindings);
        const bool ok = step.ok();
        if (ok) input = step.selected->content;
        result.trace.push_back({static_cast<int>(i) + 1, steps[i].id, std::move(step), since(start)});
        result.iterations = static_cast<int>(i) + 1;
        if (!ok) {
            result.status = WorkflowStatus::failed;
            return result;
        }
    }
    result.status = WorkflowStatus::accepted;
    result.final_output = std::move(input);
    return result;
}

WorkflowResult run_parallel(const std::vector<TaskSpec>& steps, const std::string& shared_input,
                            const Bindings& shared_bindings) {
    if (steps.empty()) throw InvariantError("parallel workflow needs at least one step");
    std::vector<std::future<std::pair<TaskResult, Millis>>> running;
    running.reserve(steps.size());
    for (const auto& spec : steps) {
        running.push_back(std::async(std::launch::async, [&spec, &shared_input, &shared_bindings] {
            const auto start = Clock::now();
            auto step = run_step(spec, shared_input, shared_bindings);
            return std::pair{std::move(step), since(start)};
        }));
    }

    WorkflowResult result;
    result.iterations = 1;
    std::string aggregate;
    bool any_ok = false;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto [step, wall] = running[i].get();
        if (step.ok()) {
            if (any_ok) aggregate += "\n\n";
            aggregate += "[" + steps[i].id + "]\n" + step.selected->content;
            any_ok = true;
        }
        result.trace.push_back({1, steps[i].id, std::move(step), wall});
    }
    result.status = any_ok ? WorkflowStatus::accepted : WorkflowStatus::failed;
    if (any_ok) result.final_output = std::move(aggregate);
    return result;
}

WorkflowResult run_iterative_refine(const TaskSpec& generator, const TaskSpec& verifier,
                                    const CodeSelection& input, int max_iterations) {
    if (max_iterations < 1) throw InvariantError("max_iterations must be >= 1");
    input.validate();

    WorkflowResult result;
    std::string feedback;
    for (int iteration = 1; iteration <= max_iterations; ++iteration) {
        result.iterations = iteration;

        auto start = Clock::now();
        auto generated = run_comment_task(generator, input, feedback);
        const bool generated_ok = generated.ok();
        std::string attempt = generated_ok ? generated.selected->content : std::string{};
        result.trace.push_back({iteration, generator.id, std::move(generated), since(start)});
        if (!generated_ok) {
            result.status = WorkflowStatus::failed;
            return result;
        }
        result.final_output = attempt;

        start = Clock::now();
        auto checked = run_doc_quality_task(verifier, input, attempt);
        auto verdict = checked.verdict;
        result.trace.push_back({iteration, verifier.id, std::move(checked), since(start)});
        if (!verdict) {
            result.status = WorkflowStatus::failed;
            result.final_output.reset();
            return result;
        }
        feedback = verdict->feedback;
        result.feedback = feedback;
        if (verdict->pass) {
            result.status = WorkflowStatus::accepted;
            return result;
        }
    }
    result.status = WorkflowStatus::needs_manual_review;
    return result;
}

} // namespace multimind
