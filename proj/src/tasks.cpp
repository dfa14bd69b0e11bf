#include "multimind/tasks.hpp"

#include "builtin_prompts.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>

namespace multimind {

std::string_view to_string(TaskKind kind) noexcept {
    return kind == TaskKind::defined ? "defined" : "open_ended";
}

std::string_view to_string(InteractionMode mode) noexcept {
    return mode == InteractionMode::continue_after_first ? "continue_after_first"
                                                         : "continue_after_last";
}

std::string_view to_string(OutputFormat format) noexcept {
    switch (format) {
        case OutputFormat::text: return "text";
        case OutputFormat::comment_block: return "comment_block";
        case OutputFormat::code_block: return "code_block";
        case OutputFormat::verdict: return "verdict";
    }
    return "text";
}

std::string_view to_string(TaskStatus status) noexcept {
    return status == TaskStatus::ok ? "ok" : "failed";
}

TaskKind task_kind_from_string(std::string_view text) {
    if (text == "defined") return TaskKind::defined;
    if (text == "open_ended") return TaskKind::open_ended;
    throw InvariantError("unknown task kind '" + std::string(text) + "'");
}

InteractionMode interaction_mode_from_string(std::string_view text) {
    if (text == "continue_after_first") return InteractionMode::continue_after_first;
    if (text == "continue_after_last") return InteractionMode::continue_after_last;
    throw InvariantError("unknown interaction mode '" + std::string(text) + "'");
}

OutputFormat output_format_from_string(std::string_view text) {
    for (auto f : {OutputFormat::text, OutputFormat::comment_block, OutputFormat::code_block,
                   OutputFormat::verdict}) {
        if (to_string(f) == text) return f;
    }
    throw InvariantError("unknown output format '" + std::string(text) + "'");
}

void TaskSpec::validate() const {
    if (id.empty()) throw InvariantError("task spec has no id");
    if (kind == TaskKind::defined && prompt.empty()) {
        throw InvariantError("defined task '" + id + "' needs a prompt template");
    }
    if (temperature < 0.0 || temperature > 2.0) {
        throw InvariantError("task '" + id + "': temperature must be in [0, 2]");
    }
    if (primary_input.empty()) throw InvariantError("task '" + id + "': empty primary input");
}

void CodeSelection::validate() const {
    if (start_line < 1) throw InvariantError("selection start_line must be >= 1");
    if (start_line > end_line) throw InvariantError("selection start_line must be <= end_line");
    if (text.empty()) throw InvariantError("selection text must not be empty");
    if (language_id.empty()) throw InvariantError("selection language_id must not be empty");
}

// ---------------------------------------------------------------------------
// verdicts

namespace {

std::string_view ltrim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    return s;
}

std::string_view rtrim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view trim(std::string_view s) { return rtrim(ltrim(s)); }

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

// Matches "VERDICT:" [ \t]* ("PASS"|"FAIL") [ \t\r]*, returning the token.
std::optional<bool> match_verdict_line(std::string_view line) {
    constexpr std::string_view prefix = "verdict:";
    if (line.size() < prefix.size() || !iequals(line.substr(0, prefix.size()), prefix)) {
        return std::nullopt;
    }
    line.remove_prefix(prefix.size());
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) {
        line.remove_suffix(1);
    }
    if (iequals(line, "pass")) return true;
    if (iequals(line, "fail")) return false;
    return std::nullopt;
}

} // namespace

Verdict parse_verdict(std::string_view raw) noexcept {
    Verdict verdict;
    try {
        verdict.raw = std::string(raw);
        auto body = ltrim(raw);
        auto nl = body.find('\n');
        auto first = body.substr(0, nl);
        auto rest = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);

        auto token = match_verdict_line(first);
        if (token) {
            verdict.pass = *token;
            verdict.feedback = std::string(trim(rest));
        }
        if (!verdict.pass && verdict.feedback.empty()) {
            verdict.feedback = raw.empty() ? "verifier returned no feedback" : std::string(raw);
        }
    } catch (...) {
        verdict.pass = false;
        verdict.feedback = "verifier returned no feedback";
    }
    return verdict;
}

// ---------------------------------------------------------------------------
// output post-processing

std::string strip_code_fence(std::string_view reply) {
    auto open = reply.find("```");
    if (open == std::string_view::npos) return std::string(reply);
    auto body_start = reply.find('\n', open);
    if (body_start == std::string_view::npos) return std::string(reply);
    ++body_start;
    auto close = reply.find("```", body_start);
    auto body = reply.substr(body_start, close == std::string_view::npos
                                             ? std::string_view::npos
                                             : close - body_start);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
    return std::string(body);
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (true) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

std::string join_lines(const std::vector<std::string_view>& lines, std::size_t begin,
                       std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out.push_back('\n');
        auto line = lines[i];
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.append(line);
    }
    return out;
}

bool hash_comment_language(std::string_view lang) {
    static const std::set<std::string, std::less<>> langs{
        "python", "ruby", "shellscript", "bash", "sh", "perl", "r", "yaml", "toml", "powershell"};
    return langs.contains(lang);
}

// Removes every contiguous run of reply lines that reproduces the non-blank
// selection lines in order (blank reply lines inside the run are skipped).
std::vector<std::string_view> remove_echo_blocks(std::vector<std::string_view> lines,
                                                 std::string_view selection) {
    std::vector<std::string_view> wanted;
    for (auto l : split_lines(selection)) {
        if (!trim(l).empty()) wanted.push_back(trim(l));
    }
    if (wanted.empty()) return lines;

    bool removed = true;
    while (removed) {
        removed = false;
        for (std::size_t start = 0; start < lines.size() && !removed; ++start) {
            if (trim(lines[start]) != wanted[0]) continue;
            std::size_t i = start;
            std::size_t matched = 0;
            while (i < lines.size() && matched < wanted.size()) {
                auto t = trim(lines[i]);
                if (t.empty()) {
                    ++i;
                    continue;
                }
                if (t != wanted[matched]) break;
                ++matched;
                ++i;
            }
            if (matched == wanted.size()) {
                lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(start),
                            lines.begin() + static_cast<std::ptrdiff_t>(i));
                removed = true;
            }
        }
    }
    return lines;
}

// Returns [begin, end) of the first comment block, if any.
std::optional<std::pair<std::size_t, std::size_t>> find_comment_block(
    const std::vector<std::string_view>& lines, std::string_view lang) {
    const bool hash = hash_comment_language(lang);
    const bool python = lang == "python";
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto t = trim(lines[i]);
        if (python && (t.starts_with("\"\"\"") || t.starts_with("'''"))) {
            auto quote = t.substr(0, 3);
            if (t.size() >= 6 && t.substr(t.size() - 3) == quote) return {{i, i + 1}};
            for (std::size_t j = i + 1; j < lines.size(); ++j) {
                if (trim(lines[j]).find(quote) != std::string_view::npos) return {{i, j + 1}};
            }
            return {{i, lines.size()}};
        }
        if (hash && t.starts_with("#")) {
            std::size_t j = i;
            while (j < lines.size() && trim(lines[j]).starts_with("#")) ++j;
            return {{i, j}};
        }
        if (!hash && t.starts_with("/*")) {
            for (std::size_t j = i; j < lines.size(); ++j) {
                auto tj = trim(lines[j]);
                auto close = tj.find("*/", j == i ? 2 : 0);
                if (close != std::string_view::npos) return {{i, j + 1}};
            }
            return {{i, lines.size()}};
        }
        if (!hash && t.starts_with("//")) {
            std::size_t j = i;
            while (j < lines.size() && trim(lines[j]).starts_with("//")) ++j;
            return {{i, j}};
        }
    }
    return std::nullopt;
}

void erase_all(std::string& text, std::string_view needle) {
    if (needle.empty()) return;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle)) {
        text.erase(pos, needle.size());
    }
}

} // namespace

std::string extract_comment(std::string_view reply, std::string_view selection_text,
                            std::string_view language_id) {
    const std::string unfenced = strip_code_fence(reply);
    auto lines = remove_echo_blocks(split_lines(unfenced), selection_text);

    std::string out;
    if (auto block = find_comment_block(lines, language_id)) {
        out = join_lines(lines, block->first, block->second);
    } else {
        out = join_lines(lines, 0, lines.size());
    }

    erase_all(out, selection_text);
    auto trimmed_selection = trim(selection_text);
    if (!trimmed_selection.empty()) erase_all(out, trimmed_selection);

    // Trim surrounding blank lines but keep the comment's own indentation.
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ' || out.back() == '\t' ||
                            out.back() == '\r')) {
        out.pop_back();
    }
    std::size_t lead = 0;
    while (lead < out.size() && (out[lead] == '\n' || out[lead] == '\r')) ++lead;
    out.erase(0, lead);
    return out;
}

// ---------------------------------------------------------------------------
// task execution

namespace {

std::string next_correlation_id(std::string_view task_id) {
    static std::atomic<std::uint64_t> counter{0};
    return std::string(task_id) + "-" + std::to_string(++counter);
}

} // namespace

TaskResult run_task(const TaskSpec& spec, const Bindings& bindings,
                    const std::vector<Message>& history) {
    spec.validate();

    AssistantRequest request;
    if (spec.kind == TaskKind::open_ended && spec.prompt.empty()) {
        auto it = bindings.find(spec.primary_input);
        if (it == bindings.end() || it->second.empty()) {
            throw InvariantError("open task '" + spec.id + "' needs non-empty '" +
                                 spec.primary_input + "'");
        }
        request.messages = history;
        request.messages.push_back({Role::user, it->second});
    } else {
        auto rendered = render_prompt(spec.prompt, bindings);
        if (rendered.size() == 2) request.messages.push_back(std::move(rendered.front()));
        request.messages.insert(request.messages.end(), history.begin(), history.end());
        request.messages.push_back(std::move(rendered.back()));
    }
    request.temperature_override = spec.temperature;
    request.correlation_id = next_correlation_id(spec.id);

    TaskResult result;
    result.task_id = spec.id;
    auto& manager = DriverManager::instance();
    result.outcome = spec.mode == InteractionMode::continue_after_first
                         ? manager.call_back(request, spec.targets)
                         : manager.fetch_all(request, spec.targets);

    const AssistantResponse* chosen = spec.mode == InteractionMode::continue_after_first
                                          ? result.outcome.winning_response()
                                          : result.outcome.first_success();
    if (chosen == nullptr) {
        result.status = TaskStatus::failed;
        result.message = "no driver produced a response";
        return result;
    }

    AssistantResponse selected = *chosen;
    switch (spec.output) {
        case OutputFormat::code_block:
            selected.content = strip_code_fence(selected.content);
            break;
        case OutputFormat::comment_block: {
            auto code = bindings.find("code");
            auto lang = bindings.find("lang");
            selected.content =
                extract_comment(selected.content,
                                code == bindings.end() ? std::string_view{} : code->second,
                                lang == bindings.end() ? std::string_view{} : lang->second);
            break;
        }
        case OutputFormat::text:
        case OutputFormat::verdict:
            break;
    }
    if (selected.content.empty() && spec.output != OutputFormat::verdict &&
        spec.output != OutputFormat::text) {
        result.status = TaskStatus::failed;
        result.message = "reply was empty after post-processing";
        return result;
    }
    result.selected = std::move(selected);
    result.status = TaskStatus::ok;
    return result;
}

TaskResult run_comment_task(const TaskSpec& spec, const CodeSelection& selection,
                            std::string_view feedback) {
    selection.validate();
    return run_task(spec, Bindings{{"lang", selection.language_id},
                                   {"code", selection.text},
                                   {"feedback", std::string(feedback)}});
}

VerdictResult run_doc_quality_task(const TaskSpec& spec, const CodeSelection& selection,
                                   std::string_view comment) {
    if (comment.empty()) throw InvariantError("comment to verify must not be empty");
    selection.validate();
    VerdictResult result;
    result.task = run_task(spec, Bindings{{"lang", selection.language_id},
                                          {"code", selection.text},
                                          {"comment", std::string(comment)}});
    if (result.task.ok()) result.verdict = parse_verdict(result.task.selected->content);
    return result;
}

TaskResult run_code_generation_task(const TaskSpec& spec, std::string_view spec_text,
                                    std::string_view language_id) {
    if (spec_text.empty()) throw InvariantError("code generation needs a non-empty spec text");
    return run_task(spec, Bindings{{"spec", std::string(spec_text)},
                                   {"lang", std::string(language_id)}});
}

TaskResult run_doc_review_task(const TaskSpec& spec, const CodeSelection& selection,
                               std::string_view existing_comment, std::string_view feedback) {
    if (existing_comment.empty()) throw InvariantError("existing comment must not be empty");
    selection.validate();
    return run_task(spec, Bindings{{"lang", selection.language_id},
                                   {"code", selection.text},
                                   {"current_doc", std::string(existing_comment)},
                                   {"feedback", std::string(feedback)}});
}

FanoutOutcome run_open_task(std::string_view user_text, const std::vector<Message>& history,
                            const TargetSelector& targets) {
    if (user_text.empty()) throw InvariantError("chat message must not be empty");
    AssistantRequest request;
    request.messages = history;
    request.messages.push_back({Role::user, std::string(user_text)});
    request.correlation_id = next_correlation_id(task_ids::chat);
    return DriverManager::instance().fetch_all(request, targets);
}

// ---------------------------------------------------------------------------
// catalog

std::string_view builtin_prompt_text(std::string_view task_id) {
    if (task_id == task_ids::comment) return builtin_prompts::comment;
    if (task_id == task_ids::doc_quality) return builtin_prompts::doc_quality;
    if (task_id == task_ids::generate) return builtin_prompts::generate;
    if (task_id == task_ids::doc_review) return builtin_prompts::doc_review;
    throw NotFoundError("no shipped prompt for task '" + std::string(task_id) + "'");
}

TaskCatalog TaskCatalog::builtin() {
    TaskCatalog catalog;
    auto defined = [](std::string_view id, double temperature, OutputFormat output,
                      std::string primary) {
        TaskSpec spec;
        spec.id = std::string(id);
        spec.kind = TaskKind::defined;
        spec.mode = InteractionMode::continue_after_first;
        spec.prompt = PromptTemplate::parse(builtin_prompt_text(id));
        spec.temperature = temperature;
        spec.output = output;
        spec.primary_input = std::move(primary);
        return spec;
    };
    catalog.put(defined(task_ids::comment, 0.2, OutputFormat::comment_block, "code"));
    catalog.put(defined(task_ids::doc_quality, 0.0, OutputFormat::verdict, "comment"));
    catalog.put(defined(task_ids::generate, 0.2, OutputFormat::code_block, "spec"));
    catalog.put(defined(task_ids::doc_review, 0.2, OutputFormat::comment_block, "current_doc"));

    TaskSpec chat;
    chat.id = std::string(task_ids::chat);
    chat.kind = TaskKind::open_ended;
    chat.mode = InteractionMode::continue_after_last;
    chat.temperature = 0.2;
    chat.output = OutputFormat::text;
    chat.primary_input = "input";
    catalog.put(std::move(chat));
    return catalog;
}

void TaskCatalog::put(TaskSpec spec) {
    spec.validate();
    auto id = spec.id;
    specs_.insert_or_assign(std::move(id), std::move(spec));
}

const TaskSpec& TaskCatalog::get(std::string_view id) const {
    auto it = specs_.find(id);
    if (it == specs_.end()) throw NotFoundError("unknown task '" + std::string(id) + "'");
    return it->second;
}

bool TaskCatalog::contains(std::string_view id) const { return specs_.find(id) != specs_.end(); }

std::vector<std::string> TaskCatalog::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, spec] : specs_) out.push_back(id);
    return out;
}

} // namespace multimind
