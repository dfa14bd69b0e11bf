#include "multimind/engine.hpp"

#include "multimind/codec.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <random>
#include <sstream>

namespace multimind {

namespace {

struct Line {
    std::string_view text;        // without terminator
    std::string_view terminator;  // "\n", "\r\n" or empty for the last line
};

std::vector<Line> split_with_terminators(std::string_view content) {
    std::vector<Line> lines;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back({content.substr(pos), {}});
            break;
        }
        std::size_t end = nl;
        if (end > pos && content[end - 1] == '\r') --end;
        lines.push_back({content.substr(pos, end - pos), content.substr(end, nl + 1 - end)});
        pos = nl + 1;
    }
    return lines;
}

std::string_view leading_whitespace(std::string_view line) {
    std::size_t n = 0;
    while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) ++n;
    return line.substr(0, n);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string random_session_id() {
    static std::mutex mutex;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mutex);
    std::ostringstream out;
    out << std::hex << rng() << rng();
    return out.str();
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvariantError("cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<DriverError> collect_errors(const WorkflowResult& result) {
    std::vector<DriverError> errors;
    for (const auto& entry : result.trace) {
        const TaskResult& task = std::visit(
            [](const auto& r) -> const TaskResult& {
                if constexpr (std::is_same_v<std::decay_t<decltype(r)>, TaskResult>) {
                    return r;
                } else {
                    return r.task;
                }
            },
            entry.result);
        if (task.ok()) continue;
        for (auto& e : task.outcome.errors()) errors.push_back(std::move(e));
    }
    return errors;
}

} // namespace

// ---------------------------------------------------------------------------
// file helpers

std::string insert_comment(std::string_view file_content, int start_line,
                           std::string_view comment) {
    auto lines = split_with_terminators(file_content);
    if (start_line < 1 || static_cast<std::size_t>(start_line) > lines.size()) {
        throw InvariantError("line " + std::to_string(start_line) + " is outside the file (" +
                             std::to_string(lines.size()) + " lines)");
    }
    std::string_view eol = "\n";
    for (const auto& l : lines) {
        if (!l.terminator.empty()) {
            eol = l.terminator;
            break;
        }
    }
    const auto indent = leading_whitespace(lines[static_cast<std::size_t>(start_line) - 1].text);

    std::vector<std::string_view> comment_lines;
    {
        std::size_t pos = 0;
        while (pos <= comment.size()) {
            auto nl = comment.find('\n', pos);
            auto l = comment.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                      : nl - pos);
            if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
            comment_lines.push_back(l);
            if (nl == std::string_view::npos) break;
            pos = nl + 1;
        }
    }
    std::size_t common = std::string_view::npos;
    for (auto l : comment_lines) {
        if (trim(l).empty()) continue;
        common = std::min(common, leading_whitespace(l).size());
    }
    if (common == std::string_view::npos) common = 0;

    std::string block;
    for (auto l : comment_lines) {
        if (trim(l).empty()) {
            block.append(eol);
            continue;
        }
        auto body = l.substr(common);
        while (!body.empty() && (body.back() == ' ' || body.back() == '\t')) body.remove_suffix(1);
        block.append(indent).append(body).append(eol);
    }

    std::string out;
    out.reserve(file_content.size() + block.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i + 1 == static_cast<std::size_t>(start_line)) out.append(block);
        out.append(lines[i].text).append(lines[i].terminator);
    }
    return out;
}

std::string extract_lines(std::string_view content, int start_line, int end_line) {
    auto lines = split_with_terminators(content);
    if (start_line < 1 || end_line < start_line ||
        static_cast<std::size_t>(end_line) > lines.size()) {
        throw InvariantError("lines " + std::to_string(start_line) + ":" +
                             std::to_string(end_line) + " are outside the file (" +
                             std::to_string(lines.size()) + " lines)");
    }
    std::string out;
    for (int i = start_line; i <= end_line; ++i) {
        if (i > start_line) out.push_back('\n');
        out.append(lines[static_cast<std::size_t>(i) - 1].text);
    }
    return out;
}

std::optional<std::string> comment_above(std::string_view content, int start_line,
                                         std::string_view language_id) {
    auto lines = split_with_terminators(content);
    if (start_line < 2 || static_cast<std::size_t>(start_line) > lines.size() + 1) {
        return std::nullopt;
    }
    const bool hash = language_id == "python" || language_id == "ruby" ||
                      language_id == "shellscript" || language_id == "perl" || language_id == "r";
    int last = start_line - 1;  // 1-based line just above the selection
    auto text_of = [&](int line) { return trim(lines[static_cast<std::size_t>(line) - 1].text); };

    int first = last + 1;
    if (hash) {
        while (first > 1 && text_of(first - 1).starts_with("#")) --first;
    } else if (text_of(last).ends_with("*/")) {
        first = last;
        while (first >= 1 && !text_of(first).starts_with("/*")) --first;
        if (first < 1) return std::nullopt;
    } else {
        while (first > 1 && text_of(first - 1).starts_with("//")) --first;
    }
    if (first > last) return std::nullopt;
    return extract_lines(content, first, last);
}

// ---------------------------------------------------------------------------
// chat sessions

std::vector<Message> ChatSession::history(std::size_t max_turns) const {
    std::vector<Message> messages;
    const std::size_t begin = turns.size() > max_turns ? turns.size() - max_turns : 0;
    for (std::size_t i = begin; i < turns.size(); ++i) {
        const auto& turn = turns[i];
        messages.push_back({Role::user, turn.user_text});
        if (!turn.selected_driver) continue;
        if (const auto* outcome = turn.candidates.find(*turn.selected_driver)) {
            if (const auto* r = std::get_if<AssistantResponse>(outcome); r && !r->content.empty()) {
                messages.push_back({Role::assistant, r->content});
            }
        }
    }
    return messages;
}

SessionStore::SessionStore(std::optional<std::filesystem::path> journal)
    : journal_path_(std::move(journal)) {
    if (journal_path_) replay();
}

void SessionStore::replay() {
    std::ifstream in(*journal_path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        auto record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) continue;  // torn tail write
        try {
            const auto event = record.at("event").get<std::string>();
            const auto id = record.at("session_id").get<std::string>();
            if (event == "create") {
                auto s = std::make_shared<Slot>();
                s->session.session_id = id;
                s->session.created_at = record.at("created_at").get<std::string>();
                sessions_[id] = std::move(s);
                continue;
            }
            auto it = sessions_.find(id);
            if (it == sessions_.end()) continue;
            auto& session = it->second->session;
            if (event == "turn") {
                ChatTurn turn;
                turn.user_text = record.at("user_text").get<std::string>();
                turn.candidates = fanout_from_json(record.at("candidates"));
                turn.timestamp = record.at("timestamp").get<std::string>();
                session.turns.push_back(std::move(turn));
            } else if (event == "select") {
                auto index = record.at("turn_index").get<std::size_t>();
                if (index < session.turns.size()) {
                    session.turns[index].selected_driver =
                        DriverId(record.at("driver_id").get<std::string>());
                }
            }
        } catch (const std::exception&) {
            continue;
        }
    }
}

void SessionStore::append(const nlohmann::json& record) {
    if (!journal_path_) return;
    std::lock_guard lock(journal_mutex_);
    std::ofstream out(*journal_path_, std::ios::app);
    out << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
    return it->second;
}

std::string SessionStore::create() {
    auto s = std::make_shared<Slot>();
    s->session.session_id = random_session_id();
    s->session.created_at = now_iso8601();
    const auto id = s->session.session_id;
    append({{"event", "create"}, {"session_id", id}, {"created_at", s->session.created_at}});
    std::lock_guard lock(mutex_);
    sessions_.emplace(id, std::move(s));
    return id;
}

std::size_t SessionStore::post_message(const std::string& session_id,
                                       const std::string& user_text,
                                       const TargetSelector& targets) {
    auto s = slot(session_id);
    std::lock_guard lock(s->mutex);
    ChatTurn turn;
    turn.user_text = user_text;
    turn.candidates = run_open_task(user_text, s->session.history(max_history_turns), targets);
    turn.timestamp = now_iso8601();
    const std::size_t index = s->session.turns.size();
    append({{"event", "turn"},
            {"session_id", session_id},
            {"turn_index", index},
            {"user_text", turn.user_text},
            {"candidates", to_json(turn.candidates)},
            {"timestamp", turn.timestamp}});
    s->session.turns.push_back(std::move(turn));
    return index;
}

ChatSession SessionStore::select(const std::string& session_id, std::size_t turn_index,
                                 const DriverId& driver_id) {
    auto s = slot(session_id);
    std::lock_guard lock(s->mutex);
    auto& turns = s->session.turns;
    if (turn_index >= turns.size()) {
        throw NotFoundError("session '" + session_id + "' has no turn " +
                            std::to_string(turn_index));
    }
    auto& turn = turns[turn_index];
    const auto* candidate = turn.candidates.find(driver_id);
    if (candidate == nullptr) {
        throw NotFoundError("turn " + std::to_string(turn_index) + " has no candidate from '" +
                            driver_id.str() + "'");
    }
    if (!succeeded(*candidate)) {
        throw InvariantError("candidate from '" + driver_id.str() +
                             "' is an error and cannot be selected");
    }
    if (turn.selected_driver != driver_id) {
        turn.selected_driver = driver_id;
        append({{"event", "select"},
                {"session_id", session_id},
                {"turn_index", turn_index},
                {"driver_id", driver_id.str()}});
    }
    return s->session;
}

ChatSession SessionStore::get(const std::string& session_id) const {
    auto s = slot(session_id);
    std::lock_guard lock(s->mutex);
    return s->session;
}

// ---------------------------------------------------------------------------
// engine

Engine::Engine(EngineConfig config)
    : config_(std::move(config)), sessions_(config_.journal_path) {
    config_.validate();
    auto& manager = DriverManager::instance();
    manager.clear();
    for (const auto& driver : config_.drivers) manager.register_driver(driver);
}

TaskResult Engine::run_task(const std::string& task_id, const Bindings& bindings,
                            const std::vector<Message>& history) {
    const auto& spec = config_.tasks.get(task_id);
    auto it = bindings.find(spec.primary_input);
    if (it == bindings.end() || it->second.empty()) {
        throw InvariantError("task '" + task_id + "' needs a non-empty '" + spec.primary_input +
                             "' binding");
    }
    return multimind::run_task(spec, bindings, history);
}

WorkflowResult Engine::run_workflow(const std::string& workflow_id, const std::string& input,
                                    const Bindings& bindings,
                                    std::optional<CodeSelection> selection,
                                    std::optional<int> max_iterations) {
    auto it = config_.workflows.find(workflow_id);
    if (it == config_.workflows.end()) {
        throw NotFoundError("unknown workflow '" + workflow_id + "'");
    }
    const auto& wf = it->second;
    switch (wf.strategy) {
        case Strategy::iterative_refine: {
            if (!selection) {
                if (input.empty()) throw InvariantError("workflow input must not be empty");
                CodeSelection whole;
                auto lang = bindings.find("lang");
                whole.language_id = lang == bindings.end() ? "plaintext" : lang->second;
                whole.start_line = 1;
                whole.end_line = static_cast<int>(std::count(input.begin(), input.end(), '\n')) +
                                 (input.ends_with('\n') ? 0 : 1);
                whole.text = input;
                selection = std::move(whole);
            }
            return run_iterative_refine(config_.tasks.get(wf.generator),
                                        config_.tasks.get(wf.verifier), *selection,
                                        max_iterations.value_or(wf.max_iterations));
        }
        case Strategy::sequential:
        case Strategy::parallel: {
            if (input.empty()) throw InvariantError("workflow input must not be empty");
            std::vector<TaskSpec> steps;
            for (const auto& id : wf.steps) steps.push_back(config_.tasks.get(id));
            return wf.strategy == Strategy::sequential ? run_sequential(steps, input, bindings)
                                                       : run_parallel(steps, input, bindings);
        }
    }
    throw InvariantError("unsupported workflow strategy");
}

CommentActionResult Engine::handle_comment_action(const CommentActionRequest& request) {
    CodeSelection selection = request.selection;
    if (selection.start_line < 1 || selection.end_line < selection.start_line) {
        throw InvariantError("selection lines " + std::to_string(selection.start_line) + ":" +
                             std::to_string(selection.end_line) + " are not a valid range");
    }

    std::optional<std::string> content = request.file_content;
    if (!content && !selection.file_path.empty() &&
        std::filesystem::exists(selection.file_path)) {
        content = read_text_file(selection.file_path);
    }
    if (content) {
        const auto actual = extract_lines(*content, selection.start_line, selection.end_line);
        if (selection.text.empty()) {
            selection.text = actual;
        } else if (trim(selection.text) != trim(actual)) {
            throw InvariantError("selection text does not match lines " +
                                 std::to_string(selection.start_line) + ":" +
                                 std::to_string(selection.end_line) + " of the file");
        }
    } else if (request.apply) {
        throw InvariantError("apply requested but the file content is not available");
    }
    selection.validate();

    const auto workflow_id = request.workflow.value_or(std::string(default_comment_workflow));
    auto wf = config_.workflows.find(workflow_id);
    if (wf == config_.workflows.end()) {
        throw NotFoundError("unknown workflow '" + workflow_id + "'");
    }
    if (wf->second.strategy != Strategy::iterative_refine) {
        throw InvariantError("workflow '" + workflow_id + "' is not a generate-verify workflow");
    }
    if (request.max_iterations && *request.max_iterations < 1) {
        throw InvariantError("max_iterations must be >= 1");
    }

    CommentActionResult result;
    result.workflow = run_workflow(workflow_id, selection.text, {}, selection,
                                   request.max_iterations);
    result.status = result.workflow.status;
    result.iterations = result.workflow.iterations;
    result.feedback = result.workflow.feedback;
    switch (result.status) {
        case WorkflowStatus::accepted:
            result.comment = result.workflow.final_output;
            if (content) {
                result.annotated_file =
                    insert_comment(*content, selection.start_line, *result.comment);
            }
            break;
        case WorkflowStatus::needs_manual_review:
            result.comment = result.workflow.final_output;
            break;
        case WorkflowStatus::failed:
            result.errors = collect_errors(result.workflow);
            break;
    }
    return result;
}

} // namespace multimind
