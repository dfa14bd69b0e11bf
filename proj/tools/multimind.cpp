// multimind: command-line surface over the orchestration engine. Runs the
// engine in-process, or proxies every call to a running daemon with
// --connect host:port.

#include "multimind/api.hpp"
#include "multimind/config.hpp"
#include "multimind/engine.hpp"
#include "multimind/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace multimind;

namespace {

enum ExitCode : int { ok = 0, task_failed = 1, usage_error = 2, driver_error = 3 };

// Usage or configuration problem detected by the CLI itself.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API reply that is not a 200.
struct ApiFailure : std::runtime_error {
    ApiFailure(int s, const std::string& what) : std::runtime_error(what), status(s) {}
    int status;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Writes content to a sibling temp file and renames it over path.
void write_atomically(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".multimind-tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) {
            fs::remove(tmp);
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot replace '" + path.string() + "': " + ec.message());
    }
}

std::pair<int, int> parse_lines(const std::string& spec) {
    auto colon = spec.find(':');
    try {
        if (colon == std::string::npos) {
            int line = std::stoi(spec);
            return {line, line};
        }
        return {std::stoi(spec.substr(0, colon)), std::stoi(spec.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError("--lines expects A:B, got '" + spec + "'");
    }
}

std::string language_from_extension(const fs::path& file) {
    static const std::map<std::string, std::string> known{
        {".java", "java"},     {".py", "python"},     {".js", "javascript"}, {".ts", "typescript"},
        {".c", "c"},           {".h", "c"},           {".cpp", "cpp"},       {".hpp", "cpp"},
        {".cc", "cpp"},        {".cs", "csharp"},     {".go", "go"},         {".rs", "rust"},
        {".kt", "kotlin"},     {".swift", "swift"},   {".rb", "ruby"},       {".php", "php"},
        {".sh", "shellscript"}, {".scala", "scala"}};
    auto it = known.find(file.extension().string());
    return it == known.end() ? "plaintext" : it->second;
}

Json expect_ok(const ApiReply& reply) {
    if (reply.status == 200) return reply.body;
    std::string message = reply.body.is_object() ? reply.body.value("message", "") : "";
    std::string kind = reply.body.is_object() ? reply.body.value("kind", "error") : "error";
    throw ApiFailure(reply.status, kind + ": " + message);
}

int exit_for_failed(const Json& errors) {
    return errors.is_array() && !errors.empty() ? driver_error : task_failed;
}

void print_errors(const Json& errors) {
    for (const auto& e : errors) {
        std::cerr << "  " << e.value("driver_id", "?") << ": " << e.value("kind", "?") << ": "
                  << e.value("message", "") << "\n";
    }
}

// Driver errors carried in a task result's fan-out outcome.
Json outcome_errors(const Json& task) {
    Json errors = Json::array();
    if (!task.contains("outcome")) return errors;
    for (const auto& r : task["outcome"]["results"]) {
        if (!r.value("ok", false)) errors.push_back(r["error"]);
    }
    return errors;
}

struct Options {
    std::optional<std::string> config;
    std::optional<std::string> connect;
    std::optional<std::string> token;
};

class Session {
public:
    explicit Session(const Options& opts) {
        if (opts.connect) {
            auto colon = opts.connect->rfind(':');
            if (colon == std::string::npos) throw UsageError("--connect expects host:port");
            int port = 0;
            try {
                port = std::stoi(opts.connect->substr(colon + 1));
            } catch (const std::exception&) {
                throw UsageError("--connect expects host:port");
            }
            std::optional<std::string> token = opts.token;
            if (!token) {
                if (const char* env = std::getenv("MULTIMIND_TOKEN"); env && *env) token = env;
            }
            client_ = std::make_unique<RemoteClient>(opts.connect->substr(0, colon), port, token);
            return;
        }
        engine_ = std::make_unique<Engine>(load_config(discover_config(opts.config)));
        api_ = std::make_unique<Api>(*engine_);
        client_ = std::make_unique<LocalClient>(*api_);
    }

    EngineClient& client() { return *client_; }

private:
    std::unique_ptr<Engine> engine_;
    std::unique_ptr<Api> api_;
    std::unique_ptr<EngineClient> client_;
};

// ---------------------------------------------------------------------------
// subcommands

GatewayServer* running_server = nullptr;

void on_signal(int) {
    if (running_server) running_server->stop();
}

int cmd_serve(const Options& opts, std::optional<int> port_override) {
    auto config = load_config(discover_config(opts.config));
    const int port = port_override.value_or(config.listen_port);
    Engine engine(std::move(config));
    Api api(engine);
    GatewayServer server(api);
    const int bound = server.bind(port);
    std::cerr << "multimind listening on 127.0.0.1:" << bound << std::endl;
    running_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.listen();
    running_server = nullptr;
    return ok;
}

int cmd_drivers(Session& session, const std::string& action) {
    auto drivers = expect_ok(session.client().call("GET", "/v1/drivers"))["drivers"];
    for (const auto& d : drivers) {
        const auto id = d["id"].get<std::string>();
        if (action == "list") {
            std::cout << id << "\t" << d["provider"].get<std::string>();
            if (d.contains("model")) std::cout << "\t" << d["model"].get<std::string>();
            if (d.contains("endpoint")) std::cout << "\t" << d["endpoint"].get<std::string>();
            std::cout << "\n";
        } else {
            auto a = expect_ok(session.client().call("GET", "/v1/drivers/" + id + "/activity"));
            std::cout << id << "\trequests=" << a["requests"] << " successes=" << a["successes"]
                      << " errors=" << a["errors"]
                      << " latency_ms=" << a["cumulative_latency_ms"] << "\n";
        }
    }
    return ok;
}

struct CommentArgs {
    std::string file;
    std::string lines;
    std::string lang;
    bool apply = false;
    std::optional<int> max_iter;
    std::optional<std::string> workflow;
};

int cmd_comment(Session& session, const CommentArgs& args) {
    const fs::path file = args.file;
    const std::string original = read_file(file);
    const auto [start, end] = parse_lines(args.lines);
    std::string text;
    try {
        text = extract_lines(original, start, end);
    } catch (const InvariantError& e) {
        throw UsageError(e.what());
    }

    Json body{{"selection",
               {{"file_path", fs::absolute(file).string()},
                {"language_id", args.lang},
                {"start_line", start},
                {"end_line", end},
                {"text", text}}},
              {"file_content", original},
              {"apply", args.apply}};
    if (args.max_iter) body["max_iterations"] = *args.max_iter;
    if (args.workflow) body["workflow"] = *args.workflow;

    auto result = expect_ok(session.client().call("POST", "/v1/actions/comment", body));
    const auto status = result["status"].get<std::string>();
    if (status == "accepted") {
        std::cout << result["comment"].get<std::string>() << "\n";
        if (args.apply) {
            fs::path backup = file;
            backup += ".bak";
            write_atomically(backup, original);
            write_atomically(file, result["annotated_file"].get<std::string>());
            std::cerr << "updated " << file.string() << " (backup " << backup.string() << ")\n";
        }
        return ok;
    }
    if (status == "needs_manual_review") {
        std::cerr << "documentation needs manual review after " << result["iterations"]
                  << " iteration(s)\n";
        if (result["feedback"].is_string()) {
            std::cerr << "last feedback:\n" << result["feedback"].get<std::string>() << "\n";
        }
        if (result["comment"].is_string()) {
            std::cerr << "last attempt:\n" << result["comment"].get<std::string>() << "\n";
        }
        return task_failed;
    }
    std::cerr << "comment workflow failed\n";
    print_errors(result["errors"]);
    return exit_for_failed(result["errors"]);
}

int report_task(const Json& result) {
    if (result["status"] == "ok") {
        std::cout << result["selected"]["content"].get<std::string>() << "\n";
        return ok;
    }
    std::cerr << "task " << result["task_id"].get<std::string>()
              << " failed: " << result.value("message", "") << "\n";
    auto errors = outcome_errors(result);
    print_errors(errors);
    return exit_for_failed(errors);
}

int cmd_generate(Session& session, const std::string& spec_file, const std::string& lang) {
    Json body{{"bindings", {{"spec", read_file(spec_file)}, {"lang", lang}}}};
    return report_task(expect_ok(session.client().call("POST", "/v1/tasks/generate/run", body)));
}

int cmd_review(Session& session, const std::string& file_arg, const std::string& lines,
               std::optional<std::string> lang) {
    const fs::path file = file_arg;
    const std::string content = read_file(file);
    const auto [start, end] = parse_lines(lines);
    const std::string language = lang.value_or(language_from_extension(file));
    std::string code;
    try {
        code = extract_lines(content, start, end);
    } catch (const InvariantError& e) {
        throw UsageError(e.what());
    }
    auto existing = comment_above(content, start, language);
    if (!existing) {
        throw UsageError("no documentation comment found directly above line " +
                         std::to_string(start));
    }
    Json body{{"bindings",
               {{"lang", language}, {"code", code}, {"current_doc", *existing}, {"feedback", ""}}}};
    return report_task(expect_ok(session.client().call("POST", "/v1/tasks/doc_review/run", body)));
}

int cmd_chat(Session& session, const std::vector<std::string>& drivers) {
    auto created = expect_ok(session.client().call("POST", "/v1/chat/sessions", Json::object()));
    const auto id = created["session_id"].get<std::string>();
    Json targets = drivers.empty() ? Json("any") : Json(drivers);
    std::cerr << "chat session " << id << " (type /quit to exit)\n";

    std::string line;
    while (true) {
        std::cerr << "> " << std::flush;
        if (!std::getline(std::cin, line) || line == "/quit") return ok;
        if (line.empty()) continue;

        auto reply = session.client().call("POST", "/v1/chat/sessions/" + id + "/messages",
                                           {{"text", line}, {"targets", targets}});
        if (reply.status != 200) {
            std::cerr << "error: " << reply.body.value("message", "request failed") << "\n";
            continue;
        }
        const auto turn = reply.body["turn_index"].get<std::size_t>();
        const auto& results = reply.body["candidates"]["results"];
        std::vector<std::string> selectable;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            const auto driver = r["driver_id"].get<std::string>();
            if (r["ok"].get<bool>()) {
                std::cout << "[" << i + 1 << "] " << driver << "\n"
                          << r["response"]["content"].get<std::string>() << "\n\n";
            } else {
                std::cout << "[" << i + 1 << "] " << driver << " (error "
                          << r["error"]["kind"].get<std::string>() << ": "
                          << r["error"]["message"].get<std::string>() << ")\n\n";
            }
            selectable.push_back(r["ok"].get<bool>() ? driver : std::string{});
        }
        std::cout << std::flush;

        std::cerr << "select 1-" << results.size() << " (enter to skip): " << std::flush;
        if (!std::getline(std::cin, line) || line == "/quit") return ok;
        if (line.empty()) continue;
        std::size_t pick = 0;
        try {
            pick = std::stoul(line);
        } catch (const std::exception&) {
            pick = 0;
        }
        if (pick < 1 || pick > selectable.size() || selectable[pick - 1].empty()) {
            std::cerr << "not a selectable response; turn left unselected\n";
            continue;
        }
        auto sel = session.client().call("POST", "/v1/chat/sessions/" + id + "/select",
                                         {{"turn_index", turn}, {"driver_id", selectable[pick - 1]}});
        if (sel.status != 200) std::cerr << "error: " << sel.body.value("message", "") << "\n";
    }
}

int cmd_workflow_run(Session& session, const std::string& id, const std::string& input_file,
                     std::optional<std::string> lang, std::optional<int> max_iter) {
    Json body{{"input", read_file(input_file)}};
    body["bindings"] = Json{{"lang", lang.value_or(language_from_extension(input_file))}};
    if (max_iter) body["max_iterations"] = *max_iter;
    auto result = expect_ok(session.client().call("POST", "/v1/workflows/" + id + "/run", body));
    std::cout << result.dump(2, ' ', false, Json::error_handler_t::replace) << "\n";

    const auto status = result["status"].get<std::string>();
    if (status == "accepted") return ok;
    if (status == "needs_manual_review") return task_failed;
    Json errors = Json::array();
    for (const auto& entry : result["trace"]) {
        for (const auto& e : outcome_errors(entry["result"])) errors.push_back(e);
    }
    return exit_for_failed(errors);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multimind: orchestrate several AI assistants from the command line"};
    app.require_subcommand(1);

    Options opts;
    app.add_option("--config", opts.config, "Engine config file (default: $MULTIMIND_CONFIG, ./multimind.json)");
    app.add_option("--connect", opts.connect, "Proxy to a running daemon at host:port");
    app.add_option("--token", opts.token, "Bearer token for --connect (default: $MULTIMIND_TOKEN)");

    auto* serve = app.add_subcommand("serve", "Run the localhost JSON API");
    std::optional<int> port;
    serve->add_option("--port", port, "Override listen_port");

    auto* drivers = app.add_subcommand("drivers", "Show registered drivers");
    std::string drivers_action;
    drivers->add_option("action", drivers_action, "list | activity")
        ->required()
        ->check(CLI::IsMember({"list", "activity"}));

    auto* comment = app.add_subcommand("comment", "Generate a verified documentation comment");
    CommentArgs cargs;
    comment->add_option("--file", cargs.file, "Source file")->required();
    comment->add_option("--lines", cargs.lines, "Selected lines A:B (1-based, inclusive)")->required();
    comment->add_option("--lang", cargs.lang, "Language id, e.g. java")->required();
    comment->add_flag("--apply", cargs.apply, "Insert the comment into the file (backup F.bak)");
    comment->add_option("--max-iter", cargs.max_iter, "Generate/verify attempts")
        ->check(CLI::PositiveNumber);
    comment->add_option("--workflow", cargs.workflow, "Generate-verify workflow id");

    auto* generate = app.add_subcommand("generate", "Generate code from a description");
    std::string spec_file;
    std::string gen_lang;
    generate->add_option("--spec-file", spec_file, "Text file describing the code")->required();
    generate->add_option("--lang", gen_lang, "Target language")->required();

    auto* review = app.add_subcommand("review", "Improve the comment above a selection");
    std::string review_file;
    std::string review_lines;
    std::optional<std::string> review_lang;
    review->add_option("--file", review_file, "Source file")->required();
    review->add_option("--lines", review_lines, "Selected lines A:B")->required();
    review->add_option("--lang", review_lang, "Language id (default: from extension)");

    auto* chat = app.add_subcommand("chat", "Interactive multi-assistant chat");
    std::vector<std::string> chat_drivers;
    chat->add_option("--drivers", chat_drivers, "Comma-separated driver ids")->delimiter(',');

    auto* workflow = app.add_subcommand("workflow", "Run configured workflows");
    workflow->require_subcommand(1);
    auto* workflow_run = workflow->add_subcommand("run", "Run a workflow and print its trace");
    std::string workflow_id;
    std::string input_file;
    std::optional<std::string> wf_lang;
    std::optional<int> wf_max_iter;
    workflow_run->add_option("id", workflow_id, "Workflow id")->required();
    workflow_run->add_option("--input-file", input_file, "Input text file")->required();
    workflow_run->add_option("--lang", wf_lang, "Language id (default: from extension)");
    workflow_run->add_option("--max-iter", wf_max_iter, "Override max iterations")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return usage_error;
    }

    try {
        if (*serve) return cmd_serve(opts, port);
        Session session(opts);
        if (*drivers) return cmd_drivers(session, drivers_action);
        if (*comment) return cmd_comment(session, cargs);
        if (*generate) return cmd_generate(session, spec_file, gen_lang);
        if (*review) return cmd_review(session, review_file, review_lines, review_lang);
        if (*chat) return cmd_chat(session, chat_drivers);
        if (*workflow_run) {
            return cmd_workflow_run(session, workflow_id, input_file, wf_lang, wf_max_iter);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return usage_error;
    } catch (const ConnectionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return driver_error;
    } catch (const ApiFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.status >= 500 ? driver_error : usage_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return driver_error;
    }
    return usage_error;
}
