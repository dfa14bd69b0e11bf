#include "multimind/config.hpp"

#include "multimind/codec.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace multimind {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::string line_col(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void apply_task_override(TaskCatalog& catalog, const Json& j, const std::filesystem::path& base) {
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
        throw InvariantError("task entry needs a string 'id'");
    }
    const auto id = j["id"].get<std::string>();
    TaskSpec spec;
    if (catalog.contains(id)) {
        spec = catalog.get(id);
    } else {
        spec.id = id;
        if (!j.contains("template_file") && j.value("kind", "defined") == "defined") {
            throw InvariantError("new task '" + id + "' needs a template_file");
        }
    }
    if (auto it = j.find("kind"); it != j.end()) spec.kind = task_kind_from_string(it->get<std::string>());
    if (auto it = j.find("mode"); it != j.end()) {
        spec.mode = interaction_mode_from_string(it->get<std::string>());
    }
    if (auto it = j.find("targets"); it != j.end()) spec.targets = targets_from_json(*it);
    if (auto it = j.find("temperature"); it != j.end()) spec.temperature = it->get<double>();
    if (auto it = j.find("output"); it != j.end()) {
        spec.output = output_format_from_string(it->get<std::string>());
    }
    if (auto it = j.find("input"); it != j.end()) spec.primary_input = it->get<std::string>();
    if (auto it = j.find("template_file"); it != j.end()) {
        spec.prompt = PromptTemplate::parse(read_file(resolve(base, it->get<std::string>())));
    }
    catalog.put(std::move(spec));
}

} // namespace

void EngineConfig::validate() const {
    if (drivers.empty()) throw ConfigError("config must declare at least one driver");
    if (listen_port < 1024 || listen_port > 65535) {
        throw ConfigError("listen_port " + std::to_string(listen_port) +
                          " is outside [1024, 65535]");
    }
    std::set<DriverId> ids;
    for (const auto& d : drivers) {
        if (!ids.insert(d.id).second) throw ConfigError("duplicate driver id '" + d.id.str() + "'");
    }
    for (const auto& task_id : tasks.ids()) {
        const auto& spec = tasks.get(task_id);
        for (const auto& target : spec.targets.ids()) {
            if (!ids.contains(target)) {
                throw ConfigError("task '" + task_id + "' targets unknown driver '" +
                                  target.str() + "'");
            }
        }
    }
    auto require_task = [&](const std::string& workflow, const std::string& task) {
        if (!tasks.contains(task)) {
            throw ConfigError("workflow '" + workflow + "' references unknown task '" + task + "'");
        }
    };
    for (const auto& [id, wf] : workflows) {
        if (wf.strategy == Strategy::iterative_refine) {
            require_task(id, wf.generator);
            require_task(id, wf.verifier);
        } else {
            for (const auto& step : wf.steps) require_task(id, step);
        }
    }
}

EngineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config is not valid JSON at " + line_col(text, e.byte) + ": " +
                          e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    EngineConfig config;
    try {
        if (auto it = doc.find("listen_port"); it != doc.end()) {
            if (!it->is_number_integer()) throw InvariantError("listen_port must be an integer");
            config.listen_port = it->get<int>();
        }
        if (auto it = doc.find("auth_token"); it != doc.end() && !it->is_null()) {
            config.auth_token = it->get<std::string>();
        }
        if (auto it = doc.find("journal_path"); it != doc.end() && !it->is_null()) {
            config.journal_path = resolve(base_dir, it->get<std::string>());
        }

        const auto drivers = doc.find("drivers");
        if (drivers == doc.end() || !drivers->is_array()) {
            throw InvariantError("config needs a 'drivers' array");
        }
        for (std::size_t i = 0; i < drivers->size(); ++i) {
            try {
                config.drivers.push_back(driver_config_from_json((*drivers)[i]));
            } catch (const std::exception& e) {
                throw InvariantError("drivers[" + std::to_string(i) + "]: " + e.what());
            }
        }

        if (auto it = doc.find("prompts_dir"); it != doc.end() && !it->is_null()) {
            const auto dir = resolve(base_dir, it->get<std::string>());
            for (auto id : {task_ids::comment, task_ids::doc_quality, task_ids::generate,
                            task_ids::doc_review}) {
                const auto file = dir / (std::string(id) + ".txt");
                if (!std::filesystem::exists(file)) continue;
                TaskSpec spec = config.tasks.get(id);
                spec.prompt = PromptTemplate::parse(read_file(file));
                config.tasks.put(std::move(spec));
            }
        }

        if (auto it = doc.find("tasks"); it != doc.end()) {
            if (!it->is_array()) throw InvariantError("'tasks' must be an array");
            std::set<std::string> seen;
            for (const auto& t : *it) {
                if (t.is_object() && t.contains("id") && t["id"].is_string() &&
                    !seen.insert(t["id"].get<std::string>()).second) {
                    throw InvariantError("duplicate task id '" + t["id"].get<std::string>() + "'");
                }
                apply_task_override(config.tasks, t, base_dir);
            }
        }

        WorkflowSpec document;
        document.id = std::string(default_comment_workflow);
        document.strategy = Strategy::iterative_refine;
        document.generator = std::string(task_ids::comment);
        document.verifier = std::string(task_ids::doc_quality);
        document.max_iterations = 3;
        config.workflows.emplace(document.id, document);

        if (auto it = doc.find("workflows"); it != doc.end()) {
            if (!it->is_array()) throw InvariantError("'workflows' must be an array");
            std::set<std::string> seen;
            for (const auto& w : *it) {
                auto spec = workflow_spec_from_json(w);
                if (!seen.insert(spec.id).second) {
                    throw InvariantError("duplicate workflow id '" + spec.id + "'");
                }
                config.workflows.insert_or_assign(spec.id, std::move(spec));
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    config.validate();
    return config;
}

EngineConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.parent_path());
}

std::filesystem::path discover_config(const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv("MULTIMIND_CONFIG"); env != nullptr && *env != '\0') {
        return env;
    }
    return "multimind.json";
}

} // namespace multimind
