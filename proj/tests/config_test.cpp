#include "support.hpp"

#include "multimind/config.hpp"

#include <gtest/gtest.h>

using namespace multimind;
using namespace multimind::test;

namespace {

const std::string kMinimal = R"({
  "drivers": [
    {"id": "gpt", "provider": "scripted",
     "script": {"steps": [{"delay_ms": 10, "content": "/** hi */"}]}},
    {"id": "gemini", "provider": "scripted",
     "script": {"steps": [{"content": "VERDICT: PASS"}], "on_exhausted": "error"}}
  ]
})";

std::string with_drivers(const std::string& rest) {
    return R"({"drivers": [{"id": "gpt", "provider": "scripted", "script": {"steps": [{"content": "x"}]}}])" +
           rest + "}";
}

std::string config_error(const std::string& text, const std::filesystem::path& base = {}) {
    try {
        parse_config(text, base);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Config, MinimalScriptedConfig) {
    auto config = parse_config(kMinimal);
    ASSERT_EQ(config.drivers.size(), 2u);
    EXPECT_EQ(config.drivers[0].id.str(), "gpt");
    EXPECT_EQ(config.drivers[0].provider, ProviderKind::scripted);
    ASSERT_TRUE(config.drivers[0].script);
    EXPECT_EQ(config.drivers[0].script->steps.at(0).delay, Millis{10});
    EXPECT_EQ(config.drivers[1].script->on_exhausted, ExhaustionPolicy::error);
    EXPECT_EQ(config.listen_port, 7640);
    EXPECT_FALSE(config.auth_token);
    EXPECT_TRUE(config.tasks.contains("comment"));
    ASSERT_TRUE(config.workflows.contains("document"));
    const auto& document = config.workflows.at("document");
    EXPECT_EQ(document.strategy, Strategy::iterative_refine);
    EXPECT_EQ(document.generator, "comment");
    EXPECT_EQ(document.verifier, "doc_quality");
    EXPECT_EQ(document.max_iterations, 3);
}

TEST(Config, NetworkDriverFields) {
    auto config = parse_config(R"({"listen_port": 9000, "auth_token": "t0k",
      "drivers": [{"id": "gpt", "provider": "openai-compatible", "endpoint": "https://api.example.com/v1",
                   "model": "gpt-4o-mini", "credential_env": "OPENAI_API_KEY",
                   "timeout_ms": 5000, "temperature": 0.5, "max_output_tokens": 300}]})");
    const auto& d = config.drivers.at(0);
    EXPECT_EQ(d.provider, ProviderKind::openai_compatible);
    EXPECT_EQ(d.endpoint, "https://api.example.com/v1");
    EXPECT_EQ(d.model, "gpt-4o-mini");
    EXPECT_EQ(d.credential_env, "OPENAI_API_KEY");
    EXPECT_EQ(d.timeout, Millis{5000});
    EXPECT_DOUBLE_EQ(d.temperature, 0.5);
    EXPECT_EQ(d.max_output_tokens, 300);
    EXPECT_EQ(config.listen_port, 9000);
    EXPECT_EQ(config.auth_token, "t0k");
}

TEST(Config, UnknownTaskInWorkflow) {
    auto msg = config_error(with_drivers(
        R"(, "workflows": [{"id": "w", "strategy": "sequential", "steps": ["comment", "nope"]}])"));
    EXPECT_NE(msg.find("nope"), std::string::npos) << msg;
}

TEST(Config, PortRange) {
    EXPECT_NE(config_error(with_drivers(R"(, "listen_port": 80)")).find("80"), std::string::npos);
    EXPECT_FALSE(config_error(with_drivers(R"(, "listen_port": 70000)")).empty());
    EXPECT_TRUE(config_error(with_drivers(R"(, "listen_port": 1024)")).empty());
}

TEST(Config, DuplicateIds) {
    auto msg = config_error(R"({"drivers": [
        {"id": "a", "provider": "scripted", "script": {"steps": [{"content": "x"}]}},
        {"id": "a", "provider": "scripted", "script": {"steps": [{"content": "y"}]}}]})");
    EXPECT_NE(msg.find("duplicate"), std::string::npos) << msg;
    EXPECT_FALSE(config_error(with_drivers(R"(, "workflows": [
        {"id": "w", "strategy": "parallel", "steps": ["comment"]},
        {"id": "w", "strategy": "parallel", "steps": ["generate"]}])")).empty());
}

TEST(Config, SyntaxErrorReportsLine) {
    auto msg = config_error("{\n  \"drivers\": [\n    {\"id\": \"a\",,}\n  ]\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Config, InvalidDriverEntries) {
    EXPECT_FALSE(config_error(R"({"drivers": []})").empty());
    EXPECT_FALSE(config_error(R"({})").empty());
    EXPECT_FALSE(config_error(R"([])").empty());
    EXPECT_FALSE(config_error(R"({"drivers": [{"id": "Bad Id", "provider": "scripted",
        "script": {"steps": [{"content": "x"}]}}]})").empty());
    EXPECT_FALSE(config_error(R"({"drivers": [{"id": "a", "provider": "claude"}]})").empty());
    EXPECT_FALSE(config_error(R"({"drivers": [{"id": "a", "provider": "openai-compatible"}]})").empty());
    EXPECT_FALSE(config_error(R"({"drivers": [{"id": "a", "provider": "scripted"}]})").empty());
    EXPECT_FALSE(config_error(R"({"drivers": [{"id": "a", "provider": "scripted",
        "script": {"steps": [{"content": "x", "error": "auth"}]}}]})").empty());
}

TEST(Config, TaskTargetsMustExist) {
    auto msg = config_error(with_drivers(R"(, "tasks": [{"id": "comment", "targets": ["ghost"]}])"));
    EXPECT_NE(msg.find("ghost"), std::string::npos) << msg;

    auto config = parse_config(with_drivers(R"(, "tasks": [{"id": "comment", "targets": ["gpt"], "temperature": 0.7}])"));
    EXPECT_EQ(config.tasks.get("comment").targets.ids().at(0).str(), "gpt");
    EXPECT_DOUBLE_EQ(config.tasks.get("comment").temperature, 0.7);
}

TEST(Config, PromptOverrides) {
    TempDir dir;
    std::filesystem::create_directories(dir / "prompts");
    write_file(dir / "prompts" / "comment.txt", "[user]\nDocument {{code}} in {{lang}}.{{feedback}}\n");
    write_file(dir / "summary.txt", "[system]\nBe brief.\n[user]\nSummarize {{input}}\n");
    auto config = parse_config(with_drivers(R"(, "prompts_dir": "prompts",
        "tasks": [{"id": "summary", "template_file": "summary.txt"}],
        "workflows": [{"id": "chain", "strategy": "sequential", "steps": ["generate", "summary"]}])"),
                               dir.path());
    EXPECT_EQ(config.tasks.get("comment").prompt.user_text(), "Document {{code}} in {{lang}}.{{feedback}}");
    EXPECT_EQ(config.tasks.get("doc_quality").prompt.user_text(),
              TaskCatalog::builtin().get("doc_quality").prompt.user_text());
    const auto& summary = config.tasks.get("summary");
    EXPECT_EQ(summary.prompt.system_text(), "Be brief.");
    EXPECT_EQ(summary.primary_input, "input");
    EXPECT_EQ(config.workflows.at("chain").steps.size(), 2u);

    EXPECT_FALSE(config_error(with_drivers(R"(, "tasks": [{"id": "summary"}])")).empty());
    EXPECT_FALSE(config_error(with_drivers(R"(, "tasks": [{"id": "s", "template_file": "missing.txt"}])"),
                              dir.path()).empty());
}

TEST(Config, LoadAndDiscover) {
    TempDir dir;
    write_file(dir / "multimind.json", kMinimal);
    EXPECT_EQ(load_config(dir / "multimind.json").drivers.size(), 2u);
    EXPECT_THROW(load_config(dir / "absent.json"), ConfigError);

    EXPECT_EQ(discover_config(std::string("x.json")), "x.json");
    {
        ScopedEnv env("MULTIMIND_CONFIG", "/etc/mm.json");
        EXPECT_EQ(discover_config(std::nullopt), "/etc/mm.json");
        EXPECT_EQ(discover_config(std::string("x.json")), "x.json");
    }
    ScopedEnv cleared("MULTIMIND_CONFIG", "");
    EXPECT_EQ(discover_config(std::nullopt), "multimind.json");
}

TEST(Config, ExampleConfigParses) {
    auto config = load_config(source_dir / "multimind.example.json");
    EXPECT_GE(config.drivers.size(), 2u);
}
