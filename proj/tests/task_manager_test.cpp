#include "support.hpp"

#include "multimind/task_manager.hpp"

#include <gtest/gtest.h>

using namespace multimind;
using namespace multimind::test;

namespace {

TaskSpec text_task(const std::string& id, const std::string& driver) {
    TaskSpec spec;
    spec.id = id;
    spec.prompt = PromptTemplate("", "Improve: {{input}}");
    spec.targets = TargetSelector::of({DriverId(driver)});
    spec.output = OutputFormat::text;
    return spec;
}

TaskSpec generator_on(const std::string& driver) {
    auto spec = TaskCatalog::builtin().get("comment");
    spec.targets = TargetSelector::of({DriverId(driver)});
    return spec;
}

TaskSpec verifier_on(const std::string& driver) {
    auto spec = TaskCatalog::builtin().get("doc_quality");
    spec.targets = TargetSelector::of({DriverId(driver)});
    return spec;
}

CodeSelection selection() {
    return CodeSelection{"Calc.java", "java", 1, 1, "int add(int a, int b) { return a + b; }"};
}

std::vector<ScriptedStep> comments(int n) {
    std::vector<ScriptedStep> steps;
    for (int i = 1; i <= n; ++i) steps.push_back(reply(0, "/** attempt " + std::to_string(i) + " */"));
    return steps;
}

const std::string& last_user_text(const AssistantRequest& request) {
    return request.messages.back().content;
}

} // namespace

TEST(Sequential, PipesOutputIntoNextStep) {
    reset_registry({scripted("a", {reply(0, "v1")}), scripted("b", {reply(0, "v2")})});
    auto result = run_sequential({text_task("s1", "a"), text_task("s2", "b")}, "v0");
    EXPECT_EQ(result.status, WorkflowStatus::accepted);
    EXPECT_EQ(result.final_output, "v2");
    EXPECT_EQ(last_user_text(scripted_driver("a")->request_log().at(0)), "Improve: v0");
    EXPECT_EQ(last_user_text(scripted_driver("b")->request_log().at(0)), "Improve: v1");
    ASSERT_EQ(result.trace.size(), 2u);
    EXPECT_EQ(result.trace[0].task_id, "s1");
    EXPECT_EQ(result.trace[1].task_id, "s2");
}

TEST(Sequential, FailureStopsTheRun) {
    reset_registry({scripted("a", {fail(0, DriverErrorKind::network)}), scripted("b", {reply(0, "v2")})});
    auto result = run_sequential({text_task("s1", "a"), text_task("s2", "b")}, "v0");
    EXPECT_EQ(result.status, WorkflowStatus::failed);
    EXPECT_FALSE(result.final_output);
    EXPECT_EQ(result.trace.size(), 1u);
    EXPECT_EQ(DriverManager::instance().activity(DriverId("b")).requests, 0u);
    EXPECT_THROW(run_sequential({}, "x"), InvariantError);
}

TEST(Parallel, StepsRunConcurrently) {
    reset_registry({scripted("a", {reply(50, "alpha")}), scripted("b", {reply(200, "beta")})});
    WorkflowResult result;
    auto elapsed = wall_ms([&] {
        result = run_parallel({text_task("p1", "a"), text_task("p2", "b")}, "shared");
    });
    EXPECT_GE(elapsed, 200);
    EXPECT_LT(elapsed, 350);
    EXPECT_EQ(result.status, WorkflowStatus::accepted);
    EXPECT_EQ(result.final_output, "[p1]\nalpha\n\n[p2]\nbeta");
    EXPECT_EQ(last_user_text(scripted_driver("a")->request_log().at(0)), "Improve: shared");
    EXPECT_EQ(last_user_text(scripted_driver("b")->request_log().at(0)), "Improve: shared");
}

TEST(Parallel, PartialFailureStillAccepted) {
    reset_registry({scripted("a", {fail(0, DriverErrorKind::network)}), scripted("b", {reply(0, "beta")})});
    auto result = run_parallel({text_task("p1", "a"), text_task("p2", "b")}, "shared");
    EXPECT_EQ(result.status, WorkflowStatus::accepted);
    EXPECT_EQ(result.final_output, "[p2]\nbeta");
    EXPECT_EQ(result.trace.size(), 2u);

    reset_registry({scripted("a", {fail(0, DriverErrorKind::network)}),
                    scripted("b", {fail(0, DriverErrorKind::auth)})});
    EXPECT_EQ(run_parallel({text_task("p1", "a"), text_task("p2", "b")}, "x").status,
              WorkflowStatus::failed);
    EXPECT_THROW(run_parallel({}, "x"), InvariantError);
}

TEST(IterativeRefine, StopsOnFirstPass) {
    reset_registry({scripted("gen", comments(3)),
                    scripted("judge", {reply(0, "VERDICT: FAIL\nMissing @param."),
                                       reply(0, "VERDICT: FAIL\nMissing @return."),
                                       reply(0, "VERDICT: PASS\nGood.")})});
    auto result = run_iterative_refine(generator_on("gen"), verifier_on("judge"), selection(), 3);
    EXPECT_EQ(result.status, WorkflowStatus::accepted);
    EXPECT_EQ(result.iterations, 3);
    EXPECT_EQ(result.final_output, "/** attempt 3 */");
    EXPECT_EQ(scripted_driver("gen")->calls(), 3u);
    EXPECT_EQ(scripted_driver("judge")->calls(), 3u);
}

TEST(IterativeRefine, ImmediatePass) {
    reset_registry({scripted("gen", comments(1)), scripted("judge", {reply(0, "VERDICT: PASS")})});
    auto result = run_iterative_refine(generator_on("gen"), verifier_on("judge"), selection(), 3);
    EXPECT_EQ(result.status, WorkflowStatus::accepted);
    EXPECT_EQ(result.iterations, 1);
    EXPECT_EQ(scripted_driver("gen")->calls(), 1u);
}

TEST(IterativeRefine, ExhaustedBudgetNeedsReview) {
    for (int max = 1; max <= 4; ++max) {
        reset_registry({scripted("gen", comments(max)),
                        scripted("judge", {reply(0, "VERDICT: FAIL\nStill vague.")})});
        auto result = run_iterative_refine(generator_on("gen"), verifier_on("judge"), selection(), max);
        EXPECT_EQ(result.status, WorkflowStatus::needs_manual_review);
        EXPECT_EQ(result.iterations, max);
        EXPECT_EQ(result.final_output, "/** attempt " + std::to_string(max) + " */");
        EXPECT_EQ(result.feedback, "Still vague.");
        EXPECT_EQ(scripted_driver("gen")->calls(), static_cast<std::size_t>(max));
        EXPECT_EQ(scripted_driver("judge")->calls(), static_cast<std::size_t>(max));
    }
    EXPECT_THROW(run_iterative_refine(generator_on("gen"), verifier_on("judge"), selection(), 0),
                 InvariantError);
}

TEST(IterativeRefine, FeedbackReachesNextGeneration) {
    reset_registry({scripted("gen", comments(3)),
                    scripted("judge", {reply(0, "VERDICT: FAIL\nMissing @param."),
                                       reply(0, "VERDICT: FAIL\nMissing @return."),
                                       reply(0, "VERDICT: PASS")})});
    run_iterative_refine(generator_on("gen"), verifier_on("judge"), selection(), 3);
    auto log = scripted_driver("gen")->request_log();
    ASSERT_EQ(log.size(), 3u);
    EXPECT_EQ(last_user_text(log[1]).find("Missing @return."), std::string::npos);
    EXPECT_NE(last_user_text(log[1]).find("Missing @param."), std::string::npos);
    EXPECT_NE(last_user_text(log[2]).find("Missing @return."), std::string::npos);
    EXPECT_EQ(last_user_text(log[0]).find("Missing"), std::string::npos);

    auto judged = scripted_driver("judge")->request_log();
    EXPECT_NE(last_user_text(judged[1]).find("/** attempt 2 */"), std::string::npos);
}

TEST(IterativeRefine, DriverFailureIsFailed) {
    reset_registry({scripted("gen", {fail(0, DriverErrorKind::network)}),
                    scripted("judge", {reply(0, "VERDICT: PASS")})});
    auto result = run_iterative_refine(generator_on("gen"), verifier_on("judge"), selection(), 3);
    EXPECT_EQ(result.status, WorkflowStatus::failed);
    EXPECT_EQ(scripted_driver("judge")->calls(), 0u);

    reset_registry({scripted("gen", comments(1)), scripted("judge", {fail(0, DriverErrorKind::timeout)})});
    result = run_iterative_refine(generator_on("gen"), verifier_on("judge"), selection(), 3);
    EXPECT_EQ(result.status, WorkflowStatus::failed);
    EXPECT_FALSE(result.final_output);
}

TEST(IterativeRefine, RandomVerdictSequences) {
    std::mt19937 rng(5);
    for (int i = 0; i < 100; ++i) {
        const int max = 1 + static_cast<int>(rng() % 5);
        const int len = 1 + static_cast<int>(rng() % 6);
        std::vector<ScriptedStep> verdicts;
        int first_pass = -1;
        for (int k = 0; k < len; ++k) {
            const bool pass = rng() % 3 == 0;
            if (pass && first_pass < 0) first_pass = k + 1;
            verdicts.push_back(reply(0, pass ? "VERDICT: PASS" : "VERDICT: FAIL\nno"));
        }
        reset_registry({scripted("gen", comments(6)), scripted("judge", verdicts)});
        auto result = run_iterative_refine(generator_on("gen"), verifier_on("judge"), selection(), max);
        const bool accepted = first_pass > 0 && first_pass <= max;
        EXPECT_EQ(result.status, accepted ? WorkflowStatus::accepted : WorkflowStatus::needs_manual_review);
        const int expected_iterations = accepted ? first_pass : max;
        EXPECT_EQ(result.iterations, expected_iterations);
        EXPECT_EQ(scripted_driver("gen")->calls(), static_cast<std::size_t>(expected_iterations));
        EXPECT_EQ(scripted_driver("judge")->calls(), static_cast<std::size_t>(expected_iterations));
        EXPECT_TRUE(result.final_output.has_value());
        ASSERT_EQ(result.trace.size(), static_cast<std::size_t>(2 * expected_iterations));
        for (std::size_t t = 0; t < result.trace.size(); ++t) {
            EXPECT_EQ(result.trace[t].iteration, static_cast<int>(t / 2) + 1);
            EXPECT_EQ(result.trace[t].task_id, t % 2 == 0 ? "comment" : "doc_quality");
        }
    }
}

TEST(WorkflowSpec, Validation) {
    WorkflowSpec w;
    w.id = "w";
    EXPECT_THROW(w.validate(), InvariantError);
    w.steps = {"comment"};
    EXPECT_NO_THROW(w.validate());
    w.strategy = Strategy::iterative_refine;
    EXPECT_THROW(w.validate(), InvariantError);
    w.generator = "comment";
    w.verifier = "doc_quality";
    EXPECT_NO_THROW(w.validate());
    w.max_iterations = 0;
    EXPECT_THROW(w.validate(), InvariantError);
    EXPECT_THROW(strategy_from_string("round_robin"), InvariantError);
}
