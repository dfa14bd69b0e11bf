#include "support.hpp"

#include "multimind/driver_manager.hpp"

#include <gtest/gtest.h>

#include <thread>

#include <algorithm>
#include <set>

using namespace multimind;
using namespace multimind::test;

namespace {

const AssistantResponse& response_of(const FanoutOutcome& out, const std::string& id) {
    return std::get<AssistantResponse>(*out.find(DriverId(id)));
}

const DriverError& error_of(const FanoutOutcome& out, const std::string& id) {
    return std::get<DriverError>(*out.find(DriverId(id)));
}

} // namespace

TEST(DriverManager, IsASingleton) {
    EXPECT_EQ(&DriverManager::instance(), &DriverManager::instance());
    static_assert(!std::is_copy_constructible_v<DriverManager>);
    static_assert(!std::is_default_constructible_v<DriverManager>);
}

TEST(DriverManager, RegisterLookupAndOrder) {
    reset_registry();
    auto& m = DriverManager::instance();
    auto gen = scripted("gen", {reply(0, "x")});
    EXPECT_EQ(m.register_driver(gen), DriverId("gen"));
    EXPECT_EQ(m.lookup(DriverId("gen")).id, DriverId("gen"));
    try {
        m.register_driver(gen);
        FAIL() << "duplicate accepted";
    } catch (const InvariantError& e) {
        EXPECT_NE(std::string(e.what()).find("gen"), std::string::npos);
    }

    reset_registry({scripted("a", {reply(0, "x")}), scripted("c", {reply(0, "x")}),
                    scripted("b", {reply(0, "x")})});
    auto listed = m.list();
    ASSERT_EQ(listed.size(), 3u);
    EXPECT_EQ(listed[0].id.str(), "a");
    EXPECT_EQ(listed[1].id.str(), "c");
    EXPECT_EQ(listed[2].id.str(), "b");
    EXPECT_THROW(m.lookup(DriverId("zzz")), NotFoundError);
}

TEST(DriverManager, FreshCountersAreZero) {
    reset_registry({scripted("a", {reply(0, "x")})});
    EXPECT_EQ(DriverManager::instance().activity(DriverId("a")), ActivityCounters{});
    EXPECT_THROW(DriverManager::instance().activity(DriverId("nope")), NotFoundError);
}

TEST(DriverManager, TargetResolutionErrors) {
    reset_registry({scripted("a", {reply(0, "x")})});
    auto& m = DriverManager::instance();
    EXPECT_THROW(TargetSelector::of({}), InvariantError);
    EXPECT_THROW(m.call_back(user_request("q"), TargetSelector::of({DriverId("ghost")})),
                 NotFoundError);
    reset_registry();
    EXPECT_THROW(m.fetch_all(user_request("q"), TargetSelector::any()), InvariantError);
}

TEST(CallBack, FasterDriverWinsAndLoserIsCancelled) {
    reset_registry({scripted("a", {reply(50, "alpha")}), scripted("b", {reply(200, "beta")})});
    auto& m = DriverManager::instance();
    FanoutOutcome out;
    auto elapsed = wall_ms([&] { out = m.call_back(user_request("q"), TargetSelector::any()); });
    EXPECT_EQ(out.mode, FanoutMode::first);
    ASSERT_TRUE(out.winner);
    EXPECT_EQ(out.winner->str(), "a");
    EXPECT_EQ(out.winning_response()->content, "alpha");
    EXPECT_EQ(error_of(out, "b").kind, DriverErrorKind::cancelled);
    EXPECT_LT(elapsed, 150);

    auto a = m.activity(DriverId("a"));
    auto b = m.activity(DriverId("b"));
    EXPECT_EQ(a.requests, 1u);
    EXPECT_EQ(a.successes, 1u);
    EXPECT_GE(a.cumulative_latency_ms, 50u);
    EXPECT_EQ(b.requests, 1u);
    EXPECT_GE(b.errors, 1u);
    EXPECT_EQ(b.successes, 0u);
}

TEST(CallBack, ErrorsNeverWinTheRace) {
    reset_registry({scripted("a", {fail(10, DriverErrorKind::network)}),
                    scripted("b", {reply(100, "beta")})});
    auto out = DriverManager::instance().call_back(user_request("q"), TargetSelector::any());
    ASSERT_TRUE(out.winner);
    EXPECT_EQ(out.winner->str(), "b");
    EXPECT_EQ(out.winning_response()->content, "beta");
    EXPECT_EQ(error_of(out, "a").kind, DriverErrorKind::network);
}

TEST(CallBack, AllFailuresLeaveNoWinner) {
    reset_registry({scripted("a", {fail(5, DriverErrorKind::network)}),
                    scripted("b", {fail(10, DriverErrorKind::rate_limit)})});
    auto out = DriverManager::instance().call_back(user_request("q"), TargetSelector::any());
    EXPECT_FALSE(out.winner);
    EXPECT_EQ(out.errors().size(), 2u);
    EXPECT_EQ(error_of(out, "b").kind, DriverErrorKind::rate_limit);
}

TEST(FetchAll, CollectsEveryDriverConcurrentlyInRegistrationOrder) {
    reset_registry({scripted("a", {reply(200, "alpha")}), scripted("b", {reply(50, "beta")})});
    FanoutOutcome out;
    auto elapsed = wall_ms(
        [&] { out = DriverManager::instance().fetch_all(user_request("q"), TargetSelector::any()); });
    EXPECT_EQ(out.mode, FanoutMode::all);
    EXPECT_FALSE(out.winner);
    ASSERT_EQ(out.results.size(), 2u);
    EXPECT_EQ(out.results[0].first.str(), "a");
    EXPECT_EQ(out.results[1].first.str(), "b");
    EXPECT_EQ(response_of(out, "a").content, "alpha");
    EXPECT_EQ(response_of(out, "b").content, "beta");
    EXPECT_GE(elapsed, 200);
    EXPECT_LT(elapsed, 300);
}

TEST(FetchAll, IsolatesPerDriverErrors) {
    reset_registry({scripted("a", {fail(0, DriverErrorKind::timeout)}), scripted("b", {reply(0, "beta")})});
    auto out = DriverManager::instance().fetch_all(user_request("q"), TargetSelector::any());
    EXPECT_EQ(error_of(out, "a").kind, DriverErrorKind::timeout);
    EXPECT_EQ(response_of(out, "b").content, "beta");
}

TEST(FetchAll, SingleTargetEquivalentToSend) {
    reset_registry({scripted("a", {reply(0, "alpha")}), scripted("b", {reply(0, "beta")})});
    auto out = DriverManager::instance().fetch_all(user_request("q"),
                                                   TargetSelector::of({DriverId("b")}));
    ASSERT_EQ(out.results.size(), 1u);
    EXPECT_EQ(response_of(out, "b").content, "beta");
    EXPECT_EQ(scripted_driver("a")->calls(), 0u);
}

TEST(FetchAll, EachRequestCounterAdvancesByOne) {
    reset_registry({scripted("a", {reply(0, "1")}), scripted("b", {reply(0, "2")}),
                    scripted("c", {fail(0, DriverErrorKind::network)})});
    auto& m = DriverManager::instance();
    m.fetch_all(user_request("q"), TargetSelector::any());
    for (auto id : {"a", "b", "c"}) EXPECT_EQ(m.activity(DriverId(id)).requests, 1u);
    EXPECT_EQ(m.activity(DriverId("c")).errors, 1u);
}

TEST(FetchAll, CompletenessUnderRandomScripts) {
    std::mt19937 rng(21);
    for (int iter = 0; iter < 30; ++iter) {
        std::vector<DriverConfig> drivers;
        const int n = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < n; ++i) {
            int delay = static_cast<int>(rng() % 15);
            drivers.push_back(scripted("d" + std::to_string(i),
                                       {rng() % 3 == 0 ? fail(delay, DriverErrorKind::network)
                                                       : reply(delay, "r" + std::to_string(i))}));
        }
        reset_registry(drivers);
        auto out = DriverManager::instance().fetch_all(user_request("q"), TargetSelector::any());
        ASSERT_EQ(out.results.size(), static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) EXPECT_EQ(out.results[i].first.str(), "d" + std::to_string(i));
    }
}

TEST(CallBack, WinnerIsMinimumDelayTarget) {
    std::mt19937 rng(5);
    for (int iter = 0; iter < 15; ++iter) {
        std::vector<int> delays{0, 25, 50, 75};
        std::shuffle(delays.begin(), delays.end(), rng);
        std::vector<DriverConfig> drivers;
        for (std::size_t i = 0; i < delays.size(); ++i) {
            drivers.push_back(scripted("d" + std::to_string(i), {reply(delays[i], "r")}));
        }
        reset_registry(drivers);
        auto out = DriverManager::instance().call_back(user_request("q"), TargetSelector::any());
        auto fastest = std::min_element(delays.begin(), delays.end()) - delays.begin();
        ASSERT_TRUE(out.winner);
        EXPECT_EQ(out.winner->str(), "d" + std::to_string(fastest));
        EXPECT_EQ(out.results.size(), delays.size());
    }
}

TEST(DriverManager, ConcurrentFanoutsDoNotSerialize) {
    reset_registry({scripted("a", {reply(150, "alpha")}), scripted("b", {reply(150, "beta")})});
    auto elapsed = wall_ms([] {
        std::vector<std::jthread> callers;
        for (int i = 0; i < 4; ++i) {
            callers.emplace_back([] {
                DriverManager::instance().fetch_all(user_request("q"), TargetSelector::any());
            });
        }
    });
    EXPECT_LT(elapsed, 400);
    EXPECT_EQ(DriverManager::instance().activity(DriverId("a")).requests, 4u);
}
