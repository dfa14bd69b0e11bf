#include "support.hpp"

#include "multimind/prompt.hpp"
#include "multimind/tasks.hpp"

#include <gtest/gtest.h>

using namespace multimind;
using namespace multimind::test;

TEST(RenderPrompt, SubstitutesEveryPlaceholder) {
    PromptTemplate t("", "Comment this {{lang}} code:\n{{code}}");
    auto messages = render_prompt(t, {{"lang", "java"}, {"code", "int f(){}"}});
    ASSERT_EQ(messages.size(), 1u);
    EXPECT_EQ(messages[0].role, Role::user);
    EXPECT_EQ(messages[0].content, "Comment this java code:\nint f(){}");
}

TEST(RenderPrompt, MissingBindingIsNamed) {
    PromptTemplate t("", "Comment this {{lang}} code:\n{{code}}");
    try {
        render_prompt(t, {{"lang", "java"}});
        FAIL() << "expected error";
    } catch (const InvariantError& e) {
        EXPECT_NE(std::string(e.what()).find("code"), std::string::npos);
    }
}

TEST(RenderPrompt, ValuesAreInsertedLiterally) {
    PromptTemplate t("", "{{code}} in {{lang}}");
    auto messages = render_prompt(t, {{"lang", "java"}, {"code", "{{lang}}"}});
    EXPECT_EQ(messages[0].content, "{{lang}} in java");
}

TEST(RenderPrompt, SystemMessageFirstWhenPresent) {
    PromptTemplate t("You write {{lang}}.", "Do {{task}}");
    auto messages = render_prompt(t, {{"lang", "go"}, {"task", "it"}});
    ASSERT_EQ(messages.size(), 2u);
    EXPECT_EQ(messages[0].role, Role::system);
    EXPECT_EQ(messages[0].content, "You write go.");
    EXPECT_EQ(messages[1].content, "Do it");
}

TEST(PromptTemplate, RejectsStrayBraces) {
    EXPECT_THROW(PromptTemplate("", "oops {{ not a name }}"), InvariantError);
    EXPECT_THROW(PromptTemplate("", "unterminated {{name"), InvariantError);
    EXPECT_NO_THROW(PromptTemplate("", "single { brace } is fine"));
}

TEST(PromptTemplate, ParsesSectionedFiles) {
    auto t = PromptTemplate::parse("[system]\nSys {{a}}\n\n[user]\nUser {{b}}\nline two\n");
    EXPECT_EQ(t.system_text(), "Sys {{a}}");
    EXPECT_EQ(t.user_text(), "User {{b}}\nline two");
    EXPECT_EQ(t.placeholders(), (std::set<std::string>{"a", "b"}));

    auto bare = PromptTemplate::parse("Just {{x}}");
    EXPECT_TRUE(bare.system_text().empty());
    EXPECT_EQ(bare.user_text(), "Just {{x}}");
    EXPECT_THROW(PromptTemplate::parse("[system]\nonly system\n"), InvariantError);
}

TEST(PromptTemplate, ShippedPromptsDeclareTheirPlaceholders) {
    auto names = [](std::string_view id) {
        return PromptTemplate::parse(builtin_prompt_text(id)).placeholders();
    };
    EXPECT_EQ(names("comment"), (std::set<std::string>{"lang", "code", "feedback"}));
    EXPECT_EQ(names("doc_quality"), (std::set<std::string>{"lang", "code", "comment"}));
    EXPECT_EQ(names("generate"), (std::set<std::string>{"lang", "spec"}));
    EXPECT_EQ(names("doc_review"), (std::set<std::string>{"lang", "code", "current_doc", "feedback"}));
    // The compiled-in text is the file under prompts/.
    EXPECT_EQ(builtin_prompt_text("comment"), read_file(source_dir / "prompts/comment.txt"));
}

TEST(RenderPrompt, SoundForRandomTemplates) {
    std::mt19937 rng(99);
    const std::string alphabet = "abc xyz{}\n:_-";
    auto random_text = [&](std::size_t max) {
        std::string s(rng() % max, ' ');
        for (auto& c : s) c = alphabet[rng() % alphabet.size()];
        return s;
    };
    for (int i = 0; i < 500; ++i) {
        // Build a template from literal chunks and placeholders; literal chunks
        // never contain "{{".
        std::string text;
        Bindings bindings;
        const int parts = 1 + static_cast<int>(rng() % 6);
        for (int p = 0; p < parts; ++p) {
            std::string chunk = random_text(8);
            while (chunk.find("{{") != std::string::npos) chunk.erase(chunk.find("{{"), 1);
            if (!text.empty() && text.back() == '{' && !chunk.empty() && chunk.front() == '{') {
                chunk.front() = 'q';
            }
            if (!text.empty() && text.back() == '{' && chunk.empty()) chunk = "q";
            text += chunk;
            if (rng() % 2) {
                if (!text.empty() && text.back() == '{') text += "q";
                std::string name = "p" + std::to_string(rng() % 4);
                text += "{{" + name + "}}";
                std::string value = "v" + std::to_string(rng() % 1000) + "!";
                bindings[name] = value;
            }
        }
        PromptTemplate t("", text.empty() ? "x" : text);
        auto out = render_prompt(t, bindings).back().content;
        EXPECT_EQ(out.find("{{"), std::string::npos) << text;
        for (const auto& [name, value] : bindings) {
            EXPECT_NE(out.find(value), std::string::npos) << name;
        }
    }
}
