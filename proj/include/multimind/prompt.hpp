#pragma once

#include "multimind/types.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace multimind {

using Bindings = std::map<std::string, std::string, std::less<>>;

// System and user text with {{name}} placeholders. Placeholder names are
// [A-Za-z0-9_]+; any other "{{" in a template is rejected at parse time so
// that a complete binding always renders without leftover braces.
class PromptTemplate {
public:
    PromptTemplate() = default;
    PromptTemplate(std::string system_text, std::string user_text);

    // Parses the prompt file format: an optional "[system]" section followed
    // by a "[user]" section, each header on its own line. A file without
    // headers is all user text.
    static PromptTemplate parse(std::string_view file_text);

    const std::string& system_text() const noexcept { return system_; }
    const std::string& user_text() const noexcept { return user_; }
    const std::set<std::string>& placeholders() const noexcept { return required_; }
    bool empty() const noexcept { return system_.empty() && user_.empty(); }

private:
    std::string system_;
    std::string user_;
    std::set<std::string> required_;
};

// Literal single-pass substitution; values are never re-expanded. Throws
// InvariantError naming the first placeholder without a binding.
std::string render_text(std::string_view text, const Bindings& bindings);

// Renders into [system?, user] messages. The system message is omitted when
// its rendered text is empty.
std::vector<Message> render_prompt(const PromptTemplate& tmpl, const Bindings& bindings);

} // namespace multimind
