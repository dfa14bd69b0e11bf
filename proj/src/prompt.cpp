#include "multimind/prompt.hpp"

#include <cctype>

namespace multimind {

namespace {

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Calls on_text / on_placeholder for each segment of text. Returns false on
// a "{{" that does not start a well-formed placeholder.
template <typename OnText, typename OnPlaceholder>
bool scan(std::string_view text, OnText on_text, OnPlaceholder on_placeholder) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            on_text(text.substr(pos));
            return true;
        }
        on_text(text.substr(pos, open - pos));
        auto name_start = open + 2;
        auto name_end = name_start;
        while (name_end < text.size() && is_name_char(text[name_end])) ++name_end;
        if (name_end == name_start || text.substr(name_end, 2) != "}}") return false;
        on_placeholder(text.substr(name_start, name_end - name_start));
        pos = name_end + 2;
    }
    return true;
}

void collect(std::string_view text, std::set<std::string>& names, std::string_view section) {
    bool ok = scan(text, [](std::string_view) {},
                   [&](std::string_view name) { names.emplace(name); });
    if (!ok) {
        throw InvariantError("malformed placeholder in " + std::string(section) +
                             " template text");
    }
}

std::string_view trim_line(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
        line.remove_suffix(1);
    }
    return line;
}

} // namespace

PromptTemplate::PromptTemplate(std::string system_text, std::string user_text)
    : system_(std::move(system_text)), user_(std::move(user_text)) {
    collect(system_, required_, "system");
    collect(user_, required_, "user");
}

PromptTemplate PromptTemplate::parse(std::string_view file_text) {
    std::string system;
    std::string user;
    std::string* current = &user;
    std::size_t pos = 0;
    while (pos <= file_text.size()) {
        auto nl = file_text.find('\n', pos);
        auto line = file_text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                         : nl - pos);
        auto header = trim_line(line);
        if (header == "[system]") {
            current = &system;
        } else if (header == "[user]") {
            current = &user;
        } else {
            current->append(line);
            if (nl != std::string_view::npos) current->push_back('\n');
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    auto strip = [](std::string& s) {
        while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
        std::size_t lead = 0;
        while (lead < s.size() && (s[lead] == '\n' || s[lead] == '\r')) ++lead;
        s.erase(0, lead);
    };
    strip(system);
    strip(user);
    if (user.empty()) throw InvariantError("prompt template has no user text");
    return PromptTemplate(std::move(system), std::move(user));
}

std::string render_text(std::string_view text, const Bindings& bindings) {
    std::string out;
    out.reserve(text.size());
    bool ok = scan(
        text, [&](std::string_view chunk) { out.append(chunk); },
        [&](std::string_view name) {
            auto it = bindings.find(name);
            if (it == bindings.end()) {
                throw InvariantError("missing binding for placeholder '" + std::string(name) + "'");
            }
            out.append(it->second);
        });
    if (!ok) throw InvariantError("malformed placeholder in template text");
    return out;
}

std::vector<Message> render_prompt(const PromptTemplate& tmpl, const Bindings& bindings) {
    for (const auto& name : tmpl.placeholders()) {
        if (!bindings.contains(name)) {
            throw InvariantError("missing binding for placeholder '" + name + "'");
        }
    }
    std::vector<Message> messages;
    auto system = render_text(tmpl.system_text(), bindings);
    if (!system.empty()) messages.push_back({Role::system, std::move(system)});
    messages.push_back({Role::user, render_text(tmpl.user_text(), bindings)});
    return messages;
}

} // namespace multimind
