#pragma once

#include <string>
#include <vector>

#include "cgqa/text.hpp"

namespace cgqa {

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant"
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

// Few-shot prefixes for the three LLM-function problem families. Shipped as
// a prompt asset (assets/prompts/llm_function.json); the built-in fallback
// carries only the system lines.
struct LlmFunctionPrompts {
    std::vector<ChatMessage> multiple_choice;
    std::vector<ChatMessage> extremum;
    std::vector<ChatMessage> comparison;

    static const LlmFunctionPrompts& builtin() {
        static const LlmFunctionPrompts p = [] {
            LlmFunctionPrompts prompts;
            prompts.multiple_choice = {
                {"system", "Answer questions based on the information provided."}};
            prompts.extremum = {
                {"system",
                 "You are a helpful assistant. If the data format provided is complex, use "
                 "common sense.\nPlease enclose the final answer in quotation marks for ease "
                 "of extraction."}};
            prompts.comparison = {{"system", "You are a helpful assistant."}};
            return prompts;
        }();
        return p;
    }
};

namespace reply_extract {

inline std::string last_nonempty_line(const std::string& reply) {
    auto lines = split(reply, '\n');
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        std::string t = trim(*it);
        if (!t.empty()) return t;
    }
    return trim(reply);
}

// The final answer of an extremum exchange arrives in quotation marks.
// Falls back to the last non-empty line when the model forgot the quotes.
inline std::string quoted_answer(const std::string& reply) {
    for (size_t j = reply.size(); j-- > 0;) {
        char q = reply[j];
        if (q != '\'' && q != '"') continue;
        bool closes = j + 1 == reply.size() || !std::isalnum(static_cast<unsigned char>(reply[j + 1]));
        if (!closes) continue;
        for (size_t i = j; i-- > 0;) {
            if (reply[i] != q) continue;
            bool opens = i == 0 || reply[i - 1] == ' ' || reply[i - 1] == '\n' || reply[i - 1] == '(';
            if (!opens) continue;
            std::string span = trim(reply.substr(i + 1, j - i - 1));
            if (!span.empty()) return span;
        }
    }
    return last_nonempty_line(reply);
}

// Comparison exchanges list winning row markers on the final line:
// "... are [line_6], [line_1], [line_4], and [line_7]."
inline std::vector<std::string> bracketed_markers(const std::string& line) {
    std::vector<std::string> out;
    size_t i = 0;
    while ((i = line.find('[', i)) != std::string::npos) {
        auto j = line.find(']', i);
        if (j == std::string::npos) break;
        std::string inner = trim(line.substr(i + 1, j - i - 1));
        if (!inner.empty()) out.push_back(inner);
        i = j + 1;
    }
    return out;
}

inline std::vector<std::string> comparison_answers(const std::string& reply) {
    std::string line = last_nonempty_line(reply);
    auto markers = bracketed_markers(line);
    if (!markers.empty()) return markers;
    // no markers: fall back to quoted spans, then the bare line
    std::vector<std::string> quoted;
    size_t i = 0;
    while (i < line.size()) {
        char q = line[i];
        if (q == '\'' || q == '"') {
            auto j = line.find(q, i + 1);
            if (j == std::string::npos) break;
            std::string span = trim(line.substr(i + 1, j - i - 1));
            if (!span.empty()) quoted.push_back(span);
            i = j + 1;
        } else {
            ++i;
        }
    }
    if (!quoted.empty()) return quoted;
    return {line};
}

} // namespace reply_extract

} // namespace cgqa
