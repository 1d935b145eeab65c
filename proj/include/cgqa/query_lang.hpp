#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cgqa/errors.hpp"
#include "cgqa/text.hpp"
#include "cgqa/values.hpp"

namespace cgqa {

// Reference to the output of an earlier step: output_of_queryN.
struct StepRef {
    int index = 0;
    bool operator==(const StepRef&) const = default;
};

using ArgPayload = std::variant<std::string, StepRef>; // literal text or reference

struct Argument {
    std::string name;                  // empty for positional arguments
    ComparisonOp op = ComparisonOp::eq;
    ArgPayload payload;

    bool is_ref() const { return std::holds_alternative<StepRef>(payload); }
    const std::string& literal() const { return std::get<std::string>(payload); }
    StepRef ref() const { return std::get<StepRef>(payload); }

    bool operator==(const Argument& o) const {
        return name == o.name && op == o.op && payload == o.payload;
    }
};

struct FunctionCall {
    std::string name; // lower-cased for known functions, verbatim otherwise
    std::vector<Argument> args;
    std::string raw;  // original call text, kept for unknown functions
    bool known = false;

    bool operator==(const FunctionCall& o) const {
        if (known != o.known) return false;
        if (!known) return raw == o.raw;
        return name == o.name && args == o.args;
    }
};

struct QueryStep {
    int label = 0;          // N of QueryN
    FunctionCall call;
    std::string step_text;  // the StepN rationale line, when present

    bool operator==(const QueryStep& o) const {
        return label == o.label && call == o.call; // rationale text is not structure
    }
};

struct LlmQueryProgram {
    std::vector<QueryStep> steps;
    std::string source_text;

    bool operator==(const LlmQueryProgram& o) const { return steps == o.steps; }
};

inline const std::set<std::string>& known_functions() {
    static const std::set<std::string> fns = {
        "get_information", "set_intersection", "set_union", "set_difference",
        "set_negation",    "keep",             "mean",      "max",
        "min",             "count",            "previous_row", "next_row"};
    return fns;
}

inline const std::set<std::string>& known_argument_names() {
    static const std::set<std::string> names = {
        "head_entity", "relation", "tail_entity", "key", "value",
        "set",         "set1",     "set2",        "set3", "op"};
    return names;
}

namespace query_detail {

inline std::optional<int> match_labeled_line(std::string_view line, std::string_view word,
                                             std::string& rest) {
    size_t i = 0;
    while (i < line.size() && is_space(line[i])) ++i;
    std::string folded = fold_case(line.substr(i, word.size()));
    if (folded != word) return std::nullopt;
    i += word.size();
    size_t digits_begin = i;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    if (i == digits_begin) return std::nullopt;
    int n = 0;
    for (size_t j = digits_begin; j < i; ++j) n = n * 10 + (line[j] - '0');
    while (i < line.size() && is_space(line[i])) ++i;
    if (i >= line.size() || line[i] != ':') return std::nullopt;
    rest = trim(line.substr(i + 1));
    return n;
}

// closing quote = same quote char whose next non-space is a delimiter
inline size_t find_closing_quote(std::string_view s, size_t open) {
    char q = s[open];
    for (size_t j = open + 1; j < s.size(); ++j) {
        if (s[j] != q) continue;
        size_t k = j + 1;
        while (k < s.size() && is_space(s[k])) ++k;
        if (k == s.size() || s[k] == ',' || s[k] == ')') return j;
    }
    return std::string_view::npos;
}

inline std::vector<std::string> split_arguments(std::string_view inner) {
    std::vector<std::string> segments;
    size_t start = 0, i = 0;
    while (i < inner.size()) {
        char c = inner[i];
        if (c == '\'' || c == '"') {
            size_t close = find_closing_quote(inner, i);
            i = close == std::string_view::npos ? inner.size() : close + 1;
        } else if (c == ',') {
            segments.emplace_back(inner.substr(start, i - start));
            start = ++i;
        } else {
            ++i;
        }
    }
    segments.emplace_back(inner.substr(start));
    return segments;
}

inline std::optional<StepRef> match_step_ref(std::string_view value) {
    std::string v = fold_case(trim(value));
    std::string_view s = v;
    if (!starts_with(s, "output_of_query")) return std::nullopt;
    s.remove_prefix(15);
    if (!s.empty() && s.front() == '_') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    int n = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        n = n * 10 + (c - '0');
    }
    return StepRef{n};
}

inline ArgPayload parse_payload(std::string_view raw_value) {
    std::string v = trim(raw_value);
    if (v.size() >= 2 && (v.front() == '\'' || v.front() == '"') && v.back() == v.front())
        v = trim(std::string_view(v).substr(1, v.size() - 2));
    if (auto ref = match_step_ref(v)) return *ref;
    return v;
}

// name OP value, or a positional value when no top-level operator exists
inline Argument parse_argument(std::string_view segment, int label) {
    Argument arg;
    size_t i = 0;
    while (i < segment.size()) {
        char c = segment[i];
        if (c == '\'' || c == '"') break; // quoted value: whatever came before is the name
        if (c == '=' || c == '<' || c == '>') break;
        ++i;
    }
    if (i == segment.size()) { // bare positional value
        arg.payload = parse_payload(segment);
        return arg;
    }
    if (segment[i] == '\'' || segment[i] == '"') {
        std::string before = trim(segment.substr(0, i));
        if (!before.empty())
            throw_error(Errc::malformed_call,
                        "Query" + std::to_string(label) + ": missing operator before quoted value at offset " +
                            std::to_string(i));
        arg.payload = parse_payload(segment);
        return arg;
    }
    arg.name = trim(segment.substr(0, i));
    size_t op_len = 1;
    if ((segment[i] == '<' || segment[i] == '>') && i + 1 < segment.size() && segment[i + 1] == '=')
        op_len = 2;
    auto op = parse_comparison_op(segment.substr(i, op_len));
    if (!op)
        throw_error(Errc::malformed_call,
                    "Query" + std::to_string(label) + ": bad operator at offset " + std::to_string(i));
    arg.op = *op;
    arg.payload = parse_payload(segment.substr(i + op_len));
    return arg;
}

inline FunctionCall parse_call(std::string_view text, int label) {
    std::string call_text = trim(text);
    // tolerate stray wrapping quotes around the whole call
    while (!call_text.empty() && (call_text.front() == '"' || call_text.front() == '\''))
        call_text = trim(std::string_view(call_text).substr(1));
    while (!call_text.empty() && (call_text.back() == '"' || call_text.back() == '\''))
        call_text = trim(std::string_view(call_text).substr(0, call_text.size() - 1));

    FunctionCall call;
    call.raw = call_text;
    auto open = call_text.find('(');
    auto close = call_text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw_error(Errc::malformed_call,
                    "Query" + std::to_string(label) + ": expected name(arguments)");
    std::string name = trim(std::string_view(call_text).substr(0, open));
    if (name.empty())
        throw_error(Errc::malformed_call, "Query" + std::to_string(label) + ": empty function name");
    std::string folded = fold_case(name);
    call.known = known_functions().count(folded) > 0;
    call.name = call.known ? folded : name;

    std::string inner = trim(std::string_view(call_text).substr(open + 1, close - open - 1));
    if (!inner.empty()) {
        for (const auto& segment : split_arguments(inner)) {
            if (trim(segment).empty()) {
                if (call.known)
                    throw_error(Errc::malformed_call,
                                "Query" + std::to_string(label) + ": empty argument");
                continue;
            }
            call.args.push_back(parse_argument(segment, label));
        }
    }

    if (call.known) {
        for (const auto& arg : call.args) {
            if (arg.name.empty())
                throw_error(Errc::malformed_call,
                            "Query" + std::to_string(label) + ": positional argument in " + call.name);
            if (!known_argument_names().count(arg.name))
                throw_error(Errc::malformed_call,
                            "Query" + std::to_string(label) + ": unknown argument '" + arg.name + "'");
            if (arg.op != ComparisonOp::eq && arg.name != "tail_entity" && arg.name != "value")
                throw_error(Errc::malformed_call,
                            "Query" + std::to_string(label) + ": operator not allowed on '" +
                                arg.name + "'");
        }
    }
    return call;
}

} // namespace query_detail

// Parses raw LLM output. Step lines become per-step rationale text, prose is
// ignored, every QueryN line must carry one function call. One malformed
// step fails the whole sample; self-consistency and retry deal with it.
inline LlmQueryProgram parse_program(const std::string& text) {
    LlmQueryProgram program;
    program.source_text = text;
    std::map<int, std::string> step_texts;

    for (const auto& line : split(text, '\n')) {
        std::string rest;
        if (auto n = query_detail::match_labeled_line(line, "step", rest)) {
            step_texts[*n] = rest;
            continue;
        }
        if (auto n = query_detail::match_labeled_line(line, "query", rest)) {
            QueryStep step;
            step.label = *n;
            step.call = query_detail::parse_call(rest, *n);
            program.steps.push_back(std::move(step));
        }
    }
    if (program.steps.empty())
        throw_error(Errc::no_query_found, "no QueryN lines in sample");

    int expected = 1;
    for (auto& step : program.steps) {
        if (step.label != expected)
            throw_error(Errc::malformed_call,
                        "Query" + std::to_string(step.label) + ": expected Query" +
                            std::to_string(expected));
        ++expected;
        auto it = step_texts.find(step.label);
        if (it != step_texts.end()) step.step_text = it->second;
        for (const auto& arg : step.call.args) {
            if (arg.is_ref() && arg.ref().index >= step.label)
                throw_error(Errc::forward_reference,
                            "Query" + std::to_string(step.label) + " references output_of_query" +
                                std::to_string(arg.ref().index));
            if (arg.is_ref() && arg.ref().index < 1)
                throw_error(Errc::malformed_call,
                            "Query" + std::to_string(step.label) + " references step 0");
        }
    }
    return program;
}

inline std::string render_argument(const Argument& arg) {
    std::string out = arg.name;
    if (!arg.name.empty()) out += op_symbol(arg.op);
    if (arg.is_ref())
        out += "'output_of_query" + std::to_string(arg.ref().index) + "'";
    else
        out += "'" + arg.literal() + "'";
    return out;
}

inline std::string render_call(const FunctionCall& call) {
    if (!call.known) return call.raw;
    std::string out = call.name + "(";
    for (size_t i = 0; i < call.args.size(); ++i) {
        if (i) out += ", ";
        out += render_argument(call.args[i]);
    }
    out += ")";
    return out;
}

// Canonical text: one QueryN line per step. parse(render(p)) == p, and two
// samples that differ only in rationale prose render identically, which is
// what majority voting groups on.
inline std::string render_program(const LlmQueryProgram& program) {
    std::string out;
    for (const auto& step : program.steps) {
        if (!out.empty()) out += '\n';
        out += "Query" + std::to_string(step.label) + ": \"" + render_call(step.call) + "\"";
    }
    return out;
}

} // namespace cgqa
