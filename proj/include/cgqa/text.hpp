#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cgqa {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

// ASCII case fold; multi-byte UTF-8 sequences pass through untouched.
inline std::string fold_case(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline std::string normalized_eq_key(std::string_view s) {
    return fold_case(trim(s));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

// Row markers are stored as "line_N", optionally carrying a table prefix
// ("t2:line_7") in pooled multi-table graphs.
struct LineMarker {
    std::string prefix; // empty when the graph holds a single table
    long row = 0;
};

inline std::optional<LineMarker> parse_line_marker(std::string_view label) {
    LineMarker m;
    auto colon = label.rfind(':');
    std::string_view core = label;
    if (colon != std::string_view::npos) {
        m.prefix = std::string(label.substr(0, colon));
        core = label.substr(colon + 1);
    }
    if (!starts_with(core, "line_")) return std::nullopt;
    std::string_view digits = core.substr(5);
    if (digits.empty()) return std::nullopt;
    long row = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') return std::nullopt;
        row = row * 10 + (c - '0');
    }
    m.row = row;
    return m;
}

inline std::string render_line_marker(const LineMarker& m) {
    std::string out;
    if (!m.prefix.empty()) { out += m.prefix; out += ':'; }
    out += "line_";
    out += std::to_string(m.row);
    return out;
}

// Line markers display bracketed in prompts and traces; storage keeps the
// bare label.
inline std::string display_label(const std::string& label) {
    if (parse_line_marker(label)) return "[" + label + "]";
    return label;
}

inline std::string strip_brackets(std::string_view s) {
    auto t = trim(s);
    if (t.size() >= 2 && t.front() == '[' && t.back() == ']')
        return std::string(t.substr(1, t.size() - 2));
    return t;
}

} // namespace cgqa
