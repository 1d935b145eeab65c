#pragma once

#include <charconv>
#include <compare>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

#include "cgqa/errors.hpp"
#include "cgqa/text.hpp"

namespace cgqa {

enum class ComparisonOp { less, less_eq, eq, greater_eq, greater };

inline std::optional<ComparisonOp> parse_comparison_op(std::string_view s) {
    if (s == "<") return ComparisonOp::less;
    if (s == "<=") return ComparisonOp::less_eq;
    if (s == "=" || s == "==") return ComparisonOp::eq;
    if (s == ">=") return ComparisonOp::greater_eq;
    if (s == ">") return ComparisonOp::greater;
    return std::nullopt;
}

inline std::string_view op_symbol(ComparisonOp op) {
    switch (op) {
        case ComparisonOp::less: return "<";
        case ComparisonOp::less_eq: return "<=";
        case ComparisonOp::eq: return "=";
        case ComparisonOp::greater_eq: return ">=";
        case ComparisonOp::greater: return ">";
    }
    return "=";
}

namespace detail {

// One optional currency mark before the digits. WikiSQL cells carry "$",
// UTF-8 marks cover the common European/Asian ones.
inline std::string_view strip_currency(std::string_view s) {
    static constexpr std::string_view marks[] = {"$", "€", "£", "¥"};
    for (auto m : marks)
        if (starts_with(s, m)) return s.substr(m.size());
    return s;
}

} // namespace detail

// Numbers: optional sign and currency mark, thousands separators between
// digits, decimal point. Anything with leftover text ("2.9 (21)", "6-4") is
// not a number.
inline std::optional<double> parse_number(std::string_view raw) {
    std::string t = trim(raw);
    if (t.empty()) return std::nullopt;
    std::string_view s = t;
    bool neg = false;
    if (s.front() == '+' || s.front() == '-') {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    s = detail::strip_currency(s);
    if (s.empty()) return std::nullopt;

    std::string digits;
    digits.reserve(s.size());
    bool seen_digit = false, seen_point = false;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c >= '0' && c <= '9') {
            digits += c;
            seen_digit = true;
        } else if (c == ',') {
            // grouping separator: digits on both sides only
            if (i == 0 || i + 1 == s.size()) return std::nullopt;
            if (!(s[i - 1] >= '0' && s[i - 1] <= '9')) return std::nullopt;
            if (!(s[i + 1] >= '0' && s[i + 1] <= '9')) return std::nullopt;
            if (seen_point) return std::nullopt;
        } else if (c == '.') {
            if (seen_point) return std::nullopt;
            seen_point = true;
            digits += c;
        } else {
            return std::nullopt;
        }
    }
    if (!seen_digit) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
    return neg ? -value : value;
}

struct CivilDate {
    int year = 0, month = 0, day = 0;
    auto operator<=>(const CivilDate&) const = default;
};

// ISO-style dates: YYYY-MM-DD or YYYY-MM (also '/' separated). A bare year
// is a number, not a date.
inline std::optional<CivilDate> parse_date(std::string_view raw) {
    std::string t = trim(raw);
    auto read_int = [](std::string_view s, int& out) {
        if (s.empty() || s.size() > 4) return false;
        int v = 0;
        for (char c : s) {
            if (c < '0' || c > '9') return false;
            v = v * 10 + (c - '0');
        }
        out = v;
        return true;
    };
    char sep = t.find('-') != std::string::npos ? '-'
             : t.find('/') != std::string::npos ? '/' : '\0';
    if (sep == '\0') return std::nullopt;
    auto parts = split(t, sep);
    if (parts.size() != 2 && parts.size() != 3) return std::nullopt;
    if (parts[0].size() != 4) return std::nullopt; // 4-digit year required
    CivilDate d;
    if (!read_int(parts[0], d.year)) return std::nullopt;
    if (!read_int(parts[1], d.month) || d.month < 1 || d.month > 12) return std::nullopt;
    if (parts.size() == 3) {
        if (!read_int(parts[2], d.day) || d.day < 1 || d.day > 31) return std::nullopt;
    }
    return d;
}

// Order comparisons hold on the numeric and date subdomains; "=" is plain
// text equality after trimming and case folding.
inline bool compare_values(ComparisonOp op, std::string_view val1, std::string_view val2) {
    if (op == ComparisonOp::eq)
        return normalized_eq_key(val1) == normalized_eq_key(val2);

    int ordering = 0;
    auto n1 = parse_number(val1);
    auto n2 = parse_number(val2);
    if (n1 && n2) {
        ordering = *n1 < *n2 ? -1 : (*n1 > *n2 ? 1 : 0);
    } else {
        auto d1 = parse_date(val1);
        auto d2 = parse_date(val2);
        if (d1 && d2) {
            ordering = *d1 < *d2 ? -1 : (*d2 < *d1 ? 1 : 0);
        } else {
            throw_error(Errc::incomparable_values,
                        "cannot order '" + std::string(val1) + "' against '" +
                            std::string(val2) + "'");
        }
    }
    switch (op) {
        case ComparisonOp::less: return ordering < 0;
        case ComparisonOp::less_eq: return ordering <= 0;
        case ComparisonOp::greater_eq: return ordering >= 0;
        case ComparisonOp::greater: return ordering > 0;
        case ComparisonOp::eq: return ordering == 0;
    }
    return false;
}

// Canonical rendering used by answer normalization: "3.0" and "3" agree,
// thousands separators drop.
inline std::optional<std::string> canonical_number(std::string_view s) {
    auto n = parse_number(s);
    if (!n) return std::nullopt;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10f", *n);
    std::string out(buf);
    auto point = out.find('.');
    size_t end = out.size();
    while (end > point && (out[end - 1] == '0')) --end;
    if (end > 0 && out[end - 1] == '.') --end;
    out.resize(end);
    if (out == "-0") out = "0";
    return out;
}

// Mean rendering: up to six decimals, trailing zeros trimmed.
inline std::string format_decimal(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    std::string out(buf);
    size_t end = out.size();
    auto point = out.find('.');
    while (end > point && out[end - 1] == '0') --end;
    if (end > 0 && out[end - 1] == '.') --end;
    out.resize(end);
    if (out == "-0") out = "0";
    return out;
}

} // namespace cgqa
