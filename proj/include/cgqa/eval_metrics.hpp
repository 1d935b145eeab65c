#pragma once

#include <set>
#include <string>
#include <vector>

#include "cgqa/text.hpp"
#include "cgqa/values.hpp"

namespace cgqa {

// Answer normalization for metric comparison: trim, strip one layer of
// surrounding quotes, case-fold, canonicalize numbers ("3.0" == "3",
// thousands separators dropped).
inline std::string normalize_answer(const std::string& raw) {
    std::string s = trim(raw);
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        s = trim(std::string_view(s).substr(1, s.size() - 2));
    if (auto n = canonical_number(s)) return *n;
    return fold_case(s);
}

inline std::set<std::string> normalized_set(const std::vector<std::string>& values) {
    std::set<std::string> out;
    for (const auto& v : values) out.insert(normalize_answer(v));
    return out;
}

// set-level equivalence
inline bool denotation_match(const std::vector<std::string>& predicted,
                             const std::vector<std::string>& gold) {
    return normalized_set(predicted) == normalized_set(gold);
}

// first prediction (the executor orders answers lexicographically) is in gold
inline bool hits_at_1(const std::vector<std::string>& predicted,
                      const std::vector<std::string>& gold) {
    if (predicted.empty()) return false;
    return normalized_set(gold).count(normalize_answer(predicted.front())) > 0;
}

// predictions count as correct when they include every labeled answer
inline bool set_comparison_match(const std::vector<std::string>& predicted,
                                 const std::vector<std::string>& gold) {
    auto p = normalized_set(predicted);
    for (const auto& g : normalized_set(gold))
        if (!p.count(g)) return false;
    return true;
}

} // namespace cgqa
