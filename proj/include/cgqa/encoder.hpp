#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cgqa/errors.hpp"
#include "cgqa/text.hpp"

namespace cgqa {

struct ScoredItem {
    std::string item;
    double score = 0.0;
};

// Immutable after build; queries are concurrent-safe. Results come back
// sorted by descending score with lexicographic tie-break.
class SimilarityIndex {
public:
    virtual ~SimilarityIndex() = default;

    virtual size_t size() const = 0;
    virtual std::vector<ScoredItem> top_similar(const std::string& query, size_t t) const = 0;
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;

    virtual std::string kind() const = 0;
    virtual std::unique_ptr<SimilarityIndex> build_index(std::vector<std::string> corpus) const = 0;
};

namespace encoder_detail {

using TrigramCounts = std::map<std::string, int>;

// character trigrams of the case-folded text; short strings contribute
// themselves so similarity(a, a) stays 1 for any non-empty a
inline TrigramCounts trigrams(const std::string& text) {
    TrigramCounts grams;
    std::string folded = fold_case(text);
    if (folded.size() < 3) {
        ++grams[folded];
        return grams;
    }
    for (size_t i = 0; i + 3 <= folded.size(); ++i) ++grams[folded.substr(i, 3)];
    return grams;
}

inline double norm(const TrigramCounts& grams) {
    double sum = 0;
    for (const auto& [g, c] : grams) sum += double(c) * c;
    return std::sqrt(sum);
}

inline double cosine(const TrigramCounts& a, double norm_a, const TrigramCounts& b, double norm_b) {
    if (norm_a == 0 || norm_b == 0) return 0.0;
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    double dot = 0;
    for (const auto& [g, c] : small) {
        auto it = large.find(g);
        if (it != large.end()) dot += double(c) * it->second;
    }
    return dot / (norm_a * norm_b);
}

inline std::vector<ScoredItem> rank_and_cut(std::vector<ScoredItem> scored, size_t t) {
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredItem& a, const ScoredItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.item < b.item;
    });
    if (scored.size() > t) scored.resize(t);
    return scored;
}

} // namespace encoder_detail

class LexicalIndex final : public SimilarityIndex {
public:
    explicit LexicalIndex(std::vector<std::string> corpus) : corpus_(std::move(corpus)) {
        grams_.reserve(corpus_.size());
        norms_.reserve(corpus_.size());
        for (const auto& item : corpus_) {
            grams_.push_back(encoder_detail::trigrams(item));
            norms_.push_back(encoder_detail::norm(grams_.back()));
        }
    }

    size_t size() const override { return corpus_.size(); }

    std::vector<ScoredItem> top_similar(const std::string& query, size_t t) const override {
        auto q = encoder_detail::trigrams(query);
        double qn = encoder_detail::norm(q);
        std::vector<ScoredItem> scored;
        scored.reserve(corpus_.size());
        for (size_t i = 0; i < corpus_.size(); ++i)
            scored.push_back({corpus_[i], encoder_detail::cosine(q, qn, grams_[i], norms_[i])});
        return encoder_detail::rank_and_cut(std::move(scored), t);
    }

private:
    std::vector<std::string> corpus_;
    std::vector<encoder_detail::TrigramCounts> grams_;
    std::vector<double> norms_;
};

// Built-in deterministic similarity: cosine over character-trigram
// multisets. Runs everywhere with zero network access; a remote dense
// encoder plugs in behind the same interface.
class LexicalEncoder final : public TextEncoder {
public:
    std::string kind() const override { return "lexical"; }

    std::unique_ptr<SimilarityIndex> build_index(std::vector<std::string> corpus) const override {
        if (corpus.empty())
            throw_error(Errc::no_candidates, "cannot index an empty corpus");
        return std::make_unique<LexicalIndex>(std::move(corpus));
    }
};

} // namespace cgqa
