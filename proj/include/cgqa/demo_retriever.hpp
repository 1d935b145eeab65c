#pragma once

#include <functional>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgqa/encoder.hpp"
#include "cgqa/eval_metrics.hpp"
#include "cgqa/executor.hpp"
#include "cgqa/prompt_assets.hpp"
#include "cgqa/query_lang.hpp"
#include "cgqa/translator.hpp"

namespace cgqa {

struct TrainingItem {
    std::string question;
    std::vector<std::string> gold_answers;
    std::map<std::string, std::string> metadata;
    std::string cached_program; // program text, empty when absent
};

// One few-shot example headed for the prompt: the rendered user turn and the
// program text answering it. `verified` means the program reproduced the
// gold answers on the training graph.
struct Demonstration {
    std::string question;
    std::string user_text;
    std::string assistant_text;
    bool verified = false;
    bool dynamic = false;
};

struct RetrieverConfig {
    size_t m = 15; // candidates ranked and tried
    size_t k = 8;  // demonstrations returned
    bool metadata_filter = false;
};

// Training data: JSONL of {question, answers: [...], metadata: {...},
// program?: "..."}.
inline std::vector<TrainingItem> load_training_jsonl(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw_error(Errc::io_error, "cannot open training data '" + path + "'");
    std::vector<TrainingItem> items;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw_error(Errc::parse_error,
                        "line " + std::to_string(line_no) + ": invalid JSON in '" + path + "'");
        TrainingItem item;
        item.question = j.value("question", "");
        for (const auto& a : j.value("answers", nlohmann::json::array()))
            item.gold_answers.push_back(a.get<std::string>());
        if (j.contains("metadata"))
            for (const auto& [key, value] : j["metadata"].items())
                item.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
        item.cached_program = j.value("program", "");
        items.push_back(std::move(item));
    }
    return items;
}

// Executes the program with the LLM function disabled and demands exact
// normalized set equality with the gold answers. Any failure is a plain
// "not verified".
inline bool verify_program(const TrainingItem& item, const LlmQueryProgram& program,
                           const Translator& translator, const Executor& executor) {
    try {
        auto [plan, report] = translator.translate(program);
        Answer answer = executor.execute(plan, {});
        return denotation_match(answer.rendered, item.gold_answers);
    } catch (...) {
        return false;
    }
}

// Verified programs keyed by (graph digest, training question) so repeated
// evaluation runs do not re-spend generation samples.
class VerificationCache {
public:
    struct Entry {
        std::string program_text;
        bool verified = false;
    };

    static std::string graph_digest(const ConditionGraph& graph) {
        std::ostringstream os;
        save_cg(graph, os);
        uint64_t h = 14695981039346656037ull;
        for (unsigned char c : os.str()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        char out[17];
        std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
        return out;
    }

    std::optional<Entry> get(const std::string& digest, const std::string& question) const {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(digest + "\x1f" + question);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    void put(const std::string& digest, const std::string& question, Entry entry) {
        std::lock_guard lock(mutex_);
        entries_[digest + "\x1f" + question] = std::move(entry);
    }

    void load(const std::string& path) {
        std::ifstream is(path);
        if (!is) return; // absent cache is an empty cache
        nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
        if (j.is_discarded()) return;
        std::lock_guard lock(mutex_);
        for (auto& [key, value] : j.items())
            entries_[key] = {value.value("program", ""), value.value("verified", false)};
    }

    void save(const std::string& path) const {
        nlohmann::json j = nlohmann::json::object();
        {
            std::lock_guard lock(mutex_);
            for (const auto& [key, entry] : entries_)
                j[key] = {{"program", entry.program_text}, {"verified", entry.verified}};
        }
        std::ofstream os(path);
        if (!os) throw_error(Errc::io_error, "cannot write cache '" + path + "'");
        os << j.dump(2) << '\n';
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_;
};

// Produces a program for a training question when no cached one exists;
// wired to generate_query by the caller. Returning nullopt skips the
// candidate.
using ProgramSource = std::function<std::optional<LlmQueryProgram>(const TrainingItem&)>;

// Dynamic demonstration retrieval: rank training questions by similarity
// (optionally after a metadata pre-filter), walk from most to least similar,
// keep candidates whose program provably answers them, stop at k, pad with
// initial demonstrations. Output length is always exactly k (or the initial
// pool size when that is smaller).
inline std::vector<Demonstration> retrieve_demonstrations(
    const std::string& question, const std::map<std::string, std::string>& metadata,
    const std::vector<TrainingItem>& train, const ConditionGraph& graph,
    const Translator& translator, const Executor& executor, const TextEncoder& encoder,
    const RetrieverConfig& config, const PromptTemplate& tmpl,
    const ProgramSource& program_source, VerificationCache* cache = nullptr) {
    std::vector<const TrainingItem*> pool;
    for (const auto& item : train) {
        if (config.metadata_filter) {
            bool matches = true;
            for (const auto& [key, value] : metadata) {
                auto it = item.metadata.find(key);
                if (it == item.metadata.end() || it->second != value) {
                    matches = false;
                    break;
                }
            }
            if (!matches) continue;
        }
        pool.push_back(&item);
    }

    std::vector<Demonstration> out;
    std::string digest = cache ? VerificationCache::graph_digest(graph) : "";

    if (!pool.empty()) {
        std::vector<std::string> questions;
        questions.reserve(pool.size());
        std::map<std::string, const TrainingItem*> by_question;
        for (const auto* item : pool) {
            questions.push_back(item->question);
            by_question.emplace(item->question, item);
        }
        auto index = encoder.build_index(std::move(questions));
        auto ranked = index->top_similar(question, config.m);
        for (const auto& scored : ranked) {
            if (out.size() >= config.k) break;
            const TrainingItem& item = *by_question.at(scored.item);
            if (item.question == question) continue; // never demonstrate with itself
            std::optional<LlmQueryProgram> program;
            bool from_cache = false;
            if (cache) {
                if (auto hit = cache->get(digest, item.question)) {
                    from_cache = true;
                    if (!hit->verified) continue; // known failure, budget saved
                    try {
                        program = parse_program(hit->program_text);
                    } catch (const Error&) {
                        program.reset();
                    }
                }
            }
            if (!program && !from_cache && !item.cached_program.empty()) {
                try {
                    program = parse_program(item.cached_program);
                } catch (const Error&) {
                    program.reset();
                }
            }
            if (!program && !from_cache && program_source) program = program_source(item);
            if (!program) {
                if (cache && !from_cache) cache->put(digest, item.question, {"", false});
                continue;
            }
            bool verified = verify_program(item, *program, translator, executor);
            if (cache && !from_cache)
                cache->put(digest, item.question, {program->source_text, verified});
            if (!verified) continue;
            Demonstration demo;
            demo.question = item.question;
            demo.user_text = fill_template(tmpl.user_template, item.question, item.metadata, &graph);
            demo.assistant_text = program->source_text.empty() ? render_program(*program)
                                                               : trim(program->source_text);
            demo.verified = true;
            demo.dynamic = true;
            out.push_back(std::move(demo));
        }
    }

    // pad with initial demonstrations, most-similar dynamics first
    for (const auto& [user, assistant] : tmpl.demonstrations) {
        if (out.size() >= config.k) break;
        Demonstration demo;
        demo.user_text = user;
        demo.assistant_text = assistant;
        out.push_back(std::move(demo));
    }
    if (out.size() > config.k) out.resize(config.k);
    return out;
}

inline PromptBundle bundle_with_demonstrations(const PromptTemplate& tmpl,
                                               const std::vector<Demonstration>& demos,
                                               const std::string& question,
                                               const std::map<std::string, std::string>& metadata,
                                               const ConditionGraph* graph) {
    PromptBundle bundle;
    bundle.system_text = tmpl.system_text;
    for (const auto& demo : demos)
        bundle.demonstrations.emplace_back(demo.user_text, demo.assistant_text);
    bundle.user_text = fill_template(tmpl.user_template, question, metadata, graph);
    return bundle;
}

} // namespace cgqa
