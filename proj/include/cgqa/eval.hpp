#pragma once

#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgqa/demo_retriever.hpp"
#include "cgqa/eval_metrics.hpp"
#include "cgqa/executor.hpp"
#include "cgqa/llm_gateway.hpp"
#include "cgqa/prompt_assets.hpp"
#include "cgqa/translator.hpp"

namespace cgqa {

struct DatasetItem {
    std::string id;
    std::string question;
    std::vector<std::string> gold_answers;
    std::string source_ref; // names the graph / prompt / training pool to use
    std::map<std::string, std::string> metadata;
};

inline std::vector<DatasetItem> load_dataset_jsonl(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw_error(Errc::io_error, "cannot open dataset '" + path + "'");
    std::vector<DatasetItem> items;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw_error(Errc::parse_error,
                        "line " + std::to_string(line_no) + ": invalid JSON in '" + path + "'");
        DatasetItem item;
        item.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                          : std::to_string(line_no);
        item.question = j.value("question", "");
        for (const auto& a : j.value("answers", nlohmann::json::array()))
            item.gold_answers.push_back(a.get<std::string>());
        item.source_ref = j.value("source_ref", "");
        if (j.contains("metadata"))
            for (const auto& [key, value] : j["metadata"].items())
                item.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
        if (item.gold_answers.empty())
            throw_error(Errc::parse_error,
                        "line " + std::to_string(line_no) + ": item without gold answers");
        items.push_back(std::move(item));
    }
    return items;
}

struct ItemResult {
    std::string id;
    std::string question;
    std::string source_ref;
    std::vector<std::string> predicted;
    std::vector<std::string> gold;
    bool denotation = false;
    bool hits1 = false;
    bool set_comparison = false;
    bool used_llm_function = false;
    int attempts = 0;
    std::string failure_reason;
};

struct AggregateStats {
    size_t n = 0;
    double denotation_accuracy = 0.0;
    double hits_at_1 = 0.0;
    double set_comparison_accuracy = 0.0;
    double llm_function_calling_rate = 0.0;
};

struct EvalReport {
    std::vector<ItemResult> items;
    AggregateStats overall;
    std::map<std::string, AggregateStats> per_source;
    int generation_samples = 0;
    int llm_function_calls = 0;
};

namespace eval_detail {

inline AggregateStats aggregate(const std::vector<const ItemResult*>& items) {
    AggregateStats s;
    s.n = items.size();
    if (items.empty()) return s;
    size_t den = 0, hit = 0, sup = 0, llm = 0;
    for (const auto* r : items) {
        den += r->denotation;
        hit += r->hits1;
        sup += r->set_comparison;
        llm += r->used_llm_function;
    }
    s.denotation_accuracy = double(den) / items.size();
    s.hits_at_1 = double(hit) / items.size();
    s.set_comparison_accuracy = double(sup) / items.size();
    s.llm_function_calling_rate = double(llm) / items.size();
    return s;
}

} // namespace eval_detail

// Everything one source_ref needs: its graph, prompt template, and training
// pool (the latter may be shared across refs in pooled settings).
struct EvalSource {
    const ConditionGraph* graph = nullptr;
    PromptTemplate prompt;
    const std::vector<TrainingItem>* train = nullptr;
};

struct RunConfig {
    OrchestrationPolicy policy;
    RetrieverConfig retriever;
    TranslateOptions translate;
    bool dynamic_demonstrations = true;
};

// Runs the full pipeline per item in id order, never aborting on per-item
// failures; deterministic under a replay backend.
inline EvalReport run_eval(std::vector<DatasetItem> items,
                           const std::map<std::string, EvalSource>& sources,
                           const TextEncoder& encoder, GatewayBackend& backend,
                           const RunConfig& config, const LlmFunctionPrompts* llm_prompts = nullptr,
                           VerificationCache* cache = nullptr) {
    std::sort(items.begin(), items.end(),
              [](const DatasetItem& a, const DatasetItem& b) { return a.id < b.id; });

    // one translator/executor pair per distinct graph
    std::map<const ConditionGraph*, std::unique_ptr<Translator>> translators;
    std::map<const ConditionGraph*, std::unique_ptr<Executor>> executors;
    for (const auto& [ref, source] : sources) {
        if (!source.graph) throw_error(Errc::io_error, "source '" + ref + "' has no graph");
        if (!translators.count(source.graph)) {
            translators[source.graph] =
                std::make_unique<Translator>(*source.graph, encoder, config.translate);
            executors[source.graph] = std::make_unique<Executor>(*source.graph);
        }
    }

    EvalReport report;
    for (const auto& item : items) {
        auto source_it = sources.find(item.source_ref);
        if (source_it == sources.end()) source_it = sources.find("");
        ItemResult result;
        result.id = item.id;
        result.question = item.question;
        result.source_ref = item.source_ref;
        result.gold = item.gold_answers;
        if (source_it == sources.end()) {
            result.failure_reason = "unresolved source_ref";
            report.items.push_back(std::move(result));
            continue;
        }
        const EvalSource& source = source_it->second;
        const Translator& translator = *translators.at(source.graph);
        const Executor& executor = *executors.at(source.graph);
        try {
            PromptBundle bundle;
            if (config.dynamic_demonstrations && source.train && !source.train->empty()) {
                auto demos = retrieve_demonstrations(
                    item.question, item.metadata, *source.train, *source.graph, translator,
                    executor, encoder, config.retriever, source.prompt,
                    [&](const TrainingItem& t) -> std::optional<LlmQueryProgram> {
                        PromptBundle train_bundle = build_bundle(source.prompt, t.question,
                                                                 t.metadata, source.graph);
                        try {
                            return generate_query(train_bundle, backend, config.policy);
                        } catch (const Error&) {
                            return std::nullopt;
                        }
                    },
                    cache);
                bundle = bundle_with_demonstrations(source.prompt, demos, item.question,
                                                    item.metadata, source.graph);
            } else {
                bundle = build_bundle(source.prompt, item.question, item.metadata, source.graph);
            }
            Answer answer = answer_with_retry(item.question, bundle, *source.graph, translator,
                                              executor, backend, config.policy, llm_prompts);
            result.predicted = answer.rendered;
            result.attempts = answer.attempts;
            result.used_llm_function = answer.used_llm_function;
            result.failure_reason = answer.failure_reason;
        } catch (const Error& e) {
            result.failure_reason = e.what();
        }
        result.denotation = denotation_match(result.predicted, result.gold);
        result.hits1 = hits_at_1(result.predicted, result.gold);
        result.set_comparison = set_comparison_match(result.predicted, result.gold);
        report.items.push_back(std::move(result));
    }

    std::vector<const ItemResult*> all;
    std::map<std::string, std::vector<const ItemResult*>> by_source;
    for (const auto& r : report.items) {
        all.push_back(&r);
        by_source[r.source_ref].push_back(&r);
    }
    report.overall = eval_detail::aggregate(all);
    for (const auto& [ref, rs] : by_source) report.per_source[ref] = eval_detail::aggregate(rs);
    report.generation_samples = backend.generation_samples();
    report.llm_function_calls = backend.llm_function_calls();
    return report;
}

// --- report serialization (no timestamps: reports are bit-reproducible) ----

inline nlohmann::json stats_json(const AggregateStats& s) {
    return {{"n", s.n},
            {"denotation_accuracy", s.denotation_accuracy},
            {"hits_at_1", s.hits_at_1},
            {"set_comparison_accuracy", s.set_comparison_accuracy},
            {"llm_function_calling_rate", s.llm_function_calling_rate}};
}

inline nlohmann::json report_json(const EvalReport& report) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& r : report.items) {
        items.push_back({{"id", r.id},
                         {"question", r.question},
                         {"source_ref", r.source_ref},
                         {"predicted", r.predicted},
                         {"gold", r.gold},
                         {"denotation", r.denotation},
                         {"hits_at_1", r.hits1},
                         {"set_comparison", r.set_comparison},
                         {"used_llm_function", r.used_llm_function},
                         {"attempts", r.attempts},
                         {"failure_reason", r.failure_reason}});
    }
    nlohmann::json per_source = nlohmann::json::object();
    for (const auto& [ref, stats] : report.per_source)
        per_source[ref.empty() ? "(default)" : ref] = stats_json(stats);
    return {{"items", items},
            {"overall", stats_json(report.overall)},
            {"per_source", per_source},
            {"generation_samples", report.generation_samples},
            {"llm_function_calls", report.llm_function_calls}};
}

inline void print_report(const EvalReport& report, std::ostream& os) {
    auto line = [&](const std::string& name, const AggregateStats& s) {
        os << std::left << std::setw(14) << name << std::right << std::setw(5) << s.n
           << std::fixed << std::setprecision(3) << std::setw(12) << s.denotation_accuracy
           << std::setw(10) << s.hits_at_1 << std::setw(12) << s.set_comparison_accuracy
           << std::setw(10) << s.llm_function_calling_rate << "\n";
    };
    os << std::left << std::setw(14) << "source" << std::right << std::setw(5) << "n"
       << std::setw(12) << "denotation" << std::setw(10) << "hits@1" << std::setw(12)
       << "set-comp" << std::setw(10) << "llm-rate" << "\n";
    for (const auto& [ref, stats] : report.per_source)
        line(ref.empty() ? "(default)" : ref, stats);
    line("overall", report.overall);
    os << "generation samples: " << report.generation_samples
       << ", llm function calls: " << report.llm_function_calls << "\n";
}

// step-by-step trace export for `exec --trace`
inline nlohmann::json trace_json(const Answer& answer) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& t : answer.trace) {
        steps.push_back({{"slot", t.slot},
                         {"origin", "Query" + std::to_string(t.origin_label)},
                         {"kind", t.kind},
                         {"detail", t.detail},
                         {"output", t.output},
                         {"duration_ms", t.duration_ms},
                         {"llm_function", t.llm_function}});
    }
    return {{"steps", steps},
            {"answer", answer.rendered},
            {"used_llm_function", answer.used_llm_function}};
}

} // namespace cgqa
