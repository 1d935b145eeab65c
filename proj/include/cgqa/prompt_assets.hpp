#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgqa/chat.hpp"
#include "cgqa/condition_graph.hpp"
#include "cgqa/errors.hpp"
#include "cgqa/llm_gateway.hpp"

namespace cgqa {

// One dataset's prompt asset: the system instruction, the hand-written
// initial demonstrations, and the template assembling the final user turn.
// Template placeholders — {question} plus any metadata key such as {schema},
// {relations}, {topic_entity}, {first_step}, {second_step}, {annotation} —
// fill from the item; {schema} falls back to a linearization derived from
// the graph when the metadata does not carry one.
struct PromptTemplate {
    std::string name;
    std::string system_text;
    std::vector<std::pair<std::string, std::string>> demonstrations;
    std::string user_template = "Question: {question}";
};

inline PromptTemplate load_prompt_template(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw_error(Errc::io_error, "cannot open prompt asset '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded())
        throw_error(Errc::parse_error, "prompt asset '" + path + "' is not valid JSON");
    PromptTemplate t;
    t.name = j.value("name", "");
    t.system_text = j.value("system", "");
    t.user_template = j.value("user_template", "Question: {question}");
    for (const auto& demo : j.value("demonstrations", nlohmann::json::array()))
        t.demonstrations.emplace_back(demo.value("user", ""), demo.value("assistant", ""));
    return t;
}

inline LlmFunctionPrompts load_llm_function_prompts(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw_error(Errc::io_error, "cannot open prompt asset '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded())
        throw_error(Errc::parse_error, "prompt asset '" + path + "' is not valid JSON");
    auto messages = [&](const char* family) {
        std::vector<ChatMessage> out;
        for (const auto& m : j.value(family, nlohmann::json::array()))
            out.push_back({m.value("role", ""), m.value("content", "")});
        return out;
    };
    LlmFunctionPrompts p;
    p.multiple_choice = messages("multiple_choice");
    p.extremum = messages("extremum");
    p.comparison = messages("comparison");
    return p;
}

// "column:example|column:example", columns in the graph's canonical node
// order, example cells from the first record row.
inline std::string derive_table_schema(const ConditionGraph& graph) {
    std::string first_marker;
    for (const auto& node : graph.all_nodes())
        if (auto m = parse_line_marker(node))
            if (m->row == 2 && first_marker.empty()) first_marker = node;
    if (first_marker.empty()) return "";
    std::string schema;
    auto columns = graph.search_node(first_marker, Condition{});
    for (const auto& col : columns) {
        if (col.values.empty()) continue;
        const std::string& header = col.values.front();
        auto cell = graph.search_node(header, Condition{first_marker});
        std::string example = cell.empty() ? "" : cell.begin()->values.front();
        if (!schema.empty()) schema += "|";
        schema += header + ":" + example;
    }
    return schema;
}

inline std::string fill_template(const std::string& tmpl, const std::string& question,
                                 const std::map<std::string, std::string>& metadata,
                                 const ConditionGraph* graph) {
    std::string out;
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close != std::string::npos) {
                std::string key = tmpl.substr(i + 1, close - i - 1);
                if (key == "question") {
                    out += question;
                } else if (auto it = metadata.find(key); it != metadata.end()) {
                    out += it->second;
                } else if (key == "schema" && graph) {
                    out += derive_table_schema(*graph);
                }
                i = close + 1;
                continue;
            }
        }
        out += tmpl[i++];
    }
    return out;
}

inline PromptBundle build_bundle(const PromptTemplate& tmpl, const std::string& question,
                                 const std::map<std::string, std::string>& metadata,
                                 const ConditionGraph* graph) {
    PromptBundle bundle;
    bundle.system_text = tmpl.system_text;
    bundle.demonstrations = tmpl.demonstrations;
    bundle.user_text = fill_template(tmpl.user_template, question, metadata, graph);
    return bundle;
}

} // namespace cgqa
