#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cgqa/condition_graph.hpp"
#include "cgqa/encoder.hpp"
#include "cgqa/errors.hpp"
#include "cgqa/query_lang.hpp"

namespace cgqa {

enum class StepKind { search_node, search_condition, set_op, calc, keep, row_nav, llm_function };

struct SlotRef {
    int slot = 0; // 1-based plan slot
    bool operator==(const SlotRef&) const = default;
};

// A resolved parameter: either a node label or an earlier plan slot.
using StepValue = std::variant<std::string, SlotRef>;

inline bool is_slot(const StepValue& v) { return std::holds_alternative<SlotRef>(v); }
inline const std::string& value_label(const StepValue& v) { return std::get<std::string>(v); }
inline SlotRef value_slot(const StepValue& v) { return std::get<SlotRef>(v); }

struct ExecutionStep {
    StepKind kind{};
    std::string func; // set-op / calc / row-nav name, or the unknown function's name
    std::optional<StepValue> n1;
    std::optional<StepValue> n2;               // sc target value, keep threshold
    std::optional<std::vector<StepValue>> condition;
    std::optional<SlotRef> scope;
    std::optional<StepValue> head;             // head-entity filter on sc results
    std::vector<StepValue> sets;
    ComparisonOp op = ComparisonOp::eq;
    int origin_label = 0;
    std::string origin_step_text;
    FunctionCall source_call;                  // kept for llm_function steps
};

struct ExecutionPlan {
    std::vector<ExecutionStep> steps;
    std::map<int, int> slot_map; // source step label -> plan slot holding its output
};

struct Substitution {
    std::string original;
    std::string node;
    double score = 0.0;
};

struct MappingReport {
    std::vector<Substitution> substitutions;
    std::vector<std::string> unmapped; // thresholds and below-floor literals, left raw
};

struct TranslateOptions {
    // 0.0 maps every argmax; raising it turns weak matches into raw literals
    // that typically fail as UnknownNode and trigger a retry upstream.
    double similarity_floor = 0.0;
};

// --- canonical plan rendering ----------------------------------------------

inline std::string render_step_value(const StepValue& v) {
    if (is_slot(v)) return "q" + std::to_string(value_slot(v).slot);
    return "'" + value_label(v) + "'";
}

inline std::string render_execution_step(const ExecutionStep& s) {
    switch (s.kind) {
        case StepKind::search_node: {
            std::string out = "sn(n1=" + render_step_value(*s.n1);
            if (s.condition) {
                out += ", c=[";
                for (size_t i = 0; i < s.condition->size(); ++i) {
                    if (i) out += ", ";
                    out += render_step_value((*s.condition)[i]);
                }
                out += "]";
            }
            if (s.scope) out += ", s=q" + std::to_string(s.scope->slot);
            return out + ")";
        }
        case StepKind::search_condition: {
            std::string out = "sc(n1=" + render_step_value(*s.n1) + ", n2=" +
                              render_step_value(*s.n2) + ", op=\"" + std::string(op_symbol(s.op)) +
                              "\"";
            if (s.head) out += ", h=" + render_step_value(*s.head);
            return out + ")";
        }
        case StepKind::set_op: {
            std::string out = s.func + "(set1=" + render_step_value(s.sets[0]);
            if (s.sets.size() > 1) out += ", set2=" + render_step_value(s.sets[1]);
            return out + ")";
        }
        case StepKind::calc:
            return s.func + "(set=" + render_step_value(s.sets[0]) + ")";
        case StepKind::keep:
            return "keep(set=" + render_step_value(s.sets[0]) + ", value" +
                   std::string(op_symbol(s.op)) + render_step_value(*s.n2) + ")";
        case StepKind::row_nav:
            return s.func + "(set=" + render_step_value(s.sets[0]) + ")";
        case StepKind::llm_function:
            return "llm_function(" + s.source_call.raw + ")";
    }
    return "";
}

inline std::string render_plan(const ExecutionPlan& plan) {
    std::string out;
    for (size_t i = 0; i < plan.steps.size(); ++i) {
        if (i) out += '\n';
        out += "q" + std::to_string(i + 1) + " = " + render_execution_step(plan.steps[i]);
    }
    return out;
}

// --- the translator ---------------------------------------------------------

// Compiles a parsed LLM query against a frozen graph: literals are mapped
// onto the most similar nodes first (thresholds under order operators stay
// raw), then each call is rewritten into execution steps by its argument
// signature. Unknown functions pass through untouched for the LLM function.
class Translator {
public:
    Translator(const ConditionGraph& graph, const TextEncoder& encoder,
               TranslateOptions options = {})
        : graph_(graph), encoder_(encoder), options_(options) {
        if (!graph_.all_nodes().empty()) {
            std::vector<std::string> corpus(graph_.all_nodes().begin(), graph_.all_nodes().end());
            try {
                node_index_ = encoder_.build_index(std::move(corpus));
            } catch (const Error& e) {
                if (e.code() == Errc::remote_unavailable)
                    throw_error(Errc::encoder_unavailable, e.what());
                throw;
            }
        }
    }

    std::pair<LlmQueryProgram, MappingReport> semantic_map(const LlmQueryProgram& program) const {
        if (!node_index_)
            throw_error(Errc::no_candidates, "graph has no nodes to map against");
        LlmQueryProgram mapped = program;
        MappingReport report;
        for (auto& step : mapped.steps) {
            if (!step.call.known) continue; // left as-is for the LLM function
            for (auto& arg : step.call.args) {
                if (arg.name == "op" || arg.is_ref()) continue;
                const std::string literal = trim(arg.literal());
                if (literal.empty()) continue;
                if (arg.op != ComparisonOp::eq) {
                    report.unmapped.push_back(literal); // threshold, not a node
                    continue;
                }
                if (graph_.contains_node(literal)) {
                    report.substitutions.push_back({literal, literal, 1.0});
                    arg.payload = literal;
                    continue;
                }
                std::vector<ScoredItem> best;
                try {
                    best = node_index_->top_similar(literal, 1);
                } catch (const Error& e) {
                    if (e.code() == Errc::remote_unavailable)
                        throw_error(Errc::encoder_unavailable, e.what());
                    throw;
                }
                if (!best.empty() && best.front().score >= options_.similarity_floor) {
                    report.substitutions.push_back({literal, best.front().item, best.front().score});
                    arg.payload = best.front().item;
                } else {
                    report.unmapped.push_back(literal);
                }
            }
        }
        return {std::move(mapped), std::move(report)};
    }

    ExecutionPlan syntax_map(const LlmQueryProgram& program) const {
        ExecutionPlan plan;
        for (const auto& step : program.steps) {
            if (step.call.known && step.call.name == "get_information")
                lower_get_information(step, plan);
            else if (step.call.known)
                lower_reasoning(step, plan);
            else
                lower_unknown(step, plan);
        }
        return plan;
    }

    std::pair<ExecutionPlan, MappingReport> translate(const LlmQueryProgram& program) const {
        auto [mapped, report] = semantic_map(program);
        return {syntax_map(mapped), std::move(report)};
    }

private:
    // --- lowering helpers --------------------------------------------------

    StepValue resolve(const Argument& arg, const ExecutionPlan& plan, int label) const {
        if (arg.is_ref()) {
            auto it = plan.slot_map.find(arg.ref().index);
            if (it == plan.slot_map.end())
                throw_error(Errc::forward_reference,
                            "Query" + std::to_string(label) + " references unresolved step " +
                                std::to_string(arg.ref().index));
            return SlotRef{it->second};
        }
        return arg.literal();
    }

    static ExecutionStep base_step(const QueryStep& src, StepKind kind) {
        ExecutionStep s;
        s.kind = kind;
        s.origin_label = src.label;
        s.origin_step_text = src.step_text;
        return s;
    }

    void push(ExecutionPlan& plan, ExecutionStep step, int label) const {
        plan.steps.push_back(std::move(step));
        plan.slot_map[label] = static_cast<int>(plan.steps.size());
    }

    void lower_reasoning(const QueryStep& src, ExecutionPlan& plan) const {
        const auto& call = src.call;
        const int label = src.label;
        auto find_arg = [&](std::initializer_list<const char*> names) -> const Argument* {
            for (const char* n : names)
                for (const auto& a : call.args)
                    if (a.name == n) return &a;
            return nullptr;
        };

        if (call.name == "set_intersection" || call.name == "set_union" ||
            call.name == "set_difference") {
            const Argument* s1 = find_arg({"set1", "set"});
            const Argument* s2 = find_arg({"set2"});
            const Argument* s3 = find_arg({"set3"});
            if (!s1 || !s2)
                throw_error(Errc::unsupported_signature, call.name + " needs set1 and set2");
            auto step = base_step(src, StepKind::set_op);
            step.func = call.name;
            step.sets = {resolve(*s1, plan, label), resolve(*s2, plan, label)};
            if (s3 && call.name == "set_intersection") {
                // 3-ary intersection lowers to nested binary steps
                plan.steps.push_back(step);
                auto second = base_step(src, StepKind::set_op);
                second.func = call.name;
                second.sets = {StepValue(SlotRef{static_cast<int>(plan.steps.size())}),
                               resolve(*s3, plan, label)};
                push(plan, std::move(second), label);
            } else if (s3) {
                throw_error(Errc::unsupported_signature, call.name + " does not take set3");
            } else {
                push(plan, std::move(step), label);
            }
            return;
        }
        if (call.name == "set_negation") {
            const Argument* s1 = find_arg({"set1", "set"});
            if (!s1) throw_error(Errc::unsupported_signature, "set_negation needs set1");
            auto step = base_step(src, StepKind::set_op);
            step.func = call.name;
            step.sets = {resolve(*s1, plan, label)};
            if (const Argument* s2 = find_arg({"set2"}))
                step.sets.push_back(resolve(*s2, plan, label));
            push(plan, std::move(step), label);
            return;
        }
        if (call.name == "keep") {
            const Argument* set = find_arg({"set", "set1"});
            const Argument* value = find_arg({"value"});
            if (!set || !value)
                throw_error(Errc::unsupported_signature, "keep needs set and value");
            auto step = base_step(src, StepKind::keep);
            step.func = call.name;
            step.sets = {resolve(*set, plan, label)};
            step.n2 = resolve(*value, plan, label);
            step.op = value->op;
            push(plan, std::move(step), label);
            return;
        }
        if (call.name == "mean" || call.name == "max" || call.name == "min" ||
            call.name == "count") {
            const Argument* set = find_arg({"set", "set1"});
            if (!set) throw_error(Errc::unsupported_signature, call.name + " needs set");
            auto step = base_step(src, StepKind::calc);
            step.func = call.name;
            step.sets = {resolve(*set, plan, label)};
            push(plan, std::move(step), label);
            return;
        }
        if (call.name == "previous_row" || call.name == "next_row") {
            const Argument* set = find_arg({"set", "set1"});
            if (!set) throw_error(Errc::unsupported_signature, call.name + " needs set");
            auto step = base_step(src, StepKind::row_nav);
            step.func = call.name;
            step.sets = {resolve(*set, plan, label)};
            push(plan, std::move(step), label);
            return;
        }
        throw_error(Errc::unsupported_signature, "no rule for " + call.name);
    }

    void lower_unknown(const QueryStep& src, ExecutionPlan& plan) const {
        auto step = base_step(src, StepKind::llm_function);
        step.func = src.call.name;
        step.source_call = src.call;
        for (const auto& arg : src.call.args)
            if (arg.is_ref()) step.sets.push_back(resolve(arg, plan, src.label));
        push(plan, std::move(step), src.label);
    }

    // get_information lowering: the rule table, keyed by which of
    // head/relation/tail/key/value are present. Order filters ride on the
    // tail and value slots; a bare `op` argument applies to whichever of the
    // two is present and unmarked.
    void lower_get_information(const QueryStep& src, ExecutionPlan& plan) const {
        const auto& call = src.call;
        const int label = src.label;
        const Argument* h = nullptr;
        const Argument* r = nullptr;
        const Argument* t = nullptr;
        const Argument* k = nullptr;
        const Argument* v = nullptr;
        std::optional<ComparisonOp> explicit_op;
        for (const auto& a : call.args) {
            if (a.name == "head_entity" && !h) h = &a;
            else if (a.name == "relation" && !r) r = &a;
            else if (a.name == "tail_entity" && !t) t = &a;
            else if (a.name == "key" && !k) k = &a;
            else if (a.name == "value" && !v) v = &a;
            else if (a.name == "op" && !a.is_ref()) explicit_op = parse_comparison_op(trim(a.literal()));
        }
        ComparisonOp op_t = t ? t->op : ComparisonOp::eq;
        ComparisonOp op_v = v ? v->op : ComparisonOp::eq;
        if (explicit_op) {
            if (v && op_v == ComparisonOp::eq) op_v = *explicit_op;
            else if (t && op_t == ComparisonOp::eq) op_t = *explicit_op;
        }

        auto signature = [&] {
            std::string sig = "get_information(";
            bool first = true;
            auto add = [&](const char* n, const Argument* a) {
                if (!a) return;
                if (!first) sig += ", ";
                sig += n;
                first = false;
            };
            add("h", h); add("r", r); add("t", t); add("k", k); add("v", v);
            return sig + ")";
        };

        auto sn1 = [&](const Argument* n1, const Argument* cond_head) {
            auto step = base_step(src, StepKind::search_node);
            step.n1 = resolve(*n1, plan, label);
            if (cond_head)
                step.condition = std::vector<StepValue>{resolve(*cond_head, plan, label)};
            push(plan, std::move(step), label);
        };
        auto sc1 = [&](const Argument* n1, const Argument* n2, ComparisonOp op, bool with_head) {
            auto step = base_step(src, StepKind::search_condition);
            step.n1 = resolve(*n1, plan, label);
            step.n2 = resolve(*n2, plan, label);
            step.op = op;
            if (with_head && h) step.head = resolve(*h, plan, label);
            push(plan, std::move(step), label);
        };
        auto sn_scoped = [&](const Argument* n1) {
            auto step = base_step(src, StepKind::search_node);
            step.n1 = resolve(*n1, plan, label);
            step.scope = SlotRef{static_cast<int>(plan.steps.size())};
            push(plan, std::move(step), label);
        };

        const bool H = h, R = r, T = t, K = k, V = v;
        if (H && !R && !T && !K && !V) { sn1(h, nullptr); return; }
        if (R && !H && !T && !K && !V) { sn1(r, nullptr); return; }
        if (K && !H && !T && !R && !V) { sn1(k, nullptr); return; }
        if (H && R && !T && !K && !V) { sn1(r, h); return; }
        if (H && K && !R && !T && !V) { sn1(k, h); return; }
        if (R && T && !K && !V) { sc1(r, t, op_t, true); return; }
        if (K && V && !R && !T) { sc1(k, v, op_v, true); return; }
        if (R && T && K && V) {
            if (op_t != ComparisonOp::eq || op_v != ComparisonOp::eq)
                throw_error(Errc::unsupported_signature,
                            signature() + " supports '=' filters only");
            sc1(r, t, ComparisonOp::eq, true);
            int first = plan.steps.size();
            sc1(k, v, ComparisonOp::eq, true);
            auto step = base_step(src, StepKind::set_op);
            step.func = "set_intersection";
            step.sets = {StepValue(SlotRef{first}), StepValue(SlotRef{first + 1})};
            push(plan, std::move(step), label);
            return;
        }
        if (R && T && K) {
            if (op_t != ComparisonOp::eq)
                throw_error(Errc::unsupported_signature,
                            signature() + " supports '=' on tail_entity only");
            sc1(r, t, ComparisonOp::eq, true);
            sn_scoped(k);
            return;
        }
        if (R && K && V) {
            sc1(k, v, op_v, true);
            sn_scoped(r);
            return;
        }
        if (H && R && K) { // key lookup under the fact condition [H, R]
            auto step = base_step(src, StepKind::search_node);
            step.n1 = resolve(*k, plan, label);
            step.condition = std::vector<StepValue>{resolve(*h, plan, label),
                                                    resolve(*r, plan, label)};
            push(plan, std::move(step), label);
            return;
        }
        throw_error(Errc::unsupported_signature, signature() + " has no translation rule");
    }

    const ConditionGraph& graph_;
    const TextEncoder& encoder_;
    TranslateOptions options_;
    std::unique_ptr<SimilarityIndex> node_index_;
};

} // namespace cgqa
