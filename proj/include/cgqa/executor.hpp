#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cgqa/chat.hpp"
#include "cgqa/condition_graph.hpp"
#include "cgqa/errors.hpp"
#include "cgqa/result_set.hpp"
#include "cgqa/translator.hpp"
#include "cgqa/values.hpp"

namespace cgqa {

struct TraceRecord {
    int slot = 0;
    int origin_label = 0;
    std::string kind;
    std::string detail; // canonical step rendering
    std::vector<std::string> output;
    double duration_ms = 0.0;
    bool llm_function = false;
};

struct Answer {
    ResultSet values;
    std::vector<std::string> rendered; // deduplicated, lexicographic
    std::vector<TraceRecord> trace;
    bool used_llm_function = false;
    bool empty_from_search = false; // final emptiness traceable to a search step
    std::string failure_reason;     // filled by the retry orchestrator
    int attempts = 0;
};

using LlmCompleteFn = std::function<std::string(const std::vector<ChatMessage>&)>;

struct ExecOptions {
    LlmCompleteFn llm;                           // unset: LLM-dependent steps fail
    const LlmFunctionPrompts* prompts = nullptr; // defaults to builtin()
    std::string question;                        // for multiple-choice prompts
};

// Evaluates an execution plan over a frozen graph. Pure without an LLM
// callback: step order, outputs and trace shape are fully reproducible.
// Steps the graph cannot settle (unknown functions, order comparisons over
// unparseable text) route to the LLM function when a callback is given.
class Executor {
public:
    explicit Executor(const ConditionGraph& graph) : graph_(graph) {
        for (const auto& node : graph_.all_nodes())
            if (auto m = parse_line_marker(node)) {
                auto& max_row = marker_rows_[m->prefix];
                max_row = std::max(max_row, m->row);
            }
    }

    Answer execute(const ExecutionPlan& plan, const ExecOptions& opts = {}) const {
        Answer answer;
        if (plan.steps.empty()) return answer;
        std::vector<ResultSet> env(plan.steps.size());
        bool search_step_empty = false;

        for (size_t i = 0; i < plan.steps.size(); ++i) {
            const auto& step = plan.steps[i];
            auto started = std::chrono::steady_clock::now();
            bool used_llm = false;
            ResultSet out = run_step(step, plan, env, opts, used_llm);
            auto elapsed = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started)
                               .count();
            if ((step.kind == StepKind::search_node || step.kind == StepKind::search_condition) &&
                out.empty())
                search_step_empty = true;
            TraceRecord rec;
            rec.slot = static_cast<int>(i + 1);
            rec.origin_label = step.origin_label;
            rec.kind = kind_name(step);
            rec.detail = render_execution_step(step);
            rec.output = out.rendered();
            rec.duration_ms = elapsed;
            rec.llm_function = used_llm;
            if (used_llm) answer.used_llm_function = true;
            answer.trace.push_back(std::move(rec));
            env[i] = std::move(out);
        }
        answer.values = env.back();
        answer.rendered = answer.values.rendered();
        answer.empty_from_search = answer.values.empty() && search_step_empty;
        return answer;
    }

private:
    static std::string kind_name(const ExecutionStep& s) {
        switch (s.kind) {
            case StepKind::search_node: return "sn";
            case StepKind::search_condition: return "sc";
            case StepKind::set_op: return s.func;
            case StepKind::calc: return s.func;
            case StepKind::keep: return "keep";
            case StepKind::row_nav: return s.func;
            case StepKind::llm_function: return "llm_function";
        }
        return "";
    }

    // --- parameter resolution --------------------------------------------

    static const ResultSet& slot_set(const std::vector<ResultSet>& env, SlotRef ref) {
        return env[ref.slot - 1];
    }

    // scalar broadcast: a literal is itself, a slot contributes the first
    // label of each of its tuples
    static std::vector<std::string> resolve_scalars(const StepValue& v,
                                                    const std::vector<ResultSet>& env) {
        if (!is_slot(v)) return {value_label(v)};
        return slot_set(env, value_slot(v)).scalars();
    }

    // condition broadcast: slot elements contribute their whole tuple inline
    static std::vector<Condition> resolve_conditions(const std::vector<StepValue>& parts,
                                                     const std::vector<ResultSet>& env) {
        std::vector<Condition> combos{{}};
        for (const auto& part : parts) {
            std::vector<Condition> next;
            if (!is_slot(part)) {
                for (auto& c : combos) {
                    c.push_back(value_label(part));
                }
                next = std::move(combos);
            } else {
                for (const auto& tuple : slot_set(env, value_slot(part)))
                    for (const auto& c : combos) {
                        Condition grown = c;
                        grown.insert(grown.end(), tuple.values.begin(), tuple.values.end());
                        next.push_back(std::move(grown));
                    }
            }
            combos = std::move(next);
        }
        return combos;
    }

    static ResultSet resolve_set(const StepValue& v, const std::vector<ResultSet>& env) {
        if (is_slot(v)) return slot_set(env, value_slot(v));
        return ResultSet::scalar(value_label(v));
    }

    // --- step dispatch ------------------------------------------------------

    ResultSet run_step(const ExecutionStep& step, const ExecutionPlan& plan,
                       const std::vector<ResultSet>& env, const ExecOptions& opts,
                       bool& used_llm) const {
        switch (step.kind) {
            case StepKind::search_node: return run_search_node(step, env);
            case StepKind::search_condition:
                return run_search_condition(step, plan, env, opts, used_llm);
            case StepKind::set_op: return run_set_op(step, env);
            case StepKind::calc: return run_calc(step, plan, env, opts, used_llm);
            case StepKind::keep: return run_keep(step, plan, env, opts, used_llm);
            case StepKind::row_nav: return run_row_nav(step, env);
            case StepKind::llm_function: return run_llm_function(step, plan, env, opts, used_llm);
        }
        return {};
    }

    ResultSet run_search_node(const ExecutionStep& step, const std::vector<ResultSet>& env) const {
        ResultSet out;
        const ResultSet* scope = step.scope ? &slot_set(env, *step.scope) : nullptr;
        std::vector<Condition> conditions;
        bool has_condition = step.condition.has_value();
        if (has_condition) conditions = resolve_conditions(*step.condition, env);
        for (const auto& n1 : resolve_scalars(*step.n1, env)) {
            if (!has_condition) {
                merge(out, graph_.search_node(n1, std::nullopt, scope));
            } else {
                for (const auto& cond : conditions)
                    merge(out, graph_.search_node(n1, cond, scope));
            }
        }
        return out;
    }

    ResultSet run_search_condition(const ExecutionStep& step, const ExecutionPlan& plan,
                                   const std::vector<ResultSet>& env, const ExecOptions& opts,
                                   bool& used_llm) const {
        ResultSet out;
        auto n1_values = resolve_scalars(*step.n1, env);
        auto n2_values = resolve_scalars(*step.n2, env);
        try {
            for (const auto& n1 : n1_values)
                for (const auto& n2 : n2_values)
                    merge(out, graph_.search_condition(n1, n2, step.op));
        } catch (const Error& e) {
            if (e.code() != Errc::incomparable_values) throw;
            out = comparison_fallback(step, plan, env, opts, n1_values, n2_values, used_llm);
        }
        if (step.head) {
            auto heads = resolve_scalars(*step.head, env);
            ResultSet filtered;
            for (const auto& t : out) {
                if (t.values.empty()) continue;
                for (const auto& h : heads)
                    if (t.values.front() == h) {
                        filtered.insert(t);
                        break;
                    }
            }
            out = std::move(filtered);
        }
        return out;
    }

    // Tuples from two sets line up when their values agree outright, or when
    // one side spells out the other's full fact identity (condition plus the
    // producing triple's node1/node2). The base (shorter) tuple survives.
    static std::optional<ResultTuple> unify(const ResultTuple& a, const ResultTuple& b) {
        if (a.values == b.values) return a;
        auto completes = [](const ResultTuple& base, const ResultTuple& full) {
            if (!base.fact || full.values.size() != base.values.size() + 2) return false;
            if (!std::equal(base.values.begin(), base.values.end(), full.values.begin()))
                return false;
            return full.values[base.values.size()] == base.fact->first &&
                   full.values[base.values.size() + 1] == base.fact->second;
        };
        if (completes(a, b)) return a;
        if (completes(b, a)) return b;
        return std::nullopt;
    }

    ResultSet run_set_op(const ExecutionStep& step, const std::vector<ResultSet>& env) const {
        if (step.func == "set_negation") {
            ResultSet universe;
            if (step.sets.size() > 1) {
                universe = resolve_set(step.sets[1], env);
            } else {
                for (const auto& node : graph_.all_nodes()) universe.insert(ResultTuple(node));
            }
            ResultSet a = resolve_set(step.sets[0], env);
            ResultSet out;
            for (const auto& u : universe)
                if (!any_unifies(a, u)) out.insert(u);
            return out;
        }
        ResultSet a = resolve_set(step.sets[0], env);
        ResultSet b = resolve_set(step.sets[1], env);
        ResultSet out;
        if (step.func == "set_union") {
            for (const auto& t : a) out.insert(t);
            for (const auto& t : b) out.insert(t);
        } else if (step.func == "set_intersection") {
            for (const auto& ta : a)
                for (const auto& tb : b)
                    if (auto u = unify(ta, tb)) out.insert(*u);
        } else { // set_difference
            for (const auto& t : a)
                if (!any_unifies(b, t)) out.insert(t);
        }
        return out;
    }

    static bool any_unifies(const ResultSet& set, const ResultTuple& t) {
        for (const auto& other : set)
            if (unify(t, other)) return true;
        return false;
    }

    ResultSet run_calc(const ExecutionStep& step, const ExecutionPlan& plan,
                       const std::vector<ResultSet>& env, const ExecOptions& opts,
                       bool& used_llm) const {
        ResultSet input = resolve_set(step.sets[0], env);
        if (step.func == "count")
            return ResultSet::scalar(std::to_string(input.size()));
        if (input.empty())
            throw_error(Errc::empty_set, step.func + " over an empty set");

        std::vector<std::pair<std::string, const ResultTuple*>> items;
        for (const auto& t : input)
            if (!t.values.empty()) items.emplace_back(t.values.front(), &t);

        std::vector<double> numbers;
        numbers.reserve(items.size());
        bool all_numbers = true;
        for (const auto& [scalar, _] : items) {
            auto n = parse_number(scalar);
            if (!n) {
                all_numbers = false;
                break;
            }
            numbers.push_back(*n);
        }
        if (all_numbers) {
            if (step.func == "mean") {
                double sum = 0;
                for (double n : numbers) sum += n;
                return ResultSet::scalar(format_decimal(sum / numbers.size()));
            }
            size_t best = 0;
            for (size_t i = 1; i < numbers.size(); ++i) {
                if (step.func == "max" ? numbers[i] > numbers[best] : numbers[i] < numbers[best])
                    best = i;
            }
            ResultSet out;
            out.insert(*items[best].second);
            return out;
        }
        if (step.func != "mean") {
            bool all_dates = true;
            std::vector<CivilDate> dates;
            for (const auto& [scalar, _] : items) {
                auto d = parse_date(scalar);
                if (!d) {
                    all_dates = false;
                    break;
                }
                dates.push_back(*d);
            }
            if (all_dates) {
                size_t best = 0;
                for (size_t i = 1; i < dates.size(); ++i)
                    if (step.func == "max" ? dates[best] < dates[i] : dates[i] < dates[best])
                        best = i;
                ResultSet out;
                out.insert(*items[best].second);
                return out;
            }
        }
        // values with units or mixed formats: hand the extremum to the LLM
        if (!opts.llm)
            throw_error(Errc::incomparable_values,
                        step.func + " over non-numeric, non-date values");
        return extremum_fallback(step, plan, input, opts, used_llm);
    }

    ResultSet run_keep(const ExecutionStep& step, const ExecutionPlan& plan,
                       const std::vector<ResultSet>& env, const ExecOptions& opts,
                       bool& used_llm) const {
        ResultSet input = resolve_set(step.sets[0], env);
        auto thresholds = resolve_scalars(*step.n2, env);
        try {
            ResultSet out;
            for (const auto& t : input) {
                if (t.values.empty()) continue;
                for (const auto& threshold : thresholds)
                    if (compare_values(step.op, t.values.front(), threshold)) {
                        out.insert(t);
                        break;
                    }
            }
            return out;
        } catch (const Error& e) {
            if (e.code() != Errc::incomparable_values || !opts.llm) throw;
            return keep_fallback(step, plan, input, thresholds, opts, used_llm);
        }
    }

    ResultSet run_row_nav(const ExecutionStep& step, const std::vector<ResultSet>& env) const {
        ResultSet input = resolve_set(step.sets[0], env);
        const long delta = step.func == "previous_row" ? -1 : 1;
        ResultSet out;
        for (const auto& t : input) {
            if (t.values.empty()) continue;
            const std::string& v = t.values.front();
            if (auto m = parse_line_marker(v)) {
                long row = m->row + delta;
                auto range = marker_rows_.find(m->prefix);
                long max_row = range != marker_rows_.end() ? range->second : 0;
                if (row < 2 || row > max_row) continue; // rows start at 2 (header is row 1)
                out.insert(ResultTuple(render_line_marker({m->prefix, row})));
                continue;
            }
            bool digits = !v.empty();
            for (char c : v)
                if (c < '0' || c > '9') digits = false;
            if (digits) { // bare row_number values shift the same way
                long row = std::stol(v) + delta;
                if (row >= 1) out.insert(ResultTuple(std::to_string(row)));
                continue;
            }
            throw_error(Errc::not_a_line_marker, "'" + v + "' is not a row marker");
        }
        return out;
    }

    // --- LLM-function routing ----------------------------------------------

    static std::string render_value_set(const ResultSet& set) {
        std::string out = "{";
        bool first = true;
        for (const auto& t : set) {
            if (!first) out += ", ";
            first = false;
            out += "'" + display_label(ResultSet::render_tuple(t)) + "'";
        }
        return out + "}";
    }

    static const LlmFunctionPrompts& prompts_of(const ExecOptions& opts) {
        return opts.prompts ? *opts.prompts : LlmFunctionPrompts::builtin();
    }

    std::string complete(const ExecOptions& opts, std::vector<ChatMessage> prefix,
                         std::string user_text) const {
        if (!opts.llm)
            throw_error(Errc::llm_required, "plan step needs an LLM function but none is configured");
        prefix.push_back({"user", std::move(user_text)});
        return opts.llm(prefix);
    }

    // prior step outputs labeled the way the program named them
    static std::string materialized_steps(const ExecutionStep& current, const ExecutionPlan& plan,
                                          const std::vector<ResultSet>& env) {
        std::string out;
        for (const auto& [label, slot] : plan.slot_map) {
            if (label >= current.origin_label) continue;
            const auto& producing = plan.steps[slot - 1];
            out += "Step" + std::to_string(label) + ": " +
                   (producing.origin_step_text.empty() ? render_execution_step(producing)
                                                       : producing.origin_step_text) +
                   ". output_of_query" + std::to_string(label) + ": " +
                   render_value_set(env[slot - 1]) + "\n";
        }
        return out;
    }

    ResultSet run_llm_function(const ExecutionStep& step, const ExecutionPlan& plan,
                               const std::vector<ResultSet>& env, const ExecOptions& opts,
                               bool& used_llm) const {
        std::string user = "Question: " + opts.question + "\nInformation provided:\n" +
                           materialized_steps(step, plan, env) + "Step" +
                           std::to_string(step.origin_label) + ": " +
                           (step.origin_step_text.empty() ? step.source_call.raw
                                                          : step.origin_step_text) +
                           "\nJust tell me the answer in a word or phrase without spaces or "
                           "newlines.";
        std::string reply = complete(opts, prompts_of(opts).multiple_choice, std::move(user));
        used_llm = true;
        return ResultSet::scalar(trim(reply));
    }

    ResultSet extremum_fallback(const ExecutionStep& step, const ExecutionPlan& plan,
                                const ResultSet& input, const ExecOptions& opts,
                                bool& used_llm) const {
        int source_label = step.origin_label;
        if (is_slot(step.sets[0]))
            source_label = plan.steps[value_slot(step.sets[0]).slot - 1].origin_label;
        std::string user = "Get the " + step.func + " output_of_query" +
                           std::to_string(source_label) + " And Output_of_query" +
                           std::to_string(source_label) + ": " + render_value_set(input) +
                           ".\nPlease tell me the only data who satisfies the condition.";
        std::string reply = complete(opts, prompts_of(opts).extremum, std::move(user));
        used_llm = true;
        return ResultSet::scalar(reply_extract::quoted_answer(reply));
    }

    static std::string display_condition(const Condition& cond) {
        std::string out;
        for (size_t i = 0; i < cond.size(); ++i) {
            if (i) out += ", ";
            out += display_label(cond[i]);
        }
        return out;
    }

    ResultSet comparison_fallback(const ExecutionStep& step, const ExecutionPlan& plan,
                                  const std::vector<ResultSet>& env, const ExecOptions& opts,
                                  const std::vector<std::string>& n1_values,
                                  const std::vector<std::string>& n2_values,
                                  bool& used_llm) const {
        if (!opts.llm)
            throw Error(Errc::incomparable_values,
                        "order comparison needs the LLM function but none is configured");
        std::string user = step.origin_step_text.empty() ? "Find the data that satisfies the condition"
                                                         : step.origin_step_text;
        if (step.n2 && is_slot(*step.n2)) {
            int label = plan.steps[value_slot(*step.n2).slot - 1].origin_label;
            user += " And Output_of_query" + std::to_string(label) + ": " +
                    render_value_set(slot_set(env, value_slot(*step.n2))) + ".";
        }
        user += "\nAll data are given in the format of (data, line_number):\n{";
        bool first = true;
        for (const auto& n1 : n1_values) {
            for (const auto* triple : graph_.subject_triples(n1)) {
                if (triple->condition.empty()) continue;
                if (!first) user += ", ";
                first = false;
                user += "('" + triple->node2 + "', '" + display_condition(triple->condition) + "')";
            }
        }
        user += "}.\nCondition: data " + std::string(op_symbol(step.op)) + " '" +
                (n2_values.empty() ? "" : n2_values.front()) +
                "'.\nPlease check it step by step and tell me the line_number whose data "
                "satisfies the condition.";
        std::string reply = complete(opts, prompts_of(opts).comparison, std::move(user));
        used_llm = true;
        ResultSet out;
        for (const auto& answer : reply_extract::comparison_answers(reply))
            out.insert(ResultTuple(strip_brackets(answer)));
        return out;
    }

    ResultSet keep_fallback(const ExecutionStep& step, const ExecutionPlan& plan,
                            const ResultSet& input, const std::vector<std::string>& thresholds,
                            const ExecOptions& opts, bool& used_llm) const {
        std::string user = step.origin_step_text.empty() ? "Keep the data that satisfies the condition"
                                                         : step.origin_step_text;
        if (step.n2 && is_slot(*step.n2)) {
            int label = plan.steps[value_slot(*step.n2).slot - 1].origin_label;
            user += " And Output_of_query" + std::to_string(label) + ": {'" +
                    (thresholds.empty() ? "" : thresholds.front()) + "'}.";
        }
        user += "\nAll data are given in the format of (data, line_number):\n{";
        bool first = true;
        for (const auto& t : input) {
            if (t.values.empty()) continue;
            if (!first) user += ", ";
            first = false;
            user += "('" + t.values.front() + "', '" + display_label(ResultSet::render_tuple(t)) +
                    "')";
        }
        user += "}.\nCondition: data " + std::string(op_symbol(step.op)) + " '" +
                (thresholds.empty() ? "" : thresholds.front()) +
                "'.\nPlease check it step by step and tell me the line_number whose data "
                "satisfies the condition.";
        std::string reply = complete(opts, prompts_of(opts).comparison, std::move(user));
        used_llm = true;
        ResultSet out;
        for (const auto& answer : reply_extract::comparison_answers(reply))
            out.insert(ResultTuple(strip_brackets(answer)));
        return out;
    }

    static void merge(ResultSet& into, const ResultSet& from) {
        for (const auto& t : from) into.insert(t);
    }

    const ConditionGraph& graph_;
    std::map<std::string, long> marker_rows_; // table prefix -> last row
};

} // namespace cgqa
