#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgqa/chat.hpp"
#include "cgqa/condition_graph.hpp"
#include "cgqa/errors.hpp"
#include "cgqa/executor.hpp"
#include "cgqa/query_lang.hpp"
#include "cgqa/translator.hpp"

namespace cgqa {

// Question-specific prompt: system text, retrieved or initial demonstrations
// as (user, assistant) pairs, and the final user turn.
struct PromptBundle {
    std::string system_text;
    std::vector<std::pair<std::string, std::string>> demonstrations;
    std::string user_text;
};

inline std::vector<ChatMessage> bundle_messages(const PromptBundle& bundle) {
    std::vector<ChatMessage> messages;
    if (!bundle.system_text.empty()) messages.push_back({"system", bundle.system_text});
    for (const auto& [user, assistant] : bundle.demonstrations) {
        messages.push_back({"user", user});
        messages.push_back({"assistant", assistant});
    }
    messages.push_back({"user", bundle.user_text});
    return messages;
}

// Stable digest of (messages, temperature, sample index); the replay fixture
// key. FNV-1a 64 over a length-prefixed serialization, hex-rendered.
// Documented in docs/gateway-api.md.
inline std::string request_digest(const std::vector<ChatMessage>& messages, double temperature,
                                  int sample_index) {
    uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0x1e;
        h *= 1099511628211ull;
    };
    for (const auto& m : messages) {
        mix(m.role);
        mix(m.content);
    }
    char temp[32];
    std::snprintf(temp, sizeof(temp), "t=%.4f", temperature);
    mix(temp);
    mix("i=" + std::to_string(sample_index));
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

struct LoggedRequest {
    std::string purpose; // "generation" | "llm_function"
    std::string text;    // concatenated message contents
    double temperature = 0.0;
};

class GatewayBackend {
public:
    virtual ~GatewayBackend() = default;

    virtual std::string kind() const = 0;

    std::string complete(const std::vector<ChatMessage>& messages, double temperature,
                         int sample_index, const std::string& purpose = "generation") {
        {
            std::lock_guard lock(mutex_);
            LoggedRequest req;
            req.purpose = purpose;
            req.temperature = temperature;
            for (const auto& m : messages) {
                req.text += m.role;
                req.text += ": ";
                req.text += m.content;
                req.text += '\n';
            }
            log_.push_back(std::move(req));
            if (purpose == "generation") ++generation_samples_;
            else ++llm_function_calls_;
        }
        return do_complete(messages, temperature, sample_index);
    }

    int generation_samples() const {
        std::lock_guard lock(mutex_);
        return generation_samples_;
    }
    int llm_function_calls() const {
        std::lock_guard lock(mutex_);
        return llm_function_calls_;
    }
    std::vector<LoggedRequest> request_log() const {
        std::lock_guard lock(mutex_);
        return log_;
    }

protected:
    virtual std::string do_complete(const std::vector<ChatMessage>& messages, double temperature,
                                    int sample_index) = 0;

private:
    mutable std::mutex mutex_;
    std::vector<LoggedRequest> log_;
    int generation_samples_ = 0;
    int llm_function_calls_ = 0;
};

// Deterministic test backend: canned completions keyed by request digest,
// consumed in order. A miss is an error, never a fabricated reply.
class ReplayBackend final : public GatewayBackend {
public:
    ReplayBackend() = default;

    explicit ReplayBackend(std::map<std::string, std::vector<std::string>> canned)
        : canned_(std::move(canned)) {}

    static std::map<std::string, std::vector<std::string>> load_fixture_map(
        const std::string& path) {
        std::ifstream is(path);
        if (!is) throw_error(Errc::io_error, "cannot open replay fixture '" + path + "'");
        nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw_error(Errc::parse_error, "replay fixture '" + path + "' is not a JSON object");
        std::map<std::string, std::vector<std::string>> canned;
        for (auto& [digest, completions] : j.items()) {
            if (completions.is_string())
                canned[digest] = {completions.get<std::string>()};
            else
                canned[digest] = completions.get<std::vector<std::string>>();
        }
        return canned;
    }

    static ReplayBackend from_file(const std::string& path) {
        return ReplayBackend(load_fixture_map(path));
    }

    void add(const std::string& digest, std::vector<std::string> completions) {
        std::lock_guard lock(mutex_);
        auto& list = canned_[digest];
        list.insert(list.end(), completions.begin(), completions.end());
    }

    void add_exchange(const std::vector<ChatMessage>& messages, double temperature,
                      int sample_index, std::string completion) {
        add(request_digest(messages, temperature, sample_index), {std::move(completion)});
    }

    nlohmann::json to_json() const {
        std::lock_guard lock(mutex_);
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [digest, completions] : canned_) j[digest] = completions;
        return j;
    }

    void save(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw_error(Errc::io_error, "cannot write replay fixture '" + path + "'");
        os << to_json().dump(2) << '\n';
    }

    std::string kind() const override { return "replay"; }

protected:
    std::string do_complete(const std::vector<ChatMessage>& messages, double temperature,
                            int sample_index) override {
        const std::string digest = request_digest(messages, temperature, sample_index);
        std::lock_guard lock(mutex_);
        auto it = canned_.find(digest);
        if (it == canned_.end())
            throw_error(Errc::gateway_error, "replay miss for digest " + digest);
        size_t& used = consumed_[digest];
        if (used >= it->second.size())
            throw_error(Errc::gateway_error, "replay fixtures exhausted for digest " + digest);
        return it->second[used++];
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> canned_;
    std::map<std::string, size_t> consumed_;
};

struct OrchestrationPolicy {
    int self_consistency_n = 5;
    int retry_limit = 3;
    double generation_temperature = 0.7;
    double llm_function_temperature = 0.0;
};

// Samples self_consistency_n completions, parses each, groups by canonical
// rendering and returns the majority program. Ties go to the group seen
// first; unparseable samples are dropped before the vote.
inline LlmQueryProgram generate_query(const PromptBundle& bundle, GatewayBackend& backend,
                                      const OrchestrationPolicy& policy) {
    auto messages = bundle_messages(bundle);
    struct Group {
        LlmQueryProgram program;
        int count = 0;
        int first_index = 0;
    };
    std::map<std::string, Group> groups;
    for (int i = 0; i < policy.self_consistency_n; ++i) {
        std::string text =
            backend.complete(messages, policy.generation_temperature, i, "generation");
        try {
            LlmQueryProgram program = parse_program(text);
            std::string key = render_program(program);
            auto [it, inserted] = groups.try_emplace(key);
            if (inserted) {
                it->second.program = std::move(program);
                it->second.first_index = i;
            }
            ++it->second.count;
        } catch (const Error&) {
            // discarded before voting
        }
    }
    if (groups.empty())
        throw_error(Errc::all_samples_unparseable,
                    "none of " + std::to_string(policy.self_consistency_n) + " samples parsed");
    const Group* winner = nullptr;
    for (const auto& [key, group] : groups) {
        if (!winner || group.count > winner->count ||
            (group.count == winner->count && group.first_index < winner->first_index))
            winner = &group;
    }
    return winner->program;
}

namespace gateway_detail {

inline bool retryable(Errc code) {
    switch (code) {
        case Errc::unknown_node:
        case Errc::unsupported_signature:
        case Errc::malformed_call:
        case Errc::forward_reference:
        case Errc::no_query_found:
        case Errc::all_samples_unparseable:
        case Errc::empty_set:
        case Errc::incomparable_values:
        case Errc::not_a_line_marker:
        case Errc::llm_required:
            return true;
        default:
            return false;
    }
}

} // namespace gateway_detail

// One question end to end: sample programs, translate, execute; on an empty
// search answer or a mapping/translation failure, resample and try again,
// up to retry_limit rounds. Demonstrations are fixed for the question; every
// retry reuses the bundle.
inline Answer answer_with_retry(const std::string& question, const PromptBundle& bundle,
                                const ConditionGraph& graph, const Translator& translator,
                                const Executor& executor, GatewayBackend& backend,
                                const OrchestrationPolicy& policy,
                                const LlmFunctionPrompts* llm_prompts = nullptr) {
    (void)graph;
    ExecOptions exec_opts;
    exec_opts.question = question;
    exec_opts.prompts = llm_prompts;
    exec_opts.llm = [&backend, &policy](const std::vector<ChatMessage>& messages) {
        return backend.complete(messages, policy.llm_function_temperature, 0, "llm_function");
    };

    std::string last_failure = "no attempt made";
    for (int attempt = 1; attempt <= policy.retry_limit; ++attempt) {
        try {
            LlmQueryProgram program = generate_query(bundle, backend, policy);
            auto [plan, report] = translator.translate(program);
            Answer answer = executor.execute(plan, exec_opts);
            answer.attempts = attempt;
            if (!answer.values.empty()) return answer;
            if (!answer.empty_from_search) return answer; // legitimate empty result
            last_failure = "empty answer from search steps";
        } catch (const Error& e) {
            if (!gateway_detail::retryable(e.code())) throw;
            last_failure = e.what();
        }
    }
    Answer failed;
    failed.attempts = policy.retry_limit;
    failed.failure_reason = "retries_exhausted: " + last_failure;
    return failed;
}

// Privacy posture check: generation prompts may carry schema, relation lists
// and demonstrations but never a raw condition triple of the graph. The probe
// looks for each triple rendered either as a serialized line fragment
// (node1 <TAB> node2) or as a tuple "(node1, node2,".
inline bool generation_prompts_expose_triples(const std::vector<LoggedRequest>& log,
                                              const ConditionGraph& graph) {
    for (const auto& req : log) {
        if (req.purpose != "generation") continue;
        for (const auto& t : graph.triples()) {
            if (req.text.find(t.node1 + "\t" + t.node2) != std::string::npos) return true;
            if (req.text.find("(" + t.node1 + ", " + t.node2 + ",") != std::string::npos)
                return true;
        }
    }
    return false;
}

} // namespace cgqa
