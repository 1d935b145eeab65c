#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cgqa {

// Every failure the engine can signal. Callers branch on the code: the
// executor reroutes incomparable_values to the LLM function, the
// orchestrator retries on unknown_node and empty-from-search answers.
enum class Errc {
    frozen_graph,        // mutation attempted after freeze()
    graph_not_frozen,    // search attempted before freeze()
    unknown_node,        // node1 absent from the graph
    incomparable_values, // order comparison over non-numeric, non-date text
    invalid_label,       // empty label after trimming
    ragged_table,        // record cell count != header cell count
    invalid_interval,    // tau_start > tau_end
    interval_too_large,  // time expansion over the safety limit
    parse_error,         // malformed source file (with line number)
    no_query_found,      // LLM output without a single Query line
    malformed_call,      // unparseable function call in a Query line
    forward_reference,   // output_of_queryN referencing N >= current step
    unsupported_signature, // get_information argument combination with no rule
    encoder_unavailable,
    remote_unavailable,
    no_candidates,       // semantic mapping over an empty graph
    empty_set,           // max/min/mean over an empty set
    not_a_line_marker,   // previous_row/next_row over a non-row value
    llm_required,        // plan needs an LLM function but no gateway given
    gateway_error,       // backend failure or replay miss
    backend_error,
    unparseable_llm_reply,
    all_samples_unparseable,
    empty_answer,
    io_error,
};

inline std::string_view errc_name(Errc c) {
    switch (c) {
        case Errc::frozen_graph: return "FrozenGraph";
        case Errc::graph_not_frozen: return "GraphNotFrozen";
        case Errc::unknown_node: return "UnknownNode";
        case Errc::incomparable_values: return "IncomparableValues";
        case Errc::invalid_label: return "InvalidLabel";
        case Errc::ragged_table: return "RaggedTable";
        case Errc::invalid_interval: return "InvalidInterval";
        case Errc::interval_too_large: return "IntervalTooLarge";
        case Errc::parse_error: return "ParseError";
        case Errc::no_query_found: return "NoQueryFound";
        case Errc::malformed_call: return "MalformedCall";
        case Errc::forward_reference: return "ForwardReference";
        case Errc::unsupported_signature: return "UnsupportedSignature";
        case Errc::encoder_unavailable: return "EncoderUnavailable";
        case Errc::remote_unavailable: return "RemoteUnavailable";
        case Errc::no_candidates: return "NoCandidates";
        case Errc::empty_set: return "EmptySet";
        case Errc::not_a_line_marker: return "NotALineMarker";
        case Errc::llm_required: return "LlmRequired";
        case Errc::gateway_error: return "GatewayError";
        case Errc::backend_error: return "BackendError";
        case Errc::unparseable_llm_reply: return "UnparseableLlmReply";
        case Errc::all_samples_unparseable: return "AllSamplesUnparseable";
        case Errc::empty_answer: return "EmptyAnswer";
        case Errc::io_error: return "IoError";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void throw_error(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace cgqa
