#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cgqa/encoder_remote.hpp"
#include "cgqa/eval.hpp"
#include "cgqa/gateway_http.hpp"
#include "cgqa/ingest.hpp"
#include "cgqa/prompt_assets.hpp"

namespace {

using namespace cgqa;

// "replay:fixtures.json" or "http:https://host[/path]"
std::unique_ptr<GatewayBackend> make_backend(const std::string& spec, const std::string& model) {
    auto colon = spec.find(':');
    std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "replay")
        return std::make_unique<ReplayBackend>(ReplayBackend::load_fixture_map(rest));
    if (kind == "http") {
        HttpChatConfig config;
        auto scheme = rest.find("//");
        auto path_at = rest.find('/', scheme == std::string::npos ? 0 : scheme + 2);
        if (path_at != std::string::npos) {
            config.host = rest.substr(0, path_at);
            config.path = rest.substr(path_at);
        } else {
            config.host = rest;
        }
        config.model = model;
        return std::make_unique<HttpChatBackend>(config);
    }
    throw_error(Errc::io_error, "unknown backend spec '" + spec + "' (use replay:FILE or http:URL)");
    return nullptr;
}

std::unique_ptr<TextEncoder> make_encoder(const std::map<std::string, std::string>& cfg) {
    auto get = [&](const char* key, const std::string& fallback) {
        auto it = cfg.find(key);
        return it == cfg.end() ? fallback : it->second;
    };
    if (get("encoder.kind", "lexical") == "remote") {
        RemoteEncoderConfig rc;
        rc.host = get("encoder.endpoint", "");
        rc.model = get("encoder.model", "");
        rc.batch_size = std::stoul(get("encoder.batch_size", "64"));
        return std::make_unique<RemoteEncoder>(rc);
    }
    return std::make_unique<LexicalEncoder>();
}

// key=value lines; '#' comments
std::map<std::string, std::string> load_config(const std::string& path) {
    std::map<std::string, std::string> cfg;
    if (path.empty()) return cfg;
    std::ifstream is(path);
    if (!is) throw_error(Errc::io_error, "cannot open config '" + path + "'");
    std::string line;
    while (std::getline(is, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) continue;
        cfg[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return cfg;
}

RunConfig run_config_from(const std::map<std::string, std::string>& cfg) {
    RunConfig rc;
    auto geti = [&](const char* key, int fallback) {
        auto it = cfg.find(key);
        return it == cfg.end() ? fallback : std::stoi(it->second);
    };
    auto getd = [&](const char* key, double fallback) {
        auto it = cfg.find(key);
        return it == cfg.end() ? fallback : std::stod(it->second);
    };
    rc.policy.self_consistency_n = geti("policy.self_consistency", 5);
    rc.policy.retry_limit = geti("policy.retry_limit", 3);
    rc.policy.generation_temperature = getd("backend.temperature", 0.7);
    rc.retriever.m = geti("retriever.m", 15);
    rc.retriever.k = geti("retriever.k", 8);
    rc.retriever.metadata_filter = geti("retriever.metadata_filter", 0) != 0;
    rc.translate.similarity_floor = getd("translate.floor", 0.0);
    rc.dynamic_demonstrations = geti("dynamic_demos", 1) != 0;
    return rc;
}

// name=path pairs; a bare path gets the empty (default) name
std::pair<std::string, std::string> split_named(const std::string& arg) {
    auto eq = arg.find('=');
    if (eq == std::string::npos) return {"", arg};
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

int cmd_ingest(const std::vector<std::string>& tables, const std::vector<std::string>& kgs,
               const std::vector<std::string>& tkgs, const std::string& out, bool prefix_tables,
               const std::string& granularity) {
    ConditionGraph graph;
    int table_index = 0;
    for (const auto& path : tables) {
        std::string prefix = prefix_tables ? "t" + std::to_string(++table_index) : "";
        translate_table(load_csv_file(path), graph, prefix);
    }
    for (const auto& path : kgs) translate_kg(load_triples_file(path), graph);
    for (const auto& path : tkgs) {
        auto source = load_quintuples_file(path);
        source.granularity = granularity;
        translate_tkg(source, graph);
    }
    graph.freeze();
    save_cg_file(graph, out);
    std::cout << "wrote " << graph.triple_count() << " triples, " << graph.all_nodes().size()
              << " nodes to " << out << "\n";
    return 0;
}

int cmd_exec(const std::string& graph_path, const std::string& program_path,
             const std::string& map_report_path, const std::string& trace_path, double floor) {
    auto graph = load_cg_file(graph_path);
    std::ifstream is(program_path);
    if (!is) throw_error(Errc::io_error, "cannot open program '" + program_path + "'");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    auto program = parse_program(text);
    LexicalEncoder encoder;
    TranslateOptions options;
    options.similarity_floor = floor;
    Translator translator(graph, encoder, options);
    auto [plan, report] = translator.translate(program);
    if (!map_report_path.empty()) {
        nlohmann::json j;
        j["substitutions"] = nlohmann::json::array();
        for (const auto& s : report.substitutions)
            j["substitutions"].push_back(
                {{"literal", s.original}, {"node", s.node}, {"score", s.score}});
        j["unmapped"] = report.unmapped;
        std::ofstream os(map_report_path);
        os << j.dump(2) << '\n';
    }
    Answer answer = Executor(graph).execute(plan, {});
    if (!trace_path.empty()) {
        std::ofstream os(trace_path);
        os << trace_json(answer).dump(2) << '\n';
    }
    for (const auto& value : answer.rendered) std::cout << value << "\n";
    return 0;
}

int cmd_query(const std::string& graph_path, const std::string& question,
              const std::string& backend_spec, const std::string& prompts_path,
              const std::string& train_path, const std::string& llm_prompts_path,
              const std::string& config_path, const std::vector<std::string>& metadata_kv) {
    auto cfg = load_config(config_path);
    RunConfig run = run_config_from(cfg);
    auto graph = load_cg_file(graph_path);
    auto tmpl = load_prompt_template(prompts_path);
    auto encoder = make_encoder(cfg);
    auto backend = make_backend(backend_spec, cfg.count("backend.model") ? cfg.at("backend.model") : "");
    LlmFunctionPrompts llm_prompts = LlmFunctionPrompts::builtin();
    if (!llm_prompts_path.empty()) llm_prompts = load_llm_function_prompts(llm_prompts_path);

    std::map<std::string, std::string> metadata;
    for (const auto& kv : metadata_kv) {
        auto [key, value] = split_named(kv);
        metadata[key] = value;
    }

    Translator translator(graph, *encoder, run.translate);
    Executor executor(graph);
    PromptBundle bundle;
    std::vector<TrainingItem> train;
    if (!train_path.empty() && run.dynamic_demonstrations) {
        train = load_training_jsonl(train_path);
        auto demos = retrieve_demonstrations(
            question, metadata, train, graph, translator, executor, *encoder, run.retriever, tmpl,
            [&](const TrainingItem& t) -> std::optional<LlmQueryProgram> {
                try {
                    return generate_query(build_bundle(tmpl, t.question, t.metadata, &graph),
                                          *backend, run.policy);
                } catch (const Error&) {
                    return std::nullopt;
                }
            });
        bundle = bundle_with_demonstrations(tmpl, demos, question, metadata, &graph);
    } else {
        bundle = build_bundle(tmpl, question, metadata, &graph);
    }
    Answer answer = answer_with_retry(question, bundle, graph, translator, executor, *backend,
                                      run.policy, &llm_prompts);
    if (!answer.failure_reason.empty())
        std::cout << "(no answer: " << answer.failure_reason << ")\n";
    for (const auto& value : answer.rendered) std::cout << value << "\n";
    return 0;
}

int cmd_eval(const std::vector<std::string>& graph_args, const std::string& dataset_path,
             const std::string& config_path, const std::string& backend_spec,
             const std::string& report_path, const std::vector<std::string>& prompt_args,
             const std::vector<std::string>& train_args, const std::string& llm_prompts_path,
             const std::string& cache_path) {
    auto cfg = load_config(config_path);
    RunConfig run = run_config_from(cfg);
    auto items = load_dataset_jsonl(dataset_path);

    std::map<std::string, ConditionGraph> graphs;
    for (const auto& arg : graph_args) {
        auto [name, path] = split_named(arg);
        graphs.emplace(name, load_cg_file(path));
    }
    std::map<std::string, PromptTemplate> prompts;
    for (const auto& arg : prompt_args) {
        auto [name, path] = split_named(arg);
        prompts[name] = load_prompt_template(path);
    }
    std::map<std::string, std::vector<TrainingItem>> train;
    for (const auto& arg : train_args) {
        auto [name, path] = split_named(arg);
        train[name] = load_training_jsonl(path);
    }

    std::map<std::string, EvalSource> sources;
    std::set<std::string> refs;
    for (const auto& item : items) refs.insert(item.source_ref);
    for (const auto& ref : refs) {
        EvalSource source;
        auto graph_it = graphs.find(ref);
        if (graph_it == graphs.end()) graph_it = graphs.find("");
        if (graph_it == graphs.end())
            throw_error(Errc::io_error, "no graph for source_ref '" + ref + "'");
        source.graph = &graph_it->second;
        auto prompt_it = prompts.find(ref);
        if (prompt_it == prompts.end()) prompt_it = prompts.find("");
        if (prompt_it != prompts.end()) source.prompt = prompt_it->second;
        auto train_it = train.find(ref);
        if (train_it == train.end()) train_it = train.find("");
        if (train_it != train.end()) source.train = &train_it->second;
        sources[ref] = std::move(source);
    }

    auto encoder = make_encoder(cfg);
    auto backend = make_backend(backend_spec, cfg.count("backend.model") ? cfg.at("backend.model") : "");
    LlmFunctionPrompts llm_prompts = LlmFunctionPrompts::builtin();
    if (!llm_prompts_path.empty()) llm_prompts = load_llm_function_prompts(llm_prompts_path);
    VerificationCache cache;
    if (!cache_path.empty()) cache.load(cache_path);

    auto report = run_eval(items, sources, *encoder, *backend, run, &llm_prompts,
                           cache_path.empty() ? nullptr : &cache);
    if (!cache_path.empty()) cache.save(cache_path);
    print_report(report, std::cout);
    if (!report_path.empty()) {
        std::ofstream os(report_path);
        os << report_json(report).dump(2) << '\n';
    }
    return 0; // completion, not accuracy, decides the exit code
}

int cmd_repl(const std::string& graph_path, const std::string& backend_spec,
             const std::string& prompts_path, const std::string& llm_prompts_path,
             const std::string& config_path) {
    auto cfg = load_config(config_path);
    RunConfig run = run_config_from(cfg);
    auto graph = load_cg_file(graph_path);
    LexicalEncoder encoder;
    Translator translator(graph, encoder, run.translate);
    Executor executor(graph);
    std::unique_ptr<GatewayBackend> backend;
    PromptTemplate tmpl;
    LlmFunctionPrompts llm_prompts = LlmFunctionPrompts::builtin();
    if (!backend_spec.empty()) {
        backend = make_backend(backend_spec, cfg.count("backend.model") ? cfg.at("backend.model") : "");
        tmpl = load_prompt_template(prompts_path);
        if (!llm_prompts_path.empty()) llm_prompts = load_llm_function_prompts(llm_prompts_path);
    }
    std::cout << "loaded " << graph.triple_count() << " triples; "
              << (backend ? "ask a question" : "enter a program line (QueryN: \"...\")")
              << ", empty line quits\n> " << std::flush;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (trim(line).empty()) break;
        try {
            Answer answer;
            if (!backend) {
                // one program per line; ';' separates steps
                std::string text = line;
                std::replace(text.begin(), text.end(), ';', '\n');
                auto [plan, report] = translator.translate(parse_program(text));
                answer = executor.execute(plan, {});
            } else {
                auto bundle = build_bundle(tmpl, line, {}, &graph);
                answer = answer_with_retry(line, bundle, graph, translator, executor, *backend,
                                           run.policy, &llm_prompts);
            }
            if (answer.rendered.empty()) std::cout << "(empty)\n";
            for (const auto& value : answer.rendered) std::cout << value << "\n";
        } catch (const Error& e) {
            std::cout << "error: " << e.what() << "\n";
        }
        std::cout << "> " << std::flush;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"condition-graph question answering over tables, KGs and temporal KGs"};
    app.require_subcommand(1);

    // ingest
    std::vector<std::string> tables, kgs, tkgs;
    std::string out_path = "graph.cg";
    bool prefix_tables = false;
    std::string granularity = "year";
    auto* ingest = app.add_subcommand("ingest", "translate sources into one condition graph");
    ingest->add_option("--table", tables, "CSV table (repeatable)");
    ingest->add_option("--kg", kgs, "TSV fact file: head<TAB>relation<TAB>tail (repeatable)");
    ingest->add_option("--tkg", tkgs,
                       "TSV quintuple file: head<TAB>relation<TAB>tail<TAB>start<TAB>end");
    ingest->add_option("--out", out_path, "output .cg file")->required();
    ingest->add_flag("--prefix-tables", prefix_tables, "prefix row markers per table (t1:line_2)");
    ingest->add_option("--granularity", granularity, "integer timeline unit (default: year)");

    // exec
    std::string graph_path, program_path, map_report_path, trace_path;
    double floor = 0.0;
    auto* exec = app.add_subcommand("exec", "translate and execute a program without any LLM");
    exec->add_option("--graph", graph_path, ".cg graph file")->required();
    exec->add_option("--program", program_path, "program text file")->required();
    exec->add_option("--map-report", map_report_path, "write the semantic-mapping report JSON");
    exec->add_option("--trace", trace_path, "write the step-by-step trace JSON");
    exec->add_option("--floor", floor, "similarity floor for semantic mapping (default 0)");

    // query
    std::string question, backend_spec, prompts_path, train_path, llm_prompts_path, config_path;
    std::vector<std::string> metadata_kv;
    auto* query = app.add_subcommand("query", "answer one natural-language question");
    query->add_option("--graph", graph_path, ".cg graph file")->required();
    query->add_option("--question", question, "the question")->required();
    query->add_option("--backend", backend_spec, "replay:FILE or http:URL")->required();
    query->add_option("--prompts", prompts_path, "prompt template JSON")->required();
    query->add_option("--train", train_path, "training JSONL for dynamic demonstrations");
    query->add_option("--llm-prompts", llm_prompts_path, "LLM-function prompt families JSON");
    query->add_option("--config", config_path, "key=value run configuration");
    query->add_option("--metadata", metadata_kv, "key=value prompt metadata (repeatable)");

    // eval
    std::vector<std::string> graph_args, prompt_args, train_args;
    std::string dataset_path, report_path, cache_path;
    auto* eval = app.add_subcommand("eval", "run a benchmark and report metrics");
    eval->add_option("--graph", graph_args, "[name=]graph.cg (repeatable)")->required();
    eval->add_option("--dataset", dataset_path, "questions JSONL")->required();
    eval->add_option("--config", config_path, "key=value run configuration");
    eval->add_option("--backend", backend_spec, "replay:FILE or http:URL")->required();
    eval->add_option("--report", report_path, "write the JSON report here");
    eval->add_option("--prompts", prompt_args, "[name=]template.json (repeatable)");
    eval->add_option("--train", train_args, "[name=]train.jsonl (repeatable)");
    eval->add_option("--llm-prompts", llm_prompts_path, "LLM-function prompt families JSON");
    eval->add_option("--cache", cache_path, "verification cache JSON");

    // repl
    auto* repl = app.add_subcommand("repl", "line-oriented ask-and-answer loop");
    repl->add_option("--graph", graph_path, ".cg graph file")->required();
    repl->add_option("--backend", backend_spec, "replay:FILE or http:URL (questions need one)");
    repl->add_option("--prompts", prompts_path, "prompt template JSON");
    repl->add_option("--llm-prompts", llm_prompts_path, "LLM-function prompt families JSON");
    repl->add_option("--config", config_path, "key=value run configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed())
            return cmd_ingest(tables, kgs, tkgs, out_path, prefix_tables, granularity);
        if (exec->parsed())
            return cmd_exec(graph_path, program_path, map_report_path, trace_path, floor);
        if (query->parsed())
            return cmd_query(graph_path, question, backend_spec, prompts_path, train_path,
                             llm_prompts_path, config_path, metadata_kv);
        if (eval->parsed())
            return cmd_eval(graph_args, dataset_path, config_path, backend_spec, report_path,
                            prompt_args, train_args, llm_prompts_path, cache_path);
        if (repl->parsed())
            return cmd_repl(graph_path, backend_spec, prompts_path, llm_prompts_path, config_path);
    } catch (const cgqa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
