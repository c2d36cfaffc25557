#pragma once

// `polypersona <subcommand> [flags]`: build-dataset, split, generate,
// evaluate, report, validate.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.
//
// --config FILE is a JSON object whose keys are long flag names without the
// dashes. Top-level keys apply to every subcommand that has such a flag; an
// object under a subcommand's name applies to that subcommand only and wins
// over top-level keys. Flags given on the command line win over both.
//
// Every subcommand that writes output also writes <out>.manifest.json: the
// effective options plus SHA-256 of every input and output file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "polypersona/assembly.hpp"
#include "polypersona/dataset.hpp"
#include "polypersona/errors.hpp"
#include "polypersona/eval/evaluate.hpp"
#include "polypersona/generation_client.hpp"
#include "polypersona/hash.hpp"
#include "polypersona/persona_store.hpp"
#include "polypersona/question_bank.hpp"
#include "polypersona/report.hpp"
#include "polypersona/text.hpp"

#ifndef POLYPERSONA_DATA_DIR
#define POLYPERSONA_DATA_DIR "data"
#endif

namespace polypersona::cli {

namespace fs = std::filesystem;

inline fs::path default_data_dir() { return fs::path(POLYPERSONA_DATA_DIR); }
inline fs::path default_bank_path() { return default_data_dir() / "default_bank.json"; }
inline fs::path default_lexicon_path() { return default_data_dir() / "sentiment_lexicon.tsv"; }

namespace detail {

inline std::vector<double> parse_number_list(const std::string& text, std::string_view what) {
    std::vector<double> out;
    for (const auto& part : split(text, ',')) {
        if (part.empty()) throw ConfigError(std::string(what) + ": empty list entry");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size()) throw ConfigError(std::string(what) + ": '" + part + "' is not a number");
        out.push_back(v);
    }
    return out;
}

inline std::string json_to_arg(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::vector<std::string> parts;
        for (const auto& e : v) parts.push_back(json_to_arg(e));
        return join(parts, ",");
    }
    return v.dump();
}

inline bool flag_given(const std::vector<std::string>& args, const std::string& name) {
    const std::string flag = "--" + name;
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

inline nlohmann::json load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
        auto j = nlohmann::json::parse(in);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// Config values become extra argv tokens right after the subcommand name,
// skipping any flag already present on the command line.
inline std::vector<std::string> merge_config(const std::vector<std::string>& args, const CLI::App& sub,
                                             const nlohmann::json& config) {
    std::map<std::string, nlohmann::json> values;
    for (const auto& [key, value] : config.items())
        if (!value.is_object()) values[key] = value;
    if (config.contains(sub.get_name())) {
        const auto& section = config[sub.get_name()];
        if (!section.is_object()) throw ConfigError("config section '" + sub.get_name() + "' must be an object");
        for (const auto& [key, value] : section.items()) {
            if (sub.get_option_no_throw("--" + key) == nullptr)
                throw ConfigError("config section '" + sub.get_name() + "' has unknown key '" + key + "'");
            values[key] = value;
        }
    }
    std::vector<std::string> injected;
    for (const auto& [key, value] : values) {
        if (key == "config" || key == "help") continue;
        const CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr || flag_given(args, key)) continue;
        if (opt->get_expected_min() == 0) {  // boolean flag
            if (value.is_boolean() ? value.get<bool>() : json_to_arg(value) == "true") injected.push_back("--" + key);
            continue;
        }
        injected.push_back("--" + key);
        injected.push_back(json_to_arg(value));
    }
    std::vector<std::string> out;
    bool done = false;
    for (const auto& a : args) {
        out.push_back(a);
        if (!done && a == sub.get_name()) {
            out.insert(out.end(), injected.begin(), injected.end());
            done = true;
        }
    }
    return out;
}

inline nlohmann::ordered_json effective_options(const CLI::App& sub) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const auto& names = opt->get_lnames();
        if (names.empty() || names.front() == "help" || names.front() == "config") continue;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            j[names.front()] = opt->get_expected_min() == 0 ? std::string("true") : join(results, ",");
        } else {
            j[names.front()] = opt->get_default_str();
        }
    }
    return j;
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + path.string());
}

inline void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

struct Manifest {
    std::string command;
    nlohmann::ordered_json options;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;

    void write(const fs::path& path) const {
        nlohmann::ordered_json j;
        j["tool"] = "polypersona";
        j["command"] = command;
        j["options"] = options;
        j["inputs"] = nlohmann::ordered_json::object();
        for (const auto& p : inputs) j["inputs"][p.string()] = sha256_file(p);
        j["outputs"] = nlohmann::ordered_json::object();
        for (const auto& p : outputs) j["outputs"][p.string()] = sha256_file(p);
        write_text(path, j.dump(2) + "\n");
    }
};

inline fs::path manifest_path(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

// {"record_id", "text"} lines (generation lines qualify) -> record id -> text.
inline std::map<std::string, std::string> read_responses(const fs::path& path) {
    std::map<std::string, std::string> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        if (!j.is_object() || !j.contains("record_id") || !j["record_id"].is_string() || !j.contains("text") ||
            !j["text"].is_string())
            throw ParseError(path.string() + ": expected {\"record_id\", \"text\"}", line);
        if (!out.emplace(j["record_id"].get<std::string>(), j["text"].get<std::string>()).second)
            throw ParseError(path.string() + ": duplicate record_id '" + j["record_id"].get<std::string>() + "'", line);
    });
    return out;
}

}  // namespace detail

struct BuildOptions {
    std::string bank = default_bank_path().string();
    std::string personas;
    std::string plan;
    std::uint64_t seed = 0;
    std::string out;
    std::string responses;
    std::string rendered;
    std::string chat_template = "fallback";
};

struct SplitOptions {
    std::string in;
    std::string fractions = "0.8,0.1,0.1";
    std::string stratify = "domain,qtype";
    std::uint64_t seed = 0;
    std::string out_prefix;
};

struct GenerateOptions {
    std::string in;
    std::string endpoint;
    std::string model;
    std::string out;
    double temperature = 0.7;
    int max_tokens = 256;
    double timeout = 60.0;
    int max_retries = 3;
    std::size_t max_in_flight = 4;
    std::string cache;
    std::uint64_t seed = 0;
    int backoff_base_ms = 500;
    int backoff_cap_ms = 30000;
};

struct EvaluateOptions {
    std::string dataset;
    std::string generations;
    std::string out;
    std::string bank;
    std::string lexicon = default_lexicon_path().string();
    std::size_t embedding_dim = 64;
    bool idf = false;
    std::string quality_weights = "1,1,1";
};

struct ReportOptions {
    std::string in;
    std::string group = "model";
    std::string format = "markdown";
    std::string out;
    std::string averaging = "micro";
    std::string best_by;
};

struct ValidateOptions {
    std::string bank;
    std::string personas;
    std::string dataset;
    std::string plan;
    std::string lexicon;
};

inline int run_build_dataset(const BuildOptions& o, const CLI::App& sub, std::ostream& log) {
    const auto bank = load_question_bank(o.bank);
    const auto ingest = ingest_personas(o.personas);
    for (const auto& s : ingest.skipped) log << "personas line " << s.line << " skipped: " << s.reason << '\n';
    AssemblyPlan plan = load_plan(o.plan);
    plan.seed = o.seed;
    auto records = assemble_dataset(ingest.store, bank, plan);

    detail::Manifest manifest{"build-dataset", detail::effective_options(sub), {o.bank, o.personas, o.plan}, {}};
    if (!o.responses.empty()) {
        const auto responses = detail::read_responses(o.responses);
        std::size_t filled = 0;
        for (auto& r : records) {
            const auto it = responses.find(r.id);
            if (it == responses.end()) continue;
            r.messages[2].content = it->second;
            ++filled;
        }
        if (filled != responses.size())
            throw SchemaError(std::to_string(responses.size() - filled) + " responses match no built record");
        manifest.inputs.emplace_back(o.responses);
        log << "attached " << filled << " reference responses\n";
    }
    detail::ensure_parent(o.out);
    write_jsonl(records, o.out);
    manifest.outputs.emplace_back(o.out);
    if (!o.rendered.empty()) {
        const auto tmpl = o.chat_template == "native" ? ChatTemplate::native_passthrough : ChatTemplate::fallback;
        std::vector<RenderedPair> pairs;
        pairs.reserve(records.size());
        for (const auto& r : records) pairs.push_back(render_chatml(r, tmpl));
        detail::ensure_parent(o.rendered);
        write_jsonl(std::span<const RenderedPair>(pairs), o.rendered);
        manifest.outputs.emplace_back(o.rendered);
    }
    manifest.write(detail::manifest_path(o.out));
    log << "wrote " << records.size() << " records to " << o.out << '\n';
    return 0;
}

inline int run_split(const SplitOptions& o, const CLI::App& sub, std::ostream& log) {
    SplitSpec spec;
    const auto f = detail::parse_number_list(o.fractions, "--fractions");
    if (f.size() != 3) throw ConfigError("--fractions needs exactly three values (train,val,test)");
    spec.fractions = {f[0], f[1], f[2]};
    for (const auto& key : split(o.stratify, ',')) {
        if (key == "domain") spec.stratify_domain = true;
        else if (key == "qtype" || key == "question_type") spec.stratify_qtype = true;
        else if (key != "none" && !key.empty()) throw ConfigError("--stratify accepts domain, qtype or none");
    }
    spec.seed = o.seed;
    const auto records = read_jsonl(o.in);
    const auto result = split_dataset(records, spec);

    std::string prefix = o.out_prefix;
    if (prefix.empty()) {
        prefix = o.in;
        if (prefix.size() > 6 && prefix.substr(prefix.size() - 6) == ".jsonl") prefix.resize(prefix.size() - 6);
    }
    detail::Manifest manifest{"split", detail::effective_options(sub), {o.in}, {}};
    const std::pair<const char*, const std::vector<ChatRecord>*> parts[] = {
        {"train", &result.train}, {"val", &result.val}, {"test", &result.test}};
    for (const auto& [name, part] : parts) {
        const fs::path path = prefix + "." + name + ".jsonl";
        detail::ensure_parent(path);
        write_jsonl(*part, path);
        manifest.outputs.push_back(path);
        log << name << ": " << part->size() << " records -> " << path.string() << '\n';
    }
    manifest.write(detail::manifest_path(prefix + ".split"));
    return 0;
}

inline int run_generate(const GenerateOptions& o, const CLI::App& sub, std::ostream& log) {
    EndpointConfig cfg;
    cfg.base_url = o.endpoint;
    cfg.model_name = o.model;
    cfg.api_key = api_key_from_env();
    cfg.temperature = o.temperature;
    cfg.max_tokens = o.max_tokens;
    cfg.request_timeout_s = o.timeout;
    cfg.max_retries = o.max_retries;
    cfg.max_in_flight = o.max_in_flight;
    cfg.seed = o.seed;
    cfg.backoff_base = std::chrono::milliseconds(o.backoff_base_ms);
    cfg.backoff_cap = std::chrono::milliseconds(o.backoff_cap_ms);
    cfg.validate();

    const auto records = read_jsonl(o.in);
    std::optional<ResponseCache> cache;
    if (!o.cache.empty()) cache.emplace(o.cache);
    const auto results = generate_batch(records, cfg, cache ? &*cache : nullptr);

    detail::ensure_parent(o.out);
    write_jsonl(std::span<const GenerationResult>(results), o.out);
    detail::Manifest manifest{"generate", detail::effective_options(sub), {o.in}, {o.out}};
    manifest.write(detail::manifest_path(o.out));

    std::size_t failed = 0, cached = 0;
    for (const auto& r : results) {
        if (!r.ok()) {
            ++failed;
            log << "record " << r.record_id << " failed: " << *r.error << '\n';
        }
        if (r.cached) ++cached;
    }
    log << "generated " << results.size() - failed << "/" << results.size() << " (" << cached << " from cache)\n";
    return failed == 0 ? 0 : 1;
}

inline int run_evaluate(const EvaluateOptions& o, const CLI::App& sub, std::ostream& log) {
    const auto records = read_jsonl(o.dataset);
    std::map<std::string, const ChatRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;
    const auto generations = read_generations(o.generations);

    std::optional<QuestionBank> bank;
    if (!o.bank.empty()) bank = load_question_bank(o.bank);
    const auto lexicon = eval::load_lexicon(o.lexicon);
    const eval::HashedTrigramProvider provider(o.embedding_dim);

    eval::EvalContext ctx;
    ctx.embeddings = &provider;
    ctx.lexicon = &lexicon;
    const auto w = detail::parse_number_list(o.quality_weights, "--quality-weights");
    if (w.size() != 3) throw ConfigError("--quality-weights needs three values (format,length,non-degeneracy)");
    for (double x : w)
        if (!(x >= 0.0)) throw ConfigError("--quality-weights must be nonnegative");
    if (w[0] + w[1] + w[2] <= 0.0) throw ConfigError("--quality-weights must not all be zero");
    ctx.quality.weights = {w[0], w[1], w[2]};

    eval::IdfTable idf;
    if (o.idf) {
        std::vector<eval::Tokens> docs;
        docs.reserve(records.size());
        for (const auto& r : records) docs.push_back(tokenize(r.assistant()));
        idf = eval::compute_idf(docs);
        ctx.idf = &idf;
    }

    std::vector<report::MetricRecord> rows;
    rows.reserve(generations.size());
    std::size_t skipped = 0;
    for (const auto& g : generations) {
        const auto it = by_id.find(g.record_id);
        if (it == by_id.end()) throw SchemaError("generation for unknown record '" + g.record_id + "'");
        if (!g.ok()) {
            ++skipped;
            continue;
        }
        const ChatRecord& record = *it->second;
        const SurveyQuestion* question = bank ? bank->find(record.meta.question_id) : nullptr;
        const auto result = eval::evaluate_pair(record, g.text, record.assistant(), ctx, question);
        rows.push_back({record.id, g.model_name, std::string(to_string(record.meta.domain)),
                        std::string(to_string(record.meta.qtype)), report::to_values(result.metrics), result.flags});
    }
    detail::ensure_parent(o.out);
    write_jsonl(std::span<const report::MetricRecord>(rows), o.out);

    detail::Manifest manifest{"evaluate", detail::effective_options(sub), {o.dataset, o.generations, o.lexicon}, {o.out}};
    if (!o.bank.empty()) manifest.inputs.emplace_back(o.bank);
    manifest.write(detail::manifest_path(o.out));
    log << "evaluated " << rows.size() << " generations";
    if (skipped > 0) log << " (" << skipped << " failed generations skipped)";
    log << '\n';
    return 0;
}

inline int run_report(const ReportOptions& o, const CLI::App& sub, std::ostream& out, std::ostream& log) {
    const auto records = report::read_metrics(o.in);
    bool by_domain = false;
    for (const auto& key : split(o.group, ',')) {
        if (key == "domain") by_domain = true;
        else if (key != "model") throw ConfigError("--group accepts model or model,domain");
    }
    const auto format = o.format == "csv" ? report::Format::csv : report::Format::markdown;
    const auto averaging = o.averaging == "macro" ? report::Averaging::macro : report::Averaging::micro;

    std::string text;
    if (!o.best_by.empty()) {
        const auto rows = report::aggregate(records, true);
        const auto winners = report::best_per_domain(rows, o.best_by);
        text = report::render(winners, format);
    } else {
        const auto rows = report::aggregate(records, by_domain, averaging);
        text = report::render(rows, format);
    }
    if (o.out.empty()) {
        out << text;
    } else {
        detail::write_text(o.out, text);
        detail::Manifest manifest{"report", detail::effective_options(sub), {o.in}, {o.out}};
        manifest.write(detail::manifest_path(o.out));
        log << "wrote " << o.out << '\n';
    }
    return 0;
}

inline int run_validate(const ValidateOptions& o, std::ostream& out) {
    if (o.bank.empty() && o.personas.empty() && o.dataset.empty() && o.plan.empty() && o.lexicon.empty())
        throw ConfigError("validate needs at least one of --bank, --personas, --dataset, --plan, --lexicon");
    if (!o.bank.empty()) {
        const auto bank = load_question_bank(o.bank);
        std::array<std::size_t, kQuestionTypeCount> by_type{};
        for (const auto& q : bank.all()) ++by_type[index_of(q.qtype)];
        out << "bank: " << bank.size() << " questions (";
        for (std::size_t t = 0; t < kQuestionTypeCount; ++t)
            out << (t ? ", " : "") << kQuestionTypeNames[t] << ' ' << by_type[t];
        out << ")\n";
    }
    if (!o.personas.empty()) {
        const auto ingest = ingest_personas(o.personas);
        out << "personas: " << ingest.store.size() << " cards, " << ingest.skipped.size() << " lines skipped\n";
    }
    if (!o.plan.empty()) {
        const auto plan = load_plan(o.plan);
        out << "plan: " << plan.total() << " records\n";
    }
    if (!o.dataset.empty()) {
        const auto records = read_jsonl(o.dataset);
        std::size_t bad = 0;
        for (const auto& r : records) {
            for (const auto& problem : validate_record(r)) {
                out << "record " << r.id << ": " << problem << '\n';
                ++bad;
            }
        }
        if (bad > 0) throw SchemaError(std::to_string(bad) + " record problems in " + o.dataset);
        out << "dataset: " << records.size() << " records\n";
    }
    if (!o.lexicon.empty()) {
        const auto lex = eval::load_lexicon(o.lexicon);
        out << "lexicon: " << lex.size() << " entries\n";
    }
    return 0;
}

inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Persona-conditioned survey response dataset builder and evaluator", "polypersona"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (keys are long flag names)");

    BuildOptions b;
    auto* build = app.add_subcommand("build-dataset", "Assemble ChatML records from a bank, personas and a plan");
    build->add_option("--config", config_path, "JSON config file");
    build->add_option("--bank", b.bank, "Question bank JSON")->check(CLI::ExistingFile);
    build->add_option("--personas", b.personas, "Persona JSONL or plain text")->required()->check(CLI::ExistingFile);
    build->add_option("--plan", b.plan, "Assembly plan JSON")->required()->check(CLI::ExistingFile);
    build->add_option("--seed", b.seed, "Random seed")->required();
    build->add_option("--out", b.out, "Output dataset JSONL")->required();
    build->add_option("--responses", b.responses, "JSONL of {record_id, text} filling assistant turns")
        ->check(CLI::ExistingFile);
    build->add_option("--rendered", b.rendered, "Also write rendered {input_text, full_text} JSONL");
    build->add_option("--template", b.chat_template, "Template for --rendered")
        ->check(CLI::IsMember({"fallback", "native"}));

    SplitOptions s;
    auto* split_cmd = app.add_subcommand("split", "Stratified train/val/test split");
    split_cmd->add_option("--config", config_path, "JSON config file");
    split_cmd->add_option("--in", s.in, "Dataset JSONL")->required()->check(CLI::ExistingFile);
    split_cmd->add_option("--fractions", s.fractions, "train,val,test fractions");
    split_cmd->add_option("--stratify", s.stratify, "Comma list of domain, qtype; or none");
    split_cmd->add_option("--seed", s.seed, "Random seed")->required();
    split_cmd->add_option("--out-prefix", s.out_prefix, "Writes PREFIX.{train,val,test}.jsonl (default: input stem)");

    GenerateOptions g;
    auto* gen = app.add_subcommand("generate", "Fill assistant turns from a chat-completion endpoint");
    gen->add_option("--config", config_path, "JSON config file");
    gen->add_option("--in", g.in, "Dataset JSONL")->required()->check(CLI::ExistingFile);
    gen->add_option("--endpoint", g.endpoint, "Base URL; requests go to {URL}/v1/chat/completions")->required();
    gen->add_option("--model", g.model, "Model name sent to the endpoint")->required();
    gen->add_option("--out", g.out, "Output generations JSONL")->required();
    gen->add_option("--temperature", g.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
    gen->add_option("--max-tokens", g.max_tokens, "Completion token limit")->check(CLI::PositiveNumber);
    gen->add_option("--timeout", g.timeout, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
    gen->add_option("--max-retries", g.max_retries, "Retries on timeout, 429 and 5xx")->check(CLI::NonNegativeNumber);
    gen->add_option("--max-in-flight", g.max_in_flight, "Concurrent requests")->check(CLI::PositiveNumber);
    gen->add_option("--cache", g.cache, "Response cache directory");
    gen->add_option("--seed", g.seed, "Seed for retry jitter");
    gen->add_option("--backoff-base-ms", g.backoff_base_ms, "Backoff base delay")->check(CLI::NonNegativeNumber);
    gen->add_option("--backoff-cap-ms", g.backoff_cap_ms, "Backoff delay cap")->check(CLI::NonNegativeNumber);

    EvaluateOptions e;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score generations against reference responses");
    eval_cmd->add_option("--config", config_path, "JSON config file");
    eval_cmd->add_option("--dataset", e.dataset, "Dataset JSONL with reference assistant turns")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--generations", e.generations, "Generations JSONL")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", e.out, "Output metrics JSONL")->required();
    eval_cmd->add_option("--bank", e.bank, "Question bank, for likert scale anchors")->check(CLI::ExistingFile);
    eval_cmd->add_option("--lexicon", e.lexicon, "Sentiment lexicon (token<TAB>+1|-1)")->check(CLI::ExistingFile);
    eval_cmd->add_option("--embedding-dim", e.embedding_dim, "Dimension of the hashed trigram embeddings")
        ->check(CLI::PositiveNumber);
    eval_cmd->add_flag("--idf", e.idf, "Weight semantic F1 by idf over the reference responses");
    eval_cmd->add_option("--quality-weights", e.quality_weights, "format,length,non-degeneracy weights");

    ReportOptions r;
    auto* rep = app.add_subcommand("report", "Aggregate metrics into tables");
    rep->add_option("--config", config_path, "JSON config file");
    rep->add_option("--in", r.in, "Metrics JSONL")->required()->check(CLI::ExistingFile);
    rep->add_option("--group", r.group, "model or model,domain");
    rep->add_option("--format", r.format, "Output format")->check(CLI::IsMember({"markdown", "csv"}));
    rep->add_option("--out", r.out, "Output file (default: standard output)");
    rep->add_option("--averaging", r.averaging, "micro (per example) or macro (per domain, then averaged)")
        ->check(CLI::IsMember({"micro", "macro"}));
    rep->add_option("--best-by", r.best_by, "Emit the per-domain winner table ranked by this metric");

    ValidateOptions v;
    auto* val = app.add_subcommand("validate", "Check input files");
    val->add_option("--config", config_path, "JSON config file");
    val->add_option("--bank", v.bank, "Question bank JSON")->check(CLI::ExistingFile);
    val->add_option("--personas", v.personas, "Persona file")->check(CLI::ExistingFile);
    val->add_option("--dataset", v.dataset, "Dataset JSONL")->check(CLI::ExistingFile);
    val->add_option("--plan", v.plan, "Assembly plan JSON")->check(CLI::ExistingFile);
    val->add_option("--lexicon", v.lexicon, "Sentiment lexicon")->check(CLI::ExistingFile);

    std::vector<std::string> args = argv;
    try {
        // Resolve --config before parsing so its values pass through the same checks as flags.
        std::string cfg_file;
        const CLI::App* chosen = nullptr;
        for (std::size_t i = 1; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) cfg_file = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0) cfg_file = args[i].substr(9);
            else if (chosen == nullptr && args[i].rfind("-", 0) != 0)
                chosen = app.get_subcommand_no_throw(args[i]);
        }
        if (!cfg_file.empty() && chosen != nullptr)
            args = detail::merge_config(args, *chosen, detail::load_config(cfg_file));
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }

    try {
        std::vector<const char*> cargs;
        cargs.reserve(args.size());
        for (const auto& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex, err, err);
        return 2;
    }

    try {
        if (build->parsed()) return run_build_dataset(b, *build, err);
        if (split_cmd->parsed()) return run_split(s, *split_cmd, err);
        if (gen->parsed()) return run_generate(g, *gen, err);
        if (eval_cmd->parsed()) return run_evaluate(e, *eval_cmd, err);
        if (rep->parsed()) return run_report(r, *rep, out, err);
        if (val->parsed()) return run_validate(v, out);
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }
    err << app.help();
    return 2;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace polypersona::cli
