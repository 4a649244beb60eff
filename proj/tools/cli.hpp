#pragma once

#include <algorithm>
#include <csignal>
#include <fstream>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lexsel/lexsel.hpp"

namespace lexsel::cli {

namespace fs = std::filesystem;

/// Files a subcommand read and wrote; recorded in the run manifest.
struct Io {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
};

inline nlohmann::json versions() {
  return {{"lexsel", lexsel::version},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cpp_httplib", CPPHTTPLIB_VERSION},
          {"cli11", CLI11_VERSION}};
}

/// manifest.json: enough to replay the run (argv + effective config) and to
/// check that inputs and outputs are unchanged. No timestamps, so identical
/// reruns produce identical manifests.
inline void write_manifest(const fs::path& out_dir, const std::string& command,
                           const std::vector<std::string>& argv, const std::string& config, const Io& io) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& p : io.inputs) {
    if (fs::is_regular_file(p)) inputs[p.string()] = sha256_file(p);
  }
  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& p : io.outputs) outputs[p.filename().string()] = sha256_file(p);
  jsonl::write_json(out_dir / "manifest.json", {{"command", command},
                                                {"argv", argv},
                                                {"config", config},
                                                {"config_hash", sha256_hex(config)},
                                                {"inputs", inputs},
                                                {"outputs", outputs},
                                                {"versions", versions()}});
}

[[noreturn]] inline void usage(const std::string& message) { fail(ErrorKind::usage, message); }

inline std::unique_ptr<ChatModel> chat_model(const fs::path& endpoint_cfg) {
  return std::make_unique<HttpChatModel>(load_endpoint(endpoint_cfg));
}

// ---------------------------------------------------------------------------
// Subcommands. Each registers its options and returns the action to run.

using Action = std::function<Io()>;

struct Command {
  CLI::App* app = nullptr;
  Action action;
  fs::path* out = nullptr;  // null when the command writes no manifest
};

inline Command add_synth(CLI::App& root) {
  auto* app = root.add_subcommand("synth", "Generate a synthetic aligned corpus with planted concepts");
  auto o = std::make_shared<synth::Options>();
  auto out = std::make_shared<fs::path>();
  app->add_option("--seed", o->seed, "Generator seed");
  app->add_option("--concepts", o->concepts, "Planted concepts")->check(CLI::PositiveNumber);
  app->add_option("--min-pairs", o->min_pairs, "Minimum sentence pairs");
  app->add_option("--min-occurrences", o->min_occurrences, "Minimum occurrences per variation");
  app->add_option("--max-occurrences", o->max_occurrences, "Maximum occurrences per variation");
  app->add_option("--out", *out, "Output directory")->required();
  return {app, [o, out] {
            if (o->min_occurrences > o->max_occurrences) usage("--min-occurrences exceeds --max-occurrences");
            auto s = synth::generate(*o);
            const auto corpus = *out / "corpus.jsonl";
            const auto planted = *out / "planted.json";
            write_corpus(corpus, s.corpus);
            jsonl::write_json(planted, synth::planted_to_json(s));
            log::info("synth", {{"pairs", s.corpus.pairs.size()}, {"planted", s.planted.size()}});
            return Io{{}, {corpus, planted}};
          },
          out.get()};
}

inline Command add_align(CLI::App& root) {
  struct Opts {
    fs::path corpus, source, target, tsv, source_conllu, target_conllu, alignments, out;
    std::string source_lang = "en", target_lang = "und", tokenizer = "punct", provenance;
    bool allow_mismatch = false;
    int iterations = 5;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("align", "Load a parallel corpus, attach annotations, and word-align it");
  app->add_option("--corpus", o->corpus, "Corpus JSONL")->check(CLI::ExistingFile);
  app->add_option("--source", o->source, "Moses source-side text")->check(CLI::ExistingFile);
  app->add_option("--target", o->target, "Moses target-side text")->check(CLI::ExistingFile);
  app->add_option("--tsv", o->tsv, "Tab-separated source/target file")->check(CLI::ExistingFile);
  app->add_option("--source-lang", o->source_lang, "Source language code");
  app->add_option("--target-lang", o->target_lang, "Target language code");
  app->add_option("--tokenizer", o->tokenizer, "Tokenizer for plain text")->check(CLI::IsMember({"punct", "whitespace"}));
  app->add_option("--provenance", o->provenance, "Corpus name used in pair ids");
  app->add_option("--source-conllu", o->source_conllu, "CoNLL-U annotations for the source side")->check(CLI::ExistingFile);
  app->add_option("--target-conllu", o->target_conllu, "CoNLL-U annotations for the target side")->check(CLI::ExistingFile);
  app->add_flag("--allow-token-mismatch", o->allow_mismatch, "Apply CoNLL-U rows positionally when token counts differ");
  app->add_option("--alignments", o->alignments, "Pharaoh alignments to attach instead of training")->check(CLI::ExistingFile);
  app->add_option("--iterations", o->iterations, "EM iterations")->check(CLI::PositiveNumber);
  app->add_option("--out", o->out, "Output directory")->required();
  return {app, [o] {
            Io io;
            const int sources = !o->corpus.empty() + !o->tsv.empty() + !(o->source.empty() && o->target.empty());
            if (sources != 1) usage("give exactly one of --corpus, --tsv, or --source/--target");
            if (o->source.empty() != o->target.empty()) usage("--source and --target go together");

            Corpus corpus;
            LoadOptions lo;
            lo.tokenizer = text::parse_tokenizer(o->tokenizer);
            lo.provenance = o->provenance;
            lo.language_pair = {o->source_lang, o->target_lang};
            if (!o->corpus.empty()) {
              corpus = read_corpus(o->corpus);
              io.inputs.push_back(o->corpus);
            } else if (!o->tsv.empty()) {
              corpus = load_tsv(o->tsv, lo);
              io.inputs.push_back(o->tsv);
            } else {
              corpus = load_moses(o->source, o->target, lo);
              io.inputs.insert(io.inputs.end(), {o->source, o->target});
            }
            ConlluOptions co{o->allow_mismatch};
            if (!o->source_conllu.empty()) {
              corpus = attach_conllu(std::move(corpus), Side::source, o->source_conllu, co);
              io.inputs.push_back(o->source_conllu);
            }
            if (!o->target_conllu.empty()) {
              corpus = attach_conllu(std::move(corpus), Side::target, o->target_conllu, co);
              io.inputs.push_back(o->target_conllu);
            }
            if (!o->alignments.empty()) {
              corpus = attach_alignments(std::move(corpus), o->alignments);
              io.inputs.push_back(o->alignments);
            } else {
              auto table = train_model1(corpus, o->iterations, [](int it, const TranslationTable&, double ll) {
                log::info("em_iteration", {{"iteration", it}, {"log_likelihood", ll}});
              });
              corpus = align_corpus(table, std::move(corpus));
              const auto ttable = o->out / "ttable.jsonl";
              write_ttable(ttable, table);
              io.outputs.push_back(ttable);
            }
            const auto corpus_out = o->out / "corpus.jsonl";
            const auto pharaoh = o->out / "alignments.pharaoh";
            write_corpus(corpus_out, corpus);
            write_pharaoh(pharaoh, corpus);
            io.outputs.insert(io.outputs.end(), {corpus_out, pharaoh});
            log::info("aligned", {{"pairs", corpus.pairs.size()}, {"links", corpus.link_count()}});
            return io;
          },
          &o->out};
}

inline Command add_mine(CLI::App& root) {
  struct Opts {
    fs::path corpus, out;
    MineOptions mine;
    bool no_sense_filter = false;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("mine", "Extract concepts with lexical variations");
  app->add_option("--corpus", o->corpus, "Aligned corpus JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--min-count", o->mine.min_count, "Minimum occurrences per variation");
  app->add_option("--min-variations", o->mine.min_variations, "Minimum variations per concept")
      ->check(CLI::Range(2, 1000000));
  app->add_option("--entropy", o->mine.entropy_threshold, "Minimum entropy in nats")
      ->check(CLI::NonNegativeNumber);
  app->add_flag("--no-sense-filter", o->no_sense_filter, "Disable the sense filter");
  app->add_option("--sense-keep-fraction", o->mine.sense_keep_fraction,
                  "Minimum majority-sense fraction for a variation")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--out", o->out, "Output directory")->required();
  return {app, [o] {
            auto opts = o->mine;
            opts.sense_filter = !o->no_sense_filter;
            const auto concepts = extract_concepts(read_corpus(o->corpus), opts);
            const auto path = o->out / "concepts.jsonl";
            write_concepts(path, concepts);
            log::info("mined", {{"concepts", concepts.size()}});
            return Io{{o->corpus}, {path}};
          },
          &o->out};
}

inline Command add_build_dataset(CLI::App& root) {
  struct Opts {
    fs::path concepts, corpus, out;
    BuildOptions build;
    std::vector<std::string> annotators;
    std::string session_id = "session";
  };
  auto o = std::make_shared<Opts>();
  o->build.sample.seed = 1;
  auto* app = root.add_subcommand("build-dataset", "Sample candidate lexical-selection items");
  app->add_option("--concepts", o->concepts, "Concepts JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--corpus", o->corpus, "Aligned corpus JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--max-concepts", o->build.sample.max_concepts, "Concepts to sample")->check(CLI::PositiveNumber);
  app->add_option("--per-concept", o->build.sample.per_concept, "Items per concept")->check(CLI::PositiveNumber);
  app->add_option("--max-deviation", o->build.max_deviation, "Uniformity filter bound")->check(CLI::Range(0.0, 1.0));
  app->add_option("--seed", o->build.sample.seed, "Sampling seed");
  app->add_option("--annotators", o->annotators, "Annotator ids; also writes session.json")->delimiter(',');
  app->add_option("--session-id", o->session_id, "Session id for session.json");
  app->add_option("--out", o->out, "Output directory")->required();
  return {app, [o] {
            const auto items = build_dataset(read_concepts(o->concepts), read_corpus(o->corpus), o->build);
            const auto path = o->out / "items.jsonl";
            write_items(path, items);
            Io io{{o->concepts, o->corpus}, {path}};
            if (!o->annotators.empty()) {
              create_session(task_sources(items), o->annotators, o->build.sample.seed);  // validates ids
              const auto session = o->out / "session.json";
              jsonl::write_json(session, {{"id", o->session_id},
                                          {"seed", o->build.sample.seed},
                                          {"annotators", o->annotators},
                                          {"kind", "lexical_selection"},
                                          {"source", "items.jsonl"},
                                          {"journal", "judgments.jsonl"}});
              io.outputs.push_back(session);
            }
            log::info("dataset", {{"items", items.size()}});
            return io;
          },
          &o->out};
}

inline std::atomic<AnnotationServer*>& active_server() {
  static std::atomic<AnnotationServer*> s{nullptr};
  return s;
}

inline Command add_serve(CLI::App& root) {
  struct Opts {
    fs::path session, static_dir;
    std::string host = "127.0.0.1";
    int port = 8080;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("serve-annotation", "Serve an annotation session over HTTP");
  app->add_option("--session", o->session, "Session JSON")->required()->check(CLI::ExistingFile);
  app->add_option("--host", o->host, "Bind address");
  app->add_option("--port", o->port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  app->add_option("--static", o->static_dir, "Directory of UI assets served at /")->check(CLI::ExistingDirectory);
  return {app, [o] {
            auto session = load_session(o->session);
            AnnotationServer server(*session, o->static_dir.empty() ? std::nullopt
                                                                    : std::optional<fs::path>(o->static_dir));
            const int port = server.bind(o->host, o->port);
            log::info("serving", {{"session", session->id()}, {"host", o->host}, {"port", port},
                                  {"tasks", session->tasks().size()}});
            active_server() = &server;
            std::signal(SIGINT, [](int) {
              if (auto* s = active_server().load()) s->stop();
            });
            std::signal(SIGTERM, [](int) {
              if (auto* s = active_server().load()) s->stop();
            });
            server.serve();
            active_server() = nullptr;
            return Io{};
          },
          nullptr};
}

inline Command add_finalize(CLI::App& root) {
  struct Opts {
    fs::path items, judgments, out;
    FinalizeOptions finalize;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("finalize", "Accept items by strict majority of annotator judgments");
  app->add_option("--items", o->items, "Candidate items JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--judgments", o->judgments, "Judgment journal JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--min-annotators", o->finalize.min_annotators, "Judgments required per item")
      ->check(CLI::PositiveNumber);
  app->add_option("--out", o->out, "Output directory")->required();
  return {app, [o] {
            std::map<std::string, std::vector<std::string>> votes;
            for (const auto& j : read_judgments(o->judgments))
              if (j.kind == TaskKind::lexical_selection && j.value.is_string())
                votes[j.item_ref].push_back(j.value.get<std::string>());
            const auto split = finalize(read_items(o->items), votes, o->finalize);
            const auto dataset = o->out / "dataset.jsonl";
            const auto summary = o->out / "summary.json";
            write_items(dataset, split.items);
            jsonl::write_json(summary, {{"n_items", split.items.size()},
                                        {"accepted", split.accepted_count()},
                                        {"acceptance_fraction", split.acceptance_fraction()},
                                        {"acceptance_rule", split.acceptance_rule}});
            log::info("finalized", {{"items", split.items.size()}, {"accepted", split.accepted_count()}});
            return Io{{o->items, o->judgments}, {dataset, summary}};
          },
          &o->out};
}

inline Command add_agreement(CLI::App& root) {
  struct Opts {
    fs::path judgments, concepts, out;
    std::vector<std::string> annotators;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("agreement", "Inter-annotator agreement and verification statistics");
  app->add_option("--judgments", o->judgments, "Judgment journal JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--annotators", o->annotators, "Restrict to these annotators")->delimiter(',');
  app->add_option("--concepts", o->concepts, "Concepts JSONL, for variation precision/recall")
      ->check(CLI::ExistingFile);
  app->add_option("--out", o->out, "Output directory (report is always printed)");
  return {app, [o] {
            const auto judgments = read_judgments(o->judgments);
            std::set<TaskKind> kinds;
            for (const auto& j : judgments) kinds.insert(j.kind);
            nlohmann::json report = {{"agreement", nlohmann::json::object()}};
            for (auto kind : kinds) {
              auto m = agreement_matrix(judgments, kind, o->annotators);
              report["agreement"][to_string(kind)] =
                  (m.empty() || m.front().size() < 2) ? nlohmann::json() : to_json(agreement(m));
            }
            Io io{{o->judgments}, {}};
            if (kinds.count(TaskKind::rule_verification))
              report["rule_correctness"] = rule_correctness(rule_labels_from_judgments(judgments));
            if (!o->concepts.empty()) {
              io.inputs.push_back(o->concepts);
              report["variations"] = to_json(precision_recall(read_concepts(o->concepts),
                                                              feedback_from_judgments(judgments)));
            }
            std::cout << report.dump(2) << '\n';
            if (!o->out.empty()) {
              const auto path = o->out / "agreement.json";
              jsonl::write_json(path, report);
              io.outputs.push_back(path);
            }
            return io;
          },
          &o->out};
}

inline Command add_gen_rules(CLI::App& root) {
  struct Opts {
    fs::path concepts, corpus, endpoint, cache, out;
    RuleOptions rules;
    std::size_t max_in_flight = 4;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("gen-rules", "Generate per-concept rules with a chat model");
  app->add_option("--concepts", o->concepts, "Concepts JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--corpus", o->corpus, "Aligned corpus JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--endpoint", o->endpoint, "Endpoint config (key=value)")->required()->check(CLI::ExistingFile);
  app->add_option("--target-language", o->rules.target_language, "Target language name")->required();
  app->add_option("--source-language", o->rules.source_language, "Source language name");
  app->add_option("--per-variation", o->rules.context.per_variation, "Context sentences per variation")
      ->check(CLI::PositiveNumber);
  app->add_option("--max-tokens", o->rules.context.max_tokens, "Context sentences must be shorter than this")
      ->check(CLI::PositiveNumber);
  app->add_option("--cache", o->cache, "Rule cache directory (default <out>/rule_cache)");
  app->add_option("--max-in-flight", o->max_in_flight, "Concurrent requests")->check(CLI::PositiveNumber);
  app->add_option("--out", o->out, "Output directory")->required();
  return {app, [o] {
            auto model = chat_model(o->endpoint);
            o->rules.temperature = load_endpoint(o->endpoint).temperature;
            RuleCache cache(o->cache.empty() ? o->out / "rule_cache" : o->cache);
            const auto batch = generate_rules_batch(*model, read_concepts(o->concepts), read_corpus(o->corpus),
                                                    o->rules, cache, o->max_in_flight);
            const auto path = o->out / "rules.jsonl";
            write_rules(path, batch.rules);
            Io io{{o->concepts, o->corpus, o->endpoint}, {path}};
            if (!batch.failures.empty()) {
              std::vector<nlohmann::json> rows;
              for (const auto& [key, err] : batch.failures)
                rows.push_back({{"concept", {{"lemma", key.lemma}, {"pos", key.pos}}}, {"error", err}});
              const auto failures = o->out / "failures.jsonl";
              jsonl::write(failures, rows);
              io.outputs.push_back(failures);
              write_manifest(o->out, "gen-rules", {}, "", io);
              fail(ErrorKind::generation, std::to_string(batch.failures.size()) + " of " +
                                              std::to_string(batch.failures.size() + batch.rules.size()) +
                                              " concepts failed; see failures.jsonl");
            }
            return io;
          },
          &o->out};
}

inline Command add_eval(CLI::App& root) {
  struct Opts {
    fs::path dataset, endpoint, rules, translations, out;
    std::string setting, system_name = "nmt", tokenizer = "punct";
    EvalOptions eval;
    bool all_items = false;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("eval", "Evaluate lexical selection");
  app->add_option("--dataset", o->dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  app->add_option("--setting", o->setting, "Evaluation setting")
      ->required()
      ->check(CLI::IsMember({"no_rules", "self_rules", "external_rules", "nmt", "baseline"}));
  app->add_option("--endpoint", o->endpoint, "Endpoint config (key=value)")->check(CLI::ExistingFile);
  app->add_option("--rules", o->rules, "Rules JSONL")->check(CLI::ExistingFile);
  app->add_option("--translations", o->translations, "Translations JSONL {item_id, translation_text}")
      ->check(CLI::ExistingFile);
  app->add_option("--system-name", o->system_name, "Name recorded for the translation system");
  app->add_option("--seeds", o->eval.seeds, "Comma-separated seeds")->delimiter(',');
  app->add_option("--target-language", o->eval.target_language, "Target language name");
  app->add_option("--threshold", o->eval.threshold, "Fuzzy-match threshold")->check(CLI::Range(0.0, 1.0));
  app->add_option("--tokenizer", o->tokenizer, "Tokenizer for answers")->check(CLI::IsMember({"punct", "whitespace"}));
  app->add_option("--max-in-flight", o->eval.max_in_flight, "Concurrent requests")->check(CLI::PositiveNumber);
  app->add_flag("--all-items", o->all_items, "Evaluate every item, not only accepted ones");
  app->add_option("--out", o->out, "Output directory")->required();
  return {app, [o] {
            const auto setting = parse_setting(o->setting);
            o->eval.tokenizer = text::parse_tokenizer(o->tokenizer);
            if (o->eval.seeds.empty()) usage("--seeds must not be empty");
            Io io{{o->dataset}, {}};
            auto items = read_items(o->dataset);
            if (!o->all_items) {
              std::erase_if(items, [](const auto& i) { return i.status != ItemStatus::accepted; });
              if (items.empty()) fail(ErrorKind::precondition, "dataset has no accepted items (run finalize, or pass --all-items)");
            }
            EvalRun run;
            if (setting == Setting::frequency_baseline) {
              run = frequency_baseline(items, o->eval);
            } else if (setting == Setting::nmt) {
              if (o->translations.empty()) usage("--setting nmt needs --translations");
              io.inputs.push_back(o->translations);
              run = evaluate_translations(items, read_translations(o->translations), o->system_name, o->eval);
            } else {
              if (o->endpoint.empty()) usage(std::string("--setting ") + o->setting + " needs --endpoint");
              if (uses_rules(setting) != !o->rules.empty())
                usage(uses_rules(setting) ? "--setting " + o->setting + " needs --rules"
                                          : "--rules is only valid with a rule setting");
              io.inputs.push_back(o->endpoint);
              std::map<LexemeKey, RuleSet> rules;
              if (!o->rules.empty()) {
                rules = read_rules(o->rules);
                io.inputs.push_back(o->rules);
              }
              auto model = chat_model(o->endpoint);
              o->eval.temperature = load_endpoint(o->endpoint).temperature;
              run = evaluate(items, *model, setting, o->rules.empty() ? nullptr : &rules, o->eval);
            }
            const auto records = o->out / "records.jsonl";
            const auto report = o->out / "report.json";
            run.report.records_ref = records.filename().string();
            write_records(records, run.records);
            jsonl::write_json(report, to_json(run.report));
            log::info("evaluated", {{"setting", o->setting},
                                    {"accuracy_mean", run.report.accuracy_mean},
                                    {"accuracy_std", run.report.accuracy_std}});
            io.outputs.insert(io.outputs.end(), {records, report});
            return io;
          },
          &o->out};
}

inline Command add_report(CLI::App& root) {
  struct Opts {
    std::vector<fs::path> reports;
    fs::path out;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("report", "Summarize evaluation reports as a table");
  app->add_option("--reports", o->reports, "report.json files")->required()->check(CLI::ExistingFile);
  app->add_option("--out", o->out, "Output directory (table is always printed)");
  return {app, [o] {
            nlohmann::json rows = nlohmann::json::array();
            std::cout << "| setting | model | items | seeds | accuracy |\n|---|---|---|---|---|\n";
            for (const auto& p : o->reports) {
              const auto r = jsonl::read_json(p);
              const double mean = r.at("accuracy_mean").get<double>() * 100.0;
              const double sd = r.at("accuracy_std").get<double>() * 100.0;
              char acc[64];
              std::snprintf(acc, sizeof acc, "%.1f ± %.1f", mean, sd);
              std::cout << "| " << r.at("setting").get<std::string>() << " | " << r.at("model").get<std::string>()
                        << " | " << r.at("n_items") << " | " << r.at("seeds").size() << " | " << acc << " |\n";
              rows.push_back({{"report", p.string()},
                              {"setting", r.at("setting")},
                              {"model", r.at("model")},
                              {"n_items", r.at("n_items")},
                              {"accuracy_mean", r.at("accuracy_mean")},
                              {"accuracy_std", r.at("accuracy_std")}});
            }
            Io io{o->reports, {}};
            if (!o->out.empty()) {
              const auto path = o->out / "summary.json";
              jsonl::write_json(path, rows);
              io.outputs.push_back(path);
            }
            return io;
          },
          &o->out};
}

// ---------------------------------------------------------------------------

/// Inlines a subcommand's `--config FILE` as flags. The file holds
/// `key = value` lines (`#`/`;` comments, optional quotes, `[a, b]` lists);
/// keys name the subcommand's long options. Options given on the command
/// line win. Returns args in CLI11's reversed order.
inline std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args) {
  std::size_t sub_at = 0;
  while (sub_at < args.size() && args[sub_at].rfind("-", 0) == 0) ++sub_at;
  CLI::App* sub = nullptr;
  if (sub_at < args.size()) {
    try {
      sub = app.get_subcommand(args[sub_at]);
    } catch (const CLI::OptionNotFound&) {
    }
  }
  std::optional<std::string> file;
  if (sub) {
    for (std::size_t i = sub_at + 1; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        file = args[i + 1];
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        break;
      }
      if (args[i].rfind("--config=", 0) == 0) {
        file = args[i].substr(9);
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
  }
  if (file) {
    std::ifstream in(*file);
    if (!in) throw CLI::FileError::Missing(*file);
    auto given = [&](const std::string& flag) {
      return std::any_of(args.begin() + static_cast<std::ptrdiff_t>(sub_at) + 1, args.end(),
                         [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    std::vector<std::string> injected;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto body = text::trim(line);
      if (body.empty() || body.front() == '#' || body.front() == ';' || body.front() == '[') continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos)
        throw CLI::ConversionError(*file + ":" + std::to_string(line_no) + ": expected key=value");
      std::string key(text::trim(body.substr(0, eq)));
      std::replace(key.begin(), key.end(), '_', '-');
      std::string value(text::trim(body.substr(eq + 1)));
      auto unquote = [](std::string v) {
        if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
          v = v.substr(1, v.size() - 2);
        return v;
      };
      if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
        std::vector<std::string> parts;
        for (const auto& part : text::split(value.substr(1, value.size() - 2), ','))
          if (auto t = text::trim(part); !t.empty()) parts.push_back(unquote(std::string(t)));
        value = text::join(parts, ",");
      } else {
        value = unquote(value);
      }
      const std::string flag = "--" + key;
      const CLI::Option* opt = nullptr;
      try {
        opt = sub->get_option(flag);
      } catch (const CLI::OptionNotFound&) {
        throw CLI::ConversionError(*file + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
      if (key == "config" || given(flag)) continue;
      if (opt->get_expected_max() == 0) {
        if (value == "true" || value == "1") injected.push_back(flag);
      } else {
        injected.push_back(flag);
        injected.push_back(value);
      }
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_at) + 1, injected.begin(), injected.end());
  }
  std::reverse(args.begin(), args.end());
  return args;
}

/// Runs the CLI. Exit codes: 0 success, 1 domain error, 2 usage error.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Lexical-selection toolkit", "lexsel"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lexsel::version));

  std::vector<Command> commands{add_synth(app),     add_align(app),    add_mine(app),
                                add_build_dataset(app), add_serve(app), add_finalize(app),
                                add_agreement(app), add_gen_rules(app), add_eval(app),
                                add_report(app)};
  std::string config_path;
  for (auto& c : commands) c.app->add_option("--config", config_path, "key=value config file; flags win");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    app.parse(expand_config(app, args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      if (c.out && !c.out->empty()) fs::create_directories(*c.out);
      const auto io = c.action();
      if (c.out && !c.out->empty()) write_manifest(*c.out, c.app->get_name(), args, c.app->config_to_str(true, false), io);
      return 0;
    } catch (const Error& e) {
      log::error("failed", {{"command", c.app->get_name()}, {"kind", to_string(e.kind())}, {"message", e.what()}});
      if (e.kind() == ErrorKind::usage) {
        std::cerr << c.app->help();
        return 2;
      }
      return 1;
    } catch (const std::exception& e) {
      log::error("failed", {{"command", c.app->get_name()}, {"kind", "internal"}, {"message", e.what()}});
      return 1;
    }
  }
  return 2;
}

inline int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"lexsel"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace lexsel::cli
