// procmine command-line entry point.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "procmine/procmine.hpp"
#include "procmine/serve.hpp"

#ifndef PROCMINE_DATA_DIR
#define PROCMINE_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace procmine;

namespace {

struct Globals {
  std::string config;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string bind = "127.0.0.1:8080";
};

// Shared training knobs; unset flags keep the config file (or default) value.
struct ModelFlags {
  std::string wordlist;
  std::string lexicon;
  std::string kernel;
  std::optional<int> degree;
  std::optional<double> reg_c;
  std::optional<int> ngram_max;
  std::optional<int> context_k;
  std::optional<bool> list_type;
  std::optional<bool> imperatives;

  void add_to(CLI::App* app) {
    app->add_option("--wordlist", wordlist, "Word list restricting the vocabulary");
    app->add_option("--lexicon", lexicon, "Extra domain verbs, one per line");
    app->add_option("--kernel", kernel, "linear or poly (degree 2)")->check(CLI::IsMember({"linear", "poly"}));
    app->add_option("--degree", degree, "Polynomial kernel degree");
    app->add_option("--c", reg_c, "SVM regularization");
    app->add_option("--ngram", ngram_max, "Largest n-gram order (1-3)");
    app->add_option("--context,--context-k", context_k, "Context sentences before the list (1-4)");
    app->add_flag("--list-type,!--no-list-type", list_type, "Use the ordered/unordered feature");
    app->add_flag("--imperatives,!--no-imperatives", imperatives, "Use the imperative features");
  }

  void apply(PipelineConfig& cfg) const {
    if (!wordlist.empty()) cfg.wordlist = wordlist;
    if (!lexicon.empty()) cfg.lexicon = lexicon;
    if (kernel == "linear") cfg.kernel = Kernel::linear();
    if (kernel == "poly") cfg.kernel = Kernel::poly();
    if (degree) {
      if (*degree < 1) throw Error(ErrorCode::ConfigError, "degree must be positive");
      cfg.kernel.degree = *degree;
    }
    if (reg_c) cfg.reg_c = *reg_c;
    if (ngram_max) cfg.features.ngram_max = *ngram_max;
    if (context_k) cfg.features.context_k = *context_k;
    if (list_type) cfg.features.use_list_type = *list_type;
    if (imperatives) cfg.features.use_imperatives = *imperatives;
  }
};

PipelineConfig base_config(const Globals& g) {
  PipelineConfig cfg;
  cfg.wordlist = fs::path(PROCMINE_DATA_DIR) / "wordlist" / "en_top10k.txt";
  if (!g.config.empty()) cfg = load_pipeline_config(g.config, cfg);
  if (g.threshold) cfg.search.threshold = *g.threshold;
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.out = g.out;
  return cfg;
}

Document load_page(const std::string& path) { return scrub_template(parse_document(read_file(path), path)); }

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

NodePath parse_node_path(const std::string& s) { return detail::node_path_from(nlohmann::json(s)); }

nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"rules", r.name},
                   {"accuracy", r.score.accuracy()},
                   {"mapping_accuracy", r.score.mapping_accuracy()},
                   {"correct", r.score.correct},
                   {"total", r.score.total}});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine troubleshooting procedures from support pages and turn them into flow graphs"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags are accepted after the subcommand too
  Globals g;
  app.add_option("--config", g.config, "JSON pipeline configuration");
  app.add_option("--threshold", g.threshold, "Procedure confidence threshold")->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--bind", g.bind, "host:port for serve");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Print the list candidates of a page as JSON Lines");
  std::string ingest_page;
  int ingest_k = 1;
  ingest->add_option("page", ingest_page, "HTML file")->required();
  ingest->add_option("--context-k", ingest_k, "Context sentences before each list");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the procedure classifier");
  std::string train_annotations;
  ModelFlags train_flags;
  train_cmd->add_option("--annotations", train_annotations, "Annotation JSON Lines")->required();
  train_flags.add_to(train_cmd);

  // extract
  auto* extract = app.add_subcommand("extract", "List the procedures found on a page");
  std::string extract_page, extract_model;
  extract->add_option("page", extract_page, "HTML file")->required();
  extract->add_option("--model", extract_model, "Classifier file")->required();

  // flow
  auto* flow = app.add_subcommand("flow", "Build flow graphs from candidates or from a page");
  std::string flow_in, flow_page, flow_path, flow_model;
  flow->add_option("--in", flow_in, "Candidates as JSON Lines (from ingest)");
  flow->add_option("page", flow_page, "HTML file");
  flow->add_option("--node-path", flow_path, "List on the page to convert, e.g. 0/1/3");
  flow->add_option("--model", flow_model, "Classifier used to find the procedures on the page");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate against annotations");
  eval->require_subcommand(1);
  std::string eval_annotations, eval_model;
  auto* eval_id = eval->add_subcommand("id", "List identification accuracy");
  eval_id->add_option("--model", eval_model, "Classifier file")->required();
  eval_id->add_option("--annotations", eval_annotations, "Annotation JSON Lines")->required();
  auto* eval_blocks = eval->add_subcommand("blocks", "Decision block accuracy per rule set");
  eval_blocks->add_option("--annotations", eval_annotations, "Annotation JSON Lines")->required();
  auto* eval_cv = eval->add_subcommand("cv", "Cross-validated identification accuracy");
  std::size_t cv_folds = 5;
  ModelFlags cv_flags;
  eval_cv->add_option("--annotations", eval_annotations, "Annotation JSON Lines")->required();
  eval_cv->add_option("--folds", cv_folds, "Number of folds");
  cv_flags.add_to(eval_cv);

  // corpus gen
  auto* corpus = app.add_subcommand("corpus", "Synthetic corpus tools");
  corpus->require_subcommand(1);
  auto* gen = corpus->add_subcommand("gen", "Generate a labeled synthetic corpus");
  CorpusSpec spec;
  gen->add_option("--docs", spec.n_docs, "Number of pages");
  gen->add_option("--lists", spec.n_lists, "Exact number of lists (default: 3-6 per page)");
  gen->add_option("--ratio", spec.procedure_ratio, "Fraction of lists that are procedures");
  gen->add_option("--decision-density", spec.decision_density, "Chance a step plants a decision point");

  // run
  auto* run = app.add_subcommand("run", "Full pipeline over a page or directory");
  std::string run_inputs, run_model, run_train;
  ModelFlags run_flags;
  run->add_option("--inputs", run_inputs, "HTML file or directory");
  run->add_option("--model", run_model, "Classifier file");
  run->add_option("--train-annotations", run_train, "Train when the model file is missing");
  run_flags.add_to(run);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Read-only HTTP access to flow graphs");
  std::string serve_flows, serve_ui;
  serve_cmd->add_option("--flows", serve_flows, "Directory of flow-graph files")->required();
  serve_cmd->add_option("--ui", serve_ui, "Walkthrough UI bundle to host at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*ingest) {
      for (const auto& c : extract_list_candidates(load_page(ingest_page), static_cast<std::size_t>(ingest_k))) {
        std::cout << candidate_to_json(c).dump() << '\n';
      }
    } else if (*train_cmd) {
      auto cfg = base_config(g);
      train_flags.apply(cfg);
      cfg.validate();
      if (g.out.empty()) throw Error(ErrorCode::ConfigError, "train needs --out for the model file");
      cfg.model = g.out;
      cfg.train_annotations = train_annotations;
      if (fs::exists(cfg.model)) fs::remove(cfg.model);
      const auto clf = obtain_classifier(cfg, pipeline_lexicon(cfg));
      print({{"model", cfg.model.string()},
             {"support_vectors", clf.model.support.size()},
             {"vocabulary", clf.vocabulary.size()}});
    } else if (*extract) {
      auto cfg = base_config(g);
      const auto clf = load_classifier(extract_model);
      const auto found = find_procedures(load_page(extract_page), clf, cfg.search, pipeline_lexicon(cfg));
      for (const auto& p : found.procedures) {
        std::cout << nlohmann::json{{"candidate", candidate_to_json(p.candidate)},
                                    {"prediction",
                                     {{"is_procedure", p.prediction.is_procedure},
                                      {"confidence", p.prediction.confidence},
                                      {"decision_value", p.prediction.decision_value}}}}
                         .dump()
                  << '\n';
      }
      if (found.truncated) std::cerr << "warning: traversal truncated at " << found.visited << " nodes\n";
    } else if (*flow) {
      auto cfg = base_config(g);
      const auto lex = pipeline_lexicon(cfg);
      std::vector<ListCandidate> lists;
      std::string stem = "flow";
      if (!flow_in.empty()) {
        stem = fs::path(flow_in).stem().string();
        std::istringstream in(read_file(flow_in));
        std::string line;
        while (std::getline(in, line)) {
          if (trim(line).empty()) continue;
          try {
            const auto j = nlohmann::json::parse(line);
            lists.push_back(candidate_from_json(j.contains("candidate") ? j.at("candidate") : j));
          } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::SchemaError, flow_in + ": " + e.what());
          }
        }
      } else if (flow_page.empty()) {
        throw Error(ErrorCode::ConfigError, "flow needs --in or a page");
      } else if (!flow_path.empty()) {
        const auto doc = load_page(flow_page);
        const auto path = parse_node_path(flow_path);
        for (auto& c : extract_list_candidates(doc, static_cast<std::size_t>(cfg.features.context_k))) {
          if (c.node_path == path) lists.push_back(std::move(c));
        }
        if (lists.empty()) throw Error(ErrorCode::DanglingPath, "no list at " + flow_path);
      } else {
        if (flow_model.empty()) throw Error(ErrorCode::ConfigError, "flow on a page needs --node-path or --model");
        stem = fs::path(flow_page).stem().string();
        for (auto& p : find_procedures(load_page(flow_page), load_classifier(flow_model), cfg.search, lex).procedures) {
          lists.push_back(std::move(p.candidate));
        }
      }
      // One file per list under --out, or the graphs on stdout.
      for (std::size_t i = 0; i < lists.size(); ++i) {
        const auto text = flow_graph_to_json(mine_flow(lists[i], cfg.rules, cfg.similarity_threshold, lex)).dump(2) + "\n";
        if (g.out.empty()) std::cout << text;
        else write_file(fs::path(g.out) / (stem + "-" + std::to_string(i) + ".json"), text);
      }
    } else if (*eval) {
      auto cfg = base_config(g);
      const auto lex = pipeline_lexicon(cfg);
      DocumentStore store(fs::path(eval_annotations).parent_path());
      const auto records = load_annotations(eval_annotations, store);
      if (*eval_id) {
        print(report_to_json(evaluate_identification(load_classifier(eval_model), records, store, lex)));
      } else if (*eval_blocks) {
        print(ablation_to_json(block_ablation(records, store, lex, cfg.similarity_threshold, cfg.rules.overlap_threshold)));
      } else {
        cv_flags.apply(cfg);
        cfg.validate();
        ClassifierSpec cs;
        cs.features = cfg.features;
        cs.svm.kernel = cfg.kernel;
        cs.svm.reg_c = cfg.reg_c;
        cs.svm.seed = cfg.seed;
        const auto data = labeled_candidates(records, store, static_cast<std::size_t>(cfg.features.context_k));
        print(report_to_json(cross_validate(data, load_wordlist(cfg.wordlist.string()), lex, cs, cv_folds, cfg.seed)));
      }
    } else if (*corpus) {
      if (g.out.empty()) throw Error(ErrorCode::ConfigError, "corpus gen needs --out");
      spec.seed = g.seed.value_or(spec.seed);
      const auto c = generate_corpus(spec);
      write_corpus(c, g.out);
      const auto st = corpus_stats(c.records);
      print({{"out", g.out},
             {"docs", c.docs.size()},
             {"lists", st.lists},
             {"procedures", st.procedures},
             {"decision_points", st.decision_points},
             {"mean_nonempty_block", st.mean_nonempty_block}});
    } else if (*run) {
      auto cfg = base_config(g);
      run_flags.apply(cfg);
      if (!run_inputs.empty()) cfg.inputs = run_inputs;
      if (!run_model.empty()) cfg.model = run_model;
      if (!run_train.empty()) cfg.train_annotations = run_train;
      print(run_report_to_json(run_pipeline(cfg)).at("totals"));
    } else if (*serve_cmd) {
      serve(serve_flows, g.bind, serve_ui);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
