#pragma once

// End-to-end run over a set of pages: ingest, procedure search, flow mining. One flow-graph
// file per procedure plus a run report.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "procmine/classifier.hpp"
#include "procmine/corpus.hpp"
#include "procmine/error.hpp"
#include "procmine/flow.hpp"
#include "procmine/search.hpp"

namespace procmine {

// Process exit status for a failure: 2 configuration, 3 data, 4 model.
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return 2;
    case ErrorCode::ModelNotFound:
    case ErrorCode::ModelMismatch:
    case ErrorCode::DimensionMismatch: return 4;
    default: return 3;
  }
}

struct PipelineConfig {
  FeatureConfig features;
  SearchConfig search;
  BlockRules rules;
  double similarity_threshold = 0.7;
  Kernel kernel;
  double reg_c = 1.0;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: hardware concurrency

  std::filesystem::path model;              // classifier file; written when training
  std::filesystem::path train_annotations;  // used when the model file does not exist
  std::filesystem::path wordlist;
  std::filesystem::path lexicon;            // optional extra domain verbs
  std::filesystem::path inputs;             // an HTML file or a directory of them
  std::filesystem::path out = "flows";

  void validate() const {
    features.validate();
    search.validate();
    for (double t : {similarity_threshold, rules.overlap_threshold}) {
      if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::ConfigError, "thresholds must be in [0, 1]");
    }
    if (!(reg_c > 0.0)) throw Error(ErrorCode::ConfigError, "reg_c must be positive");
  }
};

namespace detail {

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

inline void read_path_if(const nlohmann::json& j, const char* key, std::filesystem::path& target,
                         const std::filesystem::path& base) {
  if (!j.contains(key)) return;
  std::filesystem::path p = j.at(key).get<std::string>();
  target = p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace detail

// Relative paths in the file resolve against `base` (normally the config file's directory).
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {},
                                                PipelineConfig cfg = {}) {
  using detail::read_if;
  try {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    if (j.contains("features")) cfg.features = feature_config_from_json(j.at("features"), cfg.features);
    if (j.contains("search")) {
      read_if(j.at("search"), "threshold", cfg.search.threshold);
      read_if(j.at("search"), "max_nodes", cfg.search.max_nodes);
    }
    if (j.contains("flow")) {
      const auto& f = j.at("flow");
      read_if(f, "similarity_threshold", cfg.similarity_threshold);
      read_if(f, "overlap_threshold", cfg.rules.overlap_threshold);
      read_if(f, "note", cfg.rules.note);
      read_if(f, "overlap", cfg.rules.overlap);
      read_if(f, "substructure", cfg.rules.substructure);
    }
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      if (s.contains("kernel")) cfg.kernel = kernel_from_json(s.at("kernel"));
      read_if(s, "reg_c", cfg.reg_c);
    }
    read_if(j, "seed", cfg.seed);
    read_if(j, "threads", cfg.threads);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      detail::read_path_if(p, "model", cfg.model, base);
      detail::read_path_if(p, "train_annotations", cfg.train_annotations, base);
      detail::read_path_if(p, "wordlist", cfg.wordlist, base);
      detail::read_path_if(p, "lexicon", cfg.lexicon, base);
      detail::read_path_if(p, "inputs", cfg.inputs, base);
      detail::read_path_if(p, "out", cfg.out, base);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.message());
  }
  return pipeline_config_from_json(j, path.parent_path(), std::move(base));
}

inline nlohmann::json pipeline_config_to_json(const PipelineConfig& c) {
  return {{"features", feature_config_to_json(c.features)},
          {"search", {{"threshold", c.search.threshold}, {"max_nodes", c.search.max_nodes}}},
          {"flow",
           {{"similarity_threshold", c.similarity_threshold},
            {"overlap_threshold", c.rules.overlap_threshold},
            {"note", c.rules.note},
            {"overlap", c.rules.overlap},
            {"substructure", c.rules.substructure}}},
          {"svm", {{"kernel", kernel_to_json(c.kernel)}, {"reg_c", c.reg_c}}},
          {"seed", c.seed},
          {"threads", c.threads},
          {"paths",
           {{"model", c.model.string()},
            {"train_annotations", c.train_annotations.string()},
            {"wordlist", c.wordlist.string()},
            {"lexicon", c.lexicon.string()},
            {"inputs", c.inputs.string()},
            {"out", c.out.string()}}}};
}

inline ImperativeLexicon pipeline_lexicon(const PipelineConfig& cfg) {
  if (cfg.lexicon.empty()) return ImperativeLexicon::builtin();
  return load_lexicon(cfg.lexicon.string());
}

// Loads the model, or trains one from the configured annotations (saving it when a model
// path is set). Raises MODEL_NOT_FOUND when neither is available.
inline ProcedureClassifier obtain_classifier(const PipelineConfig& cfg, const ImperativeLexicon& lex) {
  if (!cfg.model.empty() && std::filesystem::exists(cfg.model)) return load_classifier(cfg.model.string());
  if (cfg.train_annotations.empty()) {
    throw Error(ErrorCode::ModelNotFound, cfg.model.empty() ? std::string("no model path and no training data")
                                                            : "model file '" + cfg.model.string() + "' not found");
  }
  if (cfg.wordlist.empty()) throw Error(ErrorCode::ConfigError, "training needs a wordlist path");
  DocumentStore store(cfg.train_annotations.parent_path());
  const auto records = load_annotations(cfg.train_annotations, store);
  const auto data = labeled_candidates(records, store, static_cast<std::size_t>(cfg.features.context_k));
  ClassifierSpec spec;
  spec.features = cfg.features;
  spec.svm.kernel = cfg.kernel;
  spec.svm.reg_c = cfg.reg_c;
  spec.svm.seed = cfg.seed;
  auto clf = train_classifier(data, load_wordlist(cfg.wordlist.string()), lex, spec);
  if (!cfg.model.empty()) save_classifier(clf, cfg.model.string());
  return clf;
}

struct FileReport {
  std::string input;
  std::size_t lists = 0;
  std::size_t classified = 0;
  std::size_t procedures = 0;
  bool truncated = false;
  std::size_t decision_points = 0;
  std::size_t empty_blocks = 0;
  std::vector<std::string> flows;  // ids
};

struct RunReport {
  std::vector<FileReport> files;
  std::size_t lists = 0;
  std::size_t classified = 0;
  std::size_t procedures = 0;
  std::size_t truncated = 0;
  std::size_t decision_points = 0;
  std::size_t empty_blocks = 0;
  std::size_t flows = 0;
};

inline nlohmann::json run_report_to_json(const RunReport& r) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : r.files) {
    files.push_back({{"input", f.input},
                     {"lists", f.lists},
                     {"classified", f.classified},
                     {"procedures", f.procedures},
                     {"truncated", f.truncated},
                     {"decision_points", f.decision_points},
                     {"empty_blocks", f.empty_blocks},
                     {"flows", f.flows}});
  }
  return {{"totals",
           {{"files", r.files.size()},
            {"lists", r.lists},
            {"classified", r.classified},
            {"procedures", r.procedures},
            {"truncated", r.truncated},
            {"decision_points", r.decision_points},
            {"empty_blocks", r.empty_blocks},
            {"flows", r.flows}}},
          {"files", files}};
}

// Sorted list of *.html / *.htm files, or the single file given.
inline std::vector<std::filesystem::path> collect_inputs(const std::filesystem::path& inputs) {
  namespace fs = std::filesystem;
  if (inputs.empty()) throw Error(ErrorCode::ConfigError, "no inputs configured");
  if (!fs::exists(inputs)) throw Error(ErrorCode::IoError, "input '" + inputs.string() + "' does not exist");
  std::vector<fs::path> out;
  if (fs::is_directory(inputs)) {
    for (const auto& e : fs::recursive_directory_iterator(inputs)) {
      const auto ext = to_lower(e.path().extension().string());
      if (e.is_regular_file() && (ext == ".html" || ext == ".htm")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
  } else {
    out.push_back(inputs);
  }
  return out;
}

inline std::string flow_id(const std::filesystem::path& input, std::size_t index) {
  return input.stem().string() + "-" + std::to_string(index);
}

namespace detail {

struct FileOutput {
  FileReport report;
  std::vector<std::pair<std::string, std::string>> flows;  // id, JSON text
};

inline std::string path_string(const NodePath& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "/" : "") + std::to_string(p[i]);
  return s;
}

inline FileOutput process_file(const std::filesystem::path& input, const ProcedureClassifier& clf,
                               const PipelineConfig& cfg, const ImperativeLexicon& lex) {
  FileOutput out;
  out.report.input = input.string();
  const auto doc = scrub_template(parse_document(read_file(input), input.string()));
  const auto candidates = extract_list_candidates(doc, static_cast<std::size_t>(clf.features.context_k));
  out.report.lists = candidates.size();
  const auto found = search_procedures(
      doc, candidates, [&](const ListCandidate& c) { return clf.classify(c, lex); }, cfg.search);
  out.report.classified = found.classified.size();
  out.report.procedures = found.procedures.size();
  out.report.truncated = found.truncated;
  for (std::size_t i = 0; i < found.procedures.size(); ++i) {
    const auto& cand = found.procedures[i].candidate;
    try {
      const auto p = procedure_from_candidate(cand);
      const auto blocks = extract_all_blocks(p, cfg.rules, cfg.similarity_threshold, lex);
      out.report.decision_points += blocks.size();
      for (const auto& b : blocks) out.report.empty_blocks += b.members.empty() ? 1 : 0;
      const auto g = build_flow_graph(p, blocks);
      const auto id = flow_id(input, i);
      out.report.flows.push_back(id);
      out.flows.emplace_back(id, flow_graph_to_json(g).dump(2) + "\n");
    } catch (const Error& e) {
      throw Error(e.code(), input.string() + " list " + path_string(cand.node_path) + ": " + e.message());
    }
  }
  return out;
}

}  // namespace detail

// Inputs are processed in parallel; outputs and the report are ordered by input path, so a
// run is byte-for-byte reproducible. The first failing input (in path order) is rethrown.
inline RunReport run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  cfg.validate();
  const auto lex = pipeline_lexicon(cfg);
  const auto clf = obtain_classifier(cfg, lex);  // before any input is read
  const auto inputs = collect_inputs(cfg.inputs);

  std::vector<std::optional<detail::FileOutput>> results(inputs.size());
  std::vector<std::optional<Error>> errors(inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      try {
        results[i] = detail::process_file(inputs[i], clf, cfg, lex);
      } catch (const Error& e) {
        errors[i] = e;
      } catch (const std::exception& e) {
        errors[i] = Error(ErrorCode::IoError, inputs[i].string() + ": " + e.what());
      }
    }
  };
  std::size_t n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, std::max<std::size_t>(inputs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) throw *e;
  }

  fs::create_directories(cfg.out);
  RunReport report;
  for (auto& r : results) {
    for (const auto& [id, text] : r->flows) write_file(cfg.out / (id + ".json"), text);
    const auto& f = r->report;
    report.lists += f.lists;
    report.classified += f.classified;
    report.procedures += f.procedures;
    report.truncated += f.truncated ? 1 : 0;
    report.decision_points += f.decision_points;
    report.empty_blocks += f.empty_blocks;
    report.flows += f.flows.size();
    report.files.push_back(f);
  }
  write_file(cfg.out / "run_report.json", run_report_to_json(report).dump(2) + "\n");
  return report;
}

}  // namespace procmine
