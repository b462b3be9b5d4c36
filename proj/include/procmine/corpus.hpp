#pragma once

// Annotation records, evaluation of list identification and decision-block extraction, and a
// seeded generator of synthetic support pages with ground truth.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "procmine/classifier.hpp"
#include "procmine/error.hpp"
#include "procmine/flow.hpp"
#include "procmine/html.hpp"
#include "procmine/ingest.hpp"
#include "procmine/random.hpp"

namespace procmine {

struct MemberAnnotation {
  std::size_t step = 0;
  std::size_t sentence = 0;
  Branch branch = Branch::True;

  bool operator==(const MemberAnnotation&) const = default;
};

struct DecisionAnnotation {
  std::size_t step_index = 0;
  std::size_t sentence_index = 0;
  std::string condition_text;
  std::string effect_text;
  std::vector<MemberAnnotation> block_members;

  bool operator==(const DecisionAnnotation&) const = default;
};

struct AnnotationRecord {
  std::string doc_path;
  NodePath node_path;
  bool is_procedure = false;
  std::vector<DecisionAnnotation> decision_annotations;

  bool operator==(const AnnotationRecord&) const = default;
};

inline constexpr int kAnnotationVersion = 1;

inline nlohmann::json record_to_json(const AnnotationRecord& r) {
  nlohmann::json decisions = nlohmann::json::array();
  for (const auto& d : r.decision_annotations) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : d.block_members) {
      members.push_back({{"step", m.step}, {"sentence", m.sentence}, {"branch", to_string(m.branch)}});
    }
    decisions.push_back({{"step_index", d.step_index},
                         {"sentence_index", d.sentence_index},
                         {"condition_text", d.condition_text},
                         {"effect_text", d.effect_text},
                         {"block_members", members}});
  }
  return {{"version", kAnnotationVersion},
          {"doc_path", r.doc_path},
          {"node_path", r.node_path},
          {"is_procedure", r.is_procedure},
          {"decision_annotations", decisions}};
}

namespace detail {

inline const nlohmann::json* first_field(const nlohmann::json& j, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (j.contains(n)) return &j.at(n);
  }
  return nullptr;
}

inline bool truthy(const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>() > 0;
  if (v.is_string()) {
    const auto s = to_lower(v.get<std::string>());
    return s == "1" || s == "true" || s == "yes" || s == "procedure" || s == "positive" || s == "pos";
  }
  return false;
}

inline NodePath node_path_from(const nlohmann::json& v) {
  if (v.is_array()) return v.get<NodePath>();
  if (v.is_string()) {
    // "0/1/3" or "0.1.3"
    NodePath p;
    std::string cur;
    for (char c : v.get<std::string>() + "/") {
      if (c == '/' || c == '.' || c == ',') {
        if (!cur.empty()) p.push_back(std::stoi(cur));
        cur.clear();
      } else if (c >= '0' && c <= '9') {
        cur.push_back(c);
      } else if (c != ' ') {
        throw Error(ErrorCode::SchemaError, "node path '" + v.get<std::string>() + "' is not an index sequence");
      }
    }
    return p;
  }
  throw Error(ErrorCode::SchemaError, "node path has unsupported type");
}

inline Branch branch_from(const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>() ? Branch::True : Branch::False;
  const auto s = to_lower(v.get<std::string>());
  if (s == "true" || s == "yes" || s == "t") return Branch::True;
  if (s == "false" || s == "no" || s == "f") return Branch::False;
  throw Error(ErrorCode::SchemaError, "unknown branch label '" + s + "'");
}

}  // namespace detail

// Reads the native schema and, best-effort, records that name the same information
// differently (label/url/path/decisions ...).
inline AnnotationRecord record_from_json(const nlohmann::json& j) {
  using detail::first_field;
  try {
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "annotation record is not an object");
    if (j.contains("version") && j.at("version").get<int>() > kAnnotationVersion) {
      throw Error(ErrorCode::SchemaError, "unsupported annotation version " + j.at("version").dump());
    }
    AnnotationRecord r;
    const auto* doc = first_field(j, {"doc_path", "doc", "document", "page", "file", "url", "html"});
    const auto* path = first_field(j, {"node_path", "path", "list_path", "node", "dom_path"});
    const auto* label = first_field(j, {"is_procedure", "procedure", "label", "is_proc", "positive"});
    if (!doc || !path || !label) throw Error(ErrorCode::SchemaError, "record lacks document, node path or label");
    r.doc_path = doc->get<std::string>();
    r.node_path = detail::node_path_from(*path);
    r.is_procedure = detail::truthy(*label);
    if (const auto* ds = first_field(j, {"decision_annotations", "decisions", "decision_points", "blocks"})) {
      for (const auto& jd : *ds) {
        DecisionAnnotation d;
        const auto* st = first_field(jd, {"step_index", "step"});
        const auto* se = first_field(jd, {"sentence_index", "sentence"});
        if (!st || !se) throw Error(ErrorCode::SchemaError, "decision annotation lacks its position");
        d.step_index = st->get<std::size_t>();
        d.sentence_index = se->get<std::size_t>();
        if (const auto* c = first_field(jd, {"condition_text", "condition"})) d.condition_text = c->get<std::string>();
        if (const auto* e = first_field(jd, {"effect_text", "effect"})) d.effect_text = e->get<std::string>();
        if (const auto* ms = first_field(jd, {"block_members", "members", "block"})) {
          for (const auto& jm : *ms) {
            MemberAnnotation m;
            if (jm.is_array()) {
              m.step = jm.at(0).get<std::size_t>();
              m.sentence = jm.at(1).get<std::size_t>();
              if (jm.size() > 2) m.branch = detail::branch_from(jm.at(2));
            } else {
              m.step = first_field(jm, {"step", "step_index"})->get<std::size_t>();
              m.sentence = first_field(jm, {"sentence", "sentence_index"})->get<std::size_t>();
              if (const auto* b = first_field(jm, {"branch", "label"})) m.branch = detail::branch_from(*b);
            }
            d.block_members.push_back(m);
          }
        }
        r.decision_annotations.push_back(std::move(d));
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed annotation record: ") + e.what());
  }
}

// JSON Lines, or a single JSON array of records.
inline std::vector<AnnotationRecord> parse_annotations(std::string_view text, const std::string& source = "<input>") {
  std::vector<AnnotationRecord> out;
  const auto trimmed = trim(text);
  if (!trimmed.empty() && trimmed.front() == '[') {
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::SchemaError, source + ": " + e.what());
    }
    for (const auto& j : arr) out.push_back(record_from_json(j));
    return out;
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::SchemaError, source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), source + ":" + std::to_string(line_no) + ": " + e.message());
    }
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << content;
}

inline void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r).dump() + "\n";
  write_file(path, out);
}

// Parsed and scrubbed documents with their list candidates, keyed by the path used in the
// annotations (relative paths resolve against `base_dir`).
class DocumentStore {
 public:
  explicit DocumentStore(std::filesystem::path base_dir = {}, ScrubConfig scrub = {})
      : base_dir_(std::move(base_dir)), scrub_(std::move(scrub)) {}

  void add(const std::string& doc_path, const std::string& html) {
    docs_[doc_path] = scrub_template(parse_document(html, doc_path), scrub_);
  }

  const Document& document(const std::string& doc_path) {
    auto it = docs_.find(doc_path);
    if (it != docs_.end()) return it->second;
    std::filesystem::path p(doc_path);
    if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::DanglingPath, "document '" + doc_path + "' not found");
    add(doc_path, read_file(p));
    return docs_.at(doc_path);
  }

  const std::vector<ListCandidate>& candidates(const std::string& doc_path, std::size_t k) {
    const auto key = std::make_pair(doc_path, k);
    auto it = candidates_.find(key);
    if (it != candidates_.end()) return it->second;
    return candidates_[key] = extract_list_candidates(document(doc_path), k);
  }

  const ListCandidate* find(const std::string& doc_path, const NodePath& path, std::size_t k = 1) {
    for (const auto& c : candidates(doc_path, k)) {
      if (c.node_path == path) return &c;
    }
    return nullptr;
  }

 private:
  std::filesystem::path base_dir_;
  ScrubConfig scrub_;
  std::map<std::string, Document> docs_;
  std::map<std::pair<std::string, std::size_t>, std::vector<ListCandidate>> candidates_;
};

// Every record must address a list node of its scrubbed document, and every decision/member
// address must exist in that list.
inline void validate_records(const std::vector<AnnotationRecord>& records, DocumentStore& store) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto where = "record " + std::to_string(i + 1) + " (" + r.doc_path + ")";
    const ListCandidate* cand = nullptr;
    try {
      cand = store.find(r.doc_path, r.node_path);
    } catch (const Error& e) {
      throw Error(ErrorCode::DanglingPath, where + ": " + e.message());
    }
    if (!cand) throw Error(ErrorCode::DanglingPath, where + ": node path does not address a list");
    auto valid = [&](std::size_t step, std::size_t sentence) {
      return step < cand->items.size() && sentence < cand->items[step].sentences.size();
    };
    for (const auto& d : r.decision_annotations) {
      if (!valid(d.step_index, d.sentence_index)) {
        throw Error(ErrorCode::DanglingPath, where + ": decision address out of range");
      }
      for (const auto& m : d.block_members) {
        if (!valid(m.step, m.sentence)) throw Error(ErrorCode::DanglingPath, where + ": block member out of range");
      }
    }
  }
}

inline std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, DocumentStore& store) {
  auto records = parse_annotations(read_file(path), path.string());
  validate_records(records, store);
  return records;
}

// Documents resolve relative to the annotation file's directory.
inline std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  DocumentStore store(path.parent_path());
  return load_annotations(path, store);
}

inline std::vector<LabeledCandidate> labeled_candidates(const std::vector<AnnotationRecord>& records,
                                                        DocumentStore& store, std::size_t k) {
  std::vector<LabeledCandidate> out;
  for (const auto& r : records) {
    const auto* c = store.find(r.doc_path, r.node_path, k);
    if (!c) throw Error(ErrorCode::DanglingPath, r.doc_path + ": node path does not address a list");
    out.push_back({*c, r.is_procedure});
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Evaluation.

// `predict` maps a ListCandidate to true (procedure) or false.
template <class Predict>
EvalReport evaluate_identification(const std::vector<AnnotationRecord>& records, DocumentStore& store,
                                   std::size_t context_k, Predict&& predict) {
  Confusion c;
  for (const auto& lc : labeled_candidates(records, store, context_k)) c.add(lc.is_procedure, predict(lc.candidate));
  return make_report(c);
}

inline EvalReport evaluate_identification(const ProcedureClassifier& clf, const std::vector<AnnotationRecord>& records,
                                          DocumentStore& store, const ImperativeLexicon& lex) {
  return evaluate_identification(records, store, static_cast<std::size_t>(clf.features.context_k),
                                 [&](const ListCandidate& c) { return clf.classify(c, lex).is_procedure; });
}

struct BlockScore {
  std::size_t total = 0;
  std::size_t correct = 0;          // exact member-set match
  std::size_t mapping_correct = 0;  // exact match including branch labels

  double accuracy() const { return total == 0 ? 1.0 : static_cast<double>(correct) / total; }
  double mapping_accuracy() const { return total == 0 ? 1.0 : static_cast<double>(mapping_correct) / total; }

  BlockScore& operator+=(const BlockScore& o) {
    total += o.total;
    correct += o.correct;
    mapping_correct += o.mapping_correct;
    return *this;
  }
};

// Compares extracted blocks with annotated ones, aligned by decision position. An annotated
// decision without an extracted block counts as an empty extraction.
inline BlockScore evaluate_blocks(const std::vector<DecisionAnnotation>& gold, const std::vector<DecisionBlock>& extracted) {
  BlockScore s;
  for (const auto& g : gold) {
    ++s.total;
    std::vector<BlockMember> got;
    for (const auto& b : extracted) {
      if (b.decision.step_index == g.step_index && b.decision.sentence_index == g.sentence_index) got = b.members;
    }
    if (got.size() != g.block_members.size()) continue;
    bool same_set = true;
    bool same_branches = true;
    for (std::size_t i = 0; i < got.size(); ++i) {
      same_set &= got[i].step == g.block_members[i].step && got[i].sentence == g.block_members[i].sentence;
      same_branches &= got[i].branch == g.block_members[i].branch;
    }
    if (same_set) ++s.correct;
    if (same_set && same_branches) ++s.mapping_correct;
  }
  return s;
}

// Decision point for an annotated position: the detected split when the sentence is a
// conditional, otherwise one carrying the annotated condition text.
inline DecisionPoint aligned_decision(const Procedure& p, const DecisionAnnotation& a, const ImperativeLexicon& lex) {
  DecisionPoint d;
  d.step_index = a.step_index;
  d.sentence_index = a.sentence_index;
  if (auto split = detect_conditional(p.steps.at(a.step_index).sentences.at(a.sentence_index), lex)) {
    d.split = std::move(*split);
  } else {
    d.split.condition = a.condition_text;
    d.split.effect = a.effect_text;
    d.split.condition_negated = detect_negation(a.condition_text);
  }
  return d;
}

inline BlockScore score_blocks(const std::vector<AnnotationRecord>& records, DocumentStore& store,
                               const BlockRules& rules, double sim_threshold, const ImperativeLexicon& lex) {
  BlockScore total;
  for (const auto& r : records) {
    if (r.decision_annotations.empty()) continue;
    const auto* c = store.find(r.doc_path, r.node_path);
    if (!c) throw Error(ErrorCode::DanglingPath, r.doc_path + ": node path does not address a list");
    const auto p = procedure_from_candidate(*c);
    std::vector<DecisionBlock> blocks;
    for (const auto& a : r.decision_annotations) {
      blocks.push_back(extract_decision_block(p, aligned_decision(p, a, lex), rules, sim_threshold, lex));
    }
    total += evaluate_blocks(r.decision_annotations, blocks);
  }
  return total;
}

struct AblationRow {
  std::string name;
  BlockRules rules;
  BlockScore score;
};

// Rows in cumulative order: baseline, +note, +note+overlap, +note+overlap+sub-structure.
inline std::vector<AblationRow> block_ablation(const std::vector<AnnotationRecord>& records, DocumentStore& store,
                                               const ImperativeLexicon& lex, double sim_threshold = 0.7,
                                               double overlap_threshold = 0.7) {
  std::vector<AblationRow> rows = {
      {"baseline (rest of step)", {false, false, false, overlap_threshold}, {}},
      {"+ note/information rule", {true, false, false, overlap_threshold}, {}},
      {"+ next-step conditional overlap", {true, false, true, overlap_threshold}, {}},
      {"+ stop at sub-list item or paragraph", {true, true, true, overlap_threshold}, {}},
  };
  for (auto& row : rows) row.score = score_blocks(records, store, row.rules, sim_threshold, lex);
  return rows;
}

// ---------------------------------------------------------------------------------------------
// Synthetic corpus.

struct NoiseKinds {
  bool items = true;
  bool options = true;
  bool links = true;
};

struct CorpusSpec {
  std::uint64_t seed = 7;
  std::size_t n_docs = 50;
  std::size_t n_lists = 0;  // 0: three to six lists per document
  double procedure_ratio = 0.43;
  double decision_density = 0.3;  // chance that a step plants a decision point
  NoiseKinds noise_kinds;
  double ordered_positive = 0.85;  // chance a procedure uses <ol>
  double ordered_negative = 0.15;
  double layout_ratio = 0.06;   // procedures wrapped in a layout <ul>
  double hard_negative = 0.25;  // imperative "possible actions" lists among negatives

  void validate() const {
    for (double r : {procedure_ratio, decision_density, ordered_positive, ordered_negative, layout_ratio, hard_negative}) {
      if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::ConfigError, "corpus ratios must be in [0, 1]");
    }
    if (n_docs == 0) throw Error(ErrorCode::ConfigError, "corpus needs at least one document");
    if (n_lists != 0 && n_lists < n_docs) throw Error(ErrorCode::ConfigError, "n_lists must be at least n_docs");
  }
};

inline nlohmann::json corpus_spec_to_json(const CorpusSpec& s) {
  return {{"seed", s.seed},
          {"n_docs", s.n_docs},
          {"n_lists", s.n_lists},
          {"procedure_ratio", s.procedure_ratio},
          {"decision_density", s.decision_density},
          {"noise_kinds", {{"items", s.noise_kinds.items}, {"options", s.noise_kinds.options}, {"links", s.noise_kinds.links}}},
          {"ordered_positive", s.ordered_positive},
          {"ordered_negative", s.ordered_negative},
          {"layout_ratio", s.layout_ratio},
          {"hard_negative", s.hard_negative}};
}

struct GeneratedDoc {
  std::string path;  // relative, e.g. "docs/doc_0003.html"
  std::string html;
};

struct Corpus {
  CorpusSpec spec;
  std::vector<GeneratedDoc> docs;
  std::vector<AnnotationRecord> records;
};

namespace detail::gen {

inline const std::vector<std::string>& components() {
  static const std::vector<std::string> v = {
      "power supply", "node canister", "battery",    "drive",          "fan module",   "enclosure",
      "cable",        "adapter",       "memory module", "system board", "controller",   "port",
      "expansion canister", "host adapter", "boot drive", "network card", "interface card", "disk",
      "switch module", "midplane",     "bezel",      "cache battery", "fibre channel port", "canister"};
  return v;
}

inline const std::vector<std::string>& panels() {
  static const std::vector<std::string> v = {"Settings", "System", "Monitoring", "Volumes", "Pools",
                                             "Hosts",    "Events", "Network",    "Access",  "Support"};
  return v;
}

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> v = {"lsnodecanister", "lsdrive", "lsenclosure", "lsevent", "chnodehw",
                                             "satask rescue",  "svcinfo lsnode", "lsportfc", "chenclosure"};
  return v;
}

inline const std::vector<std::string>& statuses() {
  static const std::vector<std::string> v = {"missing", "failed", "degraded", "offline", "excluded", "unknown"};
  return v;
}

inline std::string article_noun(const std::string& c) { return "the " + c; }

inline std::string capitalize_first(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Imperative instruction without final punctuation.
inline std::string instruction(Rng& rng) {
  const auto& c = rng.pick(components());
  switch (rng.below(16)) {
    case 0: return "Replace " + article_noun(c);
    case 1: return "Remove " + article_noun(c) + " from the enclosure";
    case 2: return "Wait " + std::to_string(rng.between(2, 12) * 5) + " seconds";
    case 3: return "Reseat " + article_noun(c);
    case 4: return "Disconnect the cables from " + article_noun(c);
    case 5: return "Install the new " + c;
    case 6: return "Click " + rng.pick(panels());
    case 7: return "Select " + rng.pick(panels()) + " > " + rng.pick(panels());
    case 8: return "Open the " + rng.pick(panels()) + " panel";
    case 9: return "Run the " + rng.pick(commands()) + " command";
    case 10: return "Verify that " + article_noun(c) + " is online";
    case 11: return "Power off " + article_noun(c);
    case 12: return "Restore power to " + article_noun(c);
    case 13: return "Log in to the management GUI";
    case 14: return "Press the release latch on " + article_noun(c);
    default: return "Reconnect the cables to " + article_noun(c);
  }
}

inline std::string lower_first(std::string s) {
  if (s.size() > 1 && s[0] >= 'A' && s[0] <= 'Z' && !(s[1] >= 'A' && s[1] <= 'Z')) s[0] = static_cast<char>(s[0] - 'A' + 'a');
  return s;
}

inline std::string description(Rng& rng) {
  const auto& c = rng.pick(components());
  switch (rng.below(5)) {
    case 0: return "The " + c + " LED turns green.";
    case 1: return "This process takes about " + std::to_string(rng.between(2, 20)) + " minutes.";
    case 2: return "The system displays a confirmation message.";
    case 3: return "The " + c + " restarts automatically.";
    default: return "The event log records the change.";
  }
}

inline std::string information(Rng& rng) {
  const auto& c = rng.pick(components());
  switch (rng.below(3)) {
    case 0: return "Note: The " + c + " restarts automatically.";
    case 1: return "Important: Do not remove more than one " + c + " at a time.";
    default: return "Tip: You can also use the command-line interface.";
  }
}

struct Condition {
  std::string trigger;  // "If", "When", "Unless"
  std::string text;     // without trigger
};

inline Condition primary_condition(Rng& rng, std::string& component) {
  component = rng.pick(components());
  const auto trig = rng.below(20);
  const std::string trigger = trig < 15 ? "If" : (trig < 19 ? "When" : "Unless");
  if (trigger == "Unless") return {trigger, "the " + component + " is online"};
  switch (rng.below(5)) {
    case 0: return {trigger, "the " + component + " status is " + rng.pick(statuses())};
    case 1: return {trigger, "the " + component + " LED is " + std::string(rng.chance(0.5) ? "amber" : "off")};
    case 2: return {trigger, "the " + component + " does not power on"};
    case 3: return {trigger, "error " + std::to_string(rng.between(500, 599)) + " is still reported"};
    default: return {trigger, "the " + component + " is not responding"};
  }
}

inline Condition nested_condition(Rng& rng) {
  switch (rng.below(3)) {
    case 0: return {"If", "the error is not fixed after " + std::to_string(rng.between(2, 9)) + " minutes"};
    case 1: return {"If", "a message appears on the screen"};
    default: return {"If", "the problem persists after the restart"};
  }
}

struct PlannedSentence {
  std::string text;
  bool paragraph_before = false;  // opens a new <p> inside the item
};

struct PlannedStep {
  std::vector<PlannedSentence> sentences;
  std::vector<std::string> sublist;  // nested <ul> items, rendered after the sentences
};

struct PlannedDecision {
  std::size_t step;
  std::size_t sentence;
  std::string condition;
  std::string effect;
  std::vector<MemberAnnotation> members;
};

// Effect sentence forms for a condition: fronted ("If X, do Y.") or trailing ("Do Y if X.").
inline std::string decision_sentence(Rng& rng, const Condition& c, const std::string& effect, bool& trailing) {
  trailing = c.trigger == "If" && rng.chance(0.12);
  if (trailing) return effect + " " + to_lower(c.trigger) + " " + c.text + ".";
  return c.trigger + " " + c.text + ", " + lower_first(effect) + ".";
}

class ProcedurePlanner {
 public:
  ProcedurePlanner(Rng& rng, const CorpusSpec& spec) : rng_(rng), spec_(spec) {}

  void plan(std::size_t n_steps, bool allow_sublist) {
    steps_.clear();
    decisions_.clear();
    bool sublist_used = !allow_sublist;
    while (steps_.size() < n_steps) {
      const bool last = steps_.size() + 1 == n_steps;
      if (rng_.chance(spec_.decision_density)) {
        plan_decision_step(last);
      } else if (!sublist_used && rng_.chance(0.15)) {
        sublist_used = true;
        PlannedStep s;
        s.sentences.push_back({"Gather the following items:", false});
        const int n = rng_.between(2, 4);
        for (int i = 0; i < n; ++i) s.sublist.push_back("A replacement " + rng_.pick(components()));
        steps_.push_back(std::move(s));
      } else {
        steps_.push_back(plain_step());
      }
    }
  }

  const std::vector<PlannedStep>& steps() const { return steps_; }
  const std::vector<PlannedDecision>& decisions() const { return decisions_; }
  bool has_sublist() const {
    return std::any_of(steps_.begin(), steps_.end(), [](const auto& s) { return !s.sublist.empty(); });
  }

 private:
  PlannedStep plain_step() {
    PlannedStep s;
    s.sentences.push_back({instruction(rng_) + ".", false});
    if (rng_.chance(0.35)) s.sentences.push_back({rng_.chance(0.5) ? description(rng_) : instruction(rng_) + ".", false});
    return s;
  }

  std::size_t member_count() {
    // Empty blocks about half the time. Non-empty primary blocks average about 2.6, which puts
    // the corpus-wide mean (nested and parallel decisions have short blocks) near 2.4.
    if (rng_.chance(0.47)) return 0;
    const double r = rng_.real();
    if (r < 0.24) return 1;
    if (r < 0.56) return 2;
    if (r < 0.78) return 3;
    if (r < 0.90) return 4;
    if (r < 0.96) return 5;
    return 6;
  }

  void plan_decision_step(bool last_step) {
    PlannedStep step;
    const std::size_t step_index = steps_.size();
    // Optional lead-in sentence before the decision point.
    if (rng_.chance(0.25)) step.sentences.push_back({instruction(rng_) + ".", false});
    std::string component;
    const auto cond = primary_condition(rng_, component);
    const auto effect = instruction(rng_);
    bool trailing = false;
    PlannedDecision d;
    d.step = step_index;
    d.sentence = step.sentences.size();
    d.condition = cond.text;
    step.sentences.push_back({decision_sentence(rng_, cond, effect, trailing), false});
    d.effect = trailing ? effect : lower_first(effect);

    auto members = member_count();
    // Parallel next step needs a following step and at least one member slot.
    const bool parallel = members >= 1 && !last_step && rng_.chance(0.2);
    const bool with_else = !parallel && members >= 2 && rng_.chance(0.2);
    const bool with_nested = !parallel && !with_else && members >= 2 && rng_.chance(0.2);

    const std::size_t in_step = parallel ? rng_.below(members) : members;  // members inside this step
    const std::size_t else_at = with_else ? 1 + rng_.below(in_step - 1) : in_step;
    std::vector<PlannedDecision> extra;
    for (std::size_t i = 0; i < in_step; ++i) {
      Branch branch = Branch::True;
      std::string text;
      if (i == else_at) {
        text = "Otherwise, " + lower_first(instruction(rng_)) + ".";
        branch = Branch::False;
      } else if (i > else_at) {
        text = instruction(rng_) + ".";
        branch = Branch::False;
      } else if (with_nested && i == in_step / 2) {
        Condition nc = nested_condition(rng_);
        const auto ne = instruction(rng_);
        text = nc.trigger + " " + nc.text + ", " + lower_first(ne) + ".";
        PlannedDecision nd;
        nd.step = step_index;
        nd.sentence = step.sentences.size();
        nd.condition = nc.text;
        nd.effect = lower_first(ne);
        for (std::size_t j = i + 1; j < in_step; ++j) nd.members.push_back({step_index, nd.sentence + (j - i), Branch::True});
        extra.push_back(std::move(nd));
      } else {
        text = rng_.chance(0.2) ? description(rng_) : instruction(rng_) + ".";
      }
      d.members.push_back({step_index, step.sentences.size(), branch});
      step.sentences.push_back({text, false});
    }
    // Content after the block inside the same step, which only the boundary rules exclude.
    if (!parallel) {
      const double r = rng_.real();
      if (r < 0.2) {
        step.sentences.push_back({information(rng_), false});
        if (rng_.chance(0.3)) step.sentences.push_back({instruction(rng_) + ".", false});
      } else if (r < 0.4) {
        step.sentences.push_back({instruction(rng_) + ".", true});
        if (rng_.chance(0.3)) step.sentences.push_back({description(rng_), false});
      }
    }
    steps_.push_back(std::move(step));

    if (parallel) {
      // Next step: the alternative condition, with the rest of its step on its own TRUE branch.
      PlannedStep next;
      const std::string alt_status = rng_.pick(statuses());
      const auto alt = Condition{"If", "the " + component + " status is " + alt_status};
      // Keep the first condition in the same shape so the two are recognisably parallel.
      std::string first_status = alt_status;
      while (first_status == alt_status) first_status = rng_.pick(statuses());
      d.condition = "the " + component + " status is " + first_status;
      steps_.back().sentences[d.sentence].text =
          trailing ? d.effect + " if " + d.condition + "."
                   : "If " + d.condition + ", " + lower_first(effect) + ".";
      const auto alt_effect = instruction(rng_);
      next.sentences.push_back({"If " + alt.text + ", " + lower_first(alt_effect) + ".", false});
      const std::size_t rest = members - in_step - 1;
      PlannedDecision pd;
      pd.step = step_index + 1;
      pd.sentence = 0;
      pd.condition = alt.text;
      pd.effect = lower_first(alt_effect);
      d.members.push_back({step_index + 1, 0, Branch::False});
      for (std::size_t i = 0; i < rest; ++i) {
        next.sentences.push_back({instruction(rng_) + ".", false});
        d.members.push_back({step_index + 1, i + 1, Branch::False});
        pd.members.push_back({step_index + 1, i + 1, Branch::True});
      }
      steps_.push_back(std::move(next));
      decisions_.push_back(std::move(d));
      decisions_.push_back(std::move(pd));
    } else {
      decisions_.push_back(std::move(d));
    }
    for (auto& e : extra) decisions_.push_back(std::move(e));
    // A plain step follows every decision step so blocks never run into an unplanned conditional.
    steps_.push_back(plain_step());
  }

  Rng& rng_;
  const CorpusSpec& spec_;
  std::vector<PlannedStep> steps_;
  std::vector<PlannedDecision> decisions_;
};

inline std::string procedure_goal(Rng& rng) {
  const auto& c = rng.pick(components());
  switch (rng.below(5)) {
    case 0: return "replace a failed " + c;
    case 1: return "fix node error " + std::to_string(rng.between(500, 599));
    case 2: return "resolve the " + c + " fault";
    case 3: return "update the " + c + " firmware";
    default: return "recover an offline " + c;
  }
}

inline std::string procedure_context(Rng& rng) {
  const auto goal = procedure_goal(rng);
  switch (rng.below(4)) {
    case 0: return "Complete the following steps to " + goal + ":";
    case 1: return "To " + goal + ", complete these steps:";
    case 2: return "Use the following procedure to " + goal + ".";
    default: return "Perform the following steps to " + goal + ":";
  }
}

enum class NegativeKind { Items, Options, Links, Actions };

inline std::vector<std::string> negative_items(Rng& rng, NegativeKind kind, std::string& context) {
  std::vector<std::string> items;
  const int n = rng.between(3, 7);
  switch (kind) {
    case NegativeKind::Items: {
      context = rng.chance(0.5) ? "The system includes these components:" : "The following parts are supported:";
      static const std::vector<std::string> adj = {"Redundant", "Hot-swappable", "Spare", "Optional", "Dual", "Internal"};
      for (int i = 0; i < n; ++i) {
        items.push_back(rng.pick(adj) + " " + rng.pick(components()) + " (" + std::to_string(rng.between(1, 64)) + " GB)");
      }
      break;
    }
    case NegativeKind::Options: {
      context = "Command options:";
      static const std::vector<std::string> flags = {"-v", "-force", "-delim", "-nohdr", "-bytes", "-filtervalue"};
      for (int i = 0; i < n; ++i) {
        items.push_back(rng.pick(flags) + " Displays the " + rng.pick(components()) + " attributes in detail.");
      }
      break;
    }
    case NegativeKind::Links: {
      context = rng.chance(0.5) ? "Related information" : "See also:";
      for (int i = 0; i < n; ++i) {
        const auto& c = rng.pick(components());
        switch (rng.below(3)) {
          case 0: items.push_back("Troubleshooting " + c + " errors"); break;
          case 1: items.push_back("Release notes for version 7." + std::to_string(rng.between(1, 9))); break;
          default: items.push_back("Installing the " + c); break;
        }
      }
      break;
    }
    case NegativeKind::Actions: {
      // Alternatives rather than a sequence: worded like procedure steps, told apart mainly by
      // layout.
      context = rng.chance(0.5) ? procedure_context(rng) : "Possible actions:";
      for (int i = 0; i < n; ++i) {
        items.push_back(rng.chance(0.7) ? instruction(rng) + "." : description(rng));
      }
      break;
    }
  }
  return items;
}

}  // namespace detail::gen

// Deterministic for a given spec. Every list in every document is annotated; procedures carry
// their planted decision blocks.
inline Corpus generate_corpus(const CorpusSpec& spec) {
  using namespace detail::gen;
  spec.validate();
  Rng rng(spec.seed);
  Corpus corpus;
  corpus.spec = spec;

  // Lists per document, then an exact number of procedure slots shuffled over all lists.
  std::vector<std::size_t> per_doc(spec.n_docs);
  if (spec.n_lists == 0) {
    for (auto& n : per_doc) n = static_cast<std::size_t>(rng.between(3, 6));
  } else {
    for (std::size_t i = 0; i < spec.n_docs; ++i) {
      per_doc[i] = spec.n_lists / spec.n_docs + (i < spec.n_lists % spec.n_docs ? 1 : 0);
    }
  }
  std::size_t total = 0;
  for (auto n : per_doc) total += n;
  const auto n_pos = static_cast<std::size_t>(std::llround(spec.procedure_ratio * static_cast<double>(total)));
  std::vector<bool> slot_positive(total, false);
  for (std::size_t i = 0; i < n_pos; ++i) slot_positive[i] = true;
  rng.shuffle(slot_positive);

  std::vector<NegativeKind> kinds;
  if (spec.noise_kinds.items) kinds.push_back(NegativeKind::Items);
  if (spec.noise_kinds.options) kinds.push_back(NegativeKind::Options);
  if (spec.noise_kinds.links) kinds.push_back(NegativeKind::Links);
  if (kinds.empty()) kinds.push_back(NegativeKind::Items);

  std::size_t slot = 0;
  for (std::size_t di = 0; di < spec.n_docs; ++di) {
    char name[64];
    std::snprintf(name, sizeof name, "docs/doc_%04zu.html", di);
    GeneratedDoc doc;
    doc.path = name;
    std::vector<bool> positives(slot_positive.begin() + static_cast<std::ptrdiff_t>(slot),
                                slot_positive.begin() + static_cast<std::ptrdiff_t>(slot + per_doc[di]));
    slot += per_doc[di];
    std::size_t spare_negatives = static_cast<std::size_t>(std::count(positives.begin(), positives.end(), false));

    struct Pending {
      AnnotationRecord record;
      std::vector<PlannedDecision> decisions;
      std::vector<std::size_t> sentence_counts;  // expected per step, for the round-trip check
    };
    std::vector<Pending> lists;  // list elements in pre-order
    std::string body;
    const auto& topic = rng.pick(components());
    body += "<h1>" + escape(capitalize_first(topic)) + " problems</h1>\n";
    body += "<p>This topic describes how to service the " + escape(topic) + ". Read all steps before you begin.</p>\n";

    auto emit_negative = [&](NegativeKind kind, bool force_unordered) {
      std::string context;
      const auto items = negative_items(rng, kind, context);
      const bool ordered = !force_unordered && rng.chance(spec.ordered_negative);
      body += "<p>" + escape(context) + "</p>\n";
      Pending p;
      p.record.doc_path = doc.path;
      p.record.is_procedure = false;
      lists.push_back(std::move(p));
      body += ordered ? "<ol>" : "<ul>";
      for (const auto& it : items) {
        if (kind == NegativeKind::Links) {
          body += "<li><a href=\"#\">" + escape(it) + "</a></li>";
        } else {
          body += "<li>" + escape(it) + "</li>";
        }
      }
      body += ordered ? "</ol>\n" : "</ul>\n";
    };

    std::size_t negatives_emitted = 0;
    for (std::size_t li = 0; li < positives.size(); ++li) {
      if (!positives[li]) {
        if (negatives_emitted >= spare_negatives) continue;
        ++negatives_emitted;
        const bool hard = rng.chance(spec.hard_negative);
        emit_negative(hard ? NegativeKind::Actions : rng.pick(kinds), hard);
        continue;
      }
      // Procedure.
      const bool layout = spare_negatives > negatives_emitted && rng.chance(spec.layout_ratio);
      if (layout) {
        --spare_negatives;
        Pending p;
        p.record.doc_path = doc.path;
        p.record.is_procedure = false;
        lists.push_back(std::move(p));
        body += "<ul class=\"layout\"><li>\n";
      }
      body += "<p>" + escape(procedure_context(rng)) + "</p>\n";
      ProcedurePlanner planner(rng, spec);
      const bool allow_sublist = spare_negatives > negatives_emitted;
      planner.plan(static_cast<std::size_t>(rng.between(3, 7)), allow_sublist);
      if (planner.has_sublist()) --spare_negatives;
      const bool ordered = rng.chance(spec.ordered_positive);
      Pending proc;
      proc.record.doc_path = doc.path;
      proc.record.is_procedure = true;
      proc.decisions = planner.decisions();
      for (const auto& s : planner.steps()) proc.sentence_counts.push_back(s.sentences.size() + s.sublist.size());
      lists.push_back(std::move(proc));
      body += ordered ? "<ol>\n" : "<ul>\n";
      std::vector<std::size_t> sublist_slots;
      for (const auto& step : planner.steps()) {
        const bool paragraphs = std::any_of(step.sentences.begin(), step.sentences.end(),
                                            [](const auto& s) { return s.paragraph_before; });
        body += "<li>";
        if (paragraphs) body += "<p>";
        for (std::size_t si = 0; si < step.sentences.size(); ++si) {
          const auto& s = step.sentences[si];
          if (s.paragraph_before) body += "</p><p>";
          else if (si > 0) body += " ";
          body += escape(s.text);
        }
        if (paragraphs) body += "</p>";
        if (!step.sublist.empty()) {
          Pending sub;
          sub.record.doc_path = doc.path;
          sub.record.is_procedure = false;
          lists.push_back(std::move(sub));
          body += "<ul>";
          for (const auto& item : step.sublist) body += "<li>" + escape(item) + "</li>";
          body += "</ul>";
        }
        body += "</li>\n";
      }
      body += ordered ? "</ol>\n" : "</ul>\n";
      if (layout) body += "</li></ul>\n";
    }
    // Negative slots skipped above because a layout wrapper or sublist had not yet claimed them.
    while (negatives_emitted < spare_negatives) {
      ++negatives_emitted;
      emit_negative(rng.pick(kinds), false);
    }

    doc.html = "<!DOCTYPE html>\n<html><head><title>" + escape(capitalize_first(topic)) +
               " problems</title></head>\n<body>\n<header><nav><ul><li><a href=\"/\">Home</a></li><li><a "
               "href=\"/docs\">Documentation</a></li></ul></nav></header>\n<div class=\"sidebar\"><ul><li><a "
               "href=\"#a\">Overview</a></li><li><a href=\"#b\">Troubleshooting</a></li></ul></div>\n<main>\n" +
               body + "</main>\n<footer><p>Copyright notice.</p></footer>\n</body></html>\n";

    // Resolve node paths: list elements of the scrubbed page in pre-order match emission order.
    const auto parsed = scrub_template(parse_document(doc.html, doc.path));
    std::vector<const DomNode*> list_nodes;
    for_each_node(parsed.root, [&](const DomNode& n) {
      if (n.is_list()) list_nodes.push_back(&n);
    });
    if (list_nodes.size() != lists.size()) {
      throw Error(ErrorCode::SchemaError, doc.path + ": generated list count does not round-trip");
    }
    for (std::size_t i = 0; i < lists.size(); ++i) {
      auto& p = lists[i];
      p.record.node_path = list_nodes[i]->node_path;
      if (p.record.is_procedure) {
        std::size_t step = 0;
        for (const auto& c : list_nodes[i]->children) {
          if (c.tag != "li") continue;
          const auto item = make_list_item(c);
          if (step >= p.sentence_counts.size() || item.sentences.size() != p.sentence_counts[step]) {
            throw Error(ErrorCode::SchemaError, doc.path + ": generated step does not segment as planned");
          }
          ++step;
        }
        for (const auto& d : p.decisions) {
          p.record.decision_annotations.push_back({d.step, d.sentence, d.condition, d.effect, d.members});
        }
        std::sort(p.record.decision_annotations.begin(), p.record.decision_annotations.end(),
                  [](const auto& a, const auto& b) {
                    return std::tie(a.step_index, a.sentence_index) < std::tie(b.step_index, b.sentence_index);
                  });
      }
      corpus.records.push_back(std::move(p.record));
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

struct CorpusStats {
  std::size_t lists = 0;
  std::size_t procedures = 0;
  std::size_t decision_points = 0;
  std::size_t empty_blocks = 0;
  std::size_t max_block = 0;
  double mean_nonempty_block = 0.0;
};

inline CorpusStats corpus_stats(const std::vector<AnnotationRecord>& records) {
  CorpusStats s;
  std::size_t member_sum = 0;
  for (const auto& r : records) {
    ++s.lists;
    if (r.is_procedure) ++s.procedures;
    for (const auto& d : r.decision_annotations) {
      ++s.decision_points;
      if (d.block_members.empty()) {
        ++s.empty_blocks;
      } else {
        member_sum += d.block_members.size();
        s.max_block = std::max(s.max_block, d.block_members.size());
      }
    }
  }
  const auto nonempty = s.decision_points - s.empty_blocks;
  s.mean_nonempty_block = nonempty == 0 ? 0.0 : static_cast<double>(member_sum) / static_cast<double>(nonempty);
  return s;
}

// docs/*.html, annotations.jsonl and manifest.json {seed, spec, files[]}.
inline void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& d : corpus.docs) {
    write_file(dir / d.path, d.html);
    files.push_back(d.path);
  }
  write_annotations(dir / "annotations.jsonl", corpus.records);
  files.push_back("annotations.jsonl");
  const nlohmann::json manifest = {{"seed", corpus.spec.seed}, {"spec", corpus_spec_to_json(corpus.spec)}, {"files", files}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace procmine
