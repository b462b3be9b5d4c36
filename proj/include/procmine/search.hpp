#pragma once

// Breadth-first procedure search over a page: classify each list, keep confident procedures
// and do not descend into them.

#include <deque>
#include <map>
#include <vector>

#include "procmine/classifier.hpp"
#include "procmine/error.hpp"
#include "procmine/html.hpp"
#include "procmine/ingest.hpp"

namespace procmine {

struct SearchConfig {
  double threshold = 0.5;
  std::size_t max_nodes = 50000;

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::ConfigError, "threshold must be in [0, 1]");
  }
};

struct ProcedureCandidate {
  ListCandidate candidate;
  Prediction prediction;
};

struct SearchResult {
  std::vector<ProcedureCandidate> procedures;  // dequeue order
  std::vector<NodePath> classified;            // every list node that was classified, in order
  std::size_t visited = 0;
  bool truncated = false;
};

// `classify` maps a ListCandidate to a Prediction. Candidates must come from
// extract_list_candidates on the same document.
template <class Classify>
SearchResult search_procedures(const Document& doc, const std::vector<ListCandidate>& candidates, Classify&& classify,
                               const SearchConfig& cfg) {
  cfg.validate();
  std::map<NodePath, const ListCandidate*> by_path;
  for (const auto& c : candidates) by_path.emplace(c.node_path, &c);

  SearchResult out;
  std::deque<const DomNode*> queue{&doc.root};
  while (!queue.empty()) {
    if (out.visited >= cfg.max_nodes) {
      out.truncated = true;
      break;
    }
    const DomNode* node = queue.front();
    queue.pop_front();
    ++out.visited;
    if (node->is_list()) {
      auto it = by_path.find(node->node_path);
      if (it != by_path.end()) {
        const Prediction p = classify(*it->second);
        out.classified.push_back(node->node_path);
        if (p.is_procedure && p.confidence >= cfg.threshold) {
          out.procedures.push_back({*it->second, p});
          continue;
        }
      }
    }
    for (const auto& c : node->children) {
      if (!c.is_text()) queue.push_back(&c);
    }
  }
  return out;
}

inline SearchResult find_procedures(const Document& doc, const ProcedureClassifier& clf, const SearchConfig& cfg,
                                    const ImperativeLexicon& lex) {
  if (feature_space_fingerprint(clf.vocabulary, clf.features) != clf.model.vocab_fingerprint) {
    throw Error(ErrorCode::ModelMismatch, "classifier model was trained on a different vocabulary");
  }
  const auto candidates = extract_list_candidates(doc, static_cast<std::size_t>(clf.features.context_k));
  return search_procedures(
      doc, candidates, [&](const ListCandidate& c) { return clf.classify(c, lex); }, cfg);
}

// Variant that pins the feature configuration the caller expects the model to use.
inline SearchResult find_procedures(const Document& doc, const ProcedureClassifier& clf, const SearchConfig& cfg,
                                    const FeatureConfig& feat_cfg, const ImperativeLexicon& lex) {
  if (!(feat_cfg == clf.features)) {
    throw Error(ErrorCode::ModelMismatch, "feature configuration differs from the one the model was trained with");
  }
  return find_procedures(doc, clf, cfg, lex);
}

}  // namespace procmine
