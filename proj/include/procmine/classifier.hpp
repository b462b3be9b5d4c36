#pragma once

// Procedure/not-procedure list classifier: vocabulary + feature configuration + SVM, with
// evaluation reports and stratified cross-validation.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "procmine/error.hpp"
#include "procmine/features.hpp"
#include "procmine/ingest.hpp"
#include "procmine/lexicon.hpp"
#include "procmine/svm.hpp"

namespace procmine {

struct LabeledCandidate {
  ListCandidate candidate;
  bool is_procedure = false;
};

struct ClassifierSpec {
  FeatureConfig features;
  TrainOptions svm;
};

// Everything needed to classify a raw ListCandidate.
struct ProcedureClassifier {
  FeatureConfig features;
  Vocabulary vocabulary;
  SvmModel model;

  FeatureVector featurize(const ListCandidate& cand, const ImperativeLexicon& lex) const {
    return procmine::featurize(cand, vocabulary, features, lex);
  }

  Prediction classify(const ListCandidate& cand, const ImperativeLexicon& lex) const {
    return predict(model, featurize(cand, lex));
  }

  bool operator==(const ProcedureClassifier&) const = default;
};

inline ProcedureClassifier train_classifier(const std::vector<const LabeledCandidate*>& data, const WordList& wordlist,
                                            const ImperativeLexicon& lex, const ClassifierSpec& spec) {
  spec.features.validate();
  std::vector<const ListCandidate*> cands;
  for (const auto* d : data) cands.push_back(&d->candidate);
  ProcedureClassifier clf;
  clf.features = spec.features;
  clf.vocabulary = build_vocabulary(cands, spec.features, wordlist);
  std::vector<LabeledVector> train_set;
  train_set.reserve(data.size());
  for (const auto* d : data) {
    train_set.emplace_back(procmine::featurize(d->candidate, clf.vocabulary, spec.features, lex),
                           d->is_procedure ? 1 : -1);
  }
  clf.model = train(train_set, spec.svm);
  return clf;
}

inline ProcedureClassifier train_classifier(const std::vector<LabeledCandidate>& data, const WordList& wordlist,
                                            const ImperativeLexicon& lex, const ClassifierSpec& spec) {
  std::vector<const LabeledCandidate*> ptrs;
  for (const auto& d : data) ptrs.push_back(&d);
  return train_classifier(ptrs, wordlist, lex, spec);
}

inline nlohmann::json classifier_to_json(const ProcedureClassifier& c) {
  auto j = model_to_json(c.model);
  j["vocabulary"] = vocabulary_to_json(c.vocabulary);
  j["feature_config"] = feature_config_to_json(c.features);
  return j;
}

inline ProcedureClassifier classifier_from_json(const nlohmann::json& j) {
  ProcedureClassifier c;
  c.model = model_from_json(j);
  if (!j.contains("vocabulary") || !j.contains("feature_config")) {
    throw Error(ErrorCode::SchemaError, "model file carries no vocabulary or feature configuration");
  }
  c.vocabulary = vocabulary_from_json(j.at("vocabulary"));
  c.features = feature_config_from_json(j.at("feature_config"));
  if (feature_space_fingerprint(c.vocabulary, c.features) != c.model.vocab_fingerprint) {
    throw Error(ErrorCode::ModelMismatch, "model fingerprint does not match its vocabulary");
  }
  return c;
}

inline void save_classifier(const ProcedureClassifier& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write model '" + path + "'");
  out << classifier_to_json(c).dump() << '\n';
}

inline ProcedureClassifier load_classifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ModelNotFound, "model file '" + path + "' not found");
  try {
    return classifier_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("model file is not JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// Evaluation.

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }

  void add(bool truth, bool predicted) {
    if (truth && predicted) ++tp;
    else if (!truth && predicted) ++fp;
    else if (!truth && !predicted) ++tn;
    else ++fn;
  }

  bool operator==(const Confusion&) const = default;
};

struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion confusion;
  std::vector<double> fold_accuracies;
};

inline EvalReport make_report(const Confusion& c) {
  EvalReport r;
  r.confusion = c;
  const auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / b; };
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.f1 = (r.precision + r.recall) > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  return {{"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}},
          {"fold_accuracies", r.fold_accuracies}};
}

// Seen by cross_validate after each fold: fold number, the fold's vocabulary and the training
// candidates it was built from.
using FoldObserver =
    std::function<void(std::size_t fold, const Vocabulary& vocab, const std::vector<const LabeledCandidate*>& train)>;

// Stratified k-fold assignment: each class is shuffled with the seed and dealt round-robin.
inline std::vector<std::size_t> stratified_folds(const std::vector<bool>& labels, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> fold_of(labels.size());
  Rng rng(seed);
  for (bool cls : {true, false}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i) fold_of[idx[i]] = i % folds;
  }
  return fold_of;
}

// Vocabulary is rebuilt from each fold's training split only.
inline EvalReport cross_validate(const std::vector<LabeledCandidate>& data, const WordList& wordlist,
                                 const ImperativeLexicon& lex, const ClassifierSpec& spec, std::size_t folds = 5,
                                 std::uint64_t seed = 0, const FoldObserver& observer = {}) {
  if (folds < 2) throw Error(ErrorCode::ConfigError, "cross-validation needs at least 2 folds");
  std::size_t pos = 0;
  for (const auto& d : data) pos += d.is_procedure ? 1 : 0;
  const std::size_t neg = data.size() - pos;
  if (pos < folds || neg < folds) {
    throw Error(ErrorCode::TooFewExamples, "each class needs at least " + std::to_string(folds) + " examples");
  }
  std::vector<bool> labels;
  for (const auto& d : data) labels.push_back(d.is_procedure);
  const auto fold_of = stratified_folds(labels, folds, seed);

  Confusion total;
  std::vector<double> fold_acc;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<const LabeledCandidate*> train_part;
    std::vector<const LabeledCandidate*> test_part;
    for (std::size_t i = 0; i < data.size(); ++i) (fold_of[i] == f ? test_part : train_part).push_back(&data[i]);
    auto clf = train_classifier(train_part, wordlist, lex, spec);
    if (observer) observer(f, clf.vocabulary, train_part);
    Confusion c;
    for (const auto* d : test_part) {
      const auto p = clf.classify(d->candidate, lex);
      c.add(d->is_procedure, p.is_procedure);
      total.add(d->is_procedure, p.is_procedure);
    }
    fold_acc.push_back(make_report(c).accuracy);
  }
  auto report = make_report(total);
  report.fold_accuracies = std::move(fold_acc);
  return report;
}

}  // namespace procmine
