#pragma once

// Sparse feature vectors for list candidates: tf-idf n-grams over context and list text,
// a list-type flag and three imperative statistics.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "procmine/error.hpp"
#include "procmine/ingest.hpp"
#include "procmine/lexicon.hpp"
#include "procmine/linguistics.hpp"

namespace procmine {

using WordList = std::set<std::string, std::less<>>;

struct FeatureConfig {
  int ngram_max = 1;
  int context_k = 1;
  bool use_list_type = true;
  bool use_imperatives = true;

  void validate() const {
    if (ngram_max < 1 || ngram_max > 3) throw Error(ErrorCode::ConfigError, "ngram_max must be 1, 2 or 3");
    if (context_k < 1 || context_k > 4) throw Error(ErrorCode::ConfigError, "context_k must be in 1..4");
  }

  std::size_t meta_size() const { return (use_list_type ? 1 : 0) + (use_imperatives ? 3 : 0); }

  bool operator==(const FeatureConfig&) const = default;
};

// 64-bit FNV-1a.
class Fingerprint {
 public:
  void add(std::string_view s) {
    for (unsigned char c : s) mix(c);
    mix(0xff);
  }
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(v >> (8 * i)));
  }
  void add(double d) { add(std::bit_cast<std::uint64_t>(d)); }
  std::uint64_t value() const { return h_; }

 private:
  void mix(unsigned char c) {
    h_ ^= c;
    h_ *= 0x100000001b3ULL;
  }
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

struct Vocabulary {
  int ngram_max = 1;
  std::vector<std::string> terms;  // sorted; position is the feature index
  std::vector<double> idf;
  std::map<std::string, std::size_t, std::less<>> term_to_index;

  std::size_t size() const { return terms.size(); }

  std::uint64_t fingerprint() const {
    Fingerprint f;
    f.add(static_cast<std::uint64_t>(ngram_max));
    for (std::size_t i = 0; i < terms.size(); ++i) {
      f.add(terms[i]);
      f.add(idf[i]);
    }
    return f.value();
  }

  void reindex() {
    term_to_index.clear();
    for (std::size_t i = 0; i < terms.size(); ++i) term_to_index.emplace(terms[i], i);
  }

  bool operator==(const Vocabulary& o) const {
    return ngram_max == o.ngram_max && terms == o.terms && idf == o.idf;
  }
};

struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;  // strictly increasing indices
  std::size_t meta_offset = 0;
  std::uint64_t vocab_fingerprint = 0;  // 0 for vectors not built from a vocabulary

  double value_at(std::uint32_t index) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), index,
                               [](const auto& e, std::uint32_t i) { return e.first < i; });
    return (it != entries.end() && it->first == index) ? it->second : 0.0;
  }

  bool operator==(const FeatureVector&) const = default;
};

// Dense helper, mostly for tests and small hand-built problems.
inline FeatureVector make_dense_vector(const std::vector<double>& values) {
  FeatureVector v;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0) v.entries.emplace_back(static_cast<std::uint32_t>(i), values[i]);
  }
  v.meta_offset = values.size();
  return v;
}

inline double dot(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      s += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return s;
}

namespace detail {

// Sentences that feed the text block: the last `context_k` context sentences, then the list.
inline std::vector<const Sentence*> text_sentences(const ListCandidate& cand, int context_k) {
  std::vector<const Sentence*> out;
  const auto k = std::min(cand.context.size(), static_cast<std::size_t>(std::max(context_k, 0)));
  for (auto i = cand.context.size() - k; i < cand.context.size(); ++i) out.push_back(&cand.context[i]);
  for (const auto* s : item_sentences(cand)) out.push_back(s);
  return out;
}

}  // namespace detail

// Term counts of one candidate. N-grams never cross sentence boundaries; an n-gram survives
// only if every constituent word is in the wordlist.
inline std::map<std::string, int> candidate_ngrams(const ListCandidate& cand, const FeatureConfig& cfg,
                                                   const WordList& wordlist) {
  std::map<std::string, int> counts;
  for (const auto* s : detail::text_sentences(cand, cfg.context_k)) {
    const auto tokens = tokenize(s->text);
    std::vector<bool> allowed(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) allowed[i] = wordlist.contains(tokens[i]);
    for (int n = 1; n <= cfg.ngram_max; ++n) {
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        bool ok = true;
        std::string term;
        for (int j = 0; j < n && ok; ++j) {
          ok = allowed[i + j];
          if (j > 0) term.push_back(' ');
          term += tokens[i + j];
        }
        if (ok) ++counts[term];
      }
    }
  }
  return counts;
}

// idf[i] = ln((1 + N) / (1 + df_i)) + 1 over the N training candidates.
inline Vocabulary build_vocabulary(const std::vector<const ListCandidate*>& candidates, const FeatureConfig& cfg,
                                   const WordList& wordlist) {
  cfg.validate();
  if (wordlist.empty()) throw Error(ErrorCode::ConfigError, "frequency wordlist is empty");
  std::map<std::string, int> df;
  for (const auto* c : candidates) {
    for (const auto& [term, count] : candidate_ngrams(*c, cfg, wordlist)) ++df[term];
  }
  if (df.empty()) throw Error(ErrorCode::EmptyVocab, "no term survived the wordlist filter");
  Vocabulary v;
  v.ngram_max = cfg.ngram_max;
  const double n = static_cast<double>(candidates.size());
  for (const auto& [term, d] : df) {
    v.terms.push_back(term);
    v.idf.push_back(std::log((1.0 + n) / (1.0 + d)) + 1.0);
  }
  v.reindex();
  return v;
}

inline Vocabulary build_vocabulary(const std::vector<ListCandidate>& candidates, const FeatureConfig& cfg,
                                   const WordList& wordlist) {
  std::vector<const ListCandidate*> ptrs;
  for (const auto& c : candidates) ptrs.push_back(&c);
  return build_vocabulary(ptrs, cfg, wordlist);
}

struct ImperativeStats {
  double with_imperative = 0.0;      // fraction of item sentences containing an imperative
  double starting_imperative = 0.0;  // fraction whose clause-initial word is an imperative
  double density = 0.0;              // imperatives per word token, capped at 1

  bool operator==(const ImperativeStats&) const = default;
};

// True when the sentence's first clause opens with an imperative, after leading adverbs and
// "do not" / "never".
inline bool starts_with_imperative(const Sentence& s, const std::vector<ImperativeAnnotation>& found) {
  if (found.empty()) return false;
  const auto& toks = s.tokens.empty() ? tokenize(s.text) : s.tokens;
  std::size_t k = 0;
  while (k + 1 < toks.size() && detail::contains(detail::leading_adverbs(), toks[k])) ++k;
  if (k + 1 < toks.size() && toks[k] == "do" && toks[k + 1] == "not") k += 2;
  else if (k < toks.size() && (toks[k] == "don't" || toks[k] == "never")) k += 1;
  return std::any_of(found.begin(), found.end(), [&](const auto& a) { return a.token_index == k; });
}

inline ImperativeStats imperative_features(const ListCandidate& cand, const ImperativeLexicon& lex) {
  ImperativeStats st;
  std::size_t sentences = 0;
  std::size_t with = 0;
  std::size_t starting = 0;
  std::size_t imperatives = 0;
  std::size_t words = 0;
  for (const auto* s : item_sentences(cand)) {
    const auto found = detect_imperatives(*s, lex);
    ++sentences;
    words += tokenize(s->text).size();
    imperatives += found.size();
    if (!found.empty()) ++with;
    if (starts_with_imperative(*s, found)) ++starting;
  }
  if (sentences == 0) return st;
  st.with_imperative = static_cast<double>(with) / static_cast<double>(sentences);
  st.starting_imperative = static_cast<double>(starting) / static_cast<double>(sentences);
  st.density = words == 0 ? 0.0 : std::min(1.0, static_cast<double>(imperatives) / static_cast<double>(words));
  return st;
}

// Fingerprint shared by every vector featurized with this vocabulary and configuration.
inline std::uint64_t feature_space_fingerprint(const Vocabulary& vocab, const FeatureConfig& cfg) {
  Fingerprint f;
  f.add(vocab.fingerprint());
  f.add(static_cast<std::uint64_t>(cfg.ngram_max));
  f.add(static_cast<std::uint64_t>(cfg.context_k));
  f.add(static_cast<std::uint64_t>(cfg.use_list_type));
  f.add(static_cast<std::uint64_t>(cfg.use_imperatives));
  auto v = f.value();
  return v == 0 ? 1 : v;
}

inline FeatureVector featurize(const ListCandidate& cand, const Vocabulary& vocab, const FeatureConfig& cfg,
                               const ImperativeLexicon& lex) {
  FeatureVector out;
  out.meta_offset = vocab.size();
  out.vocab_fingerprint = feature_space_fingerprint(vocab, cfg);
  const auto dim_cfg = FeatureConfig{vocab.ngram_max, cfg.context_k, cfg.use_list_type, cfg.use_imperatives};
  // Terms are generated against the vocabulary itself: anything outside it is ignored.
  std::map<std::string, int> counts;
  for (const auto* s : detail::text_sentences(cand, dim_cfg.context_k)) {
    const auto tokens = tokenize(s->text);
    for (int n = 1; n <= dim_cfg.ngram_max; ++n) {
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string term = tokens[i];
        for (int j = 1; j < n; ++j) term += ' ' + tokens[i + j];
        if (vocab.term_to_index.contains(term)) ++counts[term];
      }
    }
  }
  double norm = 0.0;
  for (const auto& [term, count] : counts) {
    const auto idx = vocab.term_to_index.find(term)->second;
    const double w = count * vocab.idf[idx];
    out.entries.emplace_back(static_cast<std::uint32_t>(idx), w);
    norm += w * w;
  }
  std::sort(out.entries.begin(), out.entries.end());
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& e : out.entries) e.second /= norm;
  }
  auto meta = static_cast<std::uint32_t>(vocab.size());
  if (cfg.use_list_type) {
    if (cand.list_kind == ListKind::Ordered) out.entries.emplace_back(meta, 1.0);
    ++meta;
  }
  if (cfg.use_imperatives) {
    const auto st = imperative_features(cand, lex);
    for (double v : {st.with_imperative, st.starting_imperative, st.density}) {
      if (v != 0.0) out.entries.emplace_back(meta, v);
      ++meta;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Serialization.

inline nlohmann::json vocabulary_to_json(const Vocabulary& v) {
  return {{"version", 1}, {"ngram_max", v.ngram_max}, {"terms", v.terms}, {"idf", v.idf}};
}

inline Vocabulary vocabulary_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::SchemaError, "unsupported vocabulary version");
    Vocabulary v;
    v.ngram_max = j.at("ngram_max").get<int>();
    v.terms = j.at("terms").get<std::vector<std::string>>();
    v.idf = j.at("idf").get<std::vector<double>>();
    if (v.terms.size() != v.idf.size()) throw Error(ErrorCode::SchemaError, "terms and idf differ in length");
    v.reindex();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed vocabulary: ") + e.what());
  }
}

inline nlohmann::json feature_config_to_json(const FeatureConfig& c) {
  return {{"ngram_max", c.ngram_max},
          {"context_k", c.context_k},
          {"use_list_type", c.use_list_type},
          {"use_imperatives", c.use_imperatives}};
}

inline FeatureConfig feature_config_from_json(const nlohmann::json& j, FeatureConfig base = {}) {
  try {
    base.ngram_max = j.value("ngram_max", base.ngram_max);
    base.context_k = j.value("context_k", base.context_k);
    base.use_list_type = j.value("use_list_type", base.use_list_type);
    base.use_imperatives = j.value("use_imperatives", base.use_imperatives);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed feature config: ") + e.what());
  }
  base.validate();
  return base;
}

inline nlohmann::json vector_to_json(const FeatureVector& v) {
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (const auto& [i, w] : v.entries) {
    idx.push_back(i);
    val.push_back(w);
  }
  return {{"indices", idx}, {"values", val}, {"meta_offset", v.meta_offset}};
}

inline FeatureVector vector_from_json(const nlohmann::json& j, std::uint64_t fingerprint) {
  FeatureVector v;
  const auto idx = j.at("indices").get<std::vector<std::uint32_t>>();
  const auto val = j.at("values").get<std::vector<double>>();
  if (idx.size() != val.size()) throw Error(ErrorCode::SchemaError, "vector indices and values differ in length");
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i > 0 && idx[i] <= idx[i - 1]) throw Error(ErrorCode::SchemaError, "vector indices not increasing");
    v.entries.emplace_back(idx[i], val[i]);
  }
  v.meta_offset = j.value("meta_offset", std::size_t{0});
  v.vocab_fingerprint = fingerprint;
  return v;
}

inline WordList load_wordlist(const std::string& path) {
  const auto words = load_word_list(path);
  return WordList(words.begin(), words.end());
}

}  // namespace procmine
