#pragma once

// Deep mining of one procedure: decision points, decision blocks, branch mapping, yes/no
// questions and the branch-labeled flow graph.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "procmine/error.hpp"
#include "procmine/ingest.hpp"
#include "procmine/lexicon.hpp"
#include "procmine/linguistics.hpp"

namespace procmine {

struct Step {
  std::size_t index = 0;
  std::vector<Sentence> sentences;
  std::vector<NodePath> sublist_paths;
  std::vector<std::size_t> paragraph_breaks;
};

struct Procedure {
  std::string doc_url;
  NodePath node_path;
  std::vector<Step> steps;
  std::vector<Sentence> context;
};

inline Procedure procedure_from_candidate(const ListCandidate& cand) {
  if (cand.items.empty()) throw Error(ErrorCode::EmptyInput, "list candidate has no items");
  Procedure p;
  p.doc_url = cand.doc_url;
  p.node_path = cand.node_path;
  p.context = cand.context;
  for (std::size_t i = 0; i < cand.items.size(); ++i) {
    const auto& item = cand.items[i];
    p.steps.push_back({i, item.sentences, item.sublist_paths, item.paragraph_breaks});
  }
  return p;
}

struct DecisionPoint {
  std::size_t step_index = 0;
  std::size_t sentence_index = 0;
  ConditionalSplit split;
};

enum class Branch { True, False };

inline std::string_view to_string(Branch b) { return b == Branch::True ? "TRUE" : "FALSE"; }

struct BlockMember {
  std::size_t step = 0;
  std::size_t sentence = 0;
  Branch branch = Branch::True;

  bool operator==(const BlockMember&) const = default;
};

struct DecisionBlock {
  DecisionPoint decision;
  std::vector<BlockMember> members;
  std::vector<std::size_t> absorbed_steps;
};

// Boundary rules applied on top of the rest-of-step baseline.
struct BlockRules {
  bool note = true;          // stop before information sentences
  bool substructure = true;  // stop at paragraph / nested list boundaries
  bool overlap = true;       // absorb following steps that open with a parallel conditional
  double overlap_threshold = 0.7;

  static BlockRules baseline() { return {false, false, false, 0.7}; }

  bool operator==(const BlockRules&) const = default;
};

namespace detail {

inline bool is_information_sentence(const Sentence& s) {
  const auto toks = tokenize(s.text);
  if (toks.empty()) return false;
  const auto& w = toks.front();
  return w == "note" || w == "information" || w == "important" || w == "tip" || w == "notes" || w == "tips";
}

inline bool contains_index(const std::vector<std::size_t>& v, std::size_t i) {
  return std::find(v.begin(), v.end(), i) != v.end();
}

inline std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (w.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace detail

inline bool is_information_sentence(const Sentence& s) { return detail::is_information_sentence(s); }

inline std::vector<DecisionPoint> extract_decision_points(const Procedure& p,
                                                          const ImperativeLexicon& lex = ImperativeLexicon::builtin()) {
  std::vector<DecisionPoint> out;
  for (const auto& step : p.steps) {
    for (std::size_t s = 0; s < step.sentences.size(); ++s) {
      if (auto split = detect_conditional(step.sentences[s], lex)) out.push_back({step.index, s, std::move(*split)});
    }
  }
  return out;
}

namespace detail {

// Sentence opens (or contains, clause-initially) an else/otherwise alternative.
inline bool is_else_member(const Sentence& s) {
  const detail::SentenceView v(s.text);
  if (v.words() == 0) return false;
  const auto& w0 = v.word(0);
  if (w0 == "else" || w0 == "otherwise") return true;
  if (w0 == "if" && v.words() >= 2 && (v.word(1) == "not" || v.word(1) == "no") &&
      (v.words() == 2 || !v.punct_after(1).empty())) {
    return true;
  }
  for (std::size_t k = 1; k < v.words(); ++k) {
    const auto& w = v.word(k);
    if (w != "otherwise" && w != "else") continue;
    const auto before = v.punct_before(k);
    if (before == "," || before == ";" || before == ":" || v.word(k - 1) == "or") return true;
  }
  return false;
}

}  // namespace detail

// Labels members TRUE until an else/otherwise cue or a parallel conditional (similar
// condition), FALSE from there on. Less similar conditionals are nested and stay TRUE.
inline DecisionBlock map_instructions(DecisionBlock block, const Procedure& p, double sim_threshold = 0.7,
                                      const ImperativeLexicon& lex = ImperativeLexicon::builtin()) {
  Branch branch = Branch::True;
  for (auto& m : block.members) {
    if (branch == Branch::True) {
      const auto& s = p.steps.at(m.step).sentences.at(m.sentence);
      if (detail::is_else_member(s)) {
        branch = Branch::False;
      } else if (auto split = detect_conditional(s, lex)) {
        if (similarity(split->condition, block.decision.split.condition) >= sim_threshold) branch = Branch::False;
      }
    }
    m.branch = branch;
  }
  return block;
}

inline DecisionBlock extract_decision_block(const Procedure& p, const DecisionPoint& d, const BlockRules& rules = {},
                                            double sim_threshold = 0.7,
                                            const ImperativeLexicon& lex = ImperativeLexicon::builtin()) {
  DecisionBlock block;
  block.decision = d;
  const auto& step = p.steps.at(d.step_index);
  bool stopped = false;
  for (std::size_t s = d.sentence_index + 1; s < step.sentences.size(); ++s) {
    if (rules.note && detail::is_information_sentence(step.sentences[s])) {
      stopped = true;
      break;
    }
    if (rules.substructure && detail::contains_index(step.paragraph_breaks, s)) {
      stopped = true;
      break;
    }
    block.members.push_back({d.step_index, s, Branch::True});
  }
  if (!stopped && rules.overlap) {
    for (auto next = d.step_index + 1; next < p.steps.size(); ++next) {
      const auto& ns = p.steps[next];
      if (ns.sentences.empty()) break;
      const auto split = detect_conditional(ns.sentences.front(), lex);
      if (!split || similarity(split->condition, d.split.condition) < rules.overlap_threshold) break;
      block.absorbed_steps.push_back(next);
      for (std::size_t s = 0; s < ns.sentences.size(); ++s) block.members.push_back({next, s, Branch::True});
    }
  }
  return map_instructions(std::move(block), p, sim_threshold, lex);
}

inline std::vector<DecisionBlock> extract_all_blocks(const Procedure& p, const BlockRules& rules = {},
                                                     double sim_threshold = 0.7,
                                                     const ImperativeLexicon& lex = ImperativeLexicon::builtin()) {
  std::vector<DecisionBlock> out;
  for (const auto& d : extract_decision_points(p, lex)) {
    auto b = extract_decision_block(p, d, rules, sim_threshold, lex);
    // A decision inside an earlier block keeps only the members that block also covers, so
    // blocks always nest.
    for (const auto& outer : out) {
      auto inside = [&](std::size_t step, std::size_t sentence) {
        return std::any_of(outer.members.begin(), outer.members.end(),
                           [&](const BlockMember& m) { return m.step == step && m.sentence == sentence; });
      };
      if (!inside(d.step_index, d.sentence_index)) continue;
      auto keep = std::find_if(b.members.begin(), b.members.end(),
                               [&](const BlockMember& m) { return !inside(m.step, m.sentence); });
      b.members.erase(keep, b.members.end());
      std::erase_if(b.absorbed_steps, [&](std::size_t s) {
        return std::none_of(b.members.begin(), b.members.end(), [&](const BlockMember& m) { return m.step == s; });
      });
    }
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Questions.

struct QuestionSpec {
  std::string text;
  Branch yes_branch = Branch::True;
  Branch no_branch = Branch::False;
};

namespace detail {

inline const WordSet& question_auxiliaries() {
  static const WordSet s = {"is", "are", "was", "were", "has", "have", "had", "can", "could", "does", "do", "did",
                            "will", "would", "should", "must", "may", "might"};
  return s;
}

// "isn't" -> "is", "cannot" -> "can", "won't" -> "will". Empty when w is not a negated auxiliary.
inline std::string strip_negated_auxiliary(std::string w) {
  static const std::map<std::string, std::string> kIrregular = {{"cannot", "can"}, {"can't", "can"},
                                                                 {"won't", "will"}, {"shan't", "shall"}};
  for (auto& c : w) {
    if (c == '\xE2') return {};
  }
  if (auto it = kIrregular.find(w); it != kIrregular.end()) return it->second;
  if (w.size() > 3 && w.substr(w.size() - 3) == "n't") {
    auto base = w.substr(0, w.size() - 3);
    if (question_auxiliaries().contains(base)) return base;
  }
  return {};
}

inline const WordSet& movable_adverbs() {
  static const WordSet s = {"already", "still", "now", "also", "currently", "previously", "always", "yet", "again"};
  return s;
}

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

// Original-case surface form of each lexeme.
inline std::vector<std::string> surface_lexemes(std::string_view text, const std::vector<Lexeme>& lx) {
  std::vector<std::string> out;
  for (const auto& l : lx) out.emplace_back(text.substr(l.span.begin, l.span.size()));
  return out;
}

inline std::string render_lexemes(const std::vector<std::string>& surface, const std::vector<Lexeme>& lx,
                                  std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (surface[i].empty()) continue;
    const bool attach = !lx[i].is_word && (surface[i] == "," || surface[i] == "." || surface[i] == ";" ||
                                           surface[i] == ":" || surface[i] == ")" || surface[i] == "?" ||
                                           surface[i] == "!");
    if (!out.empty() && !attach && out.back() != '(') out.push_back(' ');
    out += surface[i];
  }
  return out;
}

}  // namespace detail

// Yes/no question for a condition. When the auxiliary can be fronted, negation is dropped from
// the surface question and the yes-branch flips accordingly; otherwise a verbatim fallback
// question keeps the negation.
inline QuestionSpec generate_question(std::string_view condition, bool condition_negated, bool inverted) {
  using namespace detail;
  QuestionSpec q;
  auto cond = std::string(trim(condition));
  while (!cond.empty() && (cond.back() == '.' || cond.back() == ',' || cond.back() == ';' || cond.back() == ':')) {
    cond.pop_back();
  }
  const auto lx = lex(cond);
  auto surface = surface_lexemes(cond, lx);
  std::vector<std::size_t> words;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    if (lx[i].is_word) words.push_back(i);
  }

  std::optional<std::size_t> aux_word;
  std::string aux;
  bool negation_removed = false;
  for (std::size_t k = 1; k < words.size() && k <= 10; ++k) {
    const auto& w = lx[words[k]].text;
    if (question_auxiliaries().contains(w)) {
      aux_word = k;
      aux = w;
      break;
    }
    if (auto base = strip_negated_auxiliary(w); !base.empty()) {
      aux_word = k;
      aux = base;
      negation_removed = true;
      break;
    }
    if (!lx[words[k] - 1].is_word && lx[words[k] - 1].text == ",") break;  // subject does not span commas
  }

  if (aux_word) {
    const auto a = *aux_word;
    // Subject = words before the auxiliary; trailing adverbs move to the end of the question.
    std::size_t subject_end = words[a];
    std::vector<std::string> moved;
    std::size_t sk = a;
    while (sk > 1 && movable_adverbs().contains(lx[words[sk - 1]].text)) {
      --sk;
      moved.insert(moved.begin(), surface[words[sk]]);
      surface[words[sk]].clear();
    }
    // Remainder after the auxiliary, without "not"/"never".
    std::size_t rest_begin = words[a] + 1;
    for (std::size_t i = rest_begin; i < lx.size(); ++i) {
      if (lx[i].is_word && (lx[i].text == "not" || lx[i].text == "never")) {
        surface[i].clear();
        negation_removed = true;
      }
    }
    // Main-verb "have" takes do-support: "you have X" -> "Do you have X?"
    std::string fronted = aux;
    std::string main_verb;
    if (aux == "has" || aux == "have" || aux == "had") {
      std::size_t nk = a + 1;
      while (nk < words.size() && surface[words[nk]].empty()) ++nk;
      const bool participle =
          nk < words.size() && (lx[words[nk]].text == "been" ||
                                (lx[words[nk]].text.size() > 2 &&
                                 (lx[words[nk]].text.ends_with("ed") || lx[words[nk]].text.ends_with("en") ||
                                  lx[words[nk]].text == "got" || lx[words[nk]].text == "gone")));
      if (!participle) {
        fronted = aux == "had" ? "did" : (aux == "has" ? "does" : "do");
        main_verb = "have";
      }
    }
    auto subject = render_lexemes(surface, lx, 0, subject_end);
    if (!subject.empty() && lx[words[0]].text != "i" && surface[words[0]].size() > 1 &&
        !(surface[words[0]][1] >= 'A' && surface[words[0]][1] <= 'Z')) {
      subject[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(subject[0])));
    }
    auto rest = render_lexemes(surface, lx, rest_begin, lx.size());
    q.text = capitalize(fronted) + " " + join_words({subject, main_verb, rest, join_words(moved)}) + "?";
  } else {
    q.text = "Is the following true: " + cond + "?";
  }
  // With negation removed from the surface, "yes" asserts the positive form.
  const bool yes_is_true = negation_removed ? (condition_negated == inverted) : !inverted;
  q.yes_branch = yes_is_true ? Branch::True : Branch::False;
  q.no_branch = yes_is_true ? Branch::False : Branch::True;
  return q;
}

inline QuestionSpec generate_question(const DecisionPoint& d) {
  return generate_question(d.split.condition, d.split.condition_negated, d.split.polarity == Polarity::Inverted);
}

// ---------------------------------------------------------------------------------------------
// Flow graph.

enum class NodeKind { Instruction, Decision };
enum class EdgeLabel { Next, True, False };

// Which part of its source sentence a node shows.
enum class NodeRole { Sentence, Effect, Prefix, Suffix };

inline std::string_view to_string(NodeKind k) { return k == NodeKind::Instruction ? "INSTRUCTION" : "DECISION"; }
inline std::string_view to_string(EdgeLabel l) {
  switch (l) {
    case EdgeLabel::Next: return "NEXT";
    case EdgeLabel::True: return "TRUE";
    case EdgeLabel::False: return "FALSE";
  }
  return "NEXT";
}
inline std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Sentence: return "SENTENCE";
    case NodeRole::Effect: return "EFFECT";
    case NodeRole::Prefix: return "PREFIX";
    case NodeRole::Suffix: return "SUFFIX";
  }
  return "SENTENCE";
}

struct FlowNode {
  int id = 0;
  NodeKind kind = NodeKind::Instruction;
  std::string text;
  std::optional<std::string> question;
  std::optional<Branch> yes_branch;
  std::size_t step = 0;  // origin sentence
  std::size_t sentence = 0;
  NodeRole role = NodeRole::Sentence;
};

struct FlowEdge {
  int from = 0;
  int to = 0;
  EdgeLabel label = EdgeLabel::Next;

  bool operator==(const FlowEdge&) const = default;
};

struct FlowGraph {
  std::string doc_url;
  NodePath node_path;
  std::string title;
  int entry = 0;
  std::vector<FlowNode> nodes;  // nodes[i].id == i
  std::vector<FlowEdge> edges;

  std::vector<FlowEdge> out_edges(int id) const {
    std::vector<FlowEdge> out;
    for (const auto& e : edges) {
      if (e.from == id) out.push_back(e);
    }
    return out;
  }

  std::optional<int> follow(int id, EdgeLabel label) const {
    for (const auto& e : edges) {
      if (e.from == id && e.label == label) return e.to;
    }
    return std::nullopt;
  }
};

namespace detail {

struct SentencePos {
  std::size_t step;
  std::size_t sentence;
  auto operator<=>(const SentencePos&) const = default;
};

class FlowBuilder {
 public:
  FlowBuilder(const Procedure& p, const std::vector<DecisionBlock>& blocks) : p_(p) {
    for (const auto& step : p.steps) {
      for (std::size_t s = 0; s < step.sentences.size(); ++s) order_.push_back({step.index, s});
    }
    for (std::size_t i = 0; i < order_.size(); ++i) position_[order_[i]] = i;
    for (const auto& b : blocks) {
      const SentencePos at{b.decision.step_index, b.decision.sentence_index};
      const auto it = position_.find(at);
      if (it == position_.end()) throw Error(ErrorCode::InconsistentBlocks, "decision point outside the procedure");
      std::vector<std::size_t> positions;
      for (const auto& m : b.members) {
        const auto mt = position_.find({m.step, m.sentence});
        if (mt == position_.end()) throw Error(ErrorCode::InconsistentBlocks, "block member outside the procedure");
        positions.push_back(mt->second);
      }
      for (std::size_t k = 0; k < positions.size(); ++k) {
        if (positions[k] != it->second + 1 + k) {
          throw Error(ErrorCode::InconsistentBlocks, "block members must directly and contiguously follow the decision");
        }
        if (k > 0 && b.members[k - 1].branch == Branch::False && b.members[k].branch == Branch::True) {
          throw Error(ErrorCode::InconsistentBlocks, "branch labels switch back to TRUE");
        }
      }
      if (!blocks_.emplace(it->second, &b).second) {
        throw Error(ErrorCode::InconsistentBlocks, "two blocks for one decision point");
      }
    }
    check_overlaps();
  }

  FlowGraph build() {
    FlowGraph g;
    g.doc_url = p_.doc_url;
    g.node_path = p_.node_path;
    if (!p_.context.empty()) g.title = p_.context.back().text;
    if (order_.empty()) throw Error(ErrorCode::EmptyInput, "procedure has no sentences");
    g_ = &g;
    auto region = build_region(0, order_.size());
    g.entry = region.entry;
    return g;
  }

 private:
  struct Exit {
    int node;
    EdgeLabel label;
  };
  struct Region {
    int entry = -1;
    std::vector<Exit> exits;
  };

  // A block whose decision lies inside another block must end inside it too. Blocks are keyed
  // by decision position, so `a` always starts first.
  void check_overlaps() const {
    for (auto a = blocks_.begin(); a != blocks_.end(); ++a) {
      const auto a_end = a->first + a->second->members.size();
      for (auto b = std::next(a); b != blocks_.end() && b->first <= a_end; ++b) {
        if (b->first + b->second->members.size() > a_end) {
          throw Error(ErrorCode::InconsistentBlocks, "a nested decision block runs past the block that contains it");
        }
      }
    }
  }

  int add_node(NodeKind kind, std::string text, SentencePos origin, NodeRole role) {
    FlowNode n;
    n.id = static_cast<int>(g_->nodes.size());
    n.kind = kind;
    n.text = std::move(text);
    n.step = origin.step;
    n.sentence = origin.sentence;
    n.role = role;
    g_->nodes.push_back(std::move(n));
    return g_->nodes.back().id;
  }

  void connect(const std::vector<Exit>& exits, int to) {
    for (const auto& e : exits) g_->edges.push_back({e.node, to, e.label});
  }

  const Sentence& sentence_at(std::size_t pos) const {
    const auto& sp = order_[pos];
    return p_.steps[sp.step].sentences[sp.sentence];
  }

  static std::string clean_fragment(std::string_view s) {
    auto t = std::string(trim(s));
    static const std::vector<std::string> kDangling = {"but", "and", "or", "then", "so"};
    bool changed = true;
    while (changed && !t.empty()) {
      changed = false;
      while (!t.empty() && (t.back() == ',' || t.back() == ';' || t.back() == ':' || t.back() == '.' ||
                            is_space_byte(static_cast<unsigned char>(t.back())))) {
        t.pop_back();
        changed = true;
      }
      for (const auto& w : kDangling) {
        if (t.size() > w.size() && to_lower(t.substr(t.size() - w.size())) == w &&
            is_space_byte(static_cast<unsigned char>(t[t.size() - w.size() - 1]))) {
          t.resize(t.size() - w.size());
          changed = true;
        }
      }
      while (!t.empty() && (t.front() == ',' || t.front() == ';' || is_space_byte(static_cast<unsigned char>(t.front())))) {
        t.erase(t.begin());
        changed = true;
      }
    }
    return t;
  }

  Region build_region(std::size_t begin, std::size_t end) {
    Region region;
    std::vector<Exit> pending;
    auto attach = [&](int entry, std::vector<Exit> exits) {
      if (region.entry < 0) region.entry = entry;
      connect(pending, entry);
      pending = std::move(exits);
    };
    std::size_t i = begin;
    while (i < end) {
      const auto origin = order_[i];
      auto bt = blocks_.find(i);
      if (bt == blocks_.end()) {
        const int n = add_node(NodeKind::Instruction, sentence_at(i).text, origin, NodeRole::Sentence);
        attach(n, {{n, EdgeLabel::Next}});
        ++i;
        continue;
      }
      const DecisionBlock& b = *bt->second;
      const auto& split = b.decision.split;
      const auto& text = sentence_at(i).text;
      // Members limited to the enclosing region.
      const std::size_t count = std::min(b.members.size(), end - i - 1);
      std::size_t true_count = 0;
      while (true_count < count && b.members[true_count].branch == Branch::True) ++true_count;

      // Text outside condition and effect, e.g. "Swap the drive for the correct one but".
      const auto lo = std::min(split.condition_span.begin, split.effect_span.begin);
      const auto hi = std::max(split.condition_span.end, split.effect_span.end);
      std::string prefix;
      if (split.effect_span.begin < split.condition_span.begin) {
        prefix = clean_fragment(std::string_view(text).substr(0, lo));
      } else {
        // Fronted conditional: text before the trigger word, if any.
        const detail::SentenceView v(text);
        if (split.trigger_index < v.words()) {
          prefix = clean_fragment(std::string_view(text).substr(0, v.word_lexeme(split.trigger_index).span.begin));
        }
      }
      if (!tokenize(prefix).empty()) {
        const int pn = add_node(NodeKind::Instruction, prefix, origin, NodeRole::Prefix);
        attach(pn, {{pn, EdgeLabel::Next}});
      }
      std::string suffix = hi < text.size() ? clean_fragment(std::string_view(text).substr(hi)) : std::string();
      if (tokenize(suffix).empty()) suffix.clear();
      const auto suffix_words = tokenize(suffix);
      const bool suffix_false =
          !suffix.empty() && (suffix_words.front() == "or" || suffix_words.front() == "otherwise" ||
                              suffix_words.front() == "else");

      const int d = add_node(NodeKind::Decision, split.condition, origin, NodeRole::Sentence);
      const auto q = generate_question(b.decision);
      g_->nodes[d].question = q.text;
      g_->nodes[d].yes_branch = q.yes_branch;
      std::vector<Exit> exits;

      const int e = add_node(NodeKind::Instruction, split.effect, origin, NodeRole::Effect);
      g_->edges.push_back({d, e, EdgeLabel::True});
      std::vector<Exit> true_exits{{e, EdgeLabel::Next}};
      if (!suffix.empty() && !suffix_false) {
        const int sn = add_node(NodeKind::Instruction, suffix, origin, NodeRole::Suffix);
        connect(true_exits, sn);
        true_exits = {{sn, EdgeLabel::Next}};
      }
      if (true_count > 0) {
        auto r = build_region(i + 1, i + 1 + true_count);
        connect(true_exits, r.entry);
        true_exits = std::move(r.exits);
      }
      exits.insert(exits.end(), true_exits.begin(), true_exits.end());

      std::vector<Exit> false_exits{{d, EdgeLabel::False}};
      if (suffix_false) {
        const int sn = add_node(NodeKind::Instruction, suffix, origin, NodeRole::Suffix);
        connect(false_exits, sn);
        false_exits = {{sn, EdgeLabel::Next}};
      }
      if (count > true_count) {
        auto r = build_region(i + 1 + true_count, i + 1 + count);
        connect(false_exits, r.entry);
        false_exits = std::move(r.exits);
      }
      exits.insert(exits.end(), false_exits.begin(), false_exits.end());

      if (region.entry < 0) region.entry = d;
      connect(pending, d);  // after a prefix node, pending is that node
      pending = std::move(exits);
      i += 1 + count;
    }
    region.exits = std::move(pending);
    return region;
  }

  const Procedure& p_;
  std::vector<SentencePos> order_;
  std::map<SentencePos, std::size_t> position_;
  std::map<std::size_t, const DecisionBlock*> blocks_;  // by decision position
  FlowGraph* g_ = nullptr;
};

}  // namespace detail

// Throws INCONSISTENT_BLOCKS when blocks do not nest.
inline FlowGraph build_flow_graph(const Procedure& p, const std::vector<DecisionBlock>& blocks) {
  return detail::FlowBuilder(p, blocks).build();
}

// Structural checks: edge multiplicities per node kind, acyclicity and reachability from the
// entry. Returns a description of every violation.
inline std::vector<std::string> validate_flow_graph(const FlowGraph& g) {
  std::vector<std::string> problems;
  const auto n = g.nodes.size();
  if (n == 0) return {"graph has no nodes"};
  for (std::size_t i = 0; i < n; ++i) {
    if (g.nodes[i].id != static_cast<int>(i)) problems.push_back("node ids are not dense");
  }
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : g.edges) {
    if (e.from < 0 || e.to < 0 || static_cast<std::size_t>(e.from) >= n || static_cast<std::size_t>(e.to) >= n) {
      problems.push_back("edge references a missing node");
      continue;
    }
    adj[e.from].push_back(e.to);
  }
  for (const auto& node : g.nodes) {
    int next = 0, t = 0, f = 0;
    for (const auto& e : g.out_edges(node.id)) {
      next += e.label == EdgeLabel::Next;
      t += e.label == EdgeLabel::True;
      f += e.label == EdgeLabel::False;
    }
    if (node.kind == NodeKind::Decision && (next > 0 || t > 1 || f > 1)) {
      problems.push_back("decision node " + std::to_string(node.id) + " has invalid out-edges");
    }
    if (node.kind == NodeKind::Instruction && (t > 0 || f > 0 || next > 1)) {
      problems.push_back("instruction node " + std::to_string(node.id) + " has invalid out-edges");
    }
  }
  // Cycle check and reachability by DFS colouring.
  std::vector<int> colour(n, 0);
  bool cyclic = false;
  std::vector<std::pair<int, std::size_t>> stack;
  if (g.entry >= 0 && static_cast<std::size_t>(g.entry) < n) {
    stack.push_back({g.entry, 0});
    colour[g.entry] = 1;
    while (!stack.empty()) {
      auto& [v, k] = stack.back();
      if (k < adj[v].size()) {
        const int w = adj[v][k++];
        if (colour[w] == 1) cyclic = true;
        if (colour[w] == 0) {
          colour[w] = 1;
          stack.push_back({w, 0});
        }
      } else {
        colour[v] = 2;
        stack.pop_back();
      }
    }
  } else {
    problems.push_back("entry node missing");
  }
  if (cyclic) problems.push_back("graph has a cycle");
  for (std::size_t i = 0; i < n; ++i) {
    if (colour[i] == 0) problems.push_back("node " + std::to_string(i) + " unreachable from entry");
  }
  return problems;
}

inline nlohmann::json flow_graph_to_json(const FlowGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    nlohmann::json j = {{"id", n.id},
                        {"kind", to_string(n.kind)},
                        {"text", n.text},
                        {"origin", {{"step", n.step}, {"sentence", n.sentence}, {"role", to_string(n.role)}}}};
    if (n.question) j["question"] = *n.question;
    if (n.yes_branch) j["yes_branch"] = to_string(*n.yes_branch);
    nodes.push_back(std::move(j));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"label", to_string(e.label)}});
  return {{"version", 1},
          {"source", {{"url", g.doc_url}, {"node_path", g.node_path}}},
          {"title", g.title},
          {"entry", g.entry},
          {"nodes", nodes},
          {"edges", edges}};
}

inline FlowGraph flow_graph_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::SchemaError, "unsupported flow graph version");
    FlowGraph g;
    g.doc_url = j.at("source").at("url").get<std::string>();
    g.node_path = j.at("source").at("node_path").get<NodePath>();
    g.title = j.value("title", std::string());
    g.entry = j.at("entry").get<int>();
    for (const auto& jn : j.at("nodes")) {
      FlowNode n;
      n.id = jn.at("id").get<int>();
      const auto kind = jn.at("kind").get<std::string>();
      if (kind != "INSTRUCTION" && kind != "DECISION") throw Error(ErrorCode::SchemaError, "unknown node kind " + kind);
      n.kind = kind == "DECISION" ? NodeKind::Decision : NodeKind::Instruction;
      n.text = jn.at("text").get<std::string>();
      if (jn.contains("question")) n.question = jn.at("question").get<std::string>();
      if (jn.contains("yes_branch")) n.yes_branch = jn.at("yes_branch") == "FALSE" ? Branch::False : Branch::True;
      if (jn.contains("origin")) {
        n.step = jn.at("origin").value("step", std::size_t{0});
        n.sentence = jn.at("origin").value("sentence", std::size_t{0});
        const auto role = jn.at("origin").value("role", std::string("SENTENCE"));
        n.role = role == "EFFECT" ? NodeRole::Effect
                 : role == "PREFIX" ? NodeRole::Prefix
                 : role == "SUFFIX" ? NodeRole::Suffix
                                    : NodeRole::Sentence;
      }
      g.nodes.push_back(std::move(n));
    }
    for (const auto& je : j.at("edges")) {
      const auto label = je.at("label").get<std::string>();
      EdgeLabel l = EdgeLabel::Next;
      if (label == "TRUE") l = EdgeLabel::True;
      else if (label == "FALSE") l = EdgeLabel::False;
      else if (label != "NEXT") throw Error(ErrorCode::SchemaError, "unknown edge label " + label);
      g.edges.push_back({je.at("from").get<int>(), je.at("to").get<int>(), l});
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed flow graph: ") + e.what());
  }
}

// Candidate -> procedure -> blocks -> graph, with default rules.
inline FlowGraph mine_flow(const ListCandidate& cand, const BlockRules& rules = {}, double sim_threshold = 0.7,
                           const ImperativeLexicon& lex = ImperativeLexicon::builtin()) {
  const auto p = procedure_from_candidate(cand);
  return build_flow_graph(p, extract_all_blocks(p, rules, sim_threshold, lex));
}

}  // namespace procmine
