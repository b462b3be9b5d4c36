#pragma once

// Sentence-level analyses approximating a slot-grammar parse with lexicon and position rules:
// imperative detection, conditional (decision point) detection with condition/effect
// splitting, negation detection and token-set similarity.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "procmine/error.hpp"
#include "procmine/lexicon.hpp"
#include "procmine/text.hpp"

namespace procmine {

struct ImperativeAnnotation {
  std::string verb;
  std::size_t token_index = 0;

  bool operator==(const ImperativeAnnotation&) const = default;
};

enum class Trigger { If, When, Unless };
enum class Polarity { Direct, Inverted };

struct ConditionalSplit {
  Trigger trigger = Trigger::If;
  std::size_t trigger_index = 0;  // word token position
  std::string condition;
  std::string effect;
  Polarity polarity = Polarity::Direct;
  bool condition_negated = false;
  // Byte ranges inside the sentence text.
  CharSpan condition_span;
  CharSpan effect_span;
};

struct ConditionEffect {
  std::string condition;
  std::string effect;
  CharSpan condition_span;
  CharSpan effect_span;
  std::size_t condition_first_word = 0;  // word index range [first, last]
  std::size_t condition_last_word = 0;
  std::size_t effect_first_word = 0;
  std::size_t effect_last_word = 0;
};

inline std::string_view to_string(Trigger t) {
  switch (t) {
    case Trigger::If: return "IF";
    case Trigger::When: return "WHEN";
    case Trigger::Unless: return "UNLESS";
  }
  return "IF";
}

namespace detail {

using WordSet = std::set<std::string, std::less<>>;

inline const WordSet& subject_words() {
  static const WordSet s = {"i", "you", "he", "she", "it", "we", "they", "there", "one", "someone", "nobody"};
  return s;
}

inline const WordSet& determiners() {
  static const WordSet s = {"the",  "a",    "an",   "this",  "that",    "these", "those", "your",
                            "my",   "our",  "their", "its",  "his",     "her",   "all",   "both",
                            "each", "every", "some", "any",  "another", "it",    "them",  "him",
                            "me",   "us",   "no",   "either", "neither", "one",  "two",   "three"};
  return s;
}

inline const WordSet& auxiliaries() {
  static const WordSet s = {"is",    "are",   "was",    "were",   "be",     "been",   "am",    "has",
                            "have",  "had",   "can",    "could",  "will",   "would",  "should", "shall",
                            "must",  "may",   "might",  "does",   "do",     "did",    "cannot", "isn't",
                            "aren't", "wasn't", "weren't", "doesn't", "don't", "didn't", "can't", "won't",
                            "hasn't", "haven't", "shouldn't", "couldn't", "wouldn't", "mustn't"};
  return s;
}

inline const WordSet& particles() {
  static const WordSet s = {"off", "on", "up", "down", "out", "in", "over", "back", "away", "through", "into"};
  return s;
}

inline const WordSet& object_prepositions() {
  static const WordSet s = {"for", "to", "with", "from", "at", "until", "about", "into", "onto", "by", "through"};
  return s;
}

inline const WordSet& leading_adverbs() {
  static const WordSet s = {"then",       "first",     "next",       "also",     "now",       "finally",
                            "please",     "optionally", "again",     "afterwards", "afterward", "second",
                            "secondly",   "third",     "lastly",     "immediately", "simply",   "carefully",
                            "additionally", "alternatively", "subsequently", "quickly", "manually", "just"};
  return s;
}

inline const WordSet& fronting_prepositions() {
  static const WordSet s = {"in",    "on",     "from",  "at",     "under", "within", "for",  "using",
                            "with",  "by",     "during", "via",   "through", "inside", "after", "before",
                            "once",  "while",  "until", "upon",   "as",    "since",  "because", "whenever",
                            "where", "to",     "if",    "when",   "unless", "although", "though"};
  return s;
}

// Verbs that also commonly head a noun phrase ("power supply", "drive bay").
inline const WordSet& noun_verb_ambiguous() {
  static const WordSet s = {
      "power",  "supply",  "light",   "drive",  "cable",   "file",    "log",     "test",    "check",  "display",
      "list",   "name",    "order",   "place",  "process", "record",  "report",  "set",     "state",  "switch",
      "update", "view",    "type",    "key",    "page",    "point",   "plan",    "back",    "base",   "board",
      "book",   "head",    "label",   "link",   "map",     "mark",    "note",    "own",     "post",   "program",
      "queue",  "reset",   "return",  "schedule", "service", "stage", "support", "tab",     "tag",    "target",
      "work",   "cat",     "cd",      "rm",     "cp",      "mv",      "cast",    "design",  "document", "email",
      "flag",   "flash",   "format",  "group",  "input",   "issue",   "lock",    "lead",    "match",  "mirror",
      "monitor", "patch",  "pause",   "print",  "query",   "release", "request", "review",  "route",  "scan",
      "search", "sort",    "store",   "stream", "track",   "trigger", "upgrade", "upload",  "download", "backup",
      "clone",  "count",   "cover",   "cross",  "cycle",   "dial",    "double",  "end",     "export", "import",
      "filter", "hit",     "load",    "mount",  "pair",    "paste",   "ping",    "plug",    "poll",   "prompt",
      "reach",  "repair",  "reply",   "rollback", "setup", "shift",   "ship",    "sign",    "snap",   "split",
      "stay",   "swap",    "sync",    "tap",    "tick",    "trim",    "turn",    "use",     "change", "access",
      "control", "block",  "call",    "need",   "want",    "step",    "rate",    "start",   "stop",   "play",
      "crash",  "boot",    "code",    "charge", "chart",   "chat",    "claim",   "comment", "commit", "contact",
      "credit", "deal",    "default", "demand", "detail",  "dim",     "fit",     "free",    "guide",  "help",
      "hold",   "host",    "hover",   "job",    "jump",    "lay",     "limit",   "look",    "net",    "pack",
      "pay",    "pick",    "press",   "pull",   "push",    "read",    "reboot",  "restart", "result", "run",
      "save",   "scroll",  "share",   "show",   "size",    "slide",   "spot",    "stack",   "stand",  "step",
      "task",   "tie",     "top",     "touch",  "trace",   "train",   "transfer", "trust",  "value",  "walk",
      "wait",   "watch",   "wire",    "wrap",   "zip",     "zoom",    "attempt", "batch",   "bundle", "burn",
      "capture", "catch",  "clip",    "copy",   "cut",     "delay",   "drag",    "draw",    "drop",   "edit",
      "experiment", "fetch", "fill",  "finish", "fix",     "fold",    "force",   "handle",  "hang",   "input",
      "judge",  "kill",    "land",    "launch", "lift",    "list",    "mail",    "measure", "merge",  "move",
      "object", "open",    "output",  "part",   "pin",     "plot",    "port",    "position", "preview", "progress",
      "purchase", "raise", "refresh", "remove", "rename",  "repeat",  "reserve", "reverse", "rise",   "rotate",
      "sample", "seal",    "secure",  "shut",   "sleep",   "slot",    "spread",  "square",  "stamp",  "status",
      "strip",  "suspend", "tape",    "tool",   "trip",    "try",     "tune",    "vote",    "wake",   "witness"};
  return s;
}

inline const WordSet& complement_verbs() {
  static const WordSet s = {"check",      "checks",   "checking",  "checked",    "see",      "sees",
                            "seeing",     "saw",      "determine", "determines", "determining", "determined",
                            "verify",     "verifies", "verifying", "verified",   "know",     "knows",
                            "knowing",    "knew",     "ask",       "asks",       "asking",   "asked",
                            "wonder",     "wonders",  "wondering", "wondered",   "confirm",  "confirms",
                            "confirming", "find",     "test",      "tests",      "testing",  "examine",
                            "investigate", "decide",  "establish", "tell",       "sure"};
  return s;
}

inline const WordSet& wh_words() {
  static const WordSet s = {"what", "why", "how", "who", "whom", "which", "where", "when", "whose"};
  return s;
}

inline const WordSet& elliptical_condition_words() {
  static const WordSet s = {"necessary", "needed",  "required",  "possible", "applicable",
                            "appropriate", "desired", "available", "any",     "present", "wanted"};
  return s;
}

inline bool contains(const WordSet& s, std::string_view w) { return s.find(w) != s.end(); }

inline bool has_nt_clitic(std::string_view w) {
  return (w.size() > 3 && w.substr(w.size() - 3) == "n't") ||
         (w.size() > 5 && w.substr(w.size() - 5) == "n\xE2\x80\x99t");
}

inline bool is_finite_verb_like(std::string_view w) { return contains(auxiliaries(), w) || has_nt_clitic(w); }

// Lexemes of a sentence with an index from word position to lexeme position.
class SentenceView {
 public:
  explicit SentenceView(std::string_view text) : text_(text), lexemes_(lex(text)) {
    for (std::size_t i = 0; i < lexemes_.size(); ++i) {
      if (lexemes_[i].is_word) word_lexeme_.push_back(i);
    }
  }

  std::size_t words() const { return word_lexeme_.size(); }
  const std::string& word(std::size_t k) const { return lexemes_[word_lexeme_[k]].text; }
  const Lexeme& word_lexeme(std::size_t k) const { return lexemes_[word_lexeme_[k]]; }
  std::size_t lexeme_index(std::size_t k) const { return word_lexeme_[k]; }
  const std::vector<Lexeme>& lexemes() const { return lexemes_; }
  std::string_view text() const { return text_; }

  std::string word_or_empty(std::size_t k) const { return k < words() ? word(k) : std::string(); }

  // Punctuation lexeme directly after word k, or empty.
  std::string punct_after(std::size_t k) const {
    const auto li = word_lexeme_[k] + 1;
    if (li < lexemes_.size() && !lexemes_[li].is_word) return lexemes_[li].text;
    return {};
  }

  std::string punct_before(std::size_t k) const {
    const auto li = word_lexeme_[k];
    if (li > 0 && !lexemes_[li - 1].is_word) return lexemes_[li - 1].text;
    return {};
  }

  // True when no punctuation separates words a and b (a < b).
  bool adjacent_words(std::size_t a, std::size_t b) const {
    for (auto li = word_lexeme_[a] + 1; li < word_lexeme_[b]; ++li) {
      if (!lexemes_[li].is_word && lexemes_[li].text != "'" && lexemes_[li].text != "\"") return false;
    }
    return true;
  }

  bool word_is_capitalized(std::size_t k) const {
    const auto& lx = word_lexeme(k);
    const auto c = static_cast<unsigned char>(text_[lx.span.begin]);
    return c >= 'A' && c <= 'Z';
  }

 private:
  std::string_view text_;
  std::vector<Lexeme> lexemes_;
  std::vector<std::size_t> word_lexeme_;
};

// Can word k be read as an imperative verb heading its clause? `verb_slot` is set when the
// syntax already demands a verb ("do not remove"), which lifts the noun/verb ambiguity check.
inline bool verb_reading_at(const SentenceView& v, std::size_t k, const ImperativeLexicon& lex,
                            bool verb_slot = false) {
  if (k >= v.words()) return false;
  const auto& w = v.word(k);
  if (!lex.contains(w)) return false;
  const auto after = v.punct_after(k);
  if (after == ":") return false;  // "Note: ..." is a label
  const bool has_next = k + 1 < v.words() && after.empty();
  if (has_next) {
    const auto& next = v.word(k + 1);
    if (is_finite_verb_like(next)) return false;  // "Restart is required"
    if (k + 2 < v.words() && v.adjacent_words(k + 1, k + 2) && !contains(determiners(), next) &&
        !contains(particles(), next) && is_finite_verb_like(v.word(k + 2))) {
      return false;  // "Power supplies are ..."
    }
  }
  if (contains(noun_verb_ambiguous(), w) && has_next && !verb_slot) {
    static const WordSet kComplement = {"if", "whether", "that", "more", "how", "what", "which"};
    const auto& next = v.word(k + 1);
    bool object_like = contains(determiners(), next) || contains(particles(), next) ||
                       std::isdigit(static_cast<unsigned char>(next[0])) || v.word_is_capitalized(k + 1) ||
                       contains(leading_adverbs(), next) || contains(object_prepositions(), next) ||
                       contains(kComplement, next);
    // "Press and hold the button": the coordinated verb vouches for the first one.
    if (!object_like && (next == "and" || next == "or") && k + 2 < v.words() && v.adjacent_words(k + 1, k + 2) &&
        v.word(k + 2) != w) {
      object_like = verb_reading_at(v, k + 2, lex);
    }
    if (!object_like) return false;
  }
  return true;
}

inline std::size_t skip_adverbs(const SentenceView& v, std::size_t k) {
  while (k < v.words() && contains(leading_adverbs(), v.word(k))) {
    // "Then, restart" / "First restart"; stop if the adverb is itself the last word.
    if (k + 1 >= v.words()) break;
    ++k;
  }
  return k;
}

// Does a main clause plausibly start at word k (after an optional "then")?
inline std::optional<std::size_t> main_clause_at(const SentenceView& v, std::size_t k, const ImperativeLexicon& lex) {
  if (k >= v.words()) return std::nullopt;
  if (v.word(k) == "then" && k + 1 < v.words()) ++k;
  const auto& w = v.word(k);
  static const WordSet kNotSubject = {"and", "or", "but", "nor", "if", "when", "unless", "such", "as", "e.g",
                                      "i.e", "for", "etc", "which", "who", "whose", "where", "whether",
                                      "because", "although", "while", "including", "especially", "not"};
  if (contains(kNotSubject, w)) return std::nullopt;
  if (verb_reading_at(v, k, lex)) return k;
  if (w == "do" || w == "don't" || w == "never") {
    if (k + 1 < v.words() && (v.word(k + 1) == "not" || w != "do") &&
        verb_reading_at(v, k + (w == "do" ? 2 : 1), lex, true)) {
      return k;
    }
  }
  if (contains(subject_words(), w) && k + 1 < v.words() && v.adjacent_words(k, k + 1)) return k;
  for (std::size_t j = k + 1; j < v.words() && j <= k + 5; ++j) {
    if (!v.adjacent_words(j - 1, j)) break;
    if (is_finite_verb_like(v.word(j))) return k;
  }
  return std::nullopt;
}

struct Boundary {
  std::size_t condition_last;  // last word of the condition
  std::size_t effect_first;    // first word of the effect
};

// Boundary between a fronted condition (starting after the trigger at t) and its main clause.
inline std::optional<Boundary> fronted_boundary(const SentenceView& v, std::size_t t, const ImperativeLexicon& lex) {
  if (t + 1 >= v.words()) return std::nullopt;
  // Comma (or dash) followed by a plausible main clause.
  for (std::size_t k = t + 1; k + 1 < v.words(); ++k) {
    const auto p = v.punct_after(k);
    if (p != "," && p != ";" && p != ":" && p != "-") continue;
    if (p == ";" || p == ":") {
      if (auto start = main_clause_at(v, k + 1, lex)) return Boundary{k, *start};
      continue;
    }
    if (auto start = main_clause_at(v, k + 1, lex)) return Boundary{k, *start};
  }
  // "If X then Y" without a comma.
  for (std::size_t k = t + 2; k + 1 < v.words(); ++k) {
    if (v.word(k) == "then" && v.adjacent_words(k - 1, k)) return Boundary{k - 1, k + 1};
  }
  // "If X do Y" without a comma: an unambiguous imperative with an object.
  static const WordSet kBlockedBefore = {"to", "not", "and", "or", "the", "a", "an", "will", "can", "could",
                                         "would", "should", "must", "may", "might", "does", "do", "did", "is",
                                         "are", "was", "were", "be", "been", "has", "have", "had", "you", "we",
                                         "they", "it", "i", "he", "she", "that", "which", "who", "please"};
  for (std::size_t k = t + 3; k + 1 < v.words(); ++k) {
    if (!v.adjacent_words(k - 1, k)) continue;
    if (contains(kBlockedBefore, v.word(k - 1))) continue;
    if (!lex.contains(v.word(k))) continue;
    const auto& next = v.word(k + 1);
    if (!v.adjacent_words(k, k + 1)) continue;
    if (contains(determiners(), next) || contains(particles(), next)) {
      if (verb_reading_at(v, k, lex)) return Boundary{k - 1, k};
    }
  }
  return std::nullopt;
}

inline std::size_t lexeme_end_trimmed(const SentenceView& v) {
  // End of the sentence without trailing terminal punctuation and whitespace.
  auto end = v.text().size();
  while (end > 0) {
    const char c = v.text()[end - 1];
    if (c == '.' || c == '!' || c == '?' || c == ';' || c == ',' || c == ':' ||
        is_space_byte(static_cast<unsigned char>(c))) {
      --end;
    } else {
      break;
    }
  }
  return end;
}

// True when trigger word t starts a clause: only adverbs/conjunctions or clause punctuation
// precede it.
inline bool trigger_starts_clause(const SentenceView& v, std::size_t t) {
  static const WordSet kIntro = {"then", "and", "but", "or", "so", "otherwise", "also", "however", "next",
                                 "first", "finally", "now", "else", "only", "even", "but", "and"};
  const auto before = v.punct_before(t);
  if (before == "," || before == ";" || before == ":" || before == "(" || before == "-") return true;
  std::size_t k = t;
  while (k > 0) {
    --k;
    if (!contains(kIntro, v.word(k))) return false;
    const auto p = v.punct_before(k);
    if (p == "," || p == ";" || p == ":") return true;
  }
  return true;
}

}  // namespace detail

// Splits a sentence at the subordinator at word position `trigger_index` into the condition
// and the governing clause. Throws MALFORMED_CLAUSE when either side is empty.
inline ConditionEffect split_condition_effect(const Sentence& s, std::size_t trigger_index,
                                              const ImperativeLexicon& lex = ImperativeLexicon::builtin()) {
  const detail::SentenceView v(s.text);
  const auto t = trigger_index;
  if (t >= v.words()) throw Error(ErrorCode::MalformedClause, "trigger index out of range");
  auto make_span = [&](std::size_t first_word, std::size_t last_word) {
    return CharSpan{v.word_lexeme(first_word).span.begin, v.word_lexeme(last_word).span.end};
  };
  ConditionEffect out;

  if (detail::trigger_starts_clause(v, t)) {
    if (auto b = detail::fronted_boundary(v, t, lex)) {
      if (b->condition_last <= t || b->effect_first >= v.words()) {
        throw Error(ErrorCode::MalformedClause, "empty condition or effect in '" + s.text + "'");
      }
      out.condition_first_word = t + 1;
      out.condition_last_word = b->condition_last;
      out.effect_first_word = b->effect_first;
      out.effect_last_word = v.words() - 1;
      out.condition_span = make_span(t + 1, b->condition_last);
      out.effect_span = {v.word_lexeme(b->effect_first).span.begin,
                         std::max(detail::lexeme_end_trimmed(v), v.word_lexeme(b->effect_first).span.end)};
      out.condition = s.text.substr(out.condition_span.begin, out.condition_span.size());
      out.effect = s.text.substr(out.effect_span.begin, out.effect_span.size());
      return out;
    }
  }

  // Trailing conditional: the condition runs to the end of its clause, the effect is the
  // nearest clause before the trigger.
  if (t == 0 || t + 1 >= v.words()) {
    throw Error(ErrorCode::MalformedClause, "no main clause in '" + s.text + "'");
  }
  std::size_t cond_last = v.words() - 1;
  for (std::size_t k = t + 1; k + 1 < v.words(); ++k) {
    const auto p = v.punct_after(k);
    if (p == ";") {
      cond_last = k;
      break;
    }
    if (p == ",") {
      const auto& next = v.word(k + 1);
      if (next == "or" || next == "and" || next == "but" || next == "otherwise" || next == "then" ||
          detail::main_clause_at(v, k + 1, lex)) {
        cond_last = k;
        break;
      }
    }
  }
  std::size_t eff_first = 0;
  for (std::size_t k = 1; k < t; ++k) {
    const auto& w = v.word(k);
    const auto before = v.punct_before(k);
    if (before == ";") eff_first = k;
    if (w == "but" || w == "however") eff_first = k + 1;
    if ((w == "and" || w == "or" || w == "then") && k + 1 < t && detail::verb_reading_at(v, k + 1, lex)) {
      eff_first = k + 1;
    }
    if (w == "then" && before == ",") eff_first = k + 1;
  }
  if (eff_first < t && v.word(eff_first) == "then") ++eff_first;
  if (eff_first >= t) throw Error(ErrorCode::MalformedClause, "empty effect in '" + s.text + "'");
  const std::size_t eff_last = t - 1;
  out.condition_first_word = t + 1;
  out.condition_last_word = cond_last;
  out.effect_first_word = eff_first;
  out.effect_last_word = eff_last;
  out.condition_span = {v.word_lexeme(t + 1).span.begin,
                        cond_last == v.words() - 1
                            ? std::max(detail::lexeme_end_trimmed(v), v.word_lexeme(cond_last).span.end)
                            : v.word_lexeme(cond_last).span.end};
  out.effect_span = make_span(eff_first, eff_last);
  out.condition = s.text.substr(out.condition_span.begin, out.condition_span.size());
  out.effect = s.text.substr(out.effect_span.begin, out.effect_span.size());
  return out;
}

inline bool detect_negation(std::string_view condition) {
  static const detail::WordSet kNegations = {"not", "no", "never", "cannot", "n't", "without", "unable", "fails", "fail"};
  for (const auto& tok : tokenize(condition)) {
    if (detail::contains(kNegations, tok) || detail::has_nt_clitic(tok)) return true;
  }
  return false;
}

inline bool is_question(const Sentence& s) {
  const detail::SentenceView v(s.text);
  auto text = trim(s.text);
  while (!text.empty() && (text.back() == '"' || text.back() == '\'' || text.back() == ')')) text.remove_suffix(1);
  if (!text.empty() && text.back() == '?') return true;
  if (v.words() >= 2 && detail::contains(detail::wh_words(), v.word(0)) &&
      detail::is_finite_verb_like(v.word(1))) {
    return true;
  }
  return false;
}

// A decision point: if/when/unless heading a subordinate clause attached to a main clause.
// Questions, complement uses ("Check if ...") and elliptical conditions ("if necessary") are
// rejected.
inline std::optional<ConditionalSplit> detect_conditional(const Sentence& s,
                                                          const ImperativeLexicon& lex = ImperativeLexicon::builtin()) {
  if (is_question(s)) return std::nullopt;
  const detail::SentenceView v(s.text);
  for (std::size_t t = 0; t < v.words(); ++t) {
    const auto& w = v.word(t);
    Trigger trigger;
    if (w == "if") trigger = Trigger::If;
    else if (w == "when") trigger = Trigger::When;
    else if (w == "unless") trigger = Trigger::Unless;
    else continue;

    if (t > 0 && v.adjacent_words(t - 1, t)) {
      const auto& prev = v.word(t - 1);
      if (detail::contains(detail::complement_verbs(), prev) || prev == "as" || prev == "even") continue;
      // "Check to see if", "find out if"
      if ((prev == "out" || prev == "whether") && t > 1 && detail::contains(detail::complement_verbs(), v.word(t - 2))) {
        continue;
      }
    }
    if (t + 1 < v.words() && detail::contains(detail::elliptical_condition_words(), v.word(t + 1)) &&
        (t + 2 >= v.words() || !v.punct_after(t + 1).empty())) {
      continue;
    }
    try {
      auto ce = split_condition_effect(s, t, lex);
      if (trim(ce.condition).empty() || trim(ce.effect).empty()) continue;
      ConditionalSplit split;
      split.trigger = trigger;
      split.trigger_index = t;
      split.condition = std::move(ce.condition);
      split.effect = std::move(ce.effect);
      split.polarity = trigger == Trigger::Unless ? Polarity::Inverted : Polarity::Direct;
      split.condition_negated = detect_negation(split.condition);
      split.condition_span = ce.condition_span;
      split.effect_span = ce.effect_span;
      return split;
    } catch (const Error&) {
      continue;
    }
  }
  return std::nullopt;
}

// Imperatives by position: (R1) the verb heading the sentence's main clause, after leading
// adverbs, a fronted purpose clause ("To restart the PC, press ..."), a fronted conditional
// or a fronted prepositional phrase; (R2) verbs coordinated with an earlier imperative by
// "and", "or", "then" or "but".
inline std::vector<ImperativeAnnotation> detect_imperatives(const Sentence& s, const ImperativeLexicon& lex) {
  using namespace detail;
  const SentenceView v(s.text);
  std::vector<ImperativeAnnotation> out;
  if (v.words() == 0) return out;

  auto try_clause_start = [&](std::size_t k) -> bool {
    k = skip_adverbs(v, k);
    if (k >= v.words()) return false;
    // "Do not remove", "Don't remove", "Never remove": the imperative is the negated verb.
    bool negated = true;
    if (v.word(k) == "do" && k + 1 < v.words() && v.word(k + 1) == "not") k += 2;
    else if (v.word(k) == "don't" || v.word(k) == "don\xE2\x80\x99t" || v.word(k) == "never") k += 1;
    else negated = false;
    if (k >= v.words()) return false;
    if (!verb_reading_at(v, k, lex, negated)) return false;
    if (std::none_of(out.begin(), out.end(), [&](const auto& a) { return a.token_index == k; })) {
      out.push_back({v.word(k), k});
    }
    return true;
  };

  // R1 at the sentence start, or after a fronted clause.
  std::size_t start = skip_adverbs(v, 0);
  // "Important: Read the ..." starts after the label.
  static const WordSet kLabels = {"note", "important", "tip", "attention", "caution", "warning", "notice"};
  if (start + 1 < v.words() && contains(kLabels, v.word(start)) && v.punct_after(start) == ":") {
    start = skip_adverbs(v, start + 1);
  }
  const auto& first = v.word(start);
  bool found = false;
  if (first == "to" || (first == "in" && v.word_or_empty(start + 1) == "order")) {
    for (std::size_t k = start + 1; k + 1 < v.words(); ++k) {
      if (v.punct_after(k) == ",") {
        found = try_clause_start(k + 1);
        break;
      }
    }
  } else if (first == "if" || first == "when" || first == "unless" || first == "once" || first == "after" ||
             first == "before" || first == "while" || first == "until" || first == "whenever" || first == "as" ||
             first == "since" || first == "because") {
    if (auto b = fronted_boundary(v, start, lex)) found = try_clause_start(b->effect_first);
  } else if (contains(fronting_prepositions(), first) && !lex.contains(first)) {
    for (std::size_t k = start + 1; k + 1 < v.words(); ++k) {
      if (v.punct_after(k) == ",") {
        found = try_clause_start(k + 1);
        break;
      }
    }
  } else {
    found = try_clause_start(start);
  }

  // Further clauses after ';'.
  for (std::size_t k = 1; k < v.words(); ++k) {
    if (v.punct_before(k) == ";") found = try_clause_start(k) || found;
  }

  // R2: coordinated verbs to the right of an imperative.
  if (!out.empty()) {
    const auto first_idx = std::min_element(out.begin(), out.end(), [](const auto& a, const auto& b) {
                             return a.token_index < b.token_index;
                           })->token_index;
    for (std::size_t k = first_idx + 1; k < v.words(); ++k) {
      const auto& w = v.word(k);
      bool coordinated = false;
      if (k >= 1) {
        const auto& prev = v.word(k - 1);
        const bool tight = v.adjacent_words(k - 1, k);
        if (tight && (prev == "and" || prev == "or")) coordinated = true;
        if (tight && (prev == "then" || prev == "but")) coordinated = true;
      }
      if (!coordinated || !lex.contains(w)) continue;
      if (!verb_reading_at(v, k, lex)) continue;
      if (std::none_of(out.begin(), out.end(), [&](const auto& a) { return a.token_index == k; })) {
        out.push_back({w, k});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.token_index < b.token_index; });
  (void)found;
  return out;
}

// Cosine similarity of binary token-presence vectors.
inline double similarity(std::string_view a, std::string_view b) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() || sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.contains(t) ? 1 : 0;
  const double score = static_cast<double>(common) / std::sqrt(static_cast<double>(sa.size() * sb.size()));
  return std::min(1.0, score);
}

}  // namespace procmine
