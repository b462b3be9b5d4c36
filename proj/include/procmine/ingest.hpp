#pragma once

// List candidates: every ol/ul of a scrubbed page together with its items and the sentences
// that introduce it.

#include <algorithm>
#include <deque>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "procmine/error.hpp"
#include "procmine/html.hpp"
#include "procmine/text.hpp"

namespace procmine {

enum class ListKind { Ordered, Unordered };

struct ListItem {
  std::string text;
  std::vector<Sentence> sentences;
  std::vector<NodePath> sublist_paths;
  // Index of every sentence that opens a new block (paragraph, line break, nested list item)
  // inside the item. Index 0 is never listed.
  std::vector<std::size_t> paragraph_breaks;

  bool operator==(const ListItem&) const = default;
};

struct ListCandidate {
  std::string doc_url;
  NodePath node_path;
  ListKind list_kind = ListKind::Unordered;
  std::vector<ListItem> items;
  std::vector<Sentence> context;  // spans refer to DocumentText::text
  int depth = 0;

  bool operator==(const ListCandidate&) const = default;
};

// Rendered text of a page: blocks separated by '\n', with the character range each element
// covers.
struct DocumentText {
  std::string text;
  std::vector<std::pair<NodePath, CharSpan>> element_spans;  // pre-order
};

namespace detail {

inline bool is_block_element(std::string_view tag) {
  static const std::set<std::string_view> kBlock = {
      "address", "article", "aside",   "blockquote", "br",     "caption", "dd",      "details", "div",
      "dl",      "dt",      "fieldset", "figcaption", "figure", "footer",  "form",    "h1",      "h2",
      "h3",      "h4",      "h5",      "h6",         "header", "hr",      "li",      "main",    "nav",
      "ol",      "p",       "pre",     "section",    "summary", "table",  "tbody",   "td",      "th",
      "thead",   "tfoot",   "tr",      "ul",         "body",   "html",    "option",  "select",  "menu"};
  return kBlock.contains(tag);
}

inline bool is_hidden_element(std::string_view tag) {
  return tag == "head" || tag == "script" || tag == "style" || tag == "title" || tag == "meta" ||
         tag == "noscript" || tag == "template" || tag == "link";
}

class TextRenderer {
 public:
  void block_boundary() {
    while (!out_.empty() && out_.back() == ' ') out_.pop_back();
    if (!out_.empty() && out_.back() != '\n') out_.push_back('\n');
  }

  void append_text(std::string_view s) {
    for (char c : s) {
      if (is_space_byte(static_cast<unsigned char>(c))) {
        if (!out_.empty() && out_.back() != ' ' && out_.back() != '\n') out_.push_back(' ');
      } else {
        out_.push_back(c);
      }
    }
  }

  std::size_t position() const { return out_.size(); }
  std::string& text() { return out_; }

 private:
  std::string out_;
};

inline void render(const DomNode& node, TextRenderer& r, std::vector<std::pair<NodePath, CharSpan>>* spans) {
  if (node.is_text()) {
    r.append_text(node.text);
    return;
  }
  if (is_hidden_element(node.tag)) return;
  const bool block = is_block_element(node.tag);
  if (block) r.block_boundary();
  const auto begin = r.position();
  std::size_t slot = 0;
  if (spans) {
    slot = spans->size();
    spans->push_back({node.node_path, {begin, begin}});
  }
  for (const auto& c : node.children) render(c, r, spans);
  if (block) r.block_boundary();
  if (spans) (*spans)[slot].second.end = r.position();
}

// Blocks of an li: '\n'-separated pieces of its rendered text.
inline std::vector<std::string> render_blocks(const DomNode& node) {
  TextRenderer r;
  for (const auto& c : node.children) render(c, r, nullptr);
  std::vector<std::string> blocks;
  std::string cur;
  for (char c : r.text()) {
    if (c == '\n') {
      if (auto t = trim(cur); !t.empty()) blocks.emplace_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (auto t = trim(cur); !t.empty()) blocks.emplace_back(t);
  return blocks;
}

inline void collect_direct_sublists(const DomNode& node, std::vector<NodePath>& out) {
  for (const auto& c : node.children) {
    if (c.is_list()) {
      out.push_back(c.node_path);
    } else if (!c.is_text()) {
      collect_direct_sublists(c, out);
    }
  }
}

}  // namespace detail

inline DocumentText linearize(const Document& doc) {
  detail::TextRenderer r;
  DocumentText out;
  detail::render(doc.root, r, &out.element_spans);
  r.block_boundary();
  out.text = std::move(r.text());
  if (!out.text.empty() && out.text.back() == '\n') out.text.pop_back();
  for (auto& [path, span] : out.element_spans) {
    span.begin = std::min(span.begin, out.text.size());
    span.end = std::min(span.end, out.text.size());
  }
  return out;
}

inline ListItem make_list_item(const DomNode& li) {
  ListItem item;
  const auto blocks = detail::render_blocks(li);
  for (const auto& block : blocks) {
    if (!item.text.empty()) item.text.push_back(' ');
    const auto offset = item.text.size();
    item.text += block;
    auto sentences = segment_sentences(block);
    if (sentences.empty()) continue;
    if (!item.sentences.empty()) item.paragraph_breaks.push_back(item.sentences.size());
    for (auto& s : sentences) {
      s.char_span.begin += offset;
      s.char_span.end += offset;
      item.sentences.push_back(std::move(s));
    }
  }
  detail::collect_direct_sublists(li, item.sublist_paths);
  return item;
}

namespace detail {

inline ListCandidate make_candidate(const Document& doc, const DomNode& list, int depth,
                                    const std::vector<Sentence>& outside_sentences, const CharSpan& list_span,
                                    std::size_t k) {
  ListCandidate cand;
  cand.doc_url = doc.url;
  cand.node_path = list.node_path;
  cand.list_kind = list.tag == "ol" ? ListKind::Ordered : ListKind::Unordered;
  cand.depth = depth;
  for (const auto& c : list.children) {
    if (c.tag == "li") cand.items.push_back(make_list_item(c));
  }
  if (cand.items.empty()) cand.items.push_back(make_list_item(list));
  // Context: last k sentences that end before the list starts.
  auto it = std::upper_bound(outside_sentences.begin(), outside_sentences.end(), list_span.begin,
                             [](std::size_t pos, const Sentence& s) { return pos < s.char_span.end; });
  const auto available = static_cast<std::size_t>(it - outside_sentences.begin());
  const auto take = std::min(k, available);
  cand.context.assign(it - static_cast<std::ptrdiff_t>(take), it);
  return cand;
}

}  // namespace detail

// Every ol/ul node in breadth-first order, each with the last `k` sentences of non-list text
// preceding it.
inline std::vector<ListCandidate> extract_list_candidates(const Document& doc, std::size_t k = 1) {
  const auto rendered = linearize(doc);
  std::vector<CharSpan> list_spans;
  std::vector<std::pair<NodePath, CharSpan>> list_span_by_path;
  for (const auto& [path, span] : rendered.element_spans) {
    const auto* node = resolve_path(doc.root, path);
    if (node && node->is_list()) {
      list_spans.push_back(span);
      list_span_by_path.push_back({path, span});
    }
  }
  // Non-list text, split into blocks and sentences, in document coordinates.
  std::vector<Sentence> outside;
  {
    std::vector<bool> inside(rendered.text.size(), false);
    for (const auto& span : list_spans) {
      for (auto p = span.begin; p < span.end; ++p) inside[p] = true;
    }
    std::size_t p = 0;
    const auto& t = rendered.text;
    while (p < t.size()) {
      if (inside[p] || t[p] == '\n') {
        ++p;
        continue;
      }
      auto q = p;
      while (q < t.size() && !inside[q] && t[q] != '\n') ++q;
      for (auto s : segment_sentences(std::string_view(t).substr(p, q - p))) {
        s.char_span.begin += p;
        s.char_span.end += p;
        outside.push_back(std::move(s));
      }
      p = q;
    }
  }

  std::vector<ListCandidate> out;
  struct Entry {
    const DomNode* node;
    int depth;
  };
  std::deque<Entry> queue{{&doc.root, 0}};
  while (!queue.empty()) {
    const auto [node, depth] = queue.front();
    queue.pop_front();
    int child_depth = depth;
    if (node->is_list()) {
      CharSpan span{};
      for (const auto& [path, s] : list_span_by_path) {
        if (path == node->node_path) span = s;
      }
      out.push_back(detail::make_candidate(doc, *node, depth, outside, span, k));
      child_depth = depth + 1;
    }
    for (const auto& c : node->children) {
      if (!c.is_text()) queue.push_back({&c, child_depth});
    }
  }
  return out;
}

// Every sentence of the list items, in order.
inline std::vector<const Sentence*> item_sentences(const ListCandidate& cand) {
  std::vector<const Sentence*> out;
  for (const auto& item : cand.items) {
    for (const auto& s : item.sentences) out.push_back(&s);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// JSON Lines candidate dump.

inline std::string_view to_string(ListKind kind) { return kind == ListKind::Ordered ? "ORDERED" : "UNORDERED"; }

inline nlohmann::json sentence_to_json(const Sentence& s) {
  return {{"text", s.text}, {"tokens", s.tokens}, {"char_span", {s.char_span.begin, s.char_span.end}}};
}

inline Sentence sentence_from_json(const nlohmann::json& j) {
  Sentence s;
  s.text = j.at("text").get<std::string>();
  if (j.contains("tokens")) {
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
  } else {
    s.tokens = tokenize(s.text);
  }
  if (j.contains("char_span")) {
    const auto& span = j.at("char_span");
    s.char_span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
  } else {
    s.char_span = {0, s.text.size()};
  }
  return s;
}

inline nlohmann::json candidate_to_json(const ListCandidate& c) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : c.items) {
    nlohmann::json sentences = nlohmann::json::array();
    for (const auto& s : item.sentences) sentences.push_back(sentence_to_json(s));
    items.push_back({{"text", item.text},
                     {"sentences", sentences},
                     {"sublist_paths", item.sublist_paths},
                     {"paragraph_breaks", item.paragraph_breaks}});
  }
  nlohmann::json context = nlohmann::json::array();
  for (const auto& s : c.context) context.push_back(sentence_to_json(s));
  return {{"doc_url", c.doc_url}, {"node_path", c.node_path}, {"list_kind", to_string(c.list_kind)},
          {"items", items},       {"context", context},       {"depth", c.depth}};
}

inline ListCandidate candidate_from_json(const nlohmann::json& j) {
  try {
    ListCandidate c;
    c.doc_url = j.at("doc_url").get<std::string>();
    c.node_path = j.at("node_path").get<NodePath>();
    const auto kind = j.at("list_kind").get<std::string>();
    if (kind != "ORDERED" && kind != "UNORDERED") {
      throw Error(ErrorCode::SchemaError, "list_kind must be ORDERED or UNORDERED");
    }
    c.list_kind = kind == "ORDERED" ? ListKind::Ordered : ListKind::Unordered;
    for (const auto& ji : j.at("items")) {
      ListItem item;
      item.text = ji.at("text").get<std::string>();
      for (const auto& js : ji.at("sentences")) item.sentences.push_back(sentence_from_json(js));
      item.sublist_paths = ji.value("sublist_paths", std::vector<NodePath>{});
      item.paragraph_breaks = ji.value("paragraph_breaks", std::vector<std::size_t>{});
      c.items.push_back(std::move(item));
    }
    for (const auto& js : j.at("context")) c.context.push_back(sentence_from_json(js));
    c.depth = j.value("depth", 0);
    if (c.items.empty()) throw Error(ErrorCode::SchemaError, "candidate has no items");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed list candidate: ") + e.what());
  }
}

}  // namespace procmine
