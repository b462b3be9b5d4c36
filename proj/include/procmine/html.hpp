#pragma once

// Forgiving HTML parsing into a value-semantic DOM, plus template scrubbing.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "procmine/error.hpp"
#include "procmine/text.hpp"

namespace procmine {

using NodePath = std::vector<int>;

inline constexpr std::string_view kTextTag = "#text";
inline constexpr std::string_view kRootTag = "#root";

struct DomNode {
  std::string tag;  // lowercase element name, "#text" or "#root"
  // For text nodes the collapsed character data; for elements the whitespace-normalized
  // concatenation of the direct text children.
  std::string text;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<DomNode> children;
  NodePath node_path;

  bool is_text() const { return tag == kTextTag; }
  bool is_list() const { return tag == "ol" || tag == "ul"; }

  std::optional<std::string> attribute(std::string_view name) const {
    for (const auto& [k, v] : attributes) {
      if (k == name) return v;
    }
    return std::nullopt;
  }

  bool operator==(const DomNode&) const = default;
};

struct Document {
  std::string url;
  DomNode root;
  std::string title;
};

// Structural equality ignoring the url (used by idempotence checks).
inline bool same_structure(const DomNode& a, const DomNode& b) { return a == b; }

inline const DomNode* resolve_path(const DomNode& root, const NodePath& path) {
  const DomNode* cur = &root;
  for (int idx : path) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= cur->children.size()) return nullptr;
    cur = &cur->children[static_cast<std::size_t>(idx)];
  }
  return cur;
}

template <class Fn>
void for_each_node(const DomNode& node, Fn&& fn) {
  fn(node);
  for (const auto& c : node.children) for_each_node(c, fn);
}

inline bool is_descendant_path(const NodePath& ancestor, const NodePath& node) {
  return node.size() > ancestor.size() && std::equal(ancestor.begin(), ancestor.end(), node.begin());
}

// Concatenated text of a subtree, whitespace-normalized.
inline std::string inner_text(const DomNode& node) {
  std::string buf;
  for_each_node(node, [&](const DomNode& n) {
    if (n.is_text()) {
      buf.push_back(' ');
      buf += n.text;
    }
  });
  return collapse_whitespace(buf);
}

namespace detail {

inline bool is_void_element(std::string_view tag) {
  static const std::set<std::string_view> kVoid = {"area", "base", "br",   "col",   "embed",  "hr",    "img",
                                                   "input", "link", "meta", "param", "source", "track", "wbr"};
  return kVoid.contains(tag);
}

inline bool is_raw_text_element(std::string_view tag) {
  return tag == "script" || tag == "style" || tag == "textarea" || tag == "title";
}

inline bool closes_paragraph(std::string_view tag) {
  static const std::set<std::string_view> kTags = {
      "address", "article", "aside", "blockquote", "div", "dl",     "fieldset", "footer", "form",
      "h1",      "h2",      "h3",    "h4",         "h5",  "h6",     "header",   "hr",     "main",
      "nav",     "ol",      "p",     "pre",        "section", "table", "ul",     "figure", "details"};
  return kTags.contains(tag);
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Replaces invalid UTF-8 sequences with U+FFFD.
inline std::string sanitize_utf8(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const auto c = static_cast<unsigned char>(in[i]);
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len != 0 && i + len <= in.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto d = static_cast<unsigned char>(in[i + k]);
      if ((d & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (d & 0x3F);
    }
    if (ok && ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
               cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) {
      ok = false;
    }
    if (ok) {
      out.append(in.substr(i, len));
      i += len;
    } else {
      append_utf8(out, 0xFFFD);
      ++i;
    }
  }
  return out;
}

inline std::optional<std::uint32_t> named_entity(std::string_view name) {
  static const std::pair<std::string_view, std::uint32_t> kEntities[] = {
      {"amp", '&'},     {"lt", '<'},      {"gt", '>'},      {"quot", '"'},    {"apos", '\''},
      {"nbsp", 0xA0},   {"ndash", 0x2013}, {"mdash", 0x2014}, {"lsquo", 0x2018}, {"rsquo", 0x2019},
      {"ldquo", 0x201C}, {"rdquo", 0x201D}, {"hellip", 0x2026}, {"copy", 0xA9},  {"reg", 0xAE},
      {"trade", 0x2122}, {"bull", 0x2022}, {"rarr", 0x2192}, {"larr", 0x2190}, {"times", 0xD7}};
  for (const auto& [k, v] : kEntities) {
    if (k == name) return v;
  }
  return std::nullopt;
}

inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(s[i++]);
      continue;
    }
    const auto body = s.substr(i + 1, semi - i - 1);
    std::optional<std::uint32_t> cp;
    if (!body.empty() && body[0] == '#') {
      std::uint32_t v = 0;
      bool ok = body.size() > 1;
      const bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
      for (std::size_t k = hex ? 2 : 1; ok && k < body.size(); ++k) {
        const char d = body[k];
        int digit = -1;
        if (d >= '0' && d <= '9') digit = d - '0';
        else if (hex && d >= 'a' && d <= 'f') digit = d - 'a' + 10;
        else if (hex && d >= 'A' && d <= 'F') digit = d - 'A' + 10;
        if (digit < 0 || v > 0x10FFFF) ok = false;
        else v = v * (hex ? 16 : 10) + static_cast<std::uint32_t>(digit);
      }
      if (ok && (!hex || body.size() > 2)) cp = v;
    } else {
      cp = named_entity(body);
    }
    if (!cp) {
      out.push_back(s[i++]);
      continue;
    }
    // Non-breaking spaces behave like ordinary whitespace downstream.
    if (*cp == 0xA0) out.push_back(' ');
    else append_utf8(out, *cp);
    i = semi + 1;
  }
  return out;
}

struct BuildNode {
  std::string tag;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;  // text nodes only
  std::vector<std::unique_ptr<BuildNode>> children;
};

class TreeBuilder {
 public:
  TreeBuilder() : root_(std::make_unique<BuildNode>()) {
    root_->tag = std::string(kRootTag);
    stack_.push_back(root_.get());
  }

  void text(std::string data) {
    if (data.empty()) return;
    auto* top = stack_.back();
    if (!top->children.empty() && top->children.back()->tag == kTextTag) {
      top->children.back()->text += data;
      return;
    }
    auto node = std::make_unique<BuildNode>();
    node->tag = std::string(kTextTag);
    node->text = std::move(data);
    top->children.push_back(std::move(node));
  }

  void open(std::string tag, std::vector<std::pair<std::string, std::string>> attrs) {
    apply_implicit_closes(tag);
    auto node = std::make_unique<BuildNode>();
    node->tag = tag;
    node->attributes = std::move(attrs);
    auto* raw = node.get();
    stack_.back()->children.push_back(std::move(node));
    if (!is_void_element(tag)) stack_.push_back(raw);
  }

  void close(std::string_view tag) {
    for (std::size_t k = stack_.size(); k-- > 1;) {
      if (stack_[k]->tag == tag) {
        stack_.resize(k);
        return;
      }
      // An end tag never reaches past the list or table that contains the open element.
      if ((tag == "li" && (stack_[k]->tag == "ol" || stack_[k]->tag == "ul")) ||
          ((tag == "td" || tag == "th" || tag == "tr") && stack_[k]->tag == "table")) {
        return;
      }
    }
  }

  std::unique_ptr<BuildNode> finish() { return std::move(root_); }

 private:
  void pop_to_nearest(std::string_view tag, std::initializer_list<std::string_view> barriers) {
    for (std::size_t k = stack_.size(); k-- > 1;) {
      const auto& t = stack_[k]->tag;
      if (t == tag) {
        stack_.resize(k);
        return;
      }
      if (std::find(barriers.begin(), barriers.end(), t) != barriers.end()) return;
    }
  }

  void apply_implicit_closes(const std::string& tag) {
    if (closes_paragraph(tag)) {
      pop_to_nearest("p", {"li", "td", "th", "div", "body", "html", "blockquote", "section", "article", "dd"});
    }
    if (tag == "li") pop_to_nearest("li", {"ol", "ul", "menu"});
    if (tag == "dt" || tag == "dd") {
      pop_to_nearest("dt", {"dl"});
      pop_to_nearest("dd", {"dl"});
    }
    if (tag == "td" || tag == "th") {
      pop_to_nearest("td", {"tr", "table"});
      pop_to_nearest("th", {"tr", "table"});
    }
    if (tag == "tr") pop_to_nearest("tr", {"table"});
    if (tag == "option") pop_to_nearest("option", {"select"});
  }

  std::unique_ptr<BuildNode> root_;
  std::vector<BuildNode*> stack_;
};

inline bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
         c == ':';
}

inline DomNode freeze(const BuildNode& b, NodePath path) {
  DomNode n;
  n.tag = b.tag;
  n.attributes = b.attributes;
  n.node_path = std::move(path);
  if (b.tag == kTextTag) {
    n.text = b.text;
    return n;
  }
  n.children.reserve(b.children.size());
  std::string own;
  for (std::size_t i = 0; i < b.children.size(); ++i) {
    auto child_path = n.node_path;
    child_path.push_back(static_cast<int>(i));
    n.children.push_back(freeze(*b.children[i], std::move(child_path)));
    if (b.children[i]->tag == kTextTag) {
      own.push_back(' ');
      own += b.children[i]->text;
    }
  }
  n.text = collapse_whitespace(own);
  return n;
}

// Recomputes node paths and element own-text after structural edits.
inline void renumber(DomNode& node, const NodePath& path) {
  node.node_path = path;
  if (node.is_text()) return;
  std::string own;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    auto child_path = path;
    child_path.push_back(static_cast<int>(i));
    renumber(node.children[i], child_path);
    if (node.children[i].is_text()) {
      own.push_back(' ');
      own += node.children[i].text;
    }
  }
  node.text = collapse_whitespace(own);
}

}  // namespace detail

// Never aborts on malformed markup: unmatched end tags are ignored, unclosed elements are
// closed at end of input, and li/p/td/tr/dt/dd/option get the usual implicit closes.
inline Document parse_document(std::string_view raw, std::string url) {
  const std::string html = detail::sanitize_utf8(raw);
  if (html.empty()) throw Error(ErrorCode::EmptyInput, "document '" + url + "' is empty");

  detail::TreeBuilder builder;
  std::string title;
  std::size_t i = 0;
  const std::size_t n = html.size();
  auto flush_text = [&](std::size_t from, std::size_t to) {
    if (to > from) {
      builder.text(collapse_whitespace_keep_edges(detail::decode_entities(std::string_view(html).substr(from, to - from))));
    }
  };
  std::size_t text_start = 0;
  while (i < n) {
    if (html[i] != '<') {
      ++i;
      continue;
    }
    if (html.compare(i, 4, "<!--") == 0) {
      flush_text(text_start, i);
      const auto end = html.find("-->", i + 4);
      i = (end == std::string::npos) ? n : end + 3;
      text_start = i;
      continue;
    }
    if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?')) {
      flush_text(text_start, i);
      const auto end = html.find('>', i + 2);
      i = (end == std::string::npos) ? n : end + 1;
      text_start = i;
      continue;
    }
    const bool closing = i + 1 < n && html[i + 1] == '/';
    const std::size_t name_start = i + (closing ? 2 : 1);
    if (name_start >= n || !std::isalpha(static_cast<unsigned char>(html[name_start]))) {
      ++i;  // a stray '<' is text
      continue;
    }
    flush_text(text_start, i);
    std::size_t j = name_start;
    while (j < n && detail::is_name_char(html[j])) ++j;
    const std::string tag = to_lower(std::string_view(html).substr(name_start, j - name_start));

    // Attributes.
    std::vector<std::pair<std::string, std::string>> attrs;
    bool self_closing = false;
    while (j < n && html[j] != '>') {
      if (detail::is_space_byte(static_cast<unsigned char>(html[j]))) {
        ++j;
        continue;
      }
      if (html[j] == '/') {
        self_closing = true;
        ++j;
        continue;
      }
      const std::size_t an = j;
      while (j < n && html[j] != '=' && html[j] != '>' && html[j] != '/' &&
             !detail::is_space_byte(static_cast<unsigned char>(html[j]))) {
        ++j;
      }
      std::string name = to_lower(std::string_view(html).substr(an, j - an));
      while (j < n && detail::is_space_byte(static_cast<unsigned char>(html[j]))) ++j;
      std::string value;
      if (j < n && html[j] == '=') {
        ++j;
        while (j < n && detail::is_space_byte(static_cast<unsigned char>(html[j]))) ++j;
        if (j < n && (html[j] == '"' || html[j] == '\'')) {
          const char q = html[j];
          const auto close = html.find(q, j + 1);
          const auto stop = close == std::string::npos ? n : close;
          value = html.substr(j + 1, stop - j - 1);
          j = close == std::string::npos ? n : close + 1;
        } else {
          const std::size_t vs = j;
          while (j < n && html[j] != '>' && !detail::is_space_byte(static_cast<unsigned char>(html[j]))) ++j;
          value = html.substr(vs, j - vs);
        }
      }
      if (!name.empty()) attrs.emplace_back(std::move(name), detail::decode_entities(value));
      self_closing = false;
    }
    i = (j < n) ? j + 1 : n;
    text_start = i;

    if (closing) {
      builder.close(tag);
      continue;
    }
    builder.open(tag, std::move(attrs));
    if (detail::is_raw_text_element(tag)) {
      const std::string end_tag = "</" + tag;
      std::size_t k = i;
      std::size_t end = n;
      while (k < n) {
        const auto pos = html.find("</", k);
        if (pos == std::string::npos) break;
        if (to_lower(std::string_view(html).substr(pos, end_tag.size())) == end_tag) {
          end = pos;
          break;
        }
        k = pos + 2;
      }
      std::string content = html.substr(i, end - i);
      if (tag == "title" || tag == "textarea") content = detail::decode_entities(content);
      if (tag == "title" && title.empty()) title = collapse_whitespace(content);
      builder.text(tag == "title" || tag == "textarea" ? collapse_whitespace_keep_edges(content) : content);
      builder.close(tag);
      const auto gt = end == n ? std::string::npos : html.find('>', end);
      i = (gt == std::string::npos) ? n : gt + 1;
      text_start = i;
      continue;
    }
    if (self_closing) builder.close(tag);
  }
  flush_text(text_start, n);

  Document doc;
  doc.url = std::move(url);
  doc.root = detail::freeze(*builder.finish(), {});
  doc.title = std::move(title);
  return doc;
}

struct ScrubConfig {
  std::set<std::string> tags = {"script", "style", "nav", "header", "footer", "aside", "form"};
  // Whole-token matches against class names and the id attribute.
  std::set<std::string> class_patterns = {"sidebar", "breadcrumb", "breadcrumbs", "navbar", "menu",
                                          "site-header", "site-footer", "toc", "cookie-banner"};
};

namespace detail {

inline bool matches_template_pattern(const DomNode& node, const ScrubConfig& cfg) {
  if (cfg.tags.contains(node.tag)) return true;
  for (const char* attr : {"class", "id"}) {
    const auto value = node.attribute(attr);
    if (!value) continue;
    std::string token;
    for (std::size_t i = 0; i <= value->size(); ++i) {
      if (i == value->size() || is_space_byte(static_cast<unsigned char>((*value)[i]))) {
        if (!token.empty() && cfg.class_patterns.contains(to_lower(token))) return true;
        token.clear();
      } else {
        token.push_back((*value)[i]);
      }
    }
  }
  return false;
}

inline void scrub_children(DomNode& node, const ScrubConfig& cfg) {
  std::vector<DomNode> kept;
  kept.reserve(node.children.size());
  auto push = [&kept](DomNode&& child) {
    if (child.is_text() && !kept.empty() && kept.back().is_text()) {
      kept.back().text += child.text;
      return;
    }
    kept.push_back(std::move(child));
  };
  for (auto& child : node.children) {
    if (child.is_text()) {
      push(std::move(child));
      continue;
    }
    if (matches_template_pattern(child, cfg)) continue;
    scrub_children(child, cfg);
    if (child.tag == "a") {
      // Hyperlink markup is dropped; the anchor text stays in place.
      for (auto& grandchild : child.children) push(std::move(grandchild));
      continue;
    }
    push(std::move(child));
  }
  node.children = std::move(kept);
}

}  // namespace detail

// Returns a copy without template elements. Anchors are unwrapped into their text and
// adjacent text nodes merged, so scrubbing is idempotent.
inline Document scrub_template(const Document& doc, const ScrubConfig& cfg = {}) {
  Document out = doc;
  detail::scrub_children(out.root, cfg);
  detail::renumber(out.root, {});
  return out;
}

}  // namespace procmine
