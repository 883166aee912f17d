#pragma once

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "drecon/error.hpp"
#include "drecon/tree.hpp"

namespace drecon {

namespace detail {

class NewickReader {
 public:
  explicit NewickReader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  PhyloTree read_tree() {
    skip_space();
    PhyloTree::Builder b;
    seen_.clear();
    NodeId root = read_subtree(b, /*top=*/true);
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("missing ';' terminator", pos_);
    if (text_[pos_] == ')') throw ParseError("unbalanced parentheses", pos_);
    if (text_[pos_] != ';') throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
    ++pos_;
    return b.build(root);
  }

  std::size_t position() const { return pos_; }

 private:
  static bool is_name_char(char c) {
    return !(std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' || c == ':' ||
             c == ';' || c == '[' || c == ']' || c == '\'' || c == '"');
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view read_name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  // Branch lengths are parsed for validity and dropped.
  void skip_length() {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ':') return;
    ++pos_;
    skip_space();
    const std::size_t start = pos_;
    double value = 0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) throw ParseError("invalid branch length", start);
    pos_ += static_cast<std::size_t>(ptr - first);
  }

  NodeId read_subtree(PhyloTree::Builder& b, bool top) {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const std::size_t open = pos_;
    if (text_[pos_] != '(') {
      const std::size_t at = pos_;
      std::string_view name = read_name();
      if (name.empty()) {
        if (text_[at] == ')' || text_[at] == ',' || text_[at] == ';' || text_[at] == ':')
          throw ParseError("empty leaf name", at);
        throw ParseError(std::string("unexpected character '") + text_[at] + "'", at);
      }
      if (!seen_.emplace(std::string(name), at).second)
        throw ParseError("duplicate leaf name '" + std::string(name) + "'", at);
      skip_length();
      return b.add_leaf(std::string(name));
    }
    ++pos_;
    std::vector<NodeId> kids;
    kids.push_back(read_subtree(b, false));
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) throw ParseError("unbalanced parentheses", open);
      const char c = text_[pos_];
      if (c == ',') {
        ++pos_;
        kids.push_back(read_subtree(b, false));
      } else if (c == ')') {
        ++pos_;
        break;
      } else if (c == ';') {
        throw ParseError("unbalanced parentheses", open);
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
      }
    }
    skip_space();
    const std::size_t label_at = pos_;
    std::string_view label_text = read_name();
    Event label = Event::None;
    if (!label_text.empty()) {
      auto e = event_from_string(label_text);
      if (!e) throw ParseError("unknown internal label '" + std::string(label_text) + "'", label_at);
      label = *e;
    }
    skip_length();
    // "(x);" is accepted as the one-leaf tree x.
    if (kids.size() == 1 && top && label == Event::None && b.size() == 1) return kids.front();
    if (kids.size() != 2) throw ParseError("non-binary vertex", open);
    return b.join(kids[0], kids[1], label);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::unordered_map<std::string, std::size_t> seen_;
};

}  // namespace detail

// Parses exactly one ';'-terminated tree. Trailing whitespace is allowed.
inline PhyloTree parse_newick(std::string_view text) {
  detail::NewickReader reader(text);
  if (reader.at_end()) throw ParseError("empty input", 0);
  PhyloTree t = reader.read_tree();
  if (!reader.at_end()) throw ParseError("trailing content after ';'", reader.position());
  return t;
}

// Parses every ';'-terminated tree in text, in order.
inline std::vector<PhyloTree> parse_newick_all(std::string_view text) {
  detail::NewickReader reader(text);
  std::vector<PhyloTree> out;
  while (!reader.at_end()) out.push_back(reader.read_tree());
  return out;
}

// Compact Newick without branch lengths; event labels become internal names.
inline std::string serialize_newick(const PhyloTree& t) {
  std::string out;
  // Iterative walk: emit '(' on entry, ',' between children and ')label' on exit.
  std::vector<std::pair<NodeId, int>> stack{{t.root(), 0}};
  while (!stack.empty()) {
    auto& [x, state] = stack.back();
    if (t.is_leaf(x)) {
      out += t.name(x);
      stack.pop_back();
      continue;
    }
    if (state == 0) {
      out += '(';
      state = 1;
      stack.emplace_back(t.left(x), 0);
    } else if (state == 1) {
      out += ',';
      state = 2;
      stack.emplace_back(t.right(x), 0);
    } else {
      out += ')';
      out += to_string(t.label(x));
      stack.pop_back();
    }
  }
  out += ';';
  return out;
}

}  // namespace drecon
