// Copyright 2026 The dyngrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYNGROW_TESTS_DOT_CHECKER_HPP_
#define DYNGROW_TESTS_DOT_CHECKER_HPP_

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dyngrow::testing {

// Parsed form of the DOT subset:
//   graph    : 'digraph' ID? '{' stmt* '}'
//   stmt     : (attr_stmt | node_stmt | edge_stmt) ';'?
//   attr_stmt: ID '=' ID
//   node_stmt: ID attr_list?
//   edge_stmt: ID ('->' ID)+ attr_list?
//   attr_list: '[' (ID '=' ID (','|';')?)* ']'
// where ID is an identifier, a number, or a double-quoted string.
struct DotGraph {
  std::string name;
  std::vector<std::string> nodes;  // declaration order
  std::map<std::string, std::map<std::string, std::string>> node_attrs;
  std::vector<std::pair<std::string, std::string>> edges;
};

class DotParser {
 public:
  explicit DotParser(std::string text) : s_(std::move(text)) {}

  std::optional<DotGraph> parse() {
    DotGraph g;
    if (!keyword("digraph")) return std::nullopt;
    if (auto id = ident(); id) g.name = *id;
    if (!punct("{")) return std::nullopt;
    while (!punct("}")) {
      auto first = ident();
      if (!first) return std::nullopt;
      if (punct("=")) {
        if (!ident()) return std::nullopt;
      } else if (peek("->")) {
        std::string from = *first;
        while (punct("->")) {
          auto to = ident();
          if (!to) return std::nullopt;
          g.edges.emplace_back(from, *to);
          from = *to;
        }
        std::map<std::string, std::string> ignored;
        if (peek("[") && !attr_list(ignored)) return std::nullopt;
      } else {
        g.nodes.push_back(*first);
        auto& attrs = g.node_attrs[*first];
        if (peek("[") && !attr_list(attrs)) return std::nullopt;
      }
      punct(";");
      if (at_end()) return std::nullopt;
    }
    skip_ws();
    if (!at_end()) return std::nullopt;
    return g;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }
  bool peek(const std::string& p) {
    skip_ws();
    return s_.compare(pos_, p.size(), p) == 0;
  }
  bool punct(const std::string& p) {
    if (!peek(p)) return false;
    pos_ += p.size();
    return true;
  }
  bool keyword(const std::string& k) {
    const std::size_t keep = pos_;
    auto id = ident();
    if (id && *id == k) return true;
    pos_ = keep;
    return false;
  }
  std::optional<std::string> ident() {
    skip_ws();
    if (pos_ >= s_.size()) return std::nullopt;
    if (s_[pos_] == '"') {
      std::string out;
      for (++pos_; pos_ < s_.size(); ++pos_) {
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
          out.push_back(s_[++pos_]);
        } else if (s_[pos_] == '"') {
          ++pos_;
          return out;
        } else {
          out.push_back(s_[pos_]);
        }
      }
      return std::nullopt;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '.'))
      ++pos_;
    if (pos_ == start) return std::nullopt;
    return s_.substr(start, pos_ - start);
  }
  bool attr_list(std::map<std::string, std::string>& attrs) {
    if (!punct("[")) return false;
    while (!punct("]")) {
      auto k = ident();
      if (!k || !punct("=")) return false;
      auto v = ident();
      if (!v) return false;
      attrs[*k] = *v;
      if (!punct(",")) punct(";");
      if (at_end()) return false;
    }
    return true;
  }

  std::string s_;
  std::size_t pos_ = 0;
};

inline std::optional<DotGraph> parse_dot(const std::string& text) { return DotParser(text).parse(); }

}  // namespace dyngrow::testing

#endif  // DYNGROW_TESTS_DOT_CHECKER_HPP_
