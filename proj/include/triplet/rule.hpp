#pragma once
// Update rules: a pattern of required facts over variables and constants,
// plus a "green" part (created nodes and added facts) that may be inserted
// once the pattern is matched.
//
// Rule files are plain text, one rule per blank-line-terminated block:
//
//   rule succ_a_b
//   var v1 v2 vf1 vf2
//   const Letter:a Letter:b Predecessor Successor
//   require (vf1 v1 Letter:a)
//   require (vf2 v2 Letter:b)
//   create nf3
//   add (nf3 v1 Predecessor) (nf3 v2 Successor)
//
// Other directives: `rule <name> consistency`, `sym (a b) <-> (c d)` for a
// variable swap that maps matches to matches, and `distinct a b` requiring two
// variables to bind different nodes. Names may use %XX escapes (e.g. %28 for
// '(').

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "triplet/serialize.hpp"

namespace triplet {

struct Term {
  enum class Kind : std::uint8_t { kVar, kConst, kCreated };
  Kind kind;
  std::size_t index;
  friend bool operator==(const Term&, const Term&) = default;
};

using FactTemplate = std::array<Term, 3>;

/// A permutation of variable indices: perm[i] is the variable that i maps to.
using VarPermutation = std::vector<std::size_t>;

struct Rule {
  std::string name;
  std::vector<std::string> vars;
  std::vector<std::string> consts;
  std::vector<std::string> created;
  std::vector<FactTemplate> required;
  std::vector<FactTemplate> added;
  std::vector<std::pair<std::size_t, std::size_t>> distinct;
  /// Full symmetry group generated by the declared swaps (identity excluded).
  std::vector<VarPermutation> symmetries;
  bool is_consistency = false;

  std::size_t var_index(const std::string& v) const {
    auto it = std::find(vars.begin(), vars.end(), v);
    if (it == vars.end()) throw std::out_of_range("rule " + name + " has no variable " + v);
    return static_cast<std::size_t>(it - vars.begin());
  }

  const std::string& term_name(const Term& t) const {
    switch (t.kind) {
      case Term::Kind::kVar: return vars[t.index];
      case Term::Kind::kConst: return consts[t.index];
      default: return created[t.index];
    }
  }
};

class RuleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incremental construction with validation; used by the parser and by rule
/// generators.
class RuleBuilder {
 public:
  explicit RuleBuilder(std::string name, bool consistency = false) {
    rule_.name = std::move(name);
    rule_.is_consistency = consistency;
  }

  RuleBuilder& var(const std::string& v) {
    declare(v, Term::Kind::kVar);
    return *this;
  }
  RuleBuilder& constant(const std::string& c) {
    declare(c, Term::Kind::kConst);
    return *this;
  }
  RuleBuilder& create(const std::string& n) {
    declare(n, Term::Kind::kCreated);
    return *this;
  }
  RuleBuilder& require(const std::string& f, const std::string& v, const std::string& k) {
    FactTemplate t{term(f), term(v), term(k)};
    for (const auto& x : t)
      if (x.kind == Term::Kind::kCreated)
        throw RuleError("required fact (" + f + " " + v + " " + k + ") references created node '" +
                        rule_.term_name(x) + "'");
    rule_.required.push_back(t);
    return *this;
  }
  RuleBuilder& add(const std::string& f, const std::string& v, const std::string& k) {
    FactTemplate t{term(f), term(v), term(k)};
    bool grounded = std::any_of(t.begin(), t.end(),
                                [](const Term& x) { return x.kind != Term::Kind::kConst; });
    if (!grounded)
      throw RuleError("added fact (" + f + " " + v + " " + k +
                      ") references no variable or created node");
    rule_.added.push_back(t);
    return *this;
  }
  RuleBuilder& distinct(const std::string& a, const std::string& b) {
    rule_.distinct.emplace_back(var_of(a), var_of(b));
    return *this;
  }
  RuleBuilder& symmetry(const std::vector<std::string>& left, const std::vector<std::string>& right) {
    if (left.size() != right.size() || left.empty())
      throw RuleError("symmetry sides must be nonempty and of equal length");
    std::vector<std::pair<std::size_t, std::size_t>> swaps;
    for (std::size_t i = 0; i < left.size(); ++i) swaps.emplace_back(var_of(left[i]), var_of(right[i]));
    swaps_.push_back(std::move(swaps));
    return *this;
  }

  bool declared(const std::string& n) const { return kinds_.count(n) != 0; }

  Rule build() {
    if (rule_.is_consistency && (!rule_.created.empty() || !rule_.added.empty()))
      throw RuleError("consistency rule " + rule_.name + " must not create or add anything");
    rule_.symmetries = close_group();
    return rule_;
  }

 private:
  void declare(const std::string& n, Term::Kind kind) {
    if (n.empty()) throw RuleError("empty name");
    auto [it, fresh] = kinds_.emplace(n, kind);
    if (!fresh) {
      if (it->second == kind) return;
      throw RuleError("'" + n + "' declared with two different roles");
    }
    auto& list = kind == Term::Kind::kVar     ? rule_.vars
                 : kind == Term::Kind::kConst ? rule_.consts
                                              : rule_.created;
    list.push_back(n);
  }

  Term term(const std::string& n) const {
    auto it = kinds_.find(n);
    if (it == kinds_.end()) throw RuleError("undeclared name '" + n + "' in rule " + rule_.name);
    const auto& list = it->second == Term::Kind::kVar     ? rule_.vars
                       : it->second == Term::Kind::kConst ? rule_.consts
                                                          : rule_.created;
    return Term{it->second, static_cast<std::size_t>(std::find(list.begin(), list.end(), n) - list.begin())};
  }

  std::size_t var_of(const std::string& n) const {
    Term t = term(n);
    if (t.kind != Term::Kind::kVar) throw RuleError("'" + n + "' is not a variable");
    return t.index;
  }

  std::vector<VarPermutation> close_group() const {
    const std::size_t n = rule_.vars.size();
    VarPermutation id(n);
    for (std::size_t i = 0; i < n; ++i) id[i] = i;
    std::vector<VarPermutation> gens;
    for (const auto& swaps : swaps_) {
      VarPermutation p = id;
      for (auto [a, b] : swaps) {
        p[a] = b;
        p[b] = a;
      }
      gens.push_back(p);
    }
    std::set<VarPermutation> group{id};
    std::vector<VarPermutation> frontier{id};
    while (!frontier.empty()) {
      auto cur = frontier.back();
      frontier.pop_back();
      for (const auto& g : gens) {
        VarPermutation next(n);
        for (std::size_t i = 0; i < n; ++i) next[i] = g[cur[i]];
        if (group.insert(next).second) frontier.push_back(next);
      }
    }
    group.erase(id);
    return {group.begin(), group.end()};
  }

  Rule rule_;
  std::map<std::string, Term::Kind> kinds_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> swaps_;
};

namespace detail {

struct Token {
  std::string text;
  std::size_t column;
};

inline std::vector<Token> tokenize_rule_line(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '(' || c == ')') {
      out.push_back({std::string(1, c), i + 1});
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != '(' &&
           line[i] != ')' && line[i] != '#')
      ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

}  // namespace detail

/// Parses rule-file text. Throws ParseError with the offending line/column.
inline std::vector<Rule> parse_rules(std::istream& in) {
  std::vector<Rule> rules;
  std::optional<RuleBuilder> current;
  std::string line;
  std::size_t lineno = 0;

  auto finish = [&](std::size_t at) {
    if (!current) return;
    try {
      rules.push_back(current->build());
    } catch (const RuleError& e) {
      throw ParseError(e.what(), at);
    }
    current.reset();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto toks = detail::tokenize_rule_line(line);
    if (toks.empty()) {
      bool blank = line.find_first_not_of(" \t") == std::string::npos;
      if (blank) finish(lineno);
      continue;
    }
    const std::string& head = toks[0].text;
    auto name_at = [&](std::size_t i) { return unescape_name(toks[i].text, lineno); };
    auto triples = [&](std::size_t from) {
      std::vector<std::array<std::string, 3>> out;
      std::size_t i = from;
      while (i < toks.size()) {
        if (toks[i].text != "(") throw ParseError("expected '('", lineno, toks[i].column);
        if (i + 4 >= toks.size())
          throw ParseError("incomplete triple", lineno, toks[i].column);
        std::array<std::string, 3> t;
        for (std::size_t j = 0; j < 3; ++j) {
          const auto& tk = toks[i + 1 + j];
          if (tk.text == "(" || tk.text == ")") throw ParseError("expected a name", lineno, tk.column);
          t[j] = name_at(i + 1 + j);
        }
        if (toks[i + 4].text != ")") throw ParseError("expected ')'", lineno, toks[i + 4].column);
        out.push_back(t);
        i += 5;
      }
      if (out.empty()) throw ParseError("expected at least one triple", lineno, toks[0].column);
      return out;
    };
    auto group = [&](std::size_t& i) {
      if (i >= toks.size() || toks[i].text != "(")
        throw ParseError("expected '('", lineno, i < toks.size() ? toks[i].column : line.size() + 1);
      ++i;
      std::vector<std::string> names;
      while (i < toks.size() && toks[i].text != ")") names.push_back(name_at(i++));
      if (i >= toks.size()) throw ParseError("expected ')'", lineno, line.size() + 1);
      ++i;
      return names;
    };

    try {
      if (head == "rule") {
        finish(lineno);
        if (toks.size() < 2 || toks.size() > 3)
          throw ParseError("expected: rule <name> [consistency]", lineno, toks[0].column);
        bool consistency = false;
        if (toks.size() == 3) {
          if (toks[2].text != "consistency")
            throw ParseError("unknown rule flag '" + toks[2].text + "'", lineno, toks[2].column);
          consistency = true;
        }
        current.emplace(name_at(1), consistency);
        continue;
      }
      if (!current) throw ParseError("directive outside of a rule block", lineno, toks[0].column);
      if (head == "var" || head == "const" || head == "create") {
        if (toks.size() < 2) throw ParseError("expected at least one name", lineno, toks[0].column);
        for (std::size_t i = 1; i < toks.size(); ++i) {
          if (toks[i].text == "(" || toks[i].text == ")")
            throw ParseError("unexpected parenthesis", lineno, toks[i].column);
          auto n = name_at(i);
          if (head == "var") current->var(n);
          else if (head == "const") current->constant(n);
          else current->create(n);
        }
      } else if (head == "require" || head == "add") {
        for (const auto& t : triples(1)) {
          if (head == "require") current->require(t[0], t[1], t[2]);
          else current->add(t[0], t[1], t[2]);
        }
      } else if (head == "distinct") {
        if (toks.size() != 3) throw ParseError("expected: distinct <a> <b>", lineno, toks[0].column);
        current->distinct(name_at(1), name_at(2));
      } else if (head == "sym") {
        std::size_t i = 1;
        auto left = group(i);
        if (i >= toks.size() || toks[i].text != "<->")
          throw ParseError("expected '<->'", lineno, i < toks.size() ? toks[i].column : line.size() + 1);
        ++i;
        auto right = group(i);
        if (i != toks.size()) throw ParseError("trailing tokens", lineno, toks[i].column);
        current->symmetry(left, right);
      } else {
        throw ParseError("unknown directive '" + head + "'", lineno, toks[0].column);
      }
    } catch (const RuleError& e) {
      throw ParseError(e.what(), lineno, toks[0].column);
    }
  }
  finish(lineno + 1);
  return rules;
}

inline std::vector<Rule> parse_rules(const std::string& text) {
  std::istringstream is(text);
  return parse_rules(is);
}

}  // namespace triplet
