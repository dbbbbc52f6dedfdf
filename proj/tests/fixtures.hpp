#pragma once
// Fixture loading shared by the scenario tests and the acceptance binary.

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "triplet/abstracter.hpp"
#include "triplet/scenarios.hpp"
#include "triplet/search.hpp"

namespace fixture {

using namespace triplet;

inline std::string path(const std::string& rel) { return std::string(TRIPLET_FIXTURES) + "/" + rel; }

inline std::string read_abs(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string read(const std::string& rel) { return read_abs(path(rel)); }

inline SourceFile source(const std::string& dir, const std::string& name) { return {name, read(dir + "/" + name)}; }

inline TransformSpec gemm(const std::string& prompt, const std::string& annotations) {
  TransformSpec sp;
  sp.examples = {{source("gemm", "gemm1.before.txt"), source("gemm", "gemm1.after.txt")},
                 {source("gemm", "gemm2.before.txt"), source("gemm", "gemm2.after.txt")}};
  sp.prompt = source("gemm", prompt);
  sp.annotations = nlohmann::json::parse(read("gemm/" + annotations));
  return sp;
}

inline TransformSpec api(bool docs) {
  TransformSpec sp;
  sp.examples = {{source("api", "api1.before.txt"), source("api", "api1.after.txt")},
                 {source("api", "api2.before.txt"), source("api", "api2.after.txt")}};
  sp.prompt = source("api", "api3.before.txt");
  if (docs) {
    sp.docs = std::make_pair(source("api", "docs.before.txt"), source("api", "docs.after.txt"));
    sp.annotations = nlohmann::json::parse(read("api/annotations.json"));
  }
  return sp;
}

inline SearchConfig config(std::size_t budget = 2000) {
  SearchConfig cfg;
  cfg.budget = budget;
  return cfg;
}

/// Word and single-character tokens, independent of the library lexer.
inline std::vector<std::string> words(const std::string& text) {
  static const std::regex re(R"([A-Za-z0-9_]+|[^\sA-Za-z0-9_])");
  std::vector<std::string> out;
  for (std::sregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it) out.push_back(it->str());
  return out;
}

struct TokenChange {
  std::size_t index;
  std::string from, to;
};

/// Position-wise token differences. `first` is false when the token counts
/// differ, in which case no changes are listed.
inline std::pair<bool, std::vector<TokenChange>> token_diff(const std::string& a, const std::string& b) {
  auto x = words(a), y = words(b);
  std::vector<TokenChange> out;
  if (x.size() != y.size()) return {false, out};
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) out.push_back({i, x[i], y[i]});
  return {true, out};
}

inline const char* kSuccessorRules = R"(
rule succ_a_b
var v1 v2 vf1 vf2
const Letter:a Letter:b Predecessor Successor
require (vf1 v1 Letter:a) (vf2 v2 Letter:b)
create nf3
add (nf3 v1 Predecessor) (nf3 v2 Successor)

rule succ_e_f
var v1 v2 vf1 vf2
const Letter:e Letter:f Predecessor Successor
require (vf1 v1 Letter:e) (vf2 v2 Letter:f)
create nf3
add (nf3 v1 Predecessor) (nf3 v2 Successor)
)";

inline Workspace ab_ef() {
  Workspace ws;
  encode_letter_string(ws, "ab", "x");
  encode_letter_string(ws, "ef", "y");
  return ws;
}

/// The two successor rules and the four abstraction-building rules.
inline std::vector<Rule> ab_ef_rules() {
  auto rules = parse_rules(kSuccessorRules);
  for (auto& r : builtin_rules())
    if (r.name == "begin" || r.name == "follow" || r.name == "map_fact" || r.name == "lift_fact")
      rules.push_back(std::move(r));
  return rules;
}

using NamedFact = std::array<std::string, 3>;

/// The expected abstraction of "ab"/"ef" with placeholder names for generated nodes.
inline std::vector<NamedFact> expected_abstraction() {
  return {{"Abs", "Ma", "Abstraction"}, {"Abs", "Mb", "Abstraction"},
          {"Ma", "x:0", "a1"},          {"Mb", "y:0", "a1"},
          {"Ma", "x:1", "a2"},          {"Mb", "y:1", "a2"},
          {"an", "a1", "NextToLeft"},   {"an", "a2", "NextToRight"},
          {"Ma", "x.next:0", "an"},     {"Mb", "y.next:0", "an"},
          {"as", "a1", "Predecessor"},  {"as", "a2", "Successor"},
          {"Ma", "s1", "as"},           {"Mb", "s2", "as"}};
}
inline const std::set<std::string> kPlaceholders{"Abs", "Ma", "Mb", "a1", "a2", "an", "as", "s1", "s2"};

/// Isomorphism of two fact sets where only the flagged nodes may be renamed.
inline bool isomorphic(const std::vector<NamedFact>& a, const std::set<std::string>& a_free, const std::vector<NamedFact>& b,
                const std::set<std::string>& b_free) {
  if (a.size() != b.size() || a_free.size() != b_free.size()) return false;
  std::vector<std::string> from(a_free.begin(), a_free.end()), to(b_free.begin(), b_free.end());
  const std::set<NamedFact> target(b.begin(), b.end());
  std::sort(to.begin(), to.end());
  do {
    std::map<std::string, std::string> ren;
    for (std::size_t i = 0; i < from.size(); ++i) ren[from[i]] = to[i];
    bool ok = true;
    for (const auto& f : a) {
      NamedFact g;
      for (std::size_t i = 0; i < 3; ++i) g[i] = ren.count(f[i]) ? ren[f[i]] : f[i];
      if (!target.count(g)) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  } while (std::next_permutation(to.begin(), to.end()));
  return false;
}

/// Runs the "ab"/"ef" search and returns the facts it added that involve generated
/// nodes, with the set of those nodes.
inline std::pair<std::vector<NamedFact>, std::set<std::string>> ab_ef_abstraction_facts(std::size_t budget,
                                                                                    AnalogyResult* out = nullptr) {
  auto ws = ab_ef();
  auto pre = ws;
  for (const auto& r : parse_rules(kSuccessorRules))
    for (const auto& a : find_assignments(pre.s, r)) apply_rule(pre, r, a);
  SearchConfig cfg;
  cfg.budget = budget;
  auto res = search(ws, ab_ef_rules(), consistency_rules(), cfg);
  if (out) {
    out->report = res.report;
    out->applications = res.applications;
  }
  auto facts = [](const Workspace& w) {
    std::set<NamedFact> s;
    for (const auto& f : w.s.snapshot().facts) s.insert(f);
    return s;
  };
  const auto before = facts(pre);
  std::vector<NamedFact> added;
  std::set<std::string> generated;
  for (const auto& f : facts(ws)) {
    bool involved = false;
    for (const auto& n : f)
      if (n.rfind("gen:", 0) == 0) involved = true;
    if (before.count(f) || !involved) continue;
    added.push_back(f);
    for (const auto& n : f)
      if (n.rfind("gen:", 0) == 0) generated.insert(n);
  }
  return {added, generated};
}

/// Letter-string analogy with the workspace kept for inspection.
inline std::pair<Workspace, AnalogyResult> solve_letters(const std::vector<std::pair<std::string, std::string>>& examples,
                                                         const std::string& prompt, const SearchConfig& cfg) {
  Workspace ws;
  AnalogyPlan plan;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto tag = "ex" + std::to_string(i);
    encode_pair(ws, examples[i].first, examples[i].second, tag, SequenceKind::kLetters);
    plan.examples.push_back(tag);
  }
  encode_pair(ws, prompt, "", "prompt", SequenceKind::kLetters);
  plan.prompt = "prompt";
  plan.prompt_after = ws.s.at("prompt.after");
  plan.saturation = gen_successor_rules();
  auto res = solve(ws, plan, analogy_rules(), consistency_rules(), cfg);
  return {std::move(ws), std::move(res)};
}

/// Position pairs (j, k) such that, in the abstraction, letter k of the
/// example's after-string has the same abstract type as letter j of its
/// before-string.
inline std::set<std::pair<int, int>> same_type_positions(const Workspace& ws, const std::string& tag, int n) {
  std::map<NodeId, NodeId> abstract_of_node;
  std::set<NodeId> letter_types;
  for (const auto& c : correspondences(ws))
    for (auto [m, x] : c.instances) {
      abstract_of_node[x] = c.abstract_node;
      if (ws.s.name(x).rfind("Letter:", 0) == 0) letter_types.insert(c.abstract_node);
    }
  auto types = [&](const std::string& name) {
    std::set<NodeId> out;
    auto id = ws.s.find(name);
    if (!id || !abstract_of_node.count(*id)) return out;
    for (const auto& t : ws.s.bucket(HolePattern::of({}, abstract_of_node[*id], {})))
      if (letter_types.count(t.key)) out.insert(t.key);
    return out;
  };
  std::set<std::pair<int, int>> out;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      auto a = types(tag + ".before:" + std::to_string(j)), b = types(tag + ".after:" + std::to_string(k));
      for (auto t : a)
        if (b.count(t)) out.emplace(j, k);
    }
  return out;
}

}  // namespace fixture
