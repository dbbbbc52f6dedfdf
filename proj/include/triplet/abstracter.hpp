#pragma once
// Analogies as abstractions. An abstraction is identified by a node Abs;
// each instance has a mapping node M with (Abs, M, Abstraction), and M maps
// concrete nodes to abstract ones by facts (M, concrete, abstract). Abstract
// facts are ordinary facts (αF, αx, C) over abstract nodes; with a type slip
// the key is itself an abstract type node αC.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "triplet/encoders.hpp"
#include "triplet/rule.hpp"
#include "triplet/workspace.hpp"

namespace triplet {

// Variable names shared by every rule below:
//   A, B      concrete values being matched / mapped
//   MA, MB    the fact nodes holding them
//   C (C1,C2) the slot they fill (different types under a slip)
//   aAB, aMAB, aC   abstract node, abstract fact node, abstract type
//   MaA, MaB  the two instances' mapping nodes; Abs the abstraction
inline const char* kBuiltinRuleText = R"(
rule begin
var A B C MA MB
const Abstraction
sym (A MA) <-> (B MB)
distinct A B
distinct MA MB
require (MA A C) (MB B C)
create aAB aMAB MaA MaB Abs
add (MaA A aAB) (MaB B aAB) (aMAB aAB C)
add (MaA MA aMAB) (MaB MB aMAB)
add (Abs MaA Abstraction) (Abs MaB Abstraction)

rule follow
var A B C MA MB aMAB MaA MaB Abs
const Abstraction
sym (A MA MaA) <-> (B MB MaB)
distinct MaA MaB
require (MA A C) (MB B C)
require (MaA MA aMAB) (MaB MB aMAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create aAB
add (MaA A aAB) (MaB B aAB) (aMAB aAB C)

rule map_fact
var A B C MA MB aAB MaA MaB Abs
const Abstraction
sym (A MA MaA) <-> (B MB MaB)
distinct MaA MaB
require (MA A C) (MB B C)
require (MaA A aAB) (MaB B aAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create aMAB
add (aMAB aAB C) (MaA MA aMAB) (MaB MB aMAB)

rule lift_fact
var A B C MA MB aAB aMAB MaA MaB Abs
const Abstraction
sym (A MA MaA) <-> (B MB MaB)
distinct MaA MaB
require (MA A C) (MB B C)
require (MaA A aAB) (MaB B aAB) (MaA MA aMAB) (MaB MB aMAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
add (aMAB aAB C)

rule complete_node
var A C MA MB aAB aMAB MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C) (MaA A aAB) (aMAB aAB C)
require (MaA MA aMAB) (MaB MB aMAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create B
add (MB B C) (MaB B aAB)

rule type_slip
var A B C1 C2 MA MB
const Abstraction
sym (A MA C1) <-> (B MB C2)
distinct A B
distinct MA MB
distinct C1 C2
require (MA A C1) (MB B C2)
create aAB aC aMAB MaA MaB Abs
add (MaA A aAB) (MaB B aAB) (aMAB aAB aC)
add (MaA MA aMAB) (MaB MB aMAB)
add (MaA C1 aC) (MaB C2 aC)
add (Abs MaA Abstraction) (Abs MaB Abstraction)
)";

inline const char* kExtensionRuleText = R"(
rule join
var A B C MA MB aAB aMAB MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C) (MB B C)
require (MaA A aAB) (aMAB aAB C) (MaA MA aMAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
add (MaB B aAB) (MaB MB aMAB)

rule complete_fact
var A B C MA aAB aMAB MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C) (MaA A aAB) (MaB B aAB) (aMAB aAB C) (MaA MA aMAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create MB
add (MB B C) (MaB MB aMAB)

rule complete_edge
var A B C MA MB aAB aMAB MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C) (MaA A aAB) (MaB B aAB) (aMAB aAB C)
require (MaA MA aMAB) (MaB MB aMAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
add (MB B C)
)";

inline const char* kSlipRuleText = R"(
rule slip_type_follow
var A B C1 C2 MA MB aC MaA MaB Abs
const Abstraction
sym (A MA C1 MaA) <-> (B MB C2 MaB)
distinct MaA MaB
require (MA A C1) (MB B C2)
require (MaA C1 aC) (MaB C2 aC)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create aAB aMAB
add (MaA A aAB) (MaB B aAB) (aMAB aAB aC)
add (MaA MA aMAB) (MaB MB aMAB)

rule slip_map_new
var A B C1 C2 MA MB aAB MaA MaB Abs
const Abstraction
sym (A MA C1 MaA) <-> (B MB C2 MaB)
distinct MaA MaB
distinct C1 C2
require (MA A C1) (MB B C2)
require (MaA A aAB) (MaB B aAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create aMAB aC
add (aMAB aAB aC) (MaA MA aMAB) (MaB MB aMAB)
add (MaA C1 aC) (MaB C2 aC)

rule slip_map
var A B C1 C2 MA MB aAB aC MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C1) (MB B C2)
require (MaA A aAB) (MaB B aAB) (MaA C1 aC)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create aMAB
add (aMAB aAB aC) (MaA MA aMAB) (MaB MB aMAB) (MaB C2 aC)

rule slip_follow
var A B C1 C2 MA MB aMAB aC MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C1) (MB B C2)
require (MaA MA aMAB) (MaB MB aMAB) (MaA C1 aC)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create aAB
add (MaA A aAB) (MaB B aAB) (aMAB aAB aC) (MaB C2 aC)

rule slip_lift
var A B C1 C2 MA MB aAB aMAB aC MaA MaB Abs
const Abstraction
sym (A MA C1 MaA) <-> (B MB C2 MaB)
distinct MaA MaB
require (MA A C1) (MB B C2)
require (MaA A aAB) (MaB B aAB) (MaA MA aMAB) (MaB MB aMAB)
require (MaA C1 aC) (MaB C2 aC)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
add (aMAB aAB aC)

rule slip_join
var A B C1 C2 MA MB aAB aMAB aC MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C1) (MB B C2)
require (MaA A aAB) (aMAB aAB aC) (MaA MA aMAB) (MaA C1 aC)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
add (MaB B aAB) (MaB MB aMAB) (MaB C2 aC)

rule slip_complete_node
var A C1 C2 MA MB aAB aMAB aC MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C1) (MaA A aAB) (aMAB aAB aC) (MaA C1 aC) (MaB C2 aC)
require (MaA MA aMAB) (MaB MB aMAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create B
add (MB B C2) (MaB B aAB)

rule slip_complete_fact
var A B C1 C2 MA aAB aMAB aC MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C1) (MaA A aAB) (MaB B aAB) (aMAB aAB aC) (MaA MA aMAB)
require (MaA C1 aC) (MaB C2 aC)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create MB
add (MB B C2) (MaB MB aMAB)

rule slip_complete_edge
var A B C1 C2 MA MB aAB aMAB aC MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C1) (MaA A aAB) (MaB B aAB) (aMAB aAB aC)
require (MaA MA aMAB) (MaB MB aMAB) (MaA C1 aC) (MaB C2 aC)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
add (MB B C2)
)";

// With a single example the prompt takes part in the abstraction itself, so
// the example's after side is not abstracted yet. These rules abstract an
// example node and construct its prompt counterpart in one step.
inline const char* kSingleExampleRuleText = R"(
rule extend_node
var A C MA MB aMAB MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C) (MaA MA aMAB) (MaB MB aMAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create aAB B
add (MaA A aAB) (MaB B aAB) (aMAB aAB C) (MB B C)

rule extend_fact
var A B C MA aAB MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C) (MaA A aAB) (MaB B aAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create aMAB MB
add (MaA MA aMAB) (MaB MB aMAB) (aMAB aAB C) (MB B C)

rule slip_extend_fact
var A B C1 C2 MA aAB aC MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C1) (MaA A aAB) (MaB B aAB) (MaA C1 aC) (MaB C2 aC)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
create aMAB MB
add (MaA MA aMAB) (MaB MB aMAB) (aMAB aAB aC) (MB B C2)

rule extend_edge
var A B C MA MB aAB aMAB MaA MaB Abs
const Abstraction
distinct MaA MaB
require (MA A C) (MaA A aAB) (MaB B aAB) (MaA MA aMAB) (MaB MB aMAB)
require (Abs MaA Abstraction) (Abs MaB Abstraction)
add (aMAB aAB C) (MB B C)
)";

inline const char* kConsistencyRuleText = R"(
rule mapping_functional consistency
var Abs M X a1 a2
const Abstraction
distinct a1 a2
require (Abs M Abstraction) (M X a1) (M X a2)

rule mapping_injective consistency
var Abs M X1 X2 a
const Abstraction
distinct X1 X2
require (Abs M Abstraction) (M X1 a) (M X2 a)
)";

/// begin, follow, map_fact, lift_fact, complete_node, type_slip.
inline std::vector<Rule> builtin_rules() { return parse_rules(kBuiltinRuleText); }

/// join (attach a new instance to an existing abstract fact), complete_fact
/// and complete_edge (create or connect fact nodes during completion).
inline std::vector<Rule> extension_rules() { return parse_rules(kExtensionRuleText); }

/// The type_slip rule plus its follow/map/lift/join/complete variants.
inline std::vector<Rule> type_slip_rules() {
  auto out = parse_rules(kSlipRuleText);
  auto b = builtin_rules();
  out.insert(out.begin(), b.back());
  return out;
}

inline std::vector<Rule> single_example_rules() { return parse_rules(kSingleExampleRuleText); }

inline std::vector<Rule> consistency_rules() { return parse_rules(kConsistencyRuleText); }

/// One consistency rule per letter pair forbidding a node to be an instance
/// of both letters.
inline std::vector<Rule> letter_exclusivity_rules(const std::string& alphabet = kLowercase) {
  std::vector<Rule> out;
  for (std::size_t i = 0; i < alphabet.size(); ++i)
    for (std::size_t j = i + 1; j < alphabet.size(); ++j) {
      RuleBuilder b(std::string("one_letter_") + alphabet[i] + alphabet[j], true);
      b.var("x").var("p").var("q");
      b.constant(letter_type(alphabet[i])).constant(letter_type(alphabet[j]));
      b.require("p", "x", letter_type(alphabet[i])).require("q", "x", letter_type(alphabet[j]));
      out.push_back(b.build());
    }
  return out;
}

// ---- reading abstractions ------------------------------------------------------

struct AbstractionView {
  NodeId id;
  std::vector<NodeId> mappings;
  std::set<NodeId> abstract_nodes;
  /// Abstract nodes with at least one triple whose value is abstract.
  std::set<NodeId> abstract_facts;
};

inline std::vector<NodeId> mapping_nodes(const Workspace& ws, NodeId abs) {
  std::vector<NodeId> out;
  for (const auto& t : ws.s.query(HolePattern::of(abs, {}, ws.abstraction()))) out.push_back(t.value);
  return out;
}

inline AbstractionView view_of(const Workspace& ws, NodeId abs) {
  AbstractionView v;
  v.id = abs;
  v.mappings = mapping_nodes(ws, abs);
  for (auto m : v.mappings)
    for (const auto& t : ws.s.bucket(HolePattern::of(m, {}, {}))) v.abstract_nodes.insert(t.key);
  for (auto a : v.abstract_nodes)
    for (const auto& t : ws.s.bucket(HolePattern::of(a, {}, {})))
      if (v.abstract_nodes.count(t.value)) {
        v.abstract_facts.insert(a);
        break;
      }
  return v;
}

/// Every abstraction in the workspace, ordered by id name.
inline std::vector<AbstractionView> abstractions(const Workspace& ws) {
  std::set<NodeId> ids;
  for (const auto& t : ws.s.bucket(HolePattern::of({}, {}, ws.abstraction()))) ids.insert(t.fact);
  std::vector<AbstractionView> out;
  for (auto id : ids) out.push_back(view_of(ws, id));
  std::sort(out.begin(), out.end(),
            [&](const auto& a, const auto& b) { return ws.s.name(a.id) < ws.s.name(b.id); });
  return out;
}

/// Concrete node mapped to `abstract` by mapping node `m`, if any.
inline std::optional<NodeId> concrete_of(const Workspace& ws, NodeId m, NodeId abstract) {
  for (const auto& t : ws.s.bucket(HolePattern::of(m, {}, abstract))) return t.value;
  return std::nullopt;
}

/// Abstract node that `m` maps `concrete` to, if any.
inline std::optional<NodeId> abstract_of(const Workspace& ws, NodeId m, NodeId concrete) {
  for (const auto& t : ws.s.bucket(HolePattern::of(m, concrete, {}))) return t.key;
  return std::nullopt;
}

struct Correspondence {
  NodeId abstract_node;
  /// (mapping node, concrete node), ordered by mapping node name.
  std::vector<std::pair<NodeId, NodeId>> instances;
};

/// One entry per abstract node with at least one concrete instance, ordered
/// by abstract node name.
inline std::vector<Correspondence> correspondences(const Workspace& ws) {
  std::vector<Correspondence> out;
  for (const auto& v : abstractions(ws)) {
    std::map<NodeId, std::vector<std::pair<NodeId, NodeId>>> by;
    for (auto m : v.mappings)
      for (const auto& t : ws.s.bucket(HolePattern::of(m, {}, {}))) by[t.key].emplace_back(m, t.value);
    for (auto& [a, inst] : by) {
      std::sort(inst.begin(), inst.end(), [&](const auto& x, const auto& y) {
        return std::make_pair(ws.s.name(x.first), ws.s.name(x.second)) <
               std::make_pair(ws.s.name(y.first), ws.s.name(y.second));
      });
      out.push_back({a, inst});
    }
  }
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    return ws.s.name(a.abstract_node) < ws.s.name(b.abstract_node);
  });
  return out;
}

// ---- scoring -----------------------------------------------------------------

using Weights = std::map<std::string, double>;

inline double weight_of(const Weights& w, const std::string& relation) {
  auto it = w.find(relation);
  return it == w.end() ? 1.0 : it->second;
}

/// Weight of one abstract fact node: the largest weight among its keys. An
/// abstract key (type slip) weighs as the largest of the types it abstracts.
inline double abstract_fact_weight(const Workspace& ws, const AbstractionView& v, NodeId fact, const Weights& w) {
  double best = 0;
  bool any = false;
  for (const auto& t : ws.s.bucket(HolePattern::of(fact, {}, {}))) {
    if (!v.abstract_nodes.count(t.value)) continue;
    double k = 1.0;
    if (v.abstract_nodes.count(t.key)) {
      bool found = false;
      for (auto m : v.mappings)
        for (const auto& u : ws.s.bucket(HolePattern::of(m, {}, t.key))) {
          double x = weight_of(w, ws.s.name(u.value));
          k = found ? std::max(k, x) : x;
          found = true;
        }
    } else {
      k = weight_of(w, ws.s.name(t.key));
    }
    best = any ? std::max(best, k) : k;
    any = true;
  }
  return best;
}

struct ScoreReport {
  std::string abstraction;
  std::size_t abstract_fact_count = 0;
  double weighted_score = 0;
  bool has_prompt = false;
  bool complete = true;
  std::size_t missing = 0;
  /// Abstractions covering too little of the smaller example are degenerate.
  bool degenerate = false;
  double coverage = 0;
  /// Weighted abstract facts instantiated by the prompt.
  double prompt_fit = 0;
  /// The prompt fails to instantiate some before-side abstract fact.
  bool weak = false;
};

inline ScoreReport score(const Workspace& ws, const AbstractionView& v, const Weights& w = {}) {
  ScoreReport r;
  r.abstraction = ws.s.name(v.id);
  r.abstract_fact_count = v.abstract_facts.size();
  for (auto f : v.abstract_facts) r.weighted_score += abstract_fact_weight(ws, v, f, w);
  return r;
}

inline ScoreReport score(const Workspace& ws, const Weights& w = {}) {
  auto all = abstractions(ws);
  if (all.empty()) return {};
  std::optional<ScoreReport> best;
  for (const auto& v : all) {
    auto r = score(ws, v, w);
    if (!best || r.weighted_score > best->weighted_score) best = r;
  }
  return *best;
}

}  // namespace triplet
