#pragma once
// Workspace: a triplet structure plus the bookkeeping needed to apply rules
// (generated-name provenance) and to reason about encoded inputs (which
// instance a node came from, token text, slippable types).

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "triplet/match.hpp"
#include "triplet/rule.hpp"
#include "triplet/structure.hpp"

namespace triplet {

inline constexpr const char* kAbstraction = "Abstraction";
inline constexpr const char* kIsAbs = "IsAbs";

enum class Side : std::uint8_t { kNone, kBefore, kAfter };

/// One encoded input sequence (a string, one side of a pair, a source file).
struct InstanceInfo {
  std::string tag;
  /// Instances sharing a group are mapped by one mapping node; a pair's two
  /// sides form one group. Group "" marks shared material (documentation).
  std::string group;
  Side side = Side::kNone;
  NodeId container{};
  std::vector<NodeId> tokens;
};

struct NodeInfo {
  int instance = -1;
  int position = -1;
};

class HashCollision : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seedless 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Workspace {
 public:
  Workspace() {
    abstraction_ = s.intern(kAbstraction);
    is_abs_ = s.intern(kIsAbs);
  }

  TripletStructure s;

  NodeId abstraction() const { return abstraction_; }
  NodeId is_abs() const { return is_abs_; }

  // ---- encoder metadata ------------------------------------------------------

  std::vector<InstanceInfo> instances;
  std::unordered_map<NodeId, NodeInfo> info;
  /// Platonic type node -> token text it stands for.
  std::map<NodeId, std::string> type_token;
  /// Types that may be abstracted by a type slip.
  std::set<NodeId> slippable;

  int add_instance(InstanceInfo inst) {
    instances.push_back(std::move(inst));
    return static_cast<int>(instances.size()) - 1;
  }

  const InstanceInfo* instance_of(NodeId n) const {
    auto it = info.find(n);
    if (it == info.end() || it->second.instance < 0) return nullptr;
    return &instances[static_cast<std::size_t>(it->second.instance)];
  }

  std::optional<std::string> token_text(NodeId type) const {
    auto it = type_token.find(type);
    if (it == type_token.end()) return std::nullopt;
    return it->second;
  }

  // ---- generated names ---------------------------------------------------------

  /// Interns a generated node, checking that the name was never produced
  /// from a different provenance.
  NodeId intern_generated(const std::string& name, const std::string& provenance) {
    auto [it, fresh] = provenance_.emplace(name, provenance);
    if (!fresh && it->second != provenance)
      throw HashCollision("generated name " + name + " produced by both '" + it->second + "' and '" +
                          provenance + "'");
    if (fresh && s.find(name))
      throw HashCollision("generated name " + name + " collides with an existing node");
    return s.intern(name);
  }

  std::size_t provenance_size() const { return provenance_.size(); }

 private:
  NodeId abstraction_;
  NodeId is_abs_;
  std::unordered_map<std::string, std::string> provenance_;
};

struct ApplyDelta {
  std::vector<NodeId> created_nodes;
  std::vector<Fact> added_facts;
  std::string rule;
  Assignment canonical;
};

/// Provenance string hashed into a created node's name: rule name, the
/// canonical binding as var=name pairs sorted by variable, and the label.
inline std::string creation_provenance(const TripletStructure& s, const Rule& r, const Assignment& canonical,
                                       const std::string& label) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < canonical.size(); ++i) pairs.emplace_back(r.vars[i], s.name(canonical[i]));
  std::sort(pairs.begin(), pairs.end());
  std::string p = r.name;
  p += '\x1f';
  for (const auto& [v, n] : pairs) {
    p += v;
    p += '=';
    p += n;
    p += '\x1e';
  }
  p += '\x1f';
  p += label;
  return p;
}

inline std::string generated_name(const std::string& provenance) {
  static const char* kHex = "0123456789abcdef";
  std::uint64_t h = fnv1a64(provenance);
  std::string out = "gen:";
  for (int shift = 60; shift >= 0; shift -= 4) out += kHex[(h >> shift) & 0xf];
  return out;
}

/// Adds the rule's green part under `a`. Created nodes are named from the
/// canonical form of `a`, so orbit-equivalent assignments and re-application
/// in another branch yield the same names.
inline ApplyDelta apply_rule(Workspace& ws, const Rule& r, const Assignment& a) {
  if (r.is_consistency) throw RuleError("cannot apply consistency rule " + r.name);
  if (a.size() != r.vars.size()) throw RuleError("assignment size mismatch for rule " + r.name);
  auto consts = detail::resolve_consts(ws.s, r);
  if (!consts) throw RuleError("rule " + r.name + " references a constant missing from the workspace");
  for (const auto& t : r.required)
    if (!ws.s.has(substitute(t, *consts, a)))
      throw RuleError("assignment does not match rule " + r.name);

  ApplyDelta d;
  d.rule = r.name;
  d.canonical = canonicalize_assignment(ws.s, r, a);
  // Created labels must be applied to the canonical binding; when `a` is a
  // permuted orbit member the added facts are substituted from the canonical
  // form too so both produce identical facts.
  std::vector<NodeId> created;
  for (const auto& label : r.created) {
    auto prov = creation_provenance(ws.s, r, d.canonical, label);
    auto before = ws.s.node_count();
    NodeId n = ws.intern_generated(generated_name(prov), prov);
    if (ws.s.node_count() != before) d.created_nodes.push_back(n);
    created.push_back(n);
  }
  for (const auto& t : r.added) {
    Fact f = substitute(t, *consts, d.canonical, created);
    if (ws.s.add(f)) d.added_facts.push_back(f);
  }
  return d;
}

struct Violation {
  std::string rule;
  Assignment assignment;
};

inline std::vector<Violation> check_consistency(const Workspace& ws, const std::vector<Rule>& rules) {
  std::vector<Violation> out;
  for (const auto& r : rules)
    for (auto& a : find_assignments(ws.s, r)) out.push_back({r.name, std::move(a)});
  return out;
}

/// Violations that use some fact added since `since`. Equals the full check
/// whenever the structure was consistent at `since`.
inline std::vector<Violation> check_consistency_since(const Workspace& ws, const std::vector<Rule>& rules,
                                                      const Mark& since) {
  std::vector<Violation> out;
  for (const auto& r : rules)
    for (auto& a : find_assignments_differential(ws.s, r, since)) out.push_back({r.name, std::move(a)});
  return out;
}

}  // namespace triplet
