#pragma once
// Greedy search over rule applications. Analogies are grown one abstraction
// at a time: a single begin (or type slip) starts an attempt, then follow,
// map, lift and slip rules extend it until nothing applicable adds facts or
// the budget runs out. Several attempts from different begins compete; the
// best is replayed. Prompts and extra examples then join the abstraction,
// completion rules build the missing side, and remaining token types are
// resolved from relations that hold in every example.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "triplet/abstracter.hpp"
#include "triplet/encoders.hpp"
#include "triplet/match.hpp"
#include "triplet/workspace.hpp"

namespace triplet {

struct SearchConfig {
  std::size_t budget = 10000;
  /// Prefer candidates within this many fact-value hops of the last change
  /// (0 disables).
  std::size_t locality_radius = 0;
  Weights weights;
  /// Only used to shuffle attempt order when nonzero; ties are otherwise
  /// broken lexicographically.
  std::uint64_t seed = 0;
  /// Replay the best attempt's applications instead of searching again.
  bool phase_reuse = true;
  /// Number of competing begins.
  std::size_t attempts = 3;
  /// Worker threads for attempts (1 = sequential).
  std::size_t parallel = 1;
  /// Start abstractions only on token/part keys (used for correspondence).
  bool content_begin_only = false;
};

struct TraceEntry {
  std::string rule;
  std::vector<std::pair<std::string, std::string>> assignment;
  bool accepted = true;
  double score_after = 0;
};

inline nlohmann::json to_json(const TraceEntry& e) {
  nlohmann::json a = nlohmann::json::object();
  for (const auto& [v, n] : e.assignment) a[v] = n;
  return {{"rule", e.rule}, {"assignment", a}, {"accepted", e.accepted}, {"score_after", e.score_after}};
}

inline std::string trace_jsonl(const std::vector<TraceEntry>& trace) {
  std::string out;
  for (const auto& e : trace) out += to_json(e).dump() + "\n";
  return out;
}

struct SearchResult {
  ScoreReport report;
  std::vector<TraceEntry> trace;
  /// Applications spent, accepted and backtracked.
  std::size_t applications = 0;
};

namespace detail {

inline bool is_analogy_rule(const Rule& r) {
  return std::find(r.consts.begin(), r.consts.end(), kAbstraction) != r.consts.end();
}

inline int rule_priority(const std::string& name) {
  static const std::map<std::string, int> p = {
      {"lift_fact", 90},          {"slip_lift", 80},           {"map_fact", 70},
      {"join", 70},               {"slip_map", 60},            {"slip_join", 60},
      {"slip_map_new", 50},       {"follow", 40},              {"slip_follow", 35},
      {"slip_type_follow", 30},   {"complete_edge", 90},       {"slip_complete_edge", 90},
      {"extend_edge", 90},        {"complete_fact", 70},       {"slip_complete_fact", 70},
      {"extend_fact", 70},        {"slip_extend_fact", 70},    {"complete_node", 40},
      {"slip_complete_node", 35}, {"extend_node", 40},         {"begin", 0},
      {"type_slip", 0}};
  auto it = p.find(name);
  return it == p.end() ? 10 : it->second;
}

/// Group and side a concrete node belongs to. Fact nodes without metadata
/// inherit them from their values; nodes with none (types, slots, abstract
/// and generated bookkeeping nodes) or mixed origins are not concrete.
struct Origin {
  bool valid = false;
  std::string group;
  Side side = Side::kNone;
};

inline Origin direct_origin(const Workspace& ws, NodeId n) {
  Origin o;
  if (auto* inst = ws.instance_of(n)) {
    o.valid = true;
    o.group = inst->group;
    o.side = inst->side;
  }
  return o;
}

inline Origin origin_of(const Workspace& ws, NodeId n) {
  auto o = direct_origin(ws, n);
  if (o.valid) return o;
  if (ws.s.count(HolePattern::of({}, n, ws.abstraction())) > 0) return Origin{};
  bool any = false;
  for (const auto& t : ws.s.bucket(HolePattern::of(n, {}, {}))) {
    auto v = direct_origin(ws, t.value);
    if (!v.valid) continue;
    if (!any) {
      o = v;
      any = true;
    } else if (v.group != o.group || v.side != o.side) {
      return Origin{};
    }
  }
  return o;
}

/// A rule term resolved for prechecks: an existing node, or a created label
/// with its generated name.
struct PTerm {
  NodeId id;
  bool fresh = false;
  std::size_t created = 0;
  friend bool operator==(const PTerm& a, const PTerm& b) {
    return a.fresh == b.fresh && (a.fresh ? a.created == b.created : a.id == b.id);
  }
};

struct Candidate {
  const Rule* rule = nullptr;
  Assignment a;  // canonical
  std::string key;
  /// Generated names of the created terms, filled on first use.
  mutable std::vector<std::string> created_names;
};

struct ResolvedCandidate {
  std::vector<std::array<PTerm, 3>> adds;
  /// Mapping facts (M, X, α) among the adds, by index.
  std::vector<std::size_t> mapping_adds;
  bool any_new = false;
};

/// Greedy engine over one workspace. Tracks which group each mapping node
/// stands for, runs phases with per-phase candidate filters, and records the
/// trace.
class Engine {
 public:
  using Filter = std::function<bool(const Candidate&)>;

  Engine(Workspace& ws, std::vector<Rule> consistency, const SearchConfig& cfg)
      : ws_(ws), consistency_(std::move(consistency)), cfg_(cfg) {}

  Workspace& ws() { return ws_; }
  std::vector<TraceEntry>& trace() { return trace_; }
  std::size_t used() const { return used_; }
  void set_limit(std::size_t limit) { limit_ = limit; }
  std::size_t limit() const { return limit_; }
  bool exhausted() const { return used_ >= limit_; }
  /// Counts work done elsewhere (attempts on copies) against the budget.
  void charge(std::size_t n) { used_ += n; }

  std::map<std::string, std::string>& mapping_group() { return mapping_group_; }

  std::optional<std::string> group_of_mapping(NodeId m) const {
    auto it = mapping_group_.find(ws_.s.name(m));
    if (it == mapping_group_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<NodeId> mapping_for(const std::string& group) const {
    for (const auto& [name, g] : mapping_group_)
      if (g == group)
        if (auto id = ws_.s.find(name)) return *id;
    return std::nullopt;
  }

  std::optional<NodeId> get(const Candidate& c, const std::string& var) const {
    const auto& vs = c.rule->vars;
    auto it = std::find(vs.begin(), vs.end(), var);
    if (it == vs.end()) return std::nullopt;
    return c.a[static_cast<std::size_t>(it - vs.begin())];
  }

  bool is_mapping(NodeId m) const { return ws_.s.has(Fact{abs_of(m), m, ws_.abstraction()}); }

  /// Whether n is the image of some mapping fact.
  bool is_abstract(NodeId n) const {
    for (const auto& t : ws_.s.bucket(HolePattern::of({}, {}, n)))
      if (is_mapping(t.fact)) return true;
    return false;
  }

  /// Resolves a candidate's added facts; generated names that already exist
  /// stand for themselves.
  ResolvedCandidate resolve(const Candidate& c) const {
    ResolvedCandidate out;
    const Rule& r = *c.rule;
    auto consts = resolve_consts(ws_.s, r);
    std::vector<PTerm> created;
    if (c.created_names.size() != r.created.size()) {
      c.created_names.clear();
      for (const auto& label : r.created) c.created_names.push_back(generated_name(creation_provenance(ws_.s, r, c.a, label)));
    }
    for (std::size_t i = 0; i < r.created.size(); ++i) {
      if (auto id = ws_.s.find(c.created_names[i])) {
        created.push_back(PTerm{*id, false, i});
      } else {
        created.push_back(PTerm{NodeId{}, true, i});
      }
    }
    for (std::size_t k = 0; k < r.added.size(); ++k) {
      std::array<PTerm, 3> f;
      for (std::size_t i = 0; i < 3; ++i) {
        const auto& t = r.added[k][i];
        if (t.kind == Term::Kind::kVar) f[i] = PTerm{c.a[t.index]};
        else if (t.kind == Term::Kind::kConst) f[i] = PTerm{(*consts)[t.index]};
        else f[i] = created[t.index];
      }
      const auto& lead = r.term_name(r.added[k][0]);
      if (lead == "MaA" || lead == "MaB") out.mapping_adds.push_back(k);
      if (f[0].fresh || f[1].fresh || f[2].fresh || !ws_.s.has(Fact{f[0].id, f[1].id, f[2].id})) out.any_new = true;
      out.adds.push_back(f);
    }
    return out;
  }

  /// Functionality, injectivity and shared-node exclusivity of the mapping
  /// facts a candidate would add.
  bool mapping_ok(const ResolvedCandidate& rc) const {
    std::map<std::pair<NodeId, NodeId>, PTerm> img;
    for (auto k : rc.mapping_adds) {
      const auto& f = rc.adds[k];
      if (f[0].fresh) continue;
      const NodeId m = f[0].id, x = f[1].id;
      if (f[1].fresh) {
        // A new concrete node may only take an abstract node nobody holds.
        if (!f[2].fresh && ws_.s.count(HolePattern::of(m, {}, f[2].id)) > 0) return false;
        continue;
      }
      auto [it, fresh] = img.emplace(std::make_pair(m, x), f[2]);
      if (!fresh && !(it->second == f[2])) return false;
      for (const auto& t : ws_.s.bucket(HolePattern::of(m, x, {})))
        if (f[2].fresh || t.key != f[2].id) return false;
      if (!f[2].fresh)
        for (const auto& t : ws_.s.bucket(HolePattern::of(m, {}, f[2].id)))
          if (t.value != x) return false;
      auto o = direct_origin(ws_, x);
      if (o.valid && o.group.empty())
        for (const auto& t : ws_.s.bucket(HolePattern::of({}, x, {})))
          if (t.fact != m && is_mapping(t.fact)) return false;
    }
    return true;
  }

  /// Group/side purity of the concrete roles of a candidate.
  bool roles_ok(const Candidate& c) const {
    auto A = get(c, "A"), B = get(c, "B"), MA = get(c, "MA"), MB = get(c, "MB");
    auto MaA = get(c, "MaA"), MaB = get(c, "MaB");
    if (A && B && *A == *B) return false;
    if (MA && MB && *MA == *MB) return false;
    auto check = [&](std::optional<NodeId> x, std::optional<NodeId> m) {
      if (!x) return true;
      // Nodes built during completion carry no metadata; being mapped by
      // their own mapping node is enough.
      if (m && ws_.s.count(HolePattern::of(*m, *x, {})) > 0) return true;
      auto o = origin_of(ws_, *x);
      if (!o.valid) return false;
      if (!m) return true;
      auto g = group_of_mapping(*m);
      if (!g) return false;
      return o.group.empty() || o.group == *g;
    };
    if (!check(A, MaA) || !check(MA, MaA) || !check(B, MaB) || !check(MB, MaB)) return false;
    // Abstract nodes are never slots of concrete facts.
    for (const char* v : {"C", "C1", "C2"})
      if (auto C = get(c, v); C && is_abstract(*C)) return false;
    // A type abstracted by a slip is only used through its abstract type.
    if (auto C = get(c, "C"); C && MaA && ws_.s.count(HolePattern::of(*MaA, *C, {})) > 0) return false;
    if (auto C = get(c, "C"); C && MaB && ws_.s.count(HolePattern::of(*MaB, *C, {})) > 0) return false;
    if (A && B) {
      auto oa = origin_of(ws_, *A), ob = origin_of(ws_, *B);
      if (oa.valid && ob.valid && oa.side != ob.side) return false;
      // Punctuation only corresponds to the same punctuation.
      auto pa = punctuation_of(*A), pb = punctuation_of(*B);
      if ((pa || pb) && pa != pb && token_typed(*A) && token_typed(*B)) return false;
    }
    return true;
  }

  /// The punctuation character a token stands for, if it is one.
  std::optional<char> punctuation_of(NodeId n) const {
    static const std::string kPunct = "=.,(){}[];*+-/<>";
    for (const auto& t : ws_.s.bucket(HolePattern::of({}, n, {}))) {
      auto it = ws_.type_token.find(t.key);
      if (it != ws_.type_token.end() && it->second.size() == 1 && kPunct.find(it->second[0]) != std::string::npos)
        return it->second[0];
    }
    return std::nullopt;
  }

  bool token_typed(NodeId n) const {
    for (const auto& t : ws_.s.bucket(HolePattern::of({}, n, {})))
      if (ws_.slippable.count(t.key)) return true;
    return false;
  }

  /// Matched minus unmatched keys around two nodes; token types count as
  /// equal to each other.
  int similarity(NodeId a, NodeId b) const {
    const auto &sa = signature(a), &sb = signature(b);
    std::size_t common = 0;
    for (std::size_t i = 0, j = 0; i < sa.size() && j < sb.size();) {
      if (sa[i] < sb[j]) {
        ++i;
      } else if (sb[j] < sa[i]) {
        ++j;
      } else {
        ++common, ++i, ++j;
      }
    }
    return static_cast<int>(2 * common) - static_cast<int>(sa.size() + sb.size() - common);
  }

  int position_distance(NodeId a, NodeId b) const {
    auto ia = ws_.info.find(a), ib = ws_.info.find(b);
    if (ia == ws_.info.end() || ib == ws_.info.end()) return 0;
    if (ia->second.position < 0 || ib->second.position < 0) return 0;
    return std::abs(ia->second.position - ib->second.position);
  }

  /// Facts that become liftable right after `c`: co-keyed edges of already
  /// co-mapped fact nodes around A and B.
  int bonus(const Candidate& c) const {
    auto A = get(c, "A"), B = get(c, "B"), MaA = get(c, "MaA"), MaB = get(c, "MaB");
    if (!A || !B || !MaA || !MaB) return 0;
    int n = 0;
    for (const auto& ta : ws_.s.bucket(HolePattern::of({}, *A, {}))) {
      if (is_mapping(ta.fact)) continue;
      auto fa = abstract_of(ws_, *MaA, ta.fact);
      if (!fa) continue;
      for (const auto& tb : ws_.s.bucket(HolePattern::of({}, *B, ta.key)))
        if (abstract_of(ws_, *MaB, tb.fact) == fa) ++n;
    }
    return n;
  }

  /// Applies `c` (already known to be valid), checks consistency and rolls
  /// back on violation. Returns whether it was kept.
  bool apply(const Candidate& c, std::optional<ApplyDelta>* delta_out = nullptr) {
    ++used_;
    auto m = ws_.s.mark();
    auto d = apply_rule(ws_, *c.rule, c.a);
    bool ok = check_consistency_since(ws_, consistency_, m).empty();
    if (!ok) {
      ws_.s.rollback(m);
      sig_cache_.clear();
    } else {
      ws_.s.release(m);
      if (c.rule->name == "begin" || c.rule->name == "type_slip") register_begin(c);
      if (delta_out) *delta_out = d;
    }
    record(c, ok);
    return ok;
  }

  void record(const Candidate& c, bool accepted) {
    TraceEntry e;
    e.rule = c.rule->name;
    for (std::size_t i = 0; i < c.a.size(); ++i) e.assignment.emplace_back(c.rule->vars[i], ws_.s.name(c.a[i]));
    e.accepted = accepted;
    e.score_after = score(ws_, cfg_.weights).weighted_score;
    trace_.push_back(std::move(e));
  }

  void register_begin(const Candidate& c) {
    const Rule& r = *c.rule;
    for (const auto& [label, var] : {std::pair{"MaA", "A"}, std::pair{"MaB", "B"}}) {
      auto name = generated_name(creation_provenance(ws_.s, r, c.a, label));
      mapping_group_[name] = origin_of(ws_, *get(c, var)).group;
    }
  }

  /// Greedily applies candidates of `rules` accepted by `filter` until none
  /// adds facts or the budget is spent.
  void greedy(const std::vector<const Rule*>& rules, const Filter& filter) {
    std::vector<Candidate> pool;
    std::set<std::pair<const Rule*, Assignment>> seen;
    auto add_matches = [&](const Rule* r, std::vector<Assignment> as) {
      for (auto& a : as) {
        auto canon = canonicalize_assignment(ws_.s, *r, a);
        if (!seen.emplace(r, canon).second) continue;
        auto key = assignment_key(ws_.s, *r, canon);
        pool.push_back(Candidate{r, std::move(canon), std::move(key), {}});
      }
    };
    for (auto* r : rules) add_matches(r, find_assignments(ws_.s, *r));

    std::vector<NodeId> last_nodes;
    while (!exhausted()) {
      struct Live {
        std::size_t idx;
        ResolvedCandidate rc;
      };
      std::vector<Live> live;
      std::vector<Candidate> keep;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& c = pool[i];
        if (!filter(c) || !roles_ok(c)) continue;
        auto rc = resolve(c);
        if (!rc.any_new || !mapping_ok(rc)) continue;
        keep.push_back(c);
        live.push_back({keep.size() - 1, std::move(rc)});
      }
      pool = std::move(keep);
      if (live.empty()) break;

      // (M, X) -> distinct targets proposed across live candidates.
      std::map<std::pair<NodeId, NodeId>, std::set<std::string>> targets;
      auto target_keys = [&](const Live& l) {
        std::vector<std::pair<std::pair<NodeId, NodeId>, std::string>> out;
        for (auto k : l.rc.mapping_adds) {
          const auto& f = l.rc.adds[k];
          if (f[0].fresh || f[1].fresh) continue;
          std::string t;
          if (!f[2].fresh) {
            t = "n" + std::to_string(f[2].id.value);
          } else {
            for (auto j : l.rc.mapping_adds) {
              const auto& g = l.rc.adds[j];
              if (j != k && g[2] == f[2] && !g[0].fresh && !g[1].fresh)
                t += "p" + std::to_string(g[0].id.value) + ":" + std::to_string(g[1].id.value);
            }
          }
          out.emplace_back(std::make_pair(f[0].id, f[1].id), t);
        }
        return out;
      };
      std::vector<std::vector<std::pair<std::pair<NodeId, NodeId>, std::string>>> tk;
      for (const auto& l : live) {
        tk.push_back(target_keys(l));
        for (const auto& [k, t] : tk.back()) targets[k].insert(t);
      }

      std::vector<std::size_t> order(live.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      if (cfg_.locality_radius > 0 && !last_nodes.empty()) {
        auto near = neighbourhood(last_nodes, cfg_.locality_radius);
        std::vector<std::size_t> local;
        for (auto i : order) {
          const auto& c = pool[live[i].idx];
          bool hit = false;
          for (const char* v : {"A", "B", "MA", "MB"})
            if (auto n = get(c, v); n && near.count(*n)) hit = true;
          if (hit) local.push_back(i);
        }
        if (!local.empty()) order = std::move(local);
      }

      struct Rank {
        int forced, gain, priority, sim, dist;
        const std::string* key;
      };
      auto rank_of = [&](std::size_t i) {
        const auto& c = pool[live[i].idx];
        Rank r{};
        bool forced = !tk[i].empty();
        for (const auto& [k, t] : tk[i]) forced = forced && targets[k].size() == 1;
        r.forced = forced ? 1 : 0;
        r.gain = 1 + bonus(c);
        r.priority = rule_priority(c.rule->name);
        if (c.rule->name.rfind("slip_", 0) == 0 && !slip_is_new(c)) r.priority += 10;
        auto A = get(c, "A"), B = get(c, "B");
        if (A && B) {
          r.sim = similarity(*A, *B);
          r.dist = position_distance(*A, *B);
        }
        r.key = &c.key;
        return r;
      };
      auto better = [](const Rank& a, const Rank& b) {
        if (a.forced != b.forced) return a.forced > b.forced;
        if (a.gain != b.gain) return a.gain > b.gain;
        if (a.priority != b.priority) return a.priority > b.priority;
        if (a.sim != b.sim) return a.sim > b.sim;
        if (a.dist != b.dist) return a.dist < b.dist;
        return *a.key < *b.key;
      };
      std::size_t best = order.front();
      Rank br = rank_of(best);
      for (auto i : order) {
        if (i == best) continue;
        Rank ri = rank_of(i);
        if (better(ri, br)) {
          best = i;
          br = ri;
        }
      }
      Candidate chosen = pool[live[best].idx];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(live[best].idx));
      auto m = ws_.s.mark();
      std::optional<ApplyDelta> d;
      if (!apply(chosen, &d)) {
        ws_.s.release(m);
        continue;
      }
      for (auto* r : rules) add_matches(r, find_assignments_differential(ws_.s, *r, m));
      last_nodes.clear();
      for (const auto& f : d->added_facts)
        for (auto n : {f.fact, f.value})
          if (!is_mapping(n)) last_nodes.push_back(n);
      ws_.s.release(m);
    }
  }

  /// Applies non-analogy rules to a fixpoint, keeping every bound node that
  /// carries instance metadata inside one instance.
  void saturate(const std::vector<Rule>& rules) {
    bool changed = true;
    while (changed && !exhausted()) {
      changed = false;
      for (const auto& r : rules) {
        for (const auto& a : canonical_only(ws_.s, r, find_assignments(ws_.s, r))) {
          if (exhausted()) return;
          int inst = -1;
          bool same = true;
          for (auto n : a) {
            auto it = ws_.info.find(n);
            if (it == ws_.info.end() || it->second.instance < 0) continue;
            if (inst >= 0 && it->second.instance != inst) same = false;
            inst = it->second.instance;
          }
          if (!same) continue;
          Candidate c{&r, a, assignment_key(ws_.s, r, a), {}};
          if (!resolve(c).any_new) continue;
          apply(c);
          changed = true;
        }
      }
    }
  }

 private:
  NodeId abs_of(NodeId m) const {
    for (const auto& t : ws_.s.bucket(HolePattern::of({}, m, ws_.abstraction()))) return t.fact;
    return NodeId{};
  }

  /// A slip rule whose type mapping for the B side does not exist yet.
  bool slip_is_new(const Candidate& c) const {
    auto C2 = get(c, "C2"), MaB = get(c, "MaB"), aC = get(c, "aC");
    if (!C2 || !MaB || !aC) return true;
    return !ws_.s.has(Fact{*MaB, *C2, *aC});
  }

  /// Sorted non-mapping keys around n, token types collapsed to one value.
  /// Cached until the number of facts around n changes.
  const std::vector<std::uint32_t>& signature(NodeId n) const {
    const auto& b = ws_.s.bucket(HolePattern::of({}, n, {}));
    auto& [count, sig] = sig_cache_[n];
    if (count == b.size() + 1) return sig;
    count = b.size() + 1;
    sig.clear();
    for (const auto& t : b) {
      if (is_mapping(t.fact)) continue;
      sig.push_back(ws_.slippable.count(t.key) ? std::numeric_limits<std::uint32_t>::max() : t.key.value);
    }
    std::sort(sig.begin(), sig.end());
    return sig;
  }

  std::unordered_set<NodeId> neighbourhood(const std::vector<NodeId>& from, std::size_t radius) const {
    std::unordered_set<NodeId> seen(from.begin(), from.end());
    std::deque<std::pair<NodeId, std::size_t>> q;
    for (auto n : from) q.emplace_back(n, 0);
    while (!q.empty()) {
      auto [n, d] = q.front();
      q.pop_front();
      if (d == radius) continue;
      auto visit = [&](NodeId x) {
        if (seen.insert(x).second) q.emplace_back(x, d + 1);
      };
      for (const auto& t : ws_.s.bucket(HolePattern::of(n, {}, {}))) visit(t.value);
      for (const auto& t : ws_.s.bucket(HolePattern::of({}, n, {})))
        if (!is_mapping(t.fact)) visit(t.fact);
    }
    return seen;
  }

  Workspace& ws_;
  std::vector<Rule> consistency_;
  const SearchConfig& cfg_;
  std::vector<TraceEntry> trace_;
  std::size_t used_ = 0;
  std::size_t limit_ = 0;
  std::map<std::string, std::string> mapping_group_;
  mutable std::unordered_map<NodeId, std::pair<std::size_t, std::vector<std::uint32_t>>> sig_cache_;
};

}  // namespace detail

// ---- analogy pipeline ----------------------------------------------------------

/// What to abstract and complete: example groups in order, an optional prompt
/// group whose after side is to be built, and rules applied up front within
/// single instances (successor rules).
struct AnalogyPlan {
  std::vector<std::string> examples;
  std::optional<std::string> prompt;
  std::optional<NodeId> prompt_after;
  std::vector<Rule> saturation;
};

struct AnalogyResult {
  ScoreReport report;
  std::vector<TraceEntry> trace;
  std::size_t applications = 0;
  /// Concrete prompt-side tokens in output order, with their texts.
  std::vector<NodeId> output_nodes;
  std::vector<std::string> tokens;
  bool complete = true;
  std::size_t missing = 0;
};

namespace detail {

inline std::vector<const Rule*> pick(const std::vector<Rule>& rules, std::initializer_list<const char*> names) {
  std::vector<const Rule*> out;
  for (const char* n : names)
    for (const auto& r : rules)
      if (r.name == n) out.push_back(&r);
  return out;
}

inline const Rule* find_rule(const std::vector<Rule>& rules, const std::string& name) {
  for (const auto& r : rules)
    if (r.name == name) return &r;
  return nullptr;
}

struct Attempt {
  Workspace ws;
  std::vector<TraceEntry> trace;
  std::size_t used = 0;
  double score = 0;
  std::map<std::string, std::string> mapping_group;
};

/// Cross-group begin candidates between groups g0 and g1, rarest key first.
inline std::vector<Candidate> begin_candidates(Engine& e, const std::vector<Rule>& rules, const std::string& g0,
                                               const std::string& g1, const SearchConfig& cfg) {
  const auto& ws = e.ws();
  std::vector<Candidate> out;
  auto collect = [&](const Rule* r, const char* ka, const char* kb) {
    if (!r) return;
    for (const auto& a : find_assignments(ws.s, *r)) {
      auto canon = canonicalize_assignment(ws.s, *r, a);
      if (canon != a) continue;
      Candidate c{r, canon, assignment_key(ws.s, *r, canon), {}};
      auto A = *e.get(c, "A"), B = *e.get(c, "B"), MA = *e.get(c, "MA"), MB = *e.get(c, "MB");
      auto oa = origin_of(ws, A), ob = origin_of(ws, B), oma = origin_of(ws, MA), omb = origin_of(ws, MB);
      if (!oa.valid || !ob.valid || !oma.valid || !omb.valid) continue;
      if (!((oa.group == g0 && ob.group == g1) || (oa.group == g1 && ob.group == g0))) continue;
      if (oma.group != oa.group || omb.group != ob.group || oa.side != ob.side) continue;
      auto CA = *e.get(c, ka), CB = *e.get(c, kb);
      if (cfg.content_begin_only && (!ws.type_token.count(CA) || !ws.type_token.count(CB))) continue;
      out.push_back(std::move(c));
    }
  };
  collect(find_rule(rules, "begin"), "C", "C");
  if (out.empty() && !cfg.content_begin_only) collect(find_rule(rules, "type_slip"), "C1", "C2");
  struct Key {
    std::size_t rarity;
    int sim, dist;
  };
  std::map<std::string, Key> keys;
  for (const auto& c : out) {
    auto C = e.get(c, "C") ? *e.get(c, "C") : *e.get(c, "C1");
    auto A = *e.get(c, "A"), B = *e.get(c, "B");
    keys[c.key] = Key{ws.s.count(HolePattern::of({}, {}, C)), e.similarity(A, B), e.position_distance(A, B)};
  }
  std::sort(out.begin(), out.end(), [&](const Candidate& a, const Candidate& b) {
    const auto &ka = keys[a.key], &kb = keys[b.key];
    if (ka.rarity != kb.rarity) return ka.rarity < kb.rarity;
    if (ka.sim != kb.sim) return ka.sim > kb.sim;
    if (ka.dist != kb.dist) return ka.dist < kb.dist;
    return a.key < b.key;
  });
  return out;
}

inline std::vector<const Rule*> growth_rules(const std::vector<Rule>& rules) {
  return pick(rules, {"follow", "map_fact", "lift_fact", "slip_type_follow", "slip_map_new", "slip_map",
                      "slip_follow", "slip_lift"});
}

/// Runs one attempt from `begin` on a copy of `base`.
inline Attempt run_attempt(const Workspace& base, const std::map<std::string, std::string>& groups,
                           const std::vector<Rule>& rules, const std::vector<Rule>& consistency,
                           const Candidate& begin, const std::set<std::string>& allowed, const SearchConfig& cfg,
                           std::size_t limit) {
  Attempt at{base, {}, 0, 0, groups};
  Engine e(at.ws, consistency, cfg);
  e.mapping_group() = groups;
  e.set_limit(limit);
  if (limit > 0 && e.apply(begin)) {
    e.greedy(growth_rules(rules), [&](const Candidate& c) {
      auto MaA = e.get(c, "MaA"), MaB = e.get(c, "MaB");
      if (!MaA || !MaB) return false;
      auto ga = e.group_of_mapping(*MaA), gb = e.group_of_mapping(*MaB);
      return ga && gb && allowed.count(*ga) && allowed.count(*gb);
    });
  }
  at.trace = std::move(e.trace());
  at.used = e.used();
  at.score = score(at.ws, cfg.weights).weighted_score;
  at.mapping_group = e.mapping_group();
  return at;
}

/// Tokens listed by the membership fact of a container.
inline std::vector<NodeId> members_of(const Workspace& ws, NodeId container) {
  std::vector<NodeId> out;
  for (const auto& t : ws.s.bucket(HolePattern::of({}, container, {}))) {
    const auto& k = ws.s.name(t.key);
    if (k != slot::kString && k != slot::kFile) continue;
    for (const auto& u : ws.s.bucket(HolePattern::of(t.fact, {}, {})))
      if (u.value != container && std::find(out.begin(), out.end(), u.value) == out.end()) out.push_back(u.value);
  }
  return out;
}

/// Token type of a node (a key registered as slippable), if any.
inline std::optional<NodeId> token_type_of(const Workspace& ws, NodeId n) {
  std::optional<NodeId> best;
  for (const auto& t : ws.s.bucket(HolePattern::of({}, n, {})))
    if (ws.slippable.count(t.key) && (!best || ws.s.name(t.key) < ws.s.name(*best))) best = t.key;
  return best;
}

inline std::optional<char> letter_of(const Workspace& ws, NodeId type) {
  const auto& n = ws.s.name(type);
  if (n.size() == 8 && n.rfind("Letter:", 0) == 0) return n[7];
  return std::nullopt;
}

}  // namespace detail

/// Runs the analogy pipeline on an encoded workspace.
inline AnalogyResult solve(Workspace& ws, const AnalogyPlan& plan, const std::vector<Rule>& rules,
                           const std::vector<Rule>& consistency, const SearchConfig& cfg,
                           const std::string& alphabet = kLowercase) {
  using namespace detail;
  AnalogyResult res;
  Engine main(ws, consistency, cfg);
  main.set_limit(cfg.budget);
  main.saturate(plan.saturation);

  // Phase 1: the first two groups (the prompt stands in for a missing second
  // example).
  std::vector<std::string> core = plan.examples;
  const bool single = plan.examples.size() == 1 && plan.prompt;
  if (single) core.push_back(*plan.prompt);
  std::vector<std::string> joiners;
  for (std::size_t i = 2; i < core.size(); ++i) joiners.push_back(core[i]);
  if (plan.prompt && !single) joiners.push_back(*plan.prompt);

  std::optional<NodeId> abs_id;
  if (core.size() >= 2) {
    auto begins = begin_candidates(main, rules, core[0], core[1], cfg);
    if (cfg.seed != 0 && begins.size() > 1) {
      // Rotate among the equally rare leaders only.
      std::size_t n = 1;
      auto C = [&](const Candidate& c) { return main.get(c, "C") ? *main.get(c, "C") : *main.get(c, "C1"); };
      while (n < begins.size() && ws.s.count(HolePattern::of({}, {}, C(begins[n]))) ==
                                      ws.s.count(HolePattern::of({}, {}, C(begins[0]))))
        ++n;
      std::rotate(begins.begin(), begins.begin() + static_cast<std::ptrdiff_t>(cfg.seed % n),
                  begins.begin() + static_cast<std::ptrdiff_t>(n));
    }
    if (begins.size() > cfg.attempts) begins.resize(std::max<std::size_t>(cfg.attempts, 1));
    const std::size_t remaining = cfg.budget > main.used() ? cfg.budget - main.used() : 0;
    const std::size_t share = begins.empty() ? 0 : remaining / begins.size();
    const std::set<std::string> allowed{core[0], core[1]};
    std::vector<std::optional<Attempt>> attempts(begins.size());
    auto run = [&](std::size_t i) {
      attempts[i] = run_attempt(ws, main.mapping_group(), rules, consistency, begins[i], allowed, cfg, share);
    };
    if (cfg.parallel > 1 && begins.size() > 1) {
      for (std::size_t start = 0; start < begins.size(); start += cfg.parallel) {
        std::vector<std::thread> pool;
        for (std::size_t i = start; i < std::min(begins.size(), start + cfg.parallel); ++i) pool.emplace_back(run, i);
        for (auto& t : pool) t.join();
      }
    } else {
      for (std::size_t i = 0; i < begins.size(); ++i) run(i);
    }
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < attempts.size(); ++i) {
      auto& at = *attempts[i];
      main.trace().insert(main.trace().end(), at.trace.begin(), at.trace.end());
      if (!best || at.score > attempts[*best]->score) best = i;
    }
    std::size_t spent = 0;
    for (auto& at : attempts) spent += at->used;
    if (best && attempts[*best]->score > 0) {
      auto& win = *attempts[*best];
      if (cfg.phase_reuse) {
        // Replaying accepted applications reproduces the attempt exactly:
        // generated names depend only on the canonical assignments.
        for (const auto& t : win.trace) {
          if (!t.accepted) continue;
          const Rule* r = find_rule(rules, t.rule);
          Assignment a;
          for (const auto& [v, n] : t.assignment) a.push_back(ws.s.intern(n));
          apply_rule(ws, *r, a);
        }
        main.mapping_group() = win.mapping_group;
      } else {
        main.set_limit(main.used() + share);
        main.apply(begins[*best]);
        main.greedy(growth_rules(rules), [&](const Candidate& c) {
          auto MaA = main.get(c, "MaA"), MaB = main.get(c, "MaB");
          if (!MaA || !MaB) return false;
          auto ga = main.group_of_mapping(*MaA), gb = main.group_of_mapping(*MaB);
          return ga && gb && allowed.count(*ga) && allowed.count(*gb);
        });
      }
    }
    main.set_limit(cfg.budget);
    main.charge(spent);
    auto views = abstractions(ws);
    if (!views.empty()) abs_id = views.front().id;
  }

  // Phase 2: extra examples and the prompt join the abstraction.
  std::map<std::string, NodeId> mapping_of;
  for (const auto& g : core)
    if (auto m = main.mapping_for(g)) mapping_of[g] = *m;
  if (abs_id) {
    for (const auto& g : joiners) {
      auto m = ws.s.intern("map:" + g);
      ws.s.add(*abs_id, m, ws.abstraction());
      main.mapping_group()["map:" + g] = g;
      mapping_of[g] = m;
      main.greedy(pick(rules, {"join", "slip_join"}), [&](const Candidate& c) {
        auto MaA = main.get(c, "MaA"), MaB = main.get(c, "MaB");
        if (!MaA || !MaB || *MaB != m) return false;
        auto ga = main.group_of_mapping(*MaA);
        return ga && *ga != g && std::find(core.begin(), core.end(), *ga) != core.end();
      });
    }
  }

  ScoreReport rep = score(ws, cfg.weights);
  std::optional<AbstractionView> view;
  if (abs_id) view = view_of(ws, *abs_id);

  // Prompt fit before completion.
  std::optional<NodeId> mp;
  if (plan.prompt && mapping_of.count(*plan.prompt)) mp = mapping_of[*plan.prompt];
  if (plan.prompt) {
    rep.has_prompt = true;
    if (view && mp) {
      for (auto f : view->abstract_facts) {
        bool inst = ws.s.count(HolePattern::of(*mp, {}, f)) > 0;
        if (inst) {
          rep.prompt_fit += abstract_fact_weight(ws, *view, f, cfg.weights);
          continue;
        }
        // Uninstantiated: weak if some example's own before side has it.
        for (auto m : view->mappings) {
          if (m == *mp) continue;
          auto x = concrete_of(ws, m, f);
          if (!x) continue;
          auto o = origin_of(ws, *x);
          if (o.valid && !o.group.empty() && o.side == Side::kBefore) rep.weak = true;
        }
      }
    } else {
      rep.weak = true;
    }
  }

  // Coverage of the smaller of the two core groups.
  if (core.size() >= 2) {
    double cov = 1.0;
    for (std::size_t gi = 0; gi < 2; ++gi) {
      std::size_t total = 0, mapped = 0;
      auto m = mapping_of.count(core[gi]) ? std::optional<NodeId>(mapping_of[core[gi]]) : std::nullopt;
      for (const auto& inst : ws.instances) {
        if (inst.group != core[gi]) continue;
        for (auto t : inst.tokens) {
          ++total;
          if (m && abstract_of(ws, *m, t)) ++mapped;
        }
      }
      if (total > 0) cov = std::min(cov, static_cast<double>(mapped) / static_cast<double>(total));
    }
    rep.coverage = view ? cov : 0.0;
  }
  rep.degenerate = rep.coverage < 0.5;

  // Phase 3: build the prompt's missing side.
  if (view && mp && plan.prompt_after && mapping_of.count(plan.examples.front())) {
    const NodeId m0 = mapping_of[plan.examples.front()];
    auto completion_filter = [&](const Candidate& c) {
      auto MaA = main.get(c, "MaA"), MaB = main.get(c, "MaB");
      if (!MaA || !MaB || *MaA != m0 || *MaB != *mp) return false;
      auto A = main.get(c, "A");
      if (!A) return false;
      auto o = origin_of(ws, *A);
      if (!o.valid || o.group != plan.examples.front() || o.side != Side::kAfter) return false;
      if (auto MA = main.get(c, "MA")) {
        auto om = origin_of(ws, *MA);
        if (!om.valid || om.group != plan.examples.front()) return false;
      }
      // One example cannot tell a fixed token from a varying one; token
      // types are left to resolution.
      if (auto C = main.get(c, "C"); single && C && ws.slippable.count(*C)) return false;
      return true;
    };
    std::vector<const Rule*> crules =
        pick(rules, {"complete_node", "complete_fact", "complete_edge", "slip_complete_node", "slip_complete_fact",
                     "slip_complete_edge"});
    if (single) {
      auto more = pick(rules, {"extend_node", "extend_fact", "slip_extend_fact", "extend_edge"});
      crules.insert(crules.end(), more.begin(), more.end());
    }
    main.greedy(crules, completion_filter);

    // Phase 4: token types the abstraction leaves open, from identity and
    // successor relations that hold between example types in every example.
    auto outputs = members_of(ws, *plan.prompt_after);
    std::vector<NodeId> ex_maps;
    for (const auto& g : plan.examples)
      if (mapping_of.count(g)) ex_maps.push_back(mapping_of[g]);
    bool added = false;
    for (auto b : outputs) {
      if (token_type_of(ws, b)) continue;
      auto ab = abstract_of(ws, *mp, b);
      if (!ab) continue;
      std::vector<NodeId> target;  // example types of b's counterparts
      for (auto m : ex_maps) {
        auto a = concrete_of(ws, m, *ab);
        auto t = a ? token_type_of(ws, *a) : std::nullopt;
        if (!t) {
          target.clear();
          break;
        }
        target.push_back(*t);
      }
      if (target.empty()) continue;
      std::map<std::string, int> support;
      for (const auto& t : ws.s.bucket(HolePattern::of(*mp, {}, {}))) {
        if (!ws.slippable.count(t.value)) continue;
        const NodeId prompt_type = t.value, ac = t.key;
        std::vector<NodeId> src;
        for (auto m : ex_maps) {
          auto x = concrete_of(ws, m, ac);
          if (!x) break;
          src.push_back(*x);
        }
        if (src.size() != ex_maps.size()) continue;
        for (int rel : {0, 1, -1}) {
          bool holds = true;
          for (std::size_t i = 0; i < src.size() && holds; ++i) {
            if (rel == 0) {
              holds = src[i] == target[i];
            } else {
              auto ls = letter_of(ws, src[i]), lt = letter_of(ws, target[i]);
              auto ps = ls ? alphabet.find(*ls) : std::string::npos, pt = lt ? alphabet.find(*lt) : std::string::npos;
              holds = ps != std::string::npos && pt != std::string::npos &&
                      static_cast<long>(pt) - static_cast<long>(ps) == rel;
            }
          }
          if (!holds) continue;
          std::string result;
          if (rel == 0) {
            result = ws.s.name(prompt_type);
          } else if (auto lp = letter_of(ws, prompt_type)) {
            auto pp = alphabet.find(*lp);
            long q = static_cast<long>(pp) + rel;
            if (pp == std::string::npos || q < 0 || q >= static_cast<long>(alphabet.size())) continue;
            result = letter_type(alphabet[static_cast<std::size_t>(q)]);
          } else {
            continue;
          }
          ++support[result];
        }
      }
      if (support.empty() && target.size() == 1 && !letter_of(ws, target[0])) ++support[ws.s.name(target[0])];
      if (support.empty()) continue;
      auto best = support.begin();
      for (auto it = support.begin(); it != support.end(); ++it)
        if (it->second > best->second) best = it;
      auto type = ws.s.intern(best->first);
      if (auto l = letter_of(ws, type)) {
        ws.type_token.emplace(type, std::string(1, *l));
        ws.slippable.insert(type);
      }
      const std::string prov = std::string("resolve\x1f") + ws.s.name(b) + "\x1f" + best->first;
      auto f = ws.intern_generated(generated_name(prov), prov);
      ws.s.add(f, b, type);
      added = true;
    }
    if (added) main.greedy(crules, completion_filter);
  }

  // Completion status and output.
  if (plan.prompt) {
    std::size_t missing = 0;
    if (!view) {
      // Nothing abstracted: trivially complete with no nodes; the report
      // marks it degenerate.
    } else if (!mp) {
      missing = 1;
    } else {
      auto v = view_of(ws, *abs_id);
      for (auto a : v.abstract_nodes) {
        bool token = false;
        for (auto m : v.mappings) {
          if (m == *mp) continue;
          auto x = concrete_of(ws, m, a);
          if (!x) continue;
          auto it = ws.info.find(*x);
          auto o = direct_origin(ws, *x);
          if (it != ws.info.end() && it->second.position >= 0 && o.valid && !o.group.empty()) token = true;
        }
        if (!token) continue;
        auto p = concrete_of(ws, *mp, a);
        if (!p || !token_type_of(ws, *p)) ++missing;
      }
    }
    if (plan.prompt_after) {
      auto outs = members_of(ws, *plan.prompt_after);
      // Order along the adjacency chain, else by the example counterpart's position.
      std::map<NodeId, NodeId> right;
      std::set<NodeId> in(outs.begin(), outs.end()), has_left;
      const auto L = ws.s.find(slot::kNextToLeft), R = ws.s.find(slot::kNextToRight);
      if (L && R)
        for (auto x : outs)
          for (const auto& t : ws.s.bucket(HolePattern::of({}, x, *L)))
            for (const auto& u : ws.s.bucket(HolePattern::of(t.fact, {}, *R)))
              if (in.count(u.value)) {
                right[x] = u.value;
                has_left.insert(u.value);
              }
      std::vector<NodeId> chain;
      for (auto x : outs)
        if (!has_left.count(x)) chain.push_back(x);
      if (chain.size() == 1) {
        std::set<NodeId> seen{chain[0]};
        while (right.count(chain.back()) && seen.insert(right[chain.back()]).second) chain.push_back(right[chain.back()]);
      } else {
        chain.clear();
      }
      if (chain.size() != outs.size()) {
        auto pos = [&](NodeId x) {
          int best = 1 << 30;
          if (mp && mapping_of.count(plan.examples.front()))
            if (auto a = abstract_of(ws, *mp, x))
              if (auto c = concrete_of(ws, mapping_of[plan.examples.front()], *a))
                if (auto it = ws.info.find(*c); it != ws.info.end()) best = it->second.position;
          return best;
        };
        chain = outs;
        std::stable_sort(chain.begin(), chain.end(), [&](NodeId a, NodeId b) {
          auto pa = pos(a), pb = pos(b);
          return pa != pb ? pa < pb : ws.s.name(a) < ws.s.name(b);
        });
      }
      res.output_nodes = chain;
      for (auto x : chain) {
        auto t = token_type_of(ws, x);
        auto text = t ? ws.token_text(*t) : std::nullopt;
        res.tokens.push_back(text ? *text : std::string());
      }
    }
    res.missing = missing;
    res.complete = missing == 0;
    rep.complete = res.complete;
    rep.missing = missing;
  }

  // Keep prompt-fit based fields; refresh the structural counts.
  auto fresh = score(ws, cfg.weights);
  rep.abstraction = fresh.abstraction;
  rep.abstract_fact_count = fresh.abstract_fact_count;
  rep.weighted_score = fresh.weighted_score;
  res.report = rep;
  res.trace = std::move(main.trace());
  res.applications = main.used();
  return res;
}

/// Searches an encoded workspace: rules that are not analogy rules are
/// applied first within single instances; the first two instance groups are
/// abstracted and any further groups join. The workspace keeps the best
/// structure found.
inline SearchResult search(Workspace& ws, const std::vector<Rule>& rules, const std::vector<Rule>& consistency,
                           const SearchConfig& cfg) {
  AnalogyPlan plan;
  for (const auto& inst : ws.instances)
    if (!inst.group.empty() && std::find(plan.examples.begin(), plan.examples.end(), inst.group) == plan.examples.end())
      plan.examples.push_back(inst.group);
  std::vector<Rule> analogy;
  for (const auto& r : rules) (detail::is_analogy_rule(r) ? analogy : plan.saturation).push_back(r);
  auto r = solve(ws, plan, analogy, consistency, cfg);
  return SearchResult{r.report, std::move(r.trace), r.applications};
}

/// Every analogy rule the completion pipeline uses.
inline std::vector<Rule> analogy_rules(bool slips = true) {
  auto out = builtin_rules();
  if (!slips) out.pop_back();
  for (auto& r : extension_rules()) out.push_back(std::move(r));
  for (auto& r : single_example_rules())
    if (slips || r.name.rfind("slip_", 0) != 0) out.push_back(std::move(r));
  if (slips)
    for (auto& r : type_slip_rules())
      if (r.name != "type_slip") out.push_back(std::move(r));
  return out;
}

/// Corresponding token nodes by name: for each abstract node, its
/// alphabetically first token instance paired with each of the others.
inline std::vector<std::pair<std::string, std::string>> token_pairs(const Workspace& ws) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& c : correspondences(ws)) {
    std::vector<std::string> names;
    for (auto [m, x] : c.instances) {
      auto it = ws.info.find(x);
      if (it != ws.info.end() && it->second.position >= 0) names.push_back(ws.s.name(x));
    }
    std::sort(names.begin(), names.end());
    for (std::size_t i = 1; i < names.size(); ++i) out.emplace_back(names[0], names[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Completion {
  std::string text;
  AnalogyResult result;
  std::vector<std::pair<std::string, std::string>> pairs;
};

/// Letter-string analogy: examples are (before, after) pairs; the prompt is
/// completed. Throws EncodeError on characters outside the alphabet.
inline Completion complete(const std::vector<std::pair<std::string, std::string>>& examples, const std::string& prompt,
                           const SearchConfig& cfg, const std::string& alphabet = kLowercase) {
  Workspace ws;
  AnalogyPlan plan;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto tag = "ex" + std::to_string(i);
    encode_pair(ws, examples[i].first, examples[i].second, tag, SequenceKind::kLetters, {}, alphabet);
    plan.examples.push_back(tag);
  }
  encode_pair(ws, prompt, "", "prompt", SequenceKind::kLetters, {}, alphabet);
  plan.prompt = "prompt";
  plan.prompt_after = ws.s.at("prompt.after");
  plan.saturation = gen_successor_rules(alphabet);
  Completion out;
  out.result = solve(ws, plan, analogy_rules(), consistency_rules(), cfg, alphabet);
  for (const auto& t : out.result.tokens) out.text += t;
  out.pairs = token_pairs(ws);
  return out;
}

/// Abstractions from the competing begins of a search, best first, with
/// duplicates (same correspondences) removed.
inline std::vector<std::pair<Workspace, ScoreReport>> rank_alternatives(const Workspace& base,
                                                                        const std::vector<Rule>& rules,
                                                                        const SearchConfig& cfg, std::size_t k) {
  std::vector<std::pair<Workspace, ScoreReport>> out;
  if (k == 0) return out;
  SearchConfig one = cfg;
  one.attempts = 1;
  // Each alternative is a full search restricted to one begin.
  Workspace probe = base;
  std::vector<Rule> analogy, saturation;
  for (const auto& r : rules) (detail::is_analogy_rule(r) ? analogy : saturation).push_back(r);
  detail::Engine e(probe, consistency_rules(), cfg);
  e.set_limit(cfg.budget);
  e.saturate(saturation);
  std::vector<std::string> groups;
  for (const auto& inst : probe.instances)
    if (!inst.group.empty() && std::find(groups.begin(), groups.end(), inst.group) == groups.end())
      groups.push_back(inst.group);
  if (groups.size() < 2) return out;
  auto begins = detail::begin_candidates(e, analogy, groups[0], groups[1], cfg);
  const std::size_t n = std::min(begins.size(), std::max(k, cfg.attempts));
  std::set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    auto at = detail::run_attempt(probe, e.mapping_group(), analogy, consistency_rules(), begins[i],
                                  {groups[0], groups[1]}, cfg, cfg.budget);
    std::string sig;
    std::vector<std::string> rows;
    for (const auto& c : correspondences(at.ws)) {
      std::string row;
      for (const auto& [m, x] : c.instances) row += at.ws.s.name(x) + "|";
      rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& r : rows) sig += r + "\n";
    if (!seen.insert(sig).second) continue;
    auto rep = score(at.ws, cfg.weights);
    out.emplace_back(std::move(at.ws), rep);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second.weighted_score > b.second.weighted_score; });
  if (out.size() > k) out.resize(k);
  return out;
}

}  // namespace triplet
