#pragma once
// Triplet structures: a node set S and a fact set F ⊆ S×S×S, indexed under
// every hole pattern of each fact, with an undo log for exact rollback.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace triplet {

/// Interned node handle. Only meaningful relative to the structure that issued it.
struct NodeId {
  static constexpr std::uint32_t kInvalid = 0xffffffffu;
  std::uint32_t value = kInvalid;

  constexpr bool valid() const { return value != kInvalid; }
  friend constexpr bool operator==(NodeId, NodeId) = default;
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

/// One triplet fact (f, v, k): in fact node f, value v fills slot k.
struct Fact {
  NodeId fact;
  NodeId value;
  NodeId key;

  constexpr NodeId at(std::size_t slot) const {
    return slot == 0 ? fact : slot == 1 ? value : key;
  }
  friend constexpr bool operator==(const Fact&, const Fact&) = default;
  friend constexpr auto operator<=>(const Fact&, const Fact&) = default;
};

/// A triple where each slot is either a concrete node or a hole.
struct HolePattern {
  std::array<std::optional<NodeId>, 3> slots;

  static HolePattern of(std::optional<NodeId> f, std::optional<NodeId> v,
                        std::optional<NodeId> k) {
    return HolePattern{{f, v, k}};
  }
  bool matches(const Fact& t) const {
    for (std::size_t i = 0; i < 3; ++i)
      if (slots[i] && *slots[i] != t.at(i)) return false;
    return true;
  }
  friend bool operator==(const HolePattern&, const HolePattern&) = default;
};

class StructureError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

// Index key: the three slots with holes encoded as kInvalid.
struct PatternKey {
  std::array<std::uint32_t, 3> v;
  friend bool operator==(const PatternKey&, const PatternKey&) = default;
};

struct PatternKeyHash {
  std::size_t operator()(const PatternKey& k) const {
    std::uint64_t h = mix64(k.v[0]);
    h = mix64(h ^ (std::uint64_t{k.v[1]} << 21));
    h = mix64(h ^ (std::uint64_t{k.v[2]} << 42));
    return static_cast<std::size_t>(h);
  }
};

inline PatternKey key_of(const HolePattern& p) {
  PatternKey k{};
  for (std::size_t i = 0; i < 3; ++i)
    k.v[i] = p.slots[i] ? p.slots[i]->value : NodeId::kInvalid;
  return k;
}

// mask bit i set => slot i is kept; cleared => hole.
inline PatternKey key_of(const Fact& t, unsigned mask) {
  PatternKey k{};
  for (std::size_t i = 0; i < 3; ++i)
    k.v[i] = (mask >> i) & 1u ? t.at(i).value : NodeId::kInvalid;
  return k;
}

}  // namespace detail

struct FactHash {
  std::size_t operator()(const Fact& t) const {
    return detail::PatternKeyHash{}(detail::key_of(t, 7u));
  }
};

using FactSet = std::unordered_set<Fact, FactHash>;

/// Handle returned by TripletStructure::mark().
struct Mark {
  std::uint64_t serial = 0;
  std::size_t depth = 0;
};

class TripletStructure {
 public:
  TripletStructure() = default;

  // ---- nodes ---------------------------------------------------------------

  NodeId intern(std::string_view name) {
    if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
    NodeId id{static_cast<std::uint32_t>(names_.size())};
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
  }

  std::optional<NodeId> find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  /// Like find() but throws for unknown names.
  NodeId at(std::string_view name) const {
    auto id = find(name);
    if (!id) throw StructureError("unknown node '" + std::string(name) + "'");
    return *id;
  }

  const std::string& name(NodeId id) const { return names_.at(id.value); }
  bool contains(NodeId id) const { return id.valid() && id.value < names_.size(); }
  std::size_t node_count() const { return names_.size(); }
  std::size_t fact_count() const { return facts_.size(); }

  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out(names_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = NodeId{static_cast<std::uint32_t>(i)};
    return out;
  }

  // ---- facts ---------------------------------------------------------------

  bool has(const Fact& t) const { return facts_.count(t) != 0; }

  /// Inserts a fact. Returns false (and logs nothing) when it is already present.
  bool add(const Fact& t) {
    check_nodes(t);
    if (!facts_.insert(t).second) return false;
    index_insert(t);
    log_.push_back({LogOp::kAdd, t});
    return true;
  }
  bool add(NodeId f, NodeId v, NodeId k) { return add(Fact{f, v, k}); }

  void remove(const Fact t) {  // by value: callers may pass a reference into facts()
    if (facts_.erase(t) == 0)
      throw StructureError("remove of absent fact (" + describe(t) + ")");
    index_erase(t);
    log_.push_back({LogOp::kRemove, t});
  }

  const FactSet& facts() const { return facts_; }

  /// The index bucket for a pattern; iterate without copying.
  const FactSet& bucket(const HolePattern& p) const {
    static const FactSet kEmpty;
    auto it = index_.find(detail::key_of(p));
    return it == index_.end() ? kEmpty : it->second;
  }

  std::size_t count(const HolePattern& p) const { return bucket(p).size(); }

  std::vector<Fact> query(const HolePattern& p) const {
    const auto& b = bucket(p);
    std::vector<Fact> out(b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  // ---- marks ---------------------------------------------------------------

  Mark mark() {
    marks_.push_back({log_.size(), names_.size(), ++serial_});
    return Mark{serial_, marks_.size()};
  }

  /// Restores the state at `m` and pops every mark taken after it (m included).
  void rollback(const Mark& m) {
    const MarkRecord rec = record(m);
    while (log_.size() > rec.log_size) {
      const LogEntry e = log_.back();
      log_.pop_back();
      if (e.op == LogOp::kAdd) {
        facts_.erase(e.fact);
        index_erase(e.fact);
      } else {
        facts_.insert(e.fact);
        index_insert(e.fact);
      }
    }
    while (names_.size() > rec.node_count) {
      ids_.erase(names_.back());
      names_.pop_back();
    }
    marks_.resize(m.depth - 1);
  }

  /// Drops the mark without undoing anything.
  void release(const Mark& m) {
    record(m);
    marks_.resize(m.depth - 1);
  }

  bool is_live(const Mark& m) const {
    return m.depth >= 1 && m.depth <= marks_.size() && marks_[m.depth - 1].serial == m.serial;
  }

  struct Delta {
    std::vector<Fact> added;
    std::vector<Fact> removed;
  };

  /// Net facts added and removed since `m`, sorted.
  Delta delta_since(const Mark& m) const {
    const MarkRecord rec = record(m);
    FactSet added, removed;
    for (std::size_t i = rec.log_size; i < log_.size(); ++i) {
      const auto& e = log_[i];
      if (e.op == LogOp::kAdd) {
        if (!removed.erase(e.fact)) added.insert(e.fact);
      } else {
        if (!added.erase(e.fact)) removed.insert(e.fact);
      }
    }
    Delta d{{added.begin(), added.end()}, {removed.begin(), removed.end()}};
    std::sort(d.added.begin(), d.added.end());
    std::sort(d.removed.begin(), d.removed.end());
    return d;
  }

  /// Nodes interned since `m`.
  std::vector<NodeId> nodes_since(const Mark& m) const {
    const MarkRecord rec = record(m);
    std::vector<NodeId> out;
    for (std::size_t i = rec.node_count; i < names_.size(); ++i)
      out.push_back(NodeId{static_cast<std::uint32_t>(i)});
    return out;
  }

  std::size_t log_size() const { return log_.size(); }

  // ---- helpers ---------------------------------------------------------------

  std::string describe(const Fact& t) const {
    auto nm = [&](NodeId n) { return contains(n) ? name(n) : std::string("<invalid>"); };
    return nm(t.fact) + " " + nm(t.value) + " " + nm(t.key);
  }

  /// Name-level snapshot, independent of interning order.
  struct Snapshot {
    std::vector<std::string> nodes;
    std::vector<std::array<std::string, 3>> facts;
    friend bool operator==(const Snapshot&, const Snapshot&) = default;
  };

  Snapshot snapshot() const {
    Snapshot s;
    s.nodes = names_;
    std::sort(s.nodes.begin(), s.nodes.end());
    s.facts.reserve(facts_.size());
    for (const auto& t : facts_) s.facts.push_back({name(t.fact), name(t.value), name(t.key)});
    std::sort(s.facts.begin(), s.facts.end());
    return s;
  }

  /// Checks that every fact sits in exactly its 8 hole-pattern buckets.
  bool index_consistent() const {
    std::size_t expected = 0;
    for (const auto& t : facts_) {
      for (unsigned mask = 0; mask < 8; ++mask) {
        auto it = index_.find(detail::key_of(t, mask));
        if (it == index_.end() || !it->second.count(t)) return false;
      }
      expected += 8;
    }
    std::size_t total = 0;
    for (const auto& [k, b] : index_) {
      for (const auto& t : b) {
        if (!facts_.count(t)) return false;
        bool fits = false;
        for (unsigned mask = 0; mask < 8 && !fits; ++mask) fits = detail::key_of(t, mask) == k;
        if (!fits) return false;
      }
      total += b.size();
    }
    return total == expected;
  }

 private:
  enum class LogOp : std::uint8_t { kAdd, kRemove };
  struct LogEntry {
    LogOp op;
    Fact fact;
  };
  struct MarkRecord {
    std::size_t log_size;
    std::size_t node_count;
    std::uint64_t serial;
  };

  const MarkRecord& record(const Mark& m) const {
    if (!is_live(m)) throw StructureError("stale mark");
    return marks_[m.depth - 1];
  }

  void check_nodes(const Fact& t) const {
    if (!contains(t.fact) || !contains(t.value) || !contains(t.key))
      throw StructureError("fact references a node that was never interned");
  }

  void index_insert(const Fact& t) {
    for (unsigned mask = 0; mask < 8; ++mask) index_[detail::key_of(t, mask)].insert(t);
  }

  void index_erase(const Fact& t) {
    for (unsigned mask = 0; mask < 8; ++mask) {
      auto it = index_.find(detail::key_of(t, mask));
      it->second.erase(t);
      if (it->second.empty()) index_.erase(it);
    }
  }

  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> ids_;
  FactSet facts_;
  std::unordered_map<detail::PatternKey, FactSet, detail::PatternKeyHash> index_;
  std::vector<LogEntry> log_;
  std::vector<MarkRecord> marks_;
  std::uint64_t serial_ = 0;
};

// ---- single-variable existential solving ------------------------------------

/// One slot of a single-variable constraint.
struct SlotTerm {
  enum class Kind : std::uint8_t { kNode, kHole, kVar };
  Kind kind = Kind::kHole;
  NodeId node{};

  static SlotTerm node_of(NodeId n) { return {Kind::kNode, n}; }
  static SlotTerm hole() { return {Kind::kHole, {}}; }
  static SlotTerm var() { return {Kind::kVar, {}}; }
};

using VarConstraint = std::array<SlotTerm, 3>;

/// Nodes v such that every constraint, with v substituted for its variable
/// slots, matches some fact. An empty constraint list yields every node.
inline std::vector<NodeId> solve_single_var(const TripletStructure& s,
                                            const std::vector<VarConstraint>& constraints) {
  if (constraints.empty()) return s.nodes();
  // Project the smallest bucket, then probe the other constraints with the
  // variable filled in.
  auto pattern = [](const VarConstraint& c, std::optional<NodeId> v) {
    HolePattern p;
    for (std::size_t i = 0; i < 3; ++i) {
      if (c[i].kind == SlotTerm::Kind::kNode) p.slots[i] = c[i].node;
      else if (c[i].kind == SlotTerm::Kind::kVar) p.slots[i] = v;
    }
    return p;
  };
  std::size_t first = 0, first_count = 0;
  for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
    bool has_var = false;
    for (const auto& t : constraints[ci]) has_var = has_var || t.kind == SlotTerm::Kind::kVar;
    if (!has_var) throw StructureError("constraint has no variable slot");
    auto n = s.count(pattern(constraints[ci], std::nullopt));
    if (ci == 0 || n < first_count) {
      first = ci;
      first_count = n;
    }
  }
  const auto& c0 = constraints[first];
  std::vector<std::size_t> var_slots;
  for (std::size_t i = 0; i < 3; ++i)
    if (c0[i].kind == SlotTerm::Kind::kVar) var_slots.push_back(i);
  std::vector<NodeId> out;
  for (const auto& t : s.bucket(pattern(c0, std::nullopt))) {
    NodeId v = t.at(var_slots[0]);
    bool same = true;
    for (std::size_t j = 1; j < var_slots.size(); ++j) same = same && t.at(var_slots[j]) == v;
    if (same) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (constraints.size() > 1)
    out.erase(std::remove_if(out.begin(), out.end(),
                             [&](NodeId v) {
                               for (std::size_t ci = 0; ci < constraints.size(); ++ci)
                                 if (ci != first && s.count(pattern(constraints[ci], v)) == 0) return true;
                               return false;
                             }),
              out.end());
  return out;
}

}  // namespace triplet

template <>
struct std::hash<triplet::NodeId> {
  std::size_t operator()(triplet::NodeId n) const noexcept { return std::hash<std::uint32_t>{}(n.value); }
};
