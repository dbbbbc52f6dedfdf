#pragma once
// Rule matching: a backtracking constraint solver over the rule variables.
// At every step the unbound variable with the smallest candidate set is
// chosen; candidates come from single-variable intersections against the
// hole-pattern index.

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "triplet/rule.hpp"
#include "triplet/structure.hpp"

namespace triplet {

/// Total binding of a rule's variables, indexed like Rule::vars.
using Assignment = std::vector<NodeId>;

struct MatchOptions {
  /// Pre-bound variables; empty means none.
  std::vector<std::optional<NodeId>> seed;
  /// Optional per-variable candidate filter (locality and similar heuristics).
  std::function<bool(std::size_t var, NodeId node)> allow;
  /// Stop after this many results (0 = unlimited). Results are then not
  /// guaranteed to be the least ones.
  std::size_t limit = 0;
};

namespace detail {

/// Resolved constants of a rule; nullopt if some constant is not in S.
inline std::optional<std::vector<NodeId>> resolve_consts(const TripletStructure& s, const Rule& r) {
  std::vector<NodeId> out;
  out.reserve(r.consts.size());
  for (const auto& c : r.consts) {
    auto id = s.find(c);
    if (!id) return std::nullopt;
    out.push_back(*id);
  }
  return out;
}

class Matcher {
 public:
  Matcher(const TripletStructure& s, const Rule& r, std::vector<NodeId> consts,
          const MatchOptions& opt)
      : s_(s), r_(r), consts_(std::move(consts)), opt_(opt), binding_(r.vars.size()) {
    uses_.assign(r.vars.size(), {});
    for (std::size_t t = 0; t < r.required.size(); ++t)
      for (const auto& term : r.required[t])
        if (term.kind == Term::Kind::kVar &&
            (uses_[term.index].empty() || uses_[term.index].back() != t))
          uses_[term.index].push_back(t);
  }

  std::vector<Assignment> run() {
    for (std::size_t i = 0; i < opt_.seed.size() && i < binding_.size(); ++i) {
      if (!opt_.seed[i]) continue;
      if (!admissible(i, *opt_.seed[i])) return {};
      binding_[i] = opt_.seed[i];
    }
    for (std::size_t t = 0; t < r_.required.size(); ++t)
      if (fully_bound(t) && !s_.has(ground(t))) return {};
    recurse();
    return std::move(out_);
  }

 private:
  bool done() const { return opt_.limit && out_.size() >= opt_.limit; }

  void recurse() {
    if (done()) return;
    // Most constrained variable by index bucket size (an upper bound on its
    // candidate count).
    std::optional<std::size_t> best;
    std::size_t best_est = 0;
    for (std::size_t v = 0; v < binding_.size(); ++v) {
      if (binding_[v]) continue;
      std::size_t est = estimate(v);
      if (!best || est < best_est) {
        best = v;
        best_est = est;
        if (est == 0) return;
      }
    }
    if (!best) {
      Assignment a(binding_.size());
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = *binding_[i];
      out_.push_back(std::move(a));
      return;
    }
    const std::size_t v = *best;
    const auto best_cands = candidates(v);
    for (NodeId n : best_cands) {
      if (!admissible(v, n)) continue;
      binding_[v] = n;
      bool ok = true;
      for (std::size_t t : uses_[v])
        if (fully_bound(t) && !s_.has(ground(t))) {
          ok = false;
          break;
        }
      if (ok) recurse();
      binding_[v].reset();
      if (done()) return;
    }
  }

  bool admissible(std::size_t v, NodeId n) const {
    if (opt_.allow && !opt_.allow(v, n)) return false;
    for (auto [a, b] : r_.distinct) {
      if (a == v && binding_[b] && *binding_[b] == n) return false;
      if (b == v && binding_[a] && *binding_[a] == n) return false;
      if (a == v && b == v) return false;
    }
    return true;
  }

  std::size_t estimate(std::size_t v) const {
    if (uses_[v].empty()) return s_.node_count();
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t t : uses_[v]) {
      HolePattern p;
      for (std::size_t i = 0; i < 3; ++i) {
        const Term& term = r_.required[t][i];
        if (term.kind == Term::Kind::kConst) p.slots[i] = consts_[term.index];
        else if (term.index != v && binding_[term.index]) p.slots[i] = *binding_[term.index];
      }
      best = std::min(best, s_.count(p));
    }
    return best;
  }

  std::vector<NodeId> candidates(std::size_t v) const {
    std::vector<VarConstraint> cs;
    for (std::size_t t : uses_[v]) {
      VarConstraint c;
      for (std::size_t i = 0; i < 3; ++i) {
        const Term& term = r_.required[t][i];
        if (term.kind == Term::Kind::kConst) c[i] = SlotTerm::node_of(consts_[term.index]);
        else if (term.index == v) c[i] = SlotTerm::var();
        else if (binding_[term.index]) c[i] = SlotTerm::node_of(*binding_[term.index]);
        else c[i] = SlotTerm::hole();
      }
      cs.push_back(c);
    }
    return solve_single_var(s_, cs);
  }

  bool fully_bound(std::size_t t) const {
    for (const auto& term : r_.required[t])
      if (term.kind == Term::Kind::kVar && !binding_[term.index]) return false;
    return true;
  }

  Fact ground(std::size_t t) const {
    auto g = [&](const Term& term) {
      return term.kind == Term::Kind::kConst ? consts_[term.index] : *binding_[term.index];
    };
    return Fact{g(r_.required[t][0]), g(r_.required[t][1]), g(r_.required[t][2])};
  }

  const TripletStructure& s_;
  const Rule& r_;
  std::vector<NodeId> consts_;
  const MatchOptions& opt_;
  std::vector<std::optional<NodeId>> binding_;
  std::vector<std::vector<std::size_t>> uses_;
  std::vector<Assignment> out_;
};

inline bool names_less(const TripletStructure& s, const Assignment& a, const Assignment& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] == b[i]) continue;
    int c = s.name(a[i]).compare(s.name(b[i]));
    if (c != 0) return c < 0;
  }
  return a.size() < b.size();
}

inline void sort_unique(const TripletStructure& s, std::vector<Assignment>& v) {
  std::sort(v.begin(), v.end(), [&](const Assignment& a, const Assignment& b) { return names_less(s, a, b); });
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace detail

/// Every total binding whose substituted required facts are all in F, sorted
/// by the sequence of bound node names. Missing constants give no matches.
inline std::vector<Assignment> find_assignments(const TripletStructure& s, const Rule& r,
                                                const MatchOptions& opt = {}) {
  auto consts = detail::resolve_consts(s, r);
  if (!consts) return {};
  auto out = detail::Matcher(s, r, std::move(*consts), opt).run();
  detail::sort_unique(s, out);
  return out;
}

/// Substitutes a binding into a template; created terms come from `created`.
inline Fact substitute(const FactTemplate& t, const std::vector<NodeId>& consts,
                       const Assignment& a, const std::vector<NodeId>& created = {}) {
  auto g = [&](const Term& term) {
    switch (term.kind) {
      case Term::Kind::kVar: return a.at(term.index);
      case Term::Kind::kConst: return consts.at(term.index);
      default: return created.at(term.index);
    }
  };
  return Fact{g(t[0]), g(t[1]), g(t[2])};
}

/// The required facts of `r` under `a`, in template order.
inline std::vector<Fact> required_facts(const TripletStructure& s, const Rule& r, const Assignment& a) {
  auto consts = detail::resolve_consts(s, r);
  if (!consts) return {};
  std::vector<Fact> out;
  for (const auto& t : r.required) out.push_back(substitute(t, *consts, a));
  return out;
}

/// Assignments that use at least one fact added (net) since `since`.
inline std::vector<Assignment> find_assignments_differential(const TripletStructure& s, const Rule& r,
                                                             const Mark& since,
                                                             const MatchOptions& opt = {}) {
  const auto delta = s.delta_since(since);
  auto consts = detail::resolve_consts(s, r);
  if (!consts || delta.added.empty()) return {};
  std::vector<Assignment> out;
  for (const auto& fact : delta.added) {
    for (const auto& tmpl : r.required) {
      std::vector<std::optional<NodeId>> seed = opt.seed;
      seed.resize(r.vars.size());
      bool ok = true;
      for (std::size_t i = 0; i < 3 && ok; ++i) {
        const Term& term = tmpl[i];
        NodeId n = fact.at(i);
        if (term.kind == Term::Kind::kConst) {
          ok = (*consts)[term.index] == n;
        } else if (seed[term.index]) {
          ok = *seed[term.index] == n;
        } else {
          seed[term.index] = n;
        }
      }
      if (!ok) continue;
      MatchOptions sub = opt;
      sub.seed = std::move(seed);
      sub.limit = 0;
      auto found = detail::Matcher(s, r, *consts, sub).run();
      out.insert(out.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    }
  }
  detail::sort_unique(s, out);
  if (opt.limit && out.size() > opt.limit) out.resize(opt.limit);
  return out;
}

/// Applies a variable permutation: result[i] = a[perm[i]].
inline Assignment permute(const Assignment& a, const VarPermutation& perm) {
  Assignment out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[perm[i]];
  return out;
}

/// Lexicographically least (by node names) member of a's orbit under the
/// rule's declared symmetry group.
inline Assignment canonicalize_assignment(const TripletStructure& s, const Rule& r, const Assignment& a) {
  Assignment best = a;
  for (const auto& perm : r.symmetries) {
    Assignment p = permute(a, perm);
    if (detail::names_less(s, p, best)) best = std::move(p);
  }
  return best;
}

/// Drops assignments that are non-canonical members of some orbit.
inline std::vector<Assignment> canonical_only(const TripletStructure& s, const Rule& r,
                                              const std::vector<Assignment>& as) {
  std::vector<Assignment> out;
  for (const auto& a : as)
    if (canonicalize_assignment(s, r, a) == a) out.push_back(a);
  return out;
}

/// Stable text key "rule{v=name,...}" with variables in declaration order.
inline std::string assignment_key(const TripletStructure& s, const Rule& r, const Assignment& a) {
  std::string k = r.name + "{";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) k += ",";
    k += r.vars[i] + "=" + s.name(a[i]);
  }
  return k + "}";
}

}  // namespace triplet
