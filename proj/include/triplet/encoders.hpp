#pragma once
// Encoders from letter strings, lexed source, relational facts, annotation
// sidecars and ASTs into workspace facts.
//
// Naming: sequence tokens are "<tag>:<i>"; their type facts "<tag>.is:<i>";
// adjacency facts between i and i+1 "<tag>.next:<i>"; container nodes are
// the tag itself with a single membership fact node "<tag>.members".

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <functional>
#include <optional>
#include <set>
#include <map>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include "triplet/rule.hpp"
#include "triplet/workspace.hpp"

namespace triplet {

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kLowercase = "abcdefghijklmnopqrstuvwxyz";

namespace slot {
inline constexpr const char* kNextToLeft = "NextToLeft";
inline constexpr const char* kNextToRight = "NextToRight";
inline constexpr const char* kPredecessor = "Predecessor";
inline constexpr const char* kSuccessor = "Successor";
inline constexpr const char* kString = "String";
inline constexpr const char* kStringMember = "StringMember";
inline constexpr const char* kFile = "File";
inline constexpr const char* kFileMember = "FileMember";
inline constexpr const char* kPairBefore = "PairBefore";
inline constexpr const char* kPairAfter = "PairAfter";
inline constexpr const char* kObject = "Object";
inline constexpr const char* kAccess = "Access";
inline constexpr const char* kField = "Field";
}  // namespace slot

inline std::string letter_type(char c) { return std::string("Letter:") + c; }
inline std::string token_type(const std::string& tok) { return "Is\"" + tok + "\""; }
inline std::string part_type(const std::string& part) { return "Part\"" + part + "\""; }

struct SequenceOptions {
  std::string group;  // defaults to the tag
  Side side = Side::kNone;
  /// Container and member slot names; empty container means no container.
  std::string container_slot;
  std::string member_slot;
};

namespace detail {

inline void tag_node(Workspace& ws, NodeId n, int inst, int pos = -1) { ws.info[n] = NodeInfo{inst, pos}; }

/// Shared core of the letter and lexeme encoders.
inline std::vector<NodeId> encode_sequence(Workspace& ws, const std::vector<std::string>& tokens,
                                           const std::vector<std::string>& types, const std::string& tag,
                                           const SequenceOptions& opt) {
  auto& s = ws.s;
  if (s.find(tag + ":0") || s.find(tag + ".members")) throw EncodeError("instance tag '" + tag + "' already used");
  InstanceInfo inst;
  inst.tag = tag;
  inst.group = opt.group;
  inst.side = opt.side;
  const int idx = ws.add_instance(inst);
  std::vector<NodeId> out;
  if (tokens.empty() && opt.container_slot.empty()) return out;
  const auto left = s.intern(slot::kNextToLeft), right = s.intern(slot::kNextToRight);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto x = s.intern(tag + ":" + std::to_string(i));
    auto type = s.intern(types[i]);
    ws.type_token.emplace(type, tokens[i]);
    ws.slippable.insert(type);
    auto p = s.intern(tag + ".is:" + std::to_string(i));
    s.add(p, x, type);
    tag_node(ws, x, idx, static_cast<int>(i));
    tag_node(ws, p, idx);
    if (i > 0) {
      auto n = s.intern(tag + ".next:" + std::to_string(i - 1));
      s.add(n, out.back(), left);
      s.add(n, x, right);
      tag_node(ws, n, idx);
    }
    out.push_back(x);
  }
  if (!opt.container_slot.empty()) {
    auto c = s.intern(tag);
    auto m = s.intern(tag + ".members");
    s.add(m, c, s.intern(opt.container_slot));
    auto member = s.intern(opt.member_slot);
    for (auto x : out) s.add(m, x, member);
    tag_node(ws, c, idx);
    tag_node(ws, m, idx);
    ws.instances[static_cast<std::size_t>(idx)].container = c;
  }
  ws.instances[static_cast<std::size_t>(idx)].tokens = out;
  return out;
}

}  // namespace detail

/// Encodes a letter string: one instance node per character, a
/// platonic-letter fact for each, and NextToLeft/NextToRight adjacency facts.
/// Predecessor/Successor slots are interned but left unconnected.
inline std::vector<NodeId> encode_letter_string(Workspace& ws, const std::string& text, const std::string& tag,
                                                const std::string& alphabet = kLowercase,
                                                SequenceOptions opt = {}) {
  std::vector<std::string> tokens, types;
  for (char c : text) {
    if (alphabet.find(c) == std::string::npos)
      throw EncodeError(std::string("character '") + c + "' is not in the alphabet");
    tokens.emplace_back(1, c);
    types.push_back(letter_type(c));
  }
  if (!text.empty() || !opt.container_slot.empty()) {
    ws.s.intern(slot::kPredecessor);
    ws.s.intern(slot::kSuccessor);
  }
  if (opt.group.empty()) opt.group = tag;
  return detail::encode_sequence(ws, tokens, types, tag, opt);
}

/// Reads a letter instance back in adjacency order.
inline std::string decode_letters(const Workspace& ws, const std::vector<NodeId>& nodes) {
  if (nodes.empty()) return {};
  const auto& s = ws.s;
  auto left = s.find(slot::kNextToLeft), right = s.find(slot::kNextToRight);
  std::set<NodeId> members(nodes.begin(), nodes.end());
  auto neighbour = [&](NodeId x, NodeId from_slot, NodeId to_slot) -> std::optional<NodeId> {
    for (const auto& t : s.bucket(HolePattern::of({}, x, from_slot)))
      for (const auto& u : s.bucket(HolePattern::of(t.fact, {}, to_slot)))
        if (members.count(u.value)) return u.value;
    return std::nullopt;
  };
  // Start at the member with nothing to its left.
  NodeId cur = nodes.front();
  if (left && right)
    for (auto x : nodes)
      if (!neighbour(x, *right, *left)) {
        cur = x;
        break;
      }
  std::string out;
  std::set<NodeId> seen;
  while (true) {
    seen.insert(cur);
    for (const auto& t : s.bucket(HolePattern::of({}, cur, {}))) {
      const auto& key = s.name(t.key);
      if (key.rfind("Letter:", 0) == 0) out += key.substr(7);
    }
    std::optional<NodeId> next;
    if (left && right) next = neighbour(cur, *left, *right);
    if (next && seen.count(*next)) next.reset();
    if (!next) break;
    cur = *next;
  }
  return out;
}

/// A token with its byte range in the source text.
struct Lexeme {
  std::string text;
  std::size_t begin = 0, end = 0;
};

/// Splits source text on whitespace, with `= . , ( ) { } [ ] ; * + - / < >`
/// as single-character tokens.
inline std::vector<Lexeme> lex_spans(const std::string& text) {
  static const std::string kPunct = "=.,(){}[];*+-/<>";
  std::vector<Lexeme> out;
  std::size_t start = std::string::npos;
  auto flush = [&](std::size_t i) {
    if (start != std::string::npos) out.push_back({text.substr(start, i - start), start, i});
    start = std::string::npos;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush(i);
    } else if (kPunct.find(c) != std::string::npos) {
      flush(i);
      out.push_back({std::string(1, c), i, i + 1});
    } else if (start == std::string::npos) {
      start = i;
    }
  }
  flush(text.size());
  return out;
}

inline std::vector<std::string> lex(const std::string& text) {
  std::vector<std::string> out;
  for (auto& l : lex_spans(text)) out.push_back(std::move(l.text));
  return out;
}

inline bool is_identifier(const std::string& tok) {
  if (tok.empty() || !(std::isalpha(static_cast<unsigned char>(tok[0])) || tok[0] == '_')) return false;
  return std::all_of(tok.begin(), tok.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

struct LexOptions {
  std::string group;
  Side side = Side::kNone;
  /// Add an Object/Access/Field fact for every `ident . ident` run.
  bool member_access = false;
  /// Add a fact tying identifiers to their '_'-separated parts.
  bool identifier_parts = false;
  /// Shared material (group ""), such as documentation.
  bool shared = false;
};

/// Lexes a source file into the workspace: a file node, one
/// lexeme per token with an Is"tok" fact, adjacency facts and one membership
/// fact node holding (f, file, File) and (f, lexeme, FileMember) per lexeme.
inline std::vector<NodeId> lex_source(Workspace& ws, const std::string& text, const std::string& tag,
                                      const LexOptions& opt = {}) {
  auto tokens = lex(text);
  std::vector<std::string> types;
  for (const auto& t : tokens) types.push_back(token_type(t));
  SequenceOptions so{opt.shared ? "" : opt.group.empty() ? tag : opt.group, opt.side, slot::kFile, slot::kFileMember};
  auto nodes = detail::encode_sequence(ws, tokens, types, tag, so);
  auto& s = ws.s;
  const int inst = static_cast<int>(ws.instances.size()) - 1;
  if (opt.member_access) {
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
      if (!(is_identifier(tokens[i]) && tokens[i + 1] == "." && is_identifier(tokens[i + 2]))) continue;
      auto f = s.intern(tag + ".member:" + std::to_string(i));
      s.add(f, nodes[i], s.intern(slot::kObject));
      s.add(f, nodes[i + 1], s.intern(slot::kAccess));
      s.add(f, nodes[i + 2], s.intern(slot::kField));
      detail::tag_node(ws, f, inst);
    }
  }
  if (opt.identifier_parts) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!is_identifier(tokens[i]) || tokens[i].find('_') == std::string::npos) continue;
      auto f = s.intern(tag + ".parts:" + std::to_string(i));
      std::size_t start = 0;
      while (start <= tokens[i].size()) {
        auto end = tokens[i].find('_', start);
        if (end == std::string::npos) end = tokens[i].size();
        auto part = tokens[i].substr(start, end - start);
        if (!part.empty()) {
          auto k = s.intern(part_type(part));
          s.add(f, nodes[i], k);
          ws.type_token.emplace(k, part);
        }
        start = end + 1;
      }
      detail::tag_node(ws, f, inst);
    }
  }
  return nodes;
}

struct PairNodes {
  std::vector<NodeId> before;
  std::vector<NodeId> after;
  NodeId link;
};

/// Kind of sequence a pair holds.
enum class SequenceKind : std::uint8_t { kLetters, kSource };

/// Encodes a before/after pair as two instances of one group plus a link
/// fact (link, before, PairBefore), (link, after, PairAfter). A prompt is a
/// pair with an empty after side.
inline PairNodes encode_pair(Workspace& ws, const std::string& before, const std::string& after, const std::string& tag,
                             SequenceKind kind = SequenceKind::kLetters, const LexOptions& lex_opt = {},
                             const std::string& alphabet = kLowercase) {
  PairNodes out;
  const std::string group = lex_opt.group.empty() ? tag : lex_opt.group;
  auto side = [&](const std::string& text, Side sd) {
    const std::string t = tag + (sd == Side::kBefore ? ".before" : ".after");
    if (kind == SequenceKind::kLetters) {
      SequenceOptions so{group, sd, slot::kString, slot::kStringMember};
      return encode_letter_string(ws, text, t, alphabet, so);
    }
    LexOptions lo = lex_opt;
    lo.group = group;
    lo.side = sd;
    return lex_source(ws, text, t, lo);
  };
  out.before = side(before, Side::kBefore);
  out.after = side(after, Side::kAfter);
  auto& s = ws.s;
  out.link = s.intern(tag + ".pair");
  s.add(out.link, s.at(tag + ".before"), s.intern(slot::kPairBefore));
  s.add(out.link, s.at(tag + ".after"), s.intern(slot::kPairAfter));
  const int before_inst = static_cast<int>(ws.instances.size()) - 2;
  detail::tag_node(ws, out.link, before_inst);
  return out;
}

/// Encodes documentation before/after as shared material, one pair per line
/// (tags <tag><k>). Lines are matched by index; a missing line is empty.
inline std::vector<PairNodes> encode_docs_pair(Workspace& ws, const std::string& before, const std::string& after,
                                               const std::string& tag = "docs", const LexOptions& lex_opt = {}) {
  auto lines = [](const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
      if (!lex(l).empty()) out.push_back(l);
    return out;
  };
  auto b = lines(before), a = lines(after);
  LexOptions lo = lex_opt;
  lo.shared = true;
  std::vector<PairNodes> out;
  for (std::size_t k = 0; k < std::max(a.size(), b.size()); ++k)
    out.push_back(encode_pair(ws, k < b.size() ? b[k] : "", k < a.size() ? a[k] : "", tag + std::to_string(k),
                              SequenceKind::kSource, lo));
  return out;
}

// ---- generic relations -------------------------------------------------------

struct RelationalFact {
  std::string relation;
  std::vector<std::string> args;
};

/// Encodes n-ary facts with slot nodes R.1..R.n and one fresh fact node per
/// fact (named <prefix><k>, k counting from 1 past any existing names).
inline std::vector<NodeId> encode_relational(Workspace& ws, const std::vector<std::string>& objects,
                                             const std::map<std::string, std::size_t>& arity,
                                             const std::vector<RelationalFact>& facts, const std::string& prefix = "f") {
  auto& s = ws.s;
  for (const auto& o : objects) s.intern(o);
  for (const auto& f : facts) {
    auto it = arity.find(f.relation);
    if (it == arity.end()) throw EncodeError("undeclared relation '" + f.relation + "'");
    if (it->second != f.args.size())
      throw EncodeError("relation " + f.relation + " has arity " + std::to_string(it->second) + ", got " +
                        std::to_string(f.args.size()) + " arguments");
  }
  std::vector<NodeId> out;
  std::size_t k = 1;
  for (const auto& f : facts) {
    while (s.find(prefix + std::to_string(k))) ++k;
    auto fn = s.intern(prefix + std::to_string(k));
    for (std::size_t i = 0; i < f.args.size(); ++i)
      s.add(fn, s.intern(f.args[i]), s.intern(f.relation + "." + std::to_string(i + 1)));
    out.push_back(fn);
  }
  return out;
}

// ---- annotations ---------------------------------------------------------------

/// Ingests an annotation sidecar. Accepted shapes:
///   [ {"relation": R, "args": [{"file": tag, "index": i} | {"node": name}, ...]}, ... ]
///   {"relations": {R: [slot names] | arity}, "facts": [ ...as above... ]}
/// With the second shape every relation must be declared; slot names default
/// to R.1..R.n. Returns the created fact nodes.
inline std::vector<NodeId> ingest_annotations(Workspace& ws, const nlohmann::json& doc) {
  using nlohmann::json;
  std::map<std::string, std::vector<std::string>> slots;
  bool declared = false;
  const json* facts = &doc;
  if (doc.is_object()) {
    declared = true;
    if (doc.contains("relations")) {
      for (const auto& [rel, spec] : doc.at("relations").items()) {
        std::vector<std::string> names;
        if (spec.is_number_unsigned()) {
          for (std::size_t i = 1; i <= spec.get<std::size_t>(); ++i) names.push_back(rel + "." + std::to_string(i));
        } else if (spec.is_array()) {
          for (const auto& n : spec) names.push_back(rel + "." + n.get<std::string>());
        } else {
          throw EncodeError("relation " + rel + ": expected an arity or a list of slot names");
        }
        slots[rel] = names;
      }
    }
    if (!doc.contains("facts")) return {};
    facts = &doc.at("facts");
  }
  if (!facts->is_array()) throw EncodeError("annotation facts must be a JSON list");

  auto& s = ws.s;
  std::vector<std::pair<std::vector<std::string>, std::vector<NodeId>>> resolved;
  for (const auto& entry : *facts) {
    if (!entry.is_object() || !entry.contains("relation") || !entry.contains("args"))
      throw EncodeError("annotation entries need \"relation\" and \"args\"");
    const auto rel = entry.at("relation").get<std::string>();
    const auto& args = entry.at("args");
    auto it = slots.find(rel);
    if (it == slots.end()) {
      if (declared) throw EncodeError("undeclared relation '" + rel + "'");
      std::vector<std::string> names;
      for (std::size_t i = 1; i <= args.size(); ++i) names.push_back(rel + "." + std::to_string(i));
      it = slots.emplace(rel, names).first;
    }
    if (it->second.size() != args.size())
      throw EncodeError("relation " + rel + " expects " + std::to_string(it->second.size()) + " arguments");
    std::vector<NodeId> nodes;
    for (const auto& a : args) {
      std::string name;
      if (a.contains("node")) {
        name = a.at("node").get<std::string>();
      } else if (a.contains("file") && a.contains("index")) {
        name = a.at("file").get<std::string>() + ":" + std::to_string(a.at("index").get<std::size_t>());
      } else {
        throw EncodeError("annotation argument needs \"node\" or \"file\"+\"index\"");
      }
      auto id = s.find(name);
      if (!id) throw EncodeError("annotation references unknown node '" + name + "'");
      nodes.push_back(*id);
    }
    resolved.emplace_back(it->second, nodes);
  }
  std::vector<NodeId> out;
  std::size_t k = 0;
  for (const auto& [names, nodes] : resolved) {
    while (s.find("ann:" + std::to_string(k))) ++k;
    auto f = s.intern("ann:" + std::to_string(k));
    for (std::size_t i = 0; i < nodes.size(); ++i) s.add(f, nodes[i], s.intern(names[i]));
    out.push_back(f);
  }
  return out;
}

// ---- ASTs ------------------------------------------------------------------------

/// Encodes a JSON AST {"type": T, "children": {role: subtree | "token"}} as
/// one fact node per production: (f, node, T) plus (f, child, role) for each
/// child. A string leaf becomes a node with a single Identifier"tok" fact.
/// Nodes are named "<tag>.ast:<k>", fact nodes "<tag>.ast:<k>.f".
inline NodeId encode_ast(Workspace& ws, const nlohmann::json& tree, const std::string& tag) {
  auto& s = ws.s;
  std::size_t counter = 0;
  std::function<NodeId(const nlohmann::json&)> rec = [&](const nlohmann::json& t) -> NodeId {
    const std::string base = tag + ".ast:" + std::to_string(counter++);
    auto n = s.intern(base);
    auto f = s.intern(base + ".f");
    if (t.is_string()) {
      s.add(f, n, s.intern("Identifier\"" + t.get<std::string>() + "\""));
      return n;
    }
    if (!t.is_object() || !t.contains("type") || !t.at("type").is_string())
      throw EncodeError("malformed AST node: expected an object with a string \"type\"");
    s.add(f, n, s.intern(t.at("type").get<std::string>()));
    if (t.contains("children")) {
      const auto& ch = t.at("children");
      if (!ch.is_object()) throw EncodeError("malformed AST node: \"children\" must be an object");
      for (const auto& [role, sub] : ch.items()) {
        auto c = rec(sub);
        s.add(f, c, s.intern(role));
      }
    }
    return n;
  };
  return rec(tree);
}

// ---- successor rules -------------------------------------------------------------

/// One successor rule per adjacent alphabet pair: marks instances of x and y
/// as a Predecessor/Successor fact.
inline std::vector<Rule> gen_successor_rules(const std::string& alphabet = kLowercase) {
  std::vector<Rule> out;
  for (std::size_t i = 0; i + 1 < alphabet.size(); ++i) {
    const auto a = letter_type(alphabet[i]), b = letter_type(alphabet[i + 1]);
    RuleBuilder r(std::string("succ_") + alphabet[i] + "_" + alphabet[i + 1]);
    r.var("v1").var("v2").var("vf1").var("vf2");
    r.constant(a).constant(b).constant(slot::kPredecessor).constant(slot::kSuccessor);
    r.require("vf1", "v1", a).require("vf2", "v2", b);
    r.create("nf3");
    r.add("nf3", "v1", slot::kPredecessor).add("nf3", "v2", slot::kSuccessor);
    out.push_back(r.build());
  }
  return out;
}

}  // namespace triplet
