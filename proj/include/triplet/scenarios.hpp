#pragma once
// Source-code scenarios on top of the analogy pipeline: completing a
// transformation from before/after file pairs (optionally with a
// documentation pair and annotation sidecars), and corresponding two sets of
// files.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "triplet/abstracter.hpp"
#include "triplet/encoders.hpp"
#include "triplet/search.hpp"

namespace triplet {

struct SourceFile {
  std::string name;
  std::string text;
};

inline nlohmann::json to_json(const ScoreReport& r) {
  nlohmann::json j{{"abstraction", r.abstraction},
                   {"abstract_fact_count", r.abstract_fact_count},
                   {"weighted_score", r.weighted_score},
                   {"coverage", r.coverage},
                   {"degenerate", r.degenerate}};
  if (r.has_prompt) {
    j["prompt_fit"] = r.prompt_fit;
    j["weak"] = r.weak;
    j["complete"] = r.complete;
    j["missing"] = r.missing;
  }
  return j;
}

/// Token-bearing correspondences: for each abstract node, the texts of the
/// tokens it stands for, keyed by node name.
inline nlohmann::json correspondence_json(const Workspace& ws) {
  auto arr = nlohmann::json::array();
  for (const auto& c : correspondences(ws)) {
    nlohmann::json row = nlohmann::json::object();
    for (auto [m, x] : c.instances) {
      const auto* inst = ws.instance_of(x);
      auto it = ws.info.find(x);
      if (!inst || it == ws.info.end() || it->second.position < 0) continue;
      auto t = detail::token_type_of(ws, x);
      auto text = t ? ws.token_text(*t) : std::nullopt;
      row[ws.s.name(x)] = text ? *text : std::string();
    }
    if (row.size() >= 2) arr.push_back(std::move(row));
  }
  return arr;
}

namespace detail {

/// Where the tokens of a named file live: (tag, first token index) per
/// encoded piece, in order.
using FileLayout = std::map<std::string, std::vector<std::pair<std::string, std::size_t>>>;

inline void add_layout(FileLayout& layout, const std::string& name, const std::string& tag) {
  layout[name].emplace_back(tag, 0);
  auto slash = name.find_last_of('/');
  if (slash != std::string::npos) layout[name.substr(slash + 1)].emplace_back(tag, 0);
}

/// Rewrites {"file": name, "index": i} arguments into {"node": ...} using
/// the layout. Unknown names are left for the ingester, which reads them as
/// instance tags.
inline nlohmann::json resolve_file_refs(const Workspace& ws, const nlohmann::json& doc, const FileLayout& layout) {
  auto fix_args = [&](nlohmann::json facts) {
    for (auto& f : facts) {
      if (!f.is_object() || !f.contains("args")) continue;
      for (auto& a : f["args"]) {
        if (!a.is_object() || !a.contains("file") || !a.contains("index")) continue;
        auto it = layout.find(a["file"].get<std::string>());
        if (it == layout.end()) continue;
        auto idx = a["index"].get<std::size_t>();
        for (const auto& [tag, first] : it->second) {
          const auto* inst = [&]() -> const InstanceInfo* {
            for (const auto& i : ws.instances)
              if (i.tag == tag) return &i;
            return nullptr;
          }();
          if (!inst) continue;
          if (idx >= first && idx < first + inst->tokens.size()) {
            a = nlohmann::json{{"node", tag + ":" + std::to_string(idx - first)}};
            break;
          }
        }
      }
    }
    return facts;
  };
  if (doc.is_array()) return fix_args(doc);
  nlohmann::json out = doc;
  if (doc.is_object() && doc.contains("facts")) out["facts"] = fix_args(doc["facts"]);
  return out;
}

/// Lays out per-line document pieces so that whole-file token indexes resolve.
inline void add_docs_layout(FileLayout& layout, const std::string& name,
                            const std::vector<PairNodes>& pieces, bool after, const std::string& tag) {
  std::size_t offset = 0;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto t = tag + std::to_string(k) + (after ? ".after" : ".before");
    layout[name].emplace_back(t, offset);
    auto slash = name.find_last_of('/');
    if (slash != std::string::npos) layout[name.substr(slash + 1)].emplace_back(t, offset);
    offset += (after ? pieces[k].after : pieces[k].before).size();
  }
}

}  // namespace detail

/// Renders output tokens with the prompt's spacing: tokens aligned to the
/// prompt (longest common subsequence) keep the whitespace that preceded
/// them there; a new token takes the whitespace of the prompt token it
/// replaces, or of the next aligned token when it replaces none. Text before
/// the first and after the last prompt token is kept.
inline std::string render_like(const std::vector<std::string>& tokens, const std::string& prompt) {
  const auto lx = lex_spans(prompt);
  const std::size_t n = tokens.size(), m = lx.size();
  std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      dp[i][j] = tokens[i] == lx[j].text ? dp[i + 1][j + 1] + 1 : std::max(dp[i + 1][j], dp[i][j + 1]);
  std::vector<std::optional<std::size_t>> match(n);
  for (std::size_t i = 0, j = 0; i < n && j < m;) {
    if (tokens[i] == lx[j].text) {
      match[i++] = j++;
    } else if (dp[i + 1][j] >= dp[i][j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  auto gap_before = [&](std::size_t j) {
    std::size_t from = j == 0 ? 0 : lx[j - 1].end;
    return prompt.substr(from, lx[j].begin - from);
  };
  std::vector<bool> taken(m, false);
  for (const auto& j : match)
    if (j) taken[*j] = true;
  std::string out;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<std::size_t> j = match[i];
    if (!j) {
      // Replacement of an unaligned prompt token, else an insertion spaced
      // like the next aligned token.
      std::size_t k = prev ? *prev + 1 : 0;
      if (k < m && !taken[k]) {
        j = k;
        taken[k] = true;
      } else {
        for (std::size_t t = i + 1; t < n && !j; ++t) j = match[t];
      }
    }
    if (j && *j < m) {
      out += gap_before(*j);
    } else if (i > 0) {
      out += " ";
    }
    out += tokens[i];
    if (j) prev = j;
  }
  if (m == 0) return out + prompt;
  out += prompt.substr(lx.back().end);
  return out;
}

struct TransformSpec {
  std::vector<std::pair<SourceFile, SourceFile>> examples;
  SourceFile prompt;
  std::optional<std::pair<SourceFile, SourceFile>> docs;
  /// Annotation sidecar; null for none. File references may use the file
  /// names given here.
  nlohmann::json annotations;
  LexOptions lex;
};

struct TransformOutput {
  std::string text;
  AnalogyResult result;
  nlohmann::json correspondences;
  std::vector<std::pair<std::string, std::string>> pairs;
};

/// Completes the prompt's after-file from example before/after file pairs.
/// Throws EncodeError on unresolvable annotations.
inline TransformOutput transform(const TransformSpec& spec, const SearchConfig& cfg) {
  Workspace ws;
  AnalogyPlan plan;
  detail::FileLayout layout;
  for (std::size_t i = 0; i < spec.examples.size(); ++i) {
    const auto tag = "ex" + std::to_string(i);
    encode_pair(ws, spec.examples[i].first.text, spec.examples[i].second.text, tag, SequenceKind::kSource, spec.lex);
    detail::add_layout(layout, spec.examples[i].first.name, tag + ".before");
    detail::add_layout(layout, spec.examples[i].second.name, tag + ".after");
    plan.examples.push_back(tag);
  }
  encode_pair(ws, spec.prompt.text, "", "prompt", SequenceKind::kSource, spec.lex);
  detail::add_layout(layout, spec.prompt.name, "prompt.before");
  if (spec.docs) {
    auto pieces = encode_docs_pair(ws, spec.docs->first.text, spec.docs->second.text, "docs", spec.lex);
    detail::add_docs_layout(layout, spec.docs->first.name, pieces, false, "docs");
    detail::add_docs_layout(layout, spec.docs->second.name, pieces, true, "docs");
  }
  if (!spec.annotations.is_null()) ingest_annotations(ws, detail::resolve_file_refs(ws, spec.annotations, layout));
  plan.prompt = "prompt";
  plan.prompt_after = ws.s.at("prompt.after");
  TransformOutput out;
  out.result = solve(ws, plan, analogy_rules(), consistency_rules(), cfg);
  out.text = render_like(out.result.tokens, spec.prompt.text);
  out.correspondences = correspondence_json(ws);
  out.pairs = token_pairs(ws);
  return out;
}

struct TokenPair {
  std::string a_node, b_node;
  std::string a, b;
};

struct CorrespondOutput {
  std::vector<TokenPair> pairs;
  AnalogyResult result;
};

/// Corresponds the tokens of two file sets. Begins only on shared token
/// content, so disjoint inputs stay unmapped.
inline CorrespondOutput correspond(const std::vector<SourceFile>& a, const std::vector<SourceFile>& b,
                                   const nlohmann::json& annotations, const SearchConfig& cfg) {
  Workspace ws;
  detail::FileLayout layout;
  LexOptions lo;
  lo.identifier_parts = true;
  for (const auto& [files, group] : {std::pair{&a, "a"}, std::pair{&b, "b"}}) {
    for (std::size_t i = 0; i < files->size(); ++i) {
      const auto tag = std::string(group) + std::to_string(i);
      lo.group = group;
      lex_source(ws, (*files)[i].text, tag, lo);
      detail::add_layout(layout, (*files)[i].name, tag);
    }
  }
  if (!annotations.is_null()) ingest_annotations(ws, detail::resolve_file_refs(ws, annotations, layout));
  AnalogyPlan plan;
  plan.examples = {"a", "b"};
  SearchConfig c = cfg;
  c.content_begin_only = true;
  CorrespondOutput out;
  out.result = solve(ws, plan, analogy_rules(), consistency_rules(), c);
  for (const auto& corr : correspondences(ws)) {
    std::optional<NodeId> xa, xb;
    for (auto [m, x] : corr.instances) {
      const auto* inst = ws.instance_of(x);
      auto it = ws.info.find(x);
      if (!inst || it == ws.info.end() || it->second.position < 0) continue;
      (inst->group == "a" ? xa : xb) = x;
    }
    if (!xa || !xb) continue;
    auto text = [&](NodeId x) {
      auto t = detail::token_type_of(ws, x);
      auto s = t ? ws.token_text(*t) : std::nullopt;
      return s ? *s : std::string();
    };
    out.pairs.push_back({ws.s.name(*xa), ws.s.name(*xb), text(*xa), text(*xb)});
  }
  auto order = [&](const std::string& name) {
    const auto& i = ws.info.at(ws.s.at(name));
    return std::make_pair(i.instance, i.position);
  };
  std::sort(out.pairs.begin(), out.pairs.end(), [&](const TokenPair& p, const TokenPair& q) {
    return std::make_pair(order(p.a_node), order(p.b_node)) < std::make_pair(order(q.a_node), order(q.b_node));
  });
  return out;
}

}  // namespace triplet
