#include <gtest/gtest.h>

#include "triplet/encoders.hpp"
#include "triplet/match.hpp"
#include "triplet/serialize.hpp"

using namespace triplet;
using nlohmann::json;

namespace {

std::size_t count_key(const Workspace& ws, const std::string& key) {
  auto k = ws.s.find(key);
  return k ? ws.s.count(HolePattern::of({}, {}, *k)) : 0;
}

std::set<NodeId> fact_nodes(const TripletStructure& s) {
  std::set<NodeId> out;
  for (const auto& t : s.facts()) out.insert(t.fact);
  return out;
}

}  // namespace

TEST(Letters, AbEfShape) {
  Workspace ws;
  auto ab = encode_letter_string(ws, "ab", "x");
  auto ef = encode_letter_string(ws, "ef", "y");
  EXPECT_EQ(ab.size() + ef.size(), 4u);
  std::size_t platonic = 0;
  for (const auto& t : ws.s.facts())
    if (ws.s.name(t.key).rfind("Letter:", 0) == 0) ++platonic;
  EXPECT_EQ(platonic, 4u);
  EXPECT_EQ(count_key(ws, "NextToLeft"), 2u);
  EXPECT_EQ(count_key(ws, "NextToRight"), 2u);
  EXPECT_EQ(count_key(ws, "Successor") + count_key(ws, "Predecessor"), 0u);
  EXPECT_EQ(ws.s.fact_count(), 8u);
  EXPECT_TRUE(ws.s.find("Successor").has_value());
}

TEST(Letters, EmptyAndSingle) {
  Workspace ws;
  auto before = ws.s.node_count();
  EXPECT_TRUE(encode_letter_string(ws, "", "e").empty());
  EXPECT_EQ(ws.s.node_count(), before);
  auto one = encode_letter_string(ws, "a", "one");
  EXPECT_EQ(one.size(), 1u);
  EXPECT_EQ(ws.s.fact_count(), 1u);
}

TEST(Letters, RejectsOutsideAlphabet) {
  Workspace ws;
  EXPECT_THROW(encode_letter_string(ws, "aB", "x"), EncodeError);
  EXPECT_NO_THROW(encode_letter_string(ws, "aB", "y", "aB"));
}

TEST(Letters, DecodeRoundTrip) {
  for (std::string s : {"a", "abc", "zyx", "aaab", "hello"}) {
    Workspace ws;
    encode_letter_string(ws, "q", "other");
    auto nodes = encode_letter_string(ws, s, "w");
    std::reverse(nodes.begin(), nodes.end());
    EXPECT_EQ(decode_letters(ws, nodes), s);
  }
}

TEST(Letters, AdjacencyIsSimplePath) {
  Workspace ws;
  auto nodes = encode_letter_string(ws, "abcdef", "w");
  auto l = ws.s.at("NextToLeft"), r = ws.s.at("NextToRight");
  for (auto x : nodes) {
    EXPECT_LE(ws.s.count(HolePattern::of({}, x, l)), 1u);
    EXPECT_LE(ws.s.count(HolePattern::of({}, x, r)), 1u);
  }
  EXPECT_EQ(ws.s.count(HolePattern::of({}, {}, l)), nodes.size() - 1);
}

TEST(Letters, SuccessorRules) {
  auto rules = gen_successor_rules();
  EXPECT_EQ(rules.size(), 25u);
  EXPECT_EQ(gen_successor_rules("xy").size(), 1u);
  Workspace ws;
  encode_letter_string(ws, "ab", "x");
  encode_letter_string(ws, "ef", "y");
  EXPECT_EQ(find_assignments(ws.s, rules[0]).size(), 1u);
  apply_rule(ws, rules[0], find_assignments(ws.s, rules[0])[0]);
  apply_rule(ws, rules[4], find_assignments(ws.s, rules[4]).at(0));
  EXPECT_EQ(count_key(ws, "Successor"), 2u);
  EXPECT_EQ(count_key(ws, "Predecessor"), 2u);
  EXPECT_EQ(ws.s.fact_count(), 12u);
}

TEST(Pairs, LinkAndIsolation) {
  Workspace ws;
  encode_pair(ws, "abc", "abd", "p0");
  encode_pair(ws, "x", "x", "p1");
  encode_pair(ws, "ef", "", "p2");
  EXPECT_EQ(count_key(ws, "PairBefore"), 3u);
  EXPECT_EQ(count_key(ws, "PairAfter"), 3u);
  // adjacency: 2 + 2 + 0 + 0 + 1 + 0; none crosses instances
  EXPECT_EQ(count_key(ws, "NextToLeft"), 5u);
  for (const auto& t : ws.s.query(HolePattern::of({}, {}, ws.s.at("NextToLeft"))))
    for (const auto& u : ws.s.query(HolePattern::of(t.fact, {}, {})))
      EXPECT_EQ(ws.instance_of(u.value), ws.instance_of(t.value));
  EXPECT_EQ(ws.instances.size(), 6u);
  EXPECT_EQ(ws.instances[0].group, "p0");
  EXPECT_EQ(ws.instances[1].side, Side::kAfter);
}

TEST(Lexer, Splits) {
  EXPECT_EQ(lex("name=user.name"), (std::vector<std::string>{"name", "=", "user", ".", "name"}));
  EXPECT_EQ(lex("a b"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(lex("f(x, y);"), (std::vector<std::string>{"f", "(", "x", ",", "y", ")", ";"}));
  EXPECT_TRUE(lex(" \n\t").empty());
}

TEST(Lexer, FileShape) {
  Workspace ws;
  LexOptions opt;
  opt.member_access = true;
  auto nodes = lex_source(ws, "name=user.name", "file.ext", opt);
  EXPECT_EQ(nodes.size(), 5u);
  EXPECT_EQ(count_key(ws, "NextToLeft"), 4u);
  EXPECT_EQ(count_key(ws, "FileMember"), 5u);
  EXPECT_EQ(count_key(ws, "File"), 1u);
  EXPECT_EQ(count_key(ws, "Object"), 1u);
  EXPECT_EQ(count_key(ws, "Access"), 1u);
  EXPECT_EQ(count_key(ws, "Field"), 1u);
  // 4 adjacency + 5 platonic + 1 membership + 1 member access
  EXPECT_EQ(fact_nodes(ws.s).size(), 11u);
  EXPECT_EQ(ws.s.count(HolePattern::of(ws.s.at("file.ext.members"), {}, {})), 6u);
  // both "name" lexemes share one platonic node
  EXPECT_EQ(count_key(ws, "Is\"name\""), 2u);
}

TEST(Lexer, EmptyAndTwoTokens) {
  Workspace ws;
  EXPECT_TRUE(lex_source(ws, "", "empty").empty());
  EXPECT_TRUE(ws.s.find("empty").has_value());
  auto two = lex_source(ws, "a b", "two");
  EXPECT_EQ(two.size(), 2u);
  EXPECT_EQ(count_key(ws, "NextToLeft"), 1u);
}

TEST(Lexer, IdentifierParts) {
  Workspace ws;
  LexOptions opt;
  opt.identifier_parts = true;
  lex_source(ws, "cd_builtin ( )", "a", opt);
  lex_source(ws, "builtin_cd ( )", "b", opt);
  EXPECT_EQ(count_key(ws, "Part\"cd\""), 2u);
  EXPECT_EQ(count_key(ws, "Part\"builtin\""), 2u);
}

TEST(Relational, BinaryFacts) {
  Workspace ws;
  auto before = ws.s.node_count();
  auto fs = encode_relational(ws, {"x", "y", "z"}, {{"R", 2}}, {{"R", {"x", "y"}}, {"R", {"y", "z"}}});
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_EQ(ws.s.name(fs[0]), "f1");
  EXPECT_EQ(ws.s.node_count(), before + 7);
  auto& s = ws.s;
  EXPECT_TRUE(s.has(Fact{s.at("f1"), s.at("x"), s.at("R.1")}));
  EXPECT_TRUE(s.has(Fact{s.at("f1"), s.at("y"), s.at("R.2")}));
  EXPECT_TRUE(s.has(Fact{s.at("f2"), s.at("y"), s.at("R.1")}));
  EXPECT_TRUE(s.has(Fact{s.at("f2"), s.at("z"), s.at("R.2")}));
  EXPECT_EQ(s.fact_count(), 4u);
}

TEST(Relational, SizeBoundAndArity) {
  Workspace ws;
  auto n0 = ws.s.node_count();
  encode_relational(ws, {"a", "b", "c"}, {{"T", 3}}, {{"T", {"a", "b", "c"}}});
  EXPECT_EQ(ws.s.fact_count(), 3u);
  EXPECT_EQ(ws.s.node_count(), n0 + 3 + 3 + 1);
  EXPECT_THROW(encode_relational(ws, {}, {{"T", 3}}, {{"T", {"a"}}}), EncodeError);
  EXPECT_THROW(encode_relational(ws, {}, {{"T", 3}}, {{"U", {"a"}}}), EncodeError);
}

TEST(Relational, FamilyAndPartialFacts) {
  // One family fact with two parents and two children.
  TripletStructure s;
  auto fam = s.intern("family"), parents = s.intern("Parents"), children = s.intern("Children");
  for (auto p : {"Homer", "Marge"}) s.add(fam, s.intern(p), parents);
  for (auto c : {"Bart", "Lisa"}) s.add(fam, s.intern(c), children);
  EXPECT_EQ(s.count(HolePattern::of(fam, {}, parents)), 2u);
  EXPECT_EQ(s.count(HolePattern::of(fam, {}, children)), 2u);
  // A partial fact extended later.
  auto abe = s.intern("abe_family");
  s.add(abe, s.intern("Abe"), parents);
  EXPECT_EQ(s.count(HolePattern::of(abe, {}, children)), 0u);
  s.add(abe, s.at("Homer"), children);
  EXPECT_EQ(s.count(HolePattern::of(abe, {}, {})), 2u);
}

TEST(Annotations, ListShape) {
  Workspace ws;
  lex_source(ws, "gemm ( 64 , 4096 , 8192 )", "f");
  auto doc = json::parse(R"([{"relation": "AtLeastTwice", "args": [{"file": "f", "index": 6}, {"file": "f", "index": 4}]}])");
  auto fs = ingest_annotations(ws, doc);
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(ws.s.count(HolePattern::of(fs[0], {}, {})), 2u);
  EXPECT_TRUE(ws.s.has(Fact{fs[0], ws.s.at("f:6"), ws.s.at("AtLeastTwice.1")}));
}

TEST(Annotations, DeclaredSlotsAndErrors) {
  Workspace ws;
  lex_source(ws, "on error or failure", "docs");
  auto doc = json::parse(R"({"relations": {"IsNegativeSentiment": ["word"]},
    "facts": [{"relation": "IsNegativeSentiment", "args": [{"file": "docs", "index": 1}]},
              {"relation": "IsNegativeSentiment", "args": [{"node": "docs:3"}]}]})");
  auto fs = ingest_annotations(ws, doc);
  EXPECT_EQ(fs.size(), 2u);
  EXPECT_EQ(count_key(ws, "IsNegativeSentiment.word"), 2u);
  EXPECT_TRUE(ingest_annotations(ws, json::array()).empty());
  EXPECT_THROW(ingest_annotations(ws, json::parse(R"([{"relation": "R", "args": [{"node": "nope"}]}])")), EncodeError);
  EXPECT_THROW(ingest_annotations(ws, json::parse(R"({"relations": {}, "facts": [{"relation": "R", "args": []}]})")),
               EncodeError);
}

TEST(Ast, MemberAssignmentShape) {
  Workspace ws;
  auto tree = json::parse(R"({"type": "Assignment", "children": {
      "AssignTo": "name",
      "AssignFrom": {"type": "MemberExpr", "children": {"Object": "user", "Property": "name"}}}})");
  encode_ast(ws, tree, "ast");
  auto fs = fact_nodes(ws.s);
  EXPECT_EQ(fs.size(), 5u);
  EXPECT_EQ(count_key(ws, "Assignment"), 1u);
  EXPECT_EQ(count_key(ws, "MemberExpr"), 1u);
  EXPECT_EQ(count_key(ws, "Identifier\"name\"") + count_key(ws, "Identifier\"user\""), 3u);
}

TEST(Ast, SingleIdentifierAndErrors) {
  Workspace ws;
  encode_ast(ws, json("x"), "one");
  EXPECT_EQ(ws.s.fact_count(), 1u);
  EXPECT_THROW(encode_ast(ws, json::parse(R"({"children": {}})"), "bad"), EncodeError);
  EXPECT_THROW(encode_ast(ws, json::parse(R"({"type": "A", "children": [1]})"), "bad2"), EncodeError);
}

TEST(Ast, CoexistsWithLexical) {
  Workspace ws;
  lex_source(ws, "name=user.name", "file.ext");
  auto lexical = fact_nodes(ws.s);
  encode_ast(ws, json::parse(R"({"type": "Assignment", "children": {"AssignTo": "name", "AssignFrom": "user"}})"),
             "file.ext.ast");
  auto all = fact_nodes(ws.s);
  EXPECT_EQ(all.size(), lexical.size() + 3);
}

TEST(Encoders, Deterministic) {
  auto build = [] {
    Workspace ws;
    encode_pair(ws, "abc", "abd", "ex0");
    lex_source(ws, "a = b . c ;", "src");
    return to_text(ws.s);
  };
  EXPECT_EQ(build(), build());
}
