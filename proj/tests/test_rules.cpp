#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "triplet/match.hpp"
#include "triplet/rule.hpp"
#include "triplet/workspace.hpp"

using namespace triplet;

namespace {

const char* kSuccessorRules = R"(# successor pairs
rule succ_a_b
var v1 v2 vf1 vf2
const Letter:a Letter:b Predecessor Successor
require (vf1 v1 Letter:a)
require (vf2 v2 Letter:b)
create nf3
add (nf3 v1 Predecessor) (nf3 v2 Successor)

rule succ_e_f
var v1 v2 vf1 vf2
const Letter:e Letter:f Predecessor Successor
require (vf1 v1 Letter:e) (vf2 v2 Letter:f)
create nf3
add (nf3 v1 Predecessor)
add (nf3 v2 Successor)
)";

/// By hand: "ab" as x1 x2, "ef" as y1 y2.
Workspace ab_ef() {
  Workspace ws;
  auto& s = ws.s;
  auto l = s.intern("NextToLeft"), r = s.intern("NextToRight");
  s.intern("Predecessor");
  s.intern("Successor");
  const char* letters[] = {"a", "b", "e", "f"};
  const char* insts[] = {"x1", "x2", "y1", "y2"};
  for (int i = 0; i < 4; ++i)
    s.add(s.intern("p" + std::to_string(i + 1)), s.intern(insts[i]), s.intern(std::string("Letter:") + letters[i]));
  s.add(s.intern("n1"), s.at("x1"), l);
  s.add(s.at("n1"), s.at("x2"), r);
  s.add(s.intern("n2"), s.at("y1"), l);
  s.add(s.at("n2"), s.at("y2"), r);
  return ws;
}

std::map<std::string, std::string> named(const TripletStructure& s, const Rule& r, const Assignment& a) {
  std::map<std::string, std::string> m;
  for (std::size_t i = 0; i < a.size(); ++i) m[r.vars[i]] = s.name(a[i]);
  return m;
}

}  // namespace

TEST(Parse, SuccessorRuleShape) {
  auto rules = parse_rules(kSuccessorRules);
  ASSERT_EQ(rules.size(), 2u);
  const auto& r1 = rules[0];
  EXPECT_EQ(r1.name, "succ_a_b");
  EXPECT_EQ(r1.vars, (std::vector<std::string>{"v1", "v2", "vf1", "vf2"}));
  EXPECT_EQ(r1.consts, (std::vector<std::string>{"Letter:a", "Letter:b", "Predecessor", "Successor"}));
  EXPECT_EQ(r1.created, std::vector<std::string>{"nf3"});
  ASSERT_EQ(r1.required.size(), 2u);
  EXPECT_EQ(r1.term_name(r1.required[0][0]), "vf1");
  EXPECT_EQ(r1.term_name(r1.required[1][2]), "Letter:b");
  ASSERT_EQ(r1.added.size(), 2u);
  EXPECT_EQ(r1.added[1][0].kind, Term::Kind::kCreated);
  EXPECT_FALSE(r1.is_consistency);
}

TEST(Parse, EmptyFile) { EXPECT_TRUE(parse_rules("").empty()); }

TEST(Parse, Errors) {
  auto expect_error = [](const std::string& text, std::size_t line) {
    try {
      parse_rules(text);
      ADD_FAILURE() << "no error for:\n" << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
    }
  };
  expect_error("rule r\nvar a\nrequire (a a b)\n", 3);
  expect_error("rule r\nvar a\nrequire (a a)\n", 3);
  expect_error("rule r\nconst K\ncreate n\nadd (K K K)\n", 4);
  expect_error("var a\n", 1);
  expect_error("rule r consistency\nvar a\ncreate n\nadd (n a a)\n", 5);
  expect_error("rule r\nvar a\nfrobnicate a\n", 3);
  expect_error("rule r\nvar a\nconst a\n", 3);
  expect_error("rule r\nvar a\ncreate n\nrequire (n a a)\n", 4);
}

TEST(Parse, SymmetryClosure) {
  auto rules = parse_rules(
      "rule r\nvar a b c\nsym (a) <-> (b)\nsym (b) <-> (c)\nrequire (a b c)\n");
  ASSERT_EQ(rules.size(), 1u);
  EXPECT_EQ(rules[0].symmetries.size(), 5u);  // S3 minus identity
}

TEST(Parse, EscapedNames) {
  auto rules = parse_rules("rule r\nvar a\nconst Is\"%28\"\nrequire (a a Is\"%28\")\n");
  EXPECT_EQ(rules[0].consts[0], "Is\"(\"");
}

TEST(Match, SuccessorRulesOnAbEf) {
  auto ws = ab_ef();
  auto rules = parse_rules(kSuccessorRules);
  auto a1 = find_assignments(ws.s, rules[0]);
  ASSERT_EQ(a1.size(), 1u);
  EXPECT_EQ(named(ws.s, rules[0], a1[0]),
            (std::map<std::string, std::string>{{"v1", "x1"}, {"v2", "x2"}, {"vf1", "p1"}, {"vf2", "p2"}}));
  auto a2 = find_assignments(ws.s, rules[1]);
  ASSERT_EQ(a2.size(), 1u);
  EXPECT_EQ(named(ws.s, rules[1], a2[0])["v1"], "y1");
}

TEST(Match, MissingConstantMeansNoMatch) {
  TripletStructure s;
  s.intern("a");
  auto r = parse_rules("rule r\nvar x\nconst Nope\nrequire (x x Nope)\n");
  EXPECT_TRUE(find_assignments(s, r[0]).empty());
}

TEST(Match, UnconstrainedVariableRangesOverAllNodes) {
  TripletStructure s;
  auto a = s.intern("a");
  s.intern("b");
  s.add(a, a, a);
  auto r = parse_rules("rule r\nvar x y\nrequire (x x x)\n");
  EXPECT_EQ(find_assignments(s, r[0]).size(), 2u);
}

TEST(Match, AgreesWithBruteForce) {
  std::mt19937 rng(17);
  for (int round = 0; round < 150; ++round) {
    auto s = oracle::random_structure(rng, 3 + rng() % 6, 5 + rng() % 40);
    auto r = oracle::random_rule(rng, s, 1 + rng() % 4, 1 + rng() % 3);
    auto expected = oracle::sorted_by_names(s, oracle::brute_force(s, r));
    ASSERT_EQ(find_assignments(s, r), expected) << "round " << round;
  }
}

TEST(Match, DifferentialEqualsFilteredFull) { EXPECT_EQ(oracle::differential_mismatches(23, 60), 0u); }

TEST(Match, AgreesOnLargerStructures) { EXPECT_EQ(oracle::matching_mismatches(31, 40, 100, 5), 0u); }

TEST(Match, DifferentialEmptyWithoutNewFacts) {
  auto ws = ab_ef();
  auto rules = parse_rules(kSuccessorRules);
  auto m = ws.s.mark();
  EXPECT_TRUE(find_assignments_differential(ws.s, rules[1], m).empty());
}

TEST(Match, RemovedFactInvalidatesAssignment) {
  auto ws = ab_ef();
  auto rules = parse_rules(kSuccessorRules);
  ASSERT_EQ(find_assignments(ws.s, rules[0]).size(), 1u);
  ws.s.remove(Fact{ws.s.at("p2"), ws.s.at("x2"), ws.s.at("Letter:b")});
  EXPECT_TRUE(find_assignments(ws.s, rules[0]).empty());
}

TEST(Canonical, OrbitProperty) {
  auto rules = parse_rules(
      "rule adj\nvar v1 v2 vf1 vf2 c\nsym (v1 vf1) <-> (v2 vf2)\nrequire (vf1 v1 c) (vf2 v2 c)\n");
  auto ws = ab_ef();
  ws.s.add(ws.s.at("p1"), ws.s.at("x1"), ws.s.at("Letter:b"));
  const auto& r = rules[0];
  auto all = find_assignments(ws.s, r);
  std::set<Assignment> canon;
  for (const auto& a : all) {
    auto c = canonicalize_assignment(ws.s, r, a);
    EXPECT_EQ(canonicalize_assignment(ws.s, r, permute(a, r.symmetries[0])), c);
    canon.insert(c);
  }
  EXPECT_EQ(canon.size(), oracle::orbit_count(r, all));
}

TEST(Canonical, RandomOrbitCounts) {
  std::mt19937 rng(31);
  for (int round = 0; round < 40; ++round) {
    auto s = oracle::random_structure(rng, 5, 25);
    auto rules = parse_rules(
        "rule r\nvar a b c d\nconst n0\nsym (a c) <-> (b d)\nrequire (a c n0) (b d n0)\n");
    auto all = find_assignments(s, rules[0]);
    std::set<Assignment> canon;
    for (const auto& a : all) canon.insert(canonicalize_assignment(s, rules[0], a));
    EXPECT_EQ(canon.size(), oracle::orbit_count(rules[0], all));
  }
}

TEST(Canonical, NoSymmetryIsIdentity) {
  auto ws = ab_ef();
  auto rules = parse_rules(kSuccessorRules);
  auto a = find_assignments(ws.s, rules[0]).at(0);
  EXPECT_EQ(canonicalize_assignment(ws.s, rules[0], a), a);
}

TEST(Apply, SuccessorRulesOneAtATime) {
  auto ws = ab_ef();
  auto rules = parse_rules(kSuccessorRules);
  auto d1 = apply_rule(ws, rules[0], find_assignments(ws.s, rules[0]).at(0));
  ASSERT_EQ(d1.created_nodes.size(), 1u);
  auto s1 = d1.created_nodes[0];
  EXPECT_EQ(ws.s.name(s1).rfind("gen:", 0), 0u);
  EXPECT_TRUE(ws.s.has(Fact{s1, ws.s.at("x1"), ws.s.at("Predecessor")}));
  EXPECT_TRUE(ws.s.has(Fact{s1, ws.s.at("x2"), ws.s.at("Successor")}));
  EXPECT_EQ(ws.s.fact_count(), 10u);
  auto d2 = apply_rule(ws, rules[1], find_assignments(ws.s, rules[1]).at(0));
  ASSERT_EQ(d2.created_nodes.size(), 1u);
  EXPECT_TRUE(ws.s.has(Fact{d2.created_nodes[0], ws.s.at("y2"), ws.s.at("Successor")}));
  EXPECT_EQ(ws.s.fact_count(), 12u);
}

TEST(Apply, ReapplyIsNoOp) {
  auto ws = ab_ef();
  auto rules = parse_rules(kSuccessorRules);
  auto a = find_assignments(ws.s, rules[0]).at(0);
  apply_rule(ws, rules[0], a);
  auto snap = ws.s.snapshot();
  auto d = apply_rule(ws, rules[0], a);
  EXPECT_TRUE(d.created_nodes.empty());
  EXPECT_TRUE(d.added_facts.empty());
  EXPECT_EQ(ws.s.snapshot(), snap);
}

TEST(Apply, RollbackAndReapplyGivesSameNames) {
  auto ws = ab_ef();
  auto rules = parse_rules(kSuccessorRules);
  auto base = ws.s.snapshot();
  auto m = ws.s.mark();
  auto d1 = apply_rule(ws, rules[0], find_assignments(ws.s, rules[0]).at(0));
  auto name1 = ws.s.name(d1.created_nodes[0]);
  ws.s.rollback(m);
  EXPECT_EQ(ws.s.snapshot(), base);
  apply_rule(ws, rules[1], find_assignments(ws.s, rules[1]).at(0));
  auto d1b = apply_rule(ws, rules[0], find_assignments(ws.s, rules[0]).at(0));
  EXPECT_EQ(ws.s.name(d1b.created_nodes[0]), name1);
}

TEST(Apply, OrbitEquivalentAssignmentsAgree) {
  auto rules = parse_rules(
      "rule pair\nvar A B C MA MB\nsym (A MA) <-> (B MB)\ndistinct A B\n"
      "const Left Right\nrequire (MA A C) (MB B C)\ncreate link\nadd (link A Left) (link B Right)\n");
  auto ws = ab_ef();
  ws.s.intern("Left");
  ws.s.intern("Right");
  auto all = find_assignments(ws.s, rules[0]);
  ASSERT_FALSE(all.empty());
  auto a = all[0];
  auto b = permute(a, rules[0].symmetries[0]);
  Workspace w1 = ws, w2 = ws;
  apply_rule(w1, rules[0], a);
  apply_rule(w2, rules[0], b);
  EXPECT_EQ(w1.s.snapshot(), w2.s.snapshot());
}

TEST(Apply, ConsistencyRuleRejected) {
  auto ws = ab_ef();
  auto rules = parse_rules("rule bad consistency\nvar x\nrequire (x x x)\n");
  EXPECT_THROW(apply_rule(ws, rules[0], {ws.s.at("x1")}), RuleError);
}

TEST(Apply, NamingCommutes) {
  std::mt19937 rng(41);
  auto rules = parse_rules(kSuccessorRules);
  for (int round = 0; round < 20; ++round) {
    auto w1 = ab_ef(), w2 = ab_ef();
    std::vector<std::pair<int, Assignment>> apps;
    for (int r = 0; r < 2; ++r)
      for (auto& a : find_assignments(w1.s, rules[r])) apps.emplace_back(r, a);
    std::vector<std::pair<int, Assignment>> shuffled = apps;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto& [r, a] : apps) apply_rule(w1, rules[r], a);
    for (auto& [r, a] : shuffled) apply_rule(w2, rules[r], a);
    EXPECT_EQ(w1.s.snapshot(), w2.s.snapshot());
  }
}

TEST(Apply, NamingCommutesOnLetterStrings) { EXPECT_EQ(oracle::commutativity_mismatches(43, 10), 0u); }

TEST(Apply, CollisionIsHardError) {
  Workspace ws;
  ws.intern_generated("gen:1", "p1");
  EXPECT_NO_THROW(ws.intern_generated("gen:1", "p1"));
  EXPECT_THROW(ws.intern_generated("gen:1", "p2"), HashCollision);
  ws.s.intern("gen:2");
  EXPECT_THROW(ws.intern_generated("gen:2", "p3"), HashCollision);
}

TEST(Consistency, LetterExclusivity) {
  auto ws = ab_ef();
  auto rules = parse_rules(
      "rule one_letter consistency\nvar x p q\nconst Letter:a Letter:b\n"
      "require (p x Letter:a) (q x Letter:b)\n");
  EXPECT_TRUE(check_consistency(ws, rules).empty());
  auto m = ws.s.mark();
  ws.s.add(ws.s.intern("p9"), ws.s.at("x1"), ws.s.at("Letter:b"));
  EXPECT_EQ(check_consistency(ws, rules).size(), 1u);
  EXPECT_EQ(check_consistency_since(ws, rules, m).size(), 1u);
  ws.s.rollback(m);
  EXPECT_TRUE(check_consistency(ws, rules).empty());
}
