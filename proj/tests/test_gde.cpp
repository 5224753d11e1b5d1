#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace semdiag;
using catms::Catms;
using catms::Environment;
using catms::NodeId;
using catms::NodeKind;

namespace {

NodeId n(std::uint32_t v) { return NodeId{v}; }

}  // namespace

TEST(HittingSets, NoConflictsMeansEmptyDiagnosis) {
  gde::HittingSets hs = gde::minimal_diagnoses({});
  ASSERT_EQ(hs.diagnoses.size(), 1u);
  EXPECT_TRUE(hs.diagnoses.front().empty());
  EXPECT_FALSE(hs.exceeded_cap);
}

TEST(HittingSets, HandExample) {
  std::vector<Environment> conflicts = {Environment{n(1), n(2)}, Environment{n(2), n(3)}, Environment{n(1), n(3)}};
  gde::HittingSets hs = gde::minimal_diagnoses(conflicts);
  EXPECT_EQ(hs.diagnoses, (std::vector<Environment>{Environment{n(1), n(2)}, Environment{n(1), n(3)},
                                                    Environment{n(2), n(3)}}));
}

TEST(HittingSets, SingletonsComeFirst) {
  std::vector<Environment> conflicts = {Environment{n(1), n(2)}, Environment{n(2), n(3)}};
  gde::HittingSets hs = gde::minimal_diagnoses(conflicts);
  EXPECT_EQ(hs.diagnoses, (std::vector<Environment>{Environment{n(2)}, Environment{n(1), n(3)}}));
}

TEST(HittingSets, CapExceeded) {
  std::vector<Environment> conflicts;
  for (std::uint32_t i = 0; i < 5; ++i) conflicts.push_back(Environment{n(i)});
  gde::HittingSets hs = gde::minimal_diagnoses(conflicts, 4);
  EXPECT_TRUE(hs.diagnoses.empty());
  EXPECT_TRUE(hs.exceeded_cap);
  EXPECT_EQ(gde::minimal_diagnoses(conflicts, 5).diagnoses.size(), 1u);
}

TEST(HittingSetsOracle, RandomFamiliesMatchBruteForce) {
  std::mt19937 rng(99);
  for (int i = 0; i < 600; ++i) {
    std::vector<Environment> conflicts = oracle::random_conflicts(rng);
    std::vector<Environment> expected = oracle::brute_hitting_sets(conflicts);
    gde::HittingSets hs = gde::minimal_diagnoses(conflicts, 10);
    ASSERT_EQ(hs.diagnoses, expected) << "family " << i;
    // the capped search returns exactly the expected sets that fit
    std::vector<Environment> small;
    for (const Environment& e : expected)
      if (e.size() <= gde::kDiagnosisCap) small.push_back(e);
    ASSERT_EQ(gde::minimal_diagnoses(conflicts).diagnoses, small) << "family " << i;
  }
}

namespace {

// Two defaults guarding one observation each, plus a measurement pair.
struct Toy {
  Catms<std::string> tms;
  gde::DefaultSet defaults;
  gde::Measurements meas;
  NodeId clash1 = tms.create_node("clash1", NodeKind::contradiction);
  NodeId clash2 = tms.create_node("clash2", NodeKind::contradiction);
  gde::DefaultPair p1 = defaults.add_pair(tms, "s1", std::string("complete(s1)"), std::string("incomplete(s1)"), clash1);
  gde::DefaultPair p2 = defaults.add_pair(tms, "s2", std::string("complete(s2)"), std::string("incomplete(s2)"), clash2);
  NodeId acc = tms.create_node("acc(e)", NodeKind::ordinary);
  NodeId unacc = tms.create_node("unacc(e)", NodeKind::ordinary);
  NodeId bottom = tms.create_node("bottom", NodeKind::contradiction);
  Toy() {
    tms.add_justification({acc, unacc}, bottom, "clash");
    // either set being complete predicts e acceptable
    tms.add_justification({p1.complete}, acc, "s1");
    tms.add_justification({p2.complete}, acc, "s2");
  }
  gde::ElementNodes nodes() const { return {acc, unacc}; }
};

}  // namespace

TEST(Gde, AddPairRejectsDuplicates) {
  Toy t;
  EXPECT_THROW(t.defaults.add_pair(t.tms, "s1", std::string("a"), std::string("b"), t.clash1), ModelError);
  EXPECT_TRUE(t.defaults.is_default(t.p1.incomplete));
  EXPECT_FALSE(t.defaults.is_fault_eligible(t.p1.incomplete));
  EXPECT_TRUE(t.defaults.is_fault_eligible(t.p1.complete));
}

TEST(Gde, ProjectConflictsIgnoresPairClashes) {
  Toy t;
  EXPECT_TRUE(gde::project_conflicts(t.tms, t.defaults, t.meas.measured_env()).empty());
}

TEST(Gde, MeasurementYieldsConflict) {
  Toy t;
  t.meas.record(t.tms, {"e", gde::Verdict::unacceptable}, t.nodes());
  std::vector<Environment> conflicts = gde::project_conflicts(t.tms, t.defaults, t.meas.measured_env());
  EXPECT_EQ(conflicts, (std::vector<Environment>{Environment{t.p1.complete}, Environment{t.p2.complete}}));
  gde::HittingSets hs = gde::minimal_diagnoses(conflicts);
  EXPECT_EQ(hs.diagnoses, (std::vector<Environment>{Environment{t.p1.complete, t.p2.complete}}));
  Environment env = gde::hypothesis_env(t.defaults, hs.diagnoses.front(), t.meas.measured_env());
  EXPECT_TRUE(env.contains(t.p1.incomplete));
  EXPECT_TRUE(t.tms.env_consistent(env));
}

TEST(Gde, ContradictoryMeasurementThrows) {
  Toy t;
  t.meas.record(t.tms, {"e", gde::Verdict::unacceptable}, t.nodes());
  EXPECT_NO_THROW(t.meas.record(t.tms, {"e", gde::Verdict::unacceptable}, t.nodes()));
  EXPECT_THROW(t.meas.record(t.tms, {"e", gde::Verdict::acceptable}, t.nodes()), AnswerError);
  EXPECT_EQ(t.meas.records().size(), 1u);
}

namespace {

// Three single-fault hypotheses over defaults d0..d2, each predicting its
// own observation o_i acceptable and its fault o_i unacceptable.
struct Selector {
  Catms<std::string> tms;
  gde::DefaultSet defaults;
  gde::Measurements meas;
  std::vector<gde::DefaultPair> pairs;
  std::vector<NodeId> acc, unacc;
  Selector() {
    for (int i = 0; i < 3; ++i) {
      const std::string s = std::to_string(i);
      NodeId clash = tms.create_node("clash" + s, NodeKind::contradiction);
      pairs.push_back(defaults.add_pair(tms, "d" + s, "complete" + s, "incomplete" + s, clash));
      acc.push_back(tms.create_node("acc" + s, NodeKind::ordinary));
      unacc.push_back(tms.create_node("unacc" + s, NodeKind::ordinary));
      NodeId bottom = tms.create_node("bottom" + s, NodeKind::contradiction);
      tms.add_justification({acc.back(), unacc.back()}, bottom, "clash");
      tms.add_justification({pairs.back().complete}, acc.back(), "predict");
      tms.add_justification({pairs.back().incomplete}, unacc.back(), "predict-missing");
    }
  }
  std::vector<gde::Hypothesis> single_faults() {
    std::vector<gde::Hypothesis> hs;
    for (const auto& p : pairs) {
      Environment f{p.complete};
      hs.push_back({f, gde::hypothesis_env(defaults, f, meas.measured_env())});
    }
    return hs;
  }
  gde::Candidate yes_no(const std::string& id, std::size_t i) {
    auto ja = meas.assumption_for(tms, {"o" + std::to_string(i), gde::Verdict::acceptable}, {acc[i], unacc[i]});
    auto ju = meas.assumption_for(tms, {"o" + std::to_string(i), gde::Verdict::unacceptable}, {acc[i], unacc[i]});
    return {id, {gde::Outcome{{{ja, acc[i]}}}, gde::Outcome{{{ju, unacc[i]}}}}};
  }
};

}  // namespace

TEST(Selection, PrefersBalancedSplitThenLowestId) {
  Selector s;
  std::vector<gde::Hypothesis> hs = s.single_faults();
  std::vector<gde::Candidate> cands = {s.yes_no("q2", 1), s.yes_no("q1", 0)};
  auto sel = gde::select_measurement(s.tms, cands, hs, s.meas.measured_env());
  ASSERT_TRUE(sel.has_value());
  EXPECT_EQ(cands[sel->index].id, "q1");
  EXPECT_EQ(sel->score, 2u);
  // acceptable leaves the other two; unacceptable isolates d0
  EXPECT_EQ(sel->cells[0], (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(sel->cells[1], (std::vector<std::size_t>{0}));
}

TEST(Selection, SkipsMeasuredAndSingleHypothesis) {
  Selector s;
  gde::Candidate q = s.yes_no("q1", 0);
  s.meas.record(s.tms, {"o0", gde::Verdict::acceptable}, {s.acc[0], s.unacc[0]});
  std::vector<gde::Hypothesis> hs;
  for (const gde::Hypothesis& h : s.single_faults())
    if (s.tms.env_consistent(h.env)) hs.push_back(h);
  ASSERT_EQ(hs.size(), 2u);
  std::vector<gde::Candidate> cands = {q};
  EXPECT_FALSE(gde::select_measurement(s.tms, cands, hs, s.meas.measured_env()).has_value());
  std::vector<gde::Hypothesis> one(hs.begin(), hs.begin() + 1);
  std::vector<gde::Candidate> fresh = {s.yes_no("q2", 1)};
  EXPECT_FALSE(gde::select_measurement(s.tms, fresh, one, s.meas.measured_env()).has_value());
}

TEST(Selection, SkipsQuestionsThatCannotSplit) {
  Selector s;
  // both hypotheses keep d2 complete, so o2 is acceptable under each
  std::vector<gde::Hypothesis> hs = s.single_faults();
  hs.pop_back();
  std::vector<gde::Candidate> cands = {s.yes_no("q0", 2)};
  EXPECT_FALSE(gde::select_measurement(s.tms, cands, hs, s.meas.measured_env()).has_value());
}
