#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "semdiag/semdiag.hpp"

using namespace semdiag;

namespace {

const kb::KnowledgeBase& demo() {
  static const kb::KnowledgeBase kb = kb::load_file(SEMDIAG_KB_DIR "/demo.json");
  return kb;
}

questions::Question mc(std::size_t n, bool allow_none = true) {
  questions::Question q{"q", questions::QuestionKind::multiple_choice, "Pick", {}, allow_none};
  for (std::size_t i = 0; i < n; ++i)
    q.options.push_back({"opt" + std::to_string(i), "k" + std::to_string(i), {"e" + std::to_string(i)}});
  return q;
}

}  // namespace

TEST(Answers, MultipleChoiceParsing) {
  questions::Question q = mc(3);
  EXPECT_EQ(questions::parse_answer(q, " 3 1 ").selected, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(questions::parse_answer(q, "1,2").selected, (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(questions::parse_answer(q, "NONE").selected.empty());
  EXPECT_THROW(questions::parse_answer(q, "0"), AnswerError);
  EXPECT_THROW(questions::parse_answer(q, "4"), AnswerError);
  EXPECT_THROW(questions::parse_answer(q, "2 2"), AnswerError);
  EXPECT_THROW(questions::parse_answer(q, "  "), AnswerError);
  EXPECT_THROW(questions::parse_answer(mc(2, false), "none"), AnswerError);
}

TEST(Answers, YesNoParsing) {
  questions::Question q{"q", questions::QuestionKind::yes_no, "Ok?", {{"x", "k", {"e"}}}, false};
  EXPECT_EQ(questions::parse_answer(q, "Yes").text, "yes");
  EXPECT_EQ(questions::parse_answer(q, "n").text, "no");
  EXPECT_THROW(questions::parse_answer(q, "perhaps"), AnswerError);
  EXPECT_EQ(questions::judgments_for(q, {0}).front().verdict, gde::Verdict::acceptable);
  EXPECT_EQ(questions::judgments_for(q, {}).front().verdict, gde::Verdict::unacceptable);
  EXPECT_EQ(questions::possible_selections(q).size(), 2u);
}

TEST(Answers, SelectionsAndJudgments) {
  questions::Question q = mc(2);
  EXPECT_EQ(questions::possible_selections(q).size(), 4u);
  EXPECT_EQ(questions::possible_selections(mc(2, false)).size(), 3u);
  std::vector<gde::Judgment> j = questions::judgments_for(q, {1});
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0].element, "e0");
  EXPECT_EQ(j[0].verdict, gde::Verdict::unacceptable);
  EXPECT_EQ(j[1].verdict, gde::Verdict::acceptable);
}

TEST(Rendering, MultipleChoiceLayout) {
  questions::Question q = mc(2);
  EXPECT_EQ(q.render(), "Pick\n1) opt0\n2) opt1\n\n(Please enter a list of numbers between 1 and 2, or \"none\".)\n");
}

TEST(Questions, GeneratedForCleanSentence) {
  parse::ParseTrace t = parse::parse("Joe ate the apple.", demo());
  model::DiagnosisModel m = model::build_model(t);
  questions::Generated g = questions::generate_questions(m, t, demo(), {});
  ASSERT_FALSE(g.questions.empty());
  std::vector<std::string> ids;
  for (const auto& q : g.questions) ids.push_back(q.id);
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  EXPECT_NE(std::find(ids.begin(), ids.end(), "q22-02-ate"), ids.end());
  EXPECT_NE(std::find(ids.begin(), ids.end(), "q31-01-joe"), ids.end());
  EXPECT_TRUE(g.warnings.empty());
}

TEST(Session, ScriptRunningOutIsAnError) {
  session::ScriptedAgent script({"2"});
  report::Report r = session::run_session("Bob ate the wedge.", suite::variant(demo(), "demo-missing-sandwich"), script);
  EXPECT_EQ(r.status, report::Status::error);
  EXPECT_EQ(r.question_count(), 1u);
  EXPECT_EQ(r.exit_code(), 2);
  EXPECT_NE(r.error.find("ran out"), std::string::npos);
}

TEST(Session, InvalidScriptedAnswerIsAnError) {
  session::ScriptedAgent script({"7"});
  report::Report r = session::run_session("Bob ate the wedge.", demo(), script);
  EXPECT_EQ(r.status, report::Status::error);
  EXPECT_EQ(r.question_count(), 0u);
}

TEST(Session, ScriptFileSkipsCommentsAndBlanks) {
  const std::string path = ::testing::TempDir() + "answers.txt";
  {
    std::ofstream out(path);
    out << "# wedge session\n2\n\n  none \n";
  }
  session::ScriptedAgent script = session::ScriptedAgent::from_file(path);
  report::Report r = session::run_session("Bob ate the wedge.", suite::variant(demo(), "demo-missing-sandwich"), script);
  EXPECT_EQ(r.status, report::Status::done);
  EXPECT_EQ(r.question_count(), 2u);
  std::remove(path.c_str());
  EXPECT_THROW(session::ScriptedAgent::from_file("/nonexistent/answers"), SessionError);
}

TEST(Session, InteractiveAgentRepromptsOnBadInput) {
  std::istringstream in("2\nbanana\nnone\n");
  std::ostringstream out;
  session::InteractiveAgent agent(in, out);
  report::Report r = session::run_session("Bob ate the wedge.", suite::variant(demo(), "demo-missing-sandwich"), agent);
  EXPECT_EQ(r.status, report::Status::done);
  EXPECT_EQ(r.question_count(), 2u);
  EXPECT_NE(out.str().find("Invalid answer"), std::string::npos);
  EXPECT_NE(out.str().find("What part of speech is \"bob\"?"), std::string::npos);
}

TEST(Session, EndOfInputAborts) {
  std::istringstream in("2\n");
  std::ostringstream out;
  session::InteractiveAgent agent(in, out);
  report::Report r = session::run_session("Bob ate the wedge.", suite::variant(demo(), "demo-missing-sandwich"), agent);
  EXPECT_EQ(r.status, report::Status::aborted);
  EXPECT_EQ(r.question_count(), 1u);
}

TEST(Session, OracleGoldValidation) {
  EXPECT_THROW(session::OracleAgent::from_json(session::Json::array()), SessionError);
  EXPECT_THROW(session::OracleAgent::from_json({{"acceptable", 3}}), SessionError);
  EXPECT_THROW(session::OracleAgent::from_file("/nonexistent/gold.json"), SessionError);
}

TEST(Session, EmptySentenceGivesErrorReport) {
  session::ScriptedAgent script({});
  report::Report r = session::run_session("", demo(), script);
  EXPECT_EQ(r.status, report::Status::error);
  EXPECT_FALSE(r.model_built);
}

TEST(Report, JsonAndText) {
  session::ScriptedAgent script({"2", "none"});
  report::Report r = session::run_session("Bob ate the wedge.", suite::variant(demo(), "demo-missing-sandwich"), script);
  report::Json j = report::to_json(r);
  EXPECT_EQ(j.at("status"), "done");
  EXPECT_EQ(j.at("question_count"), 2);
  EXPECT_EQ(j.at("kb").at("name"), "demo-missing-sandwich");
  EXPECT_EQ(j.at("kb").at("provenance"), report::Json::array({"remove_semtrans:wedge:Wedge-Sandwich"}));
  EXPECT_EQ(j.at("faults").at(0).at("taxonomy_id"), "C3");
  EXPECT_EQ(j.at("transcript_text"), r.transcript_text());
  EXPECT_GT(j.at("model_stats").at("nodes").get<int>(), 0);
  EXPECT_EQ(r.faults_text(), "Identified errors:\n-[C3] Missing semtrans for \"wedge\"\n");
  EXPECT_EQ(r.exit_code(), 1);
}
