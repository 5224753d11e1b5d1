#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "semdiag/semdiag.hpp"
#include "semdiag/service.hpp"

using namespace semdiag;
using service::Json;

namespace {

const kb::KnowledgeBase& demo() {
  static const kb::KnowledgeBase kb = kb::load_file(SEMDIAG_KB_DIR "/demo.json");
  return kb;
}

const std::string kWedge = R"({"sentence": "Bob ate the wedge.", "kb_name": "demo-missing-sandwich"})";

std::string answer_body(const std::string& a, int index = -1) {
  Json j = {{"answer", a}};
  if (index >= 0) j["index"] = index;
  return j.dump();
}

std::string cli_report_json() {
  session::ScriptedAgent script({"2", "none"});
  report::Report r = session::run_session("Bob ate the wedge.", suite::variant(demo(), "demo-missing-sandwich"), script);
  return report::to_json(r).dump(2);
}

}  // namespace

TEST(Service, CreateAndWalkWedgeSession) {
  service::Service svc(demo());
  service::Response c = svc.create(kWedge);
  ASSERT_EQ(c.status, 201);
  const std::string id = c.body.at("session_id");
  EXPECT_EQ(c.body.at("state"), "awaiting_answer");
  EXPECT_EQ(c.body.at("question").at("prompt"), "What part of speech is \"bob\"?");
  EXPECT_EQ(c.body.at("question_index"), 0);

  service::Response a1 = svc.answer(id, answer_body("2"));
  ASSERT_EQ(a1.status, 200);
  EXPECT_EQ(a1.body.at("question").at("prompt"), "What does \"wedge\" mean?");
  service::Response a2 = svc.answer(id, answer_body("none"));
  ASSERT_EQ(a2.status, 200);
  EXPECT_EQ(a2.body.at("state"), "done");
  EXPECT_EQ(a2.body.at("report").at("faulted_assumptions"), Json::array({"Choice Set #4 (\"wedge\") is complete."}));

  service::Response g = svc.get(id);
  EXPECT_EQ(g.status, 200);
  EXPECT_EQ(g.body, a2.body);
  service::Response m = svc.model(id);
  EXPECT_EQ(m.status, 200);
  EXPECT_TRUE(m.body.at("model").contains("nodes"));
  EXPECT_EQ(m.body.at("trace").at("tokens").size(), 4u);
}

TEST(Service, ReportMatchesCliByteForByte) {
  service::Service svc(demo());
  const std::string id = svc.create(kWedge).body.at("session_id");
  svc.answer(id, answer_body("2", 0));
  svc.answer(id, answer_body("none", 1));
  EXPECT_EQ(svc.report(id).body.dump(2), cli_report_json());
}

TEST(Service, ZeroQuestionSessionIsDoneAtCreation) {
  service::Service svc(demo());
  service::Response c = svc.create(R"({"sentence": "Joe ate the apple.", "kb_name": "demo-no-apple-sense"})");
  ASSERT_EQ(c.status, 201);
  EXPECT_EQ(c.body.at("state"), "done");
  EXPECT_FALSE(c.body.contains("question"));
  EXPECT_EQ(c.body.at("report").at("faults").at(0).at("taxonomy_id"), "C3");
}

TEST(Service, InlineKnowledgeBase) {
  service::Service svc(demo());
  Json body = {{"sentence", "Joe ate the apple."}, {"kb", kb::to_json(demo())}};
  EXPECT_EQ(svc.create(body.dump()).status, 201);
  body["kb"] = {{"lexicon", "nope"}};
  EXPECT_EQ(svc.create(body.dump()).status, 400);
}

TEST(Service, ErrorStatuses) {
  service::Service svc(demo());
  EXPECT_EQ(svc.create("not json").status, 400);
  EXPECT_EQ(svc.create(R"({"kb_name": "demo"})").status, 400);
  EXPECT_EQ(svc.create(R"({"sentence": "Joe ate.", "kb_name": "no-such-kb"})").status, 400);
  EXPECT_EQ(svc.create(R"({"sentence": "  "})").status, 400);
  service::Response frag = svc.create(R"({"sentence": "Joe ate the kumquat."})");
  EXPECT_EQ(frag.status, 422);
  EXPECT_EQ(frag.body.at("report").at("faults").at(0).at("taxonomy_id"), "A1");

  EXPECT_EQ(svc.get("deadbeef").status, 404);
  EXPECT_EQ(svc.answer("deadbeef", answer_body("1")).status, 404);
  EXPECT_EQ(svc.report("deadbeef").status, 404);
  EXPECT_EQ(svc.model("deadbeef").status, 404);

  const std::string id = svc.create(kWedge).body.at("session_id");
  EXPECT_EQ(svc.answer(id, "{}").status, 400);
  EXPECT_EQ(svc.answer(id, answer_body("banana")).status, 400);
  EXPECT_EQ(svc.answer(id, answer_body("2", 3)).status, 409);
  EXPECT_EQ(svc.answer(id, R"({"answer": "2", "index": -1})").status, 400);
  EXPECT_EQ(svc.get(id).body.at("question_index"), 0);
}

TEST(Service, DuplicateAnswerIsReplayed) {
  service::Service svc(demo());
  const std::string id = svc.create(kWedge).body.at("session_id");
  service::Response first = svc.answer(id, answer_body("2", 0));
  service::Response again = svc.answer(id, answer_body(" 2 ", 0));
  EXPECT_EQ(again.status, 200);
  EXPECT_EQ(again.body, first.body);
  EXPECT_EQ(svc.answer(id, answer_body("1", 0)).status, 409);
  EXPECT_EQ(svc.get(id).body.at("question_index"), 1);
  svc.answer(id, answer_body("none", 1));
  EXPECT_EQ(svc.answer(id, answer_body("none", 2)).status, 409);
}

TEST(Service, ExpiredSessionsAreEvicted) {
  service::Options opts;
  opts.ttl = std::chrono::seconds(5);
  service::Service svc(demo(), opts);
  svc.create(kWedge);
  svc.create(kWedge);
  EXPECT_EQ(svc.session_count(), 2u);
  EXPECT_EQ(svc.evict_expired(), 0u);
  EXPECT_EQ(svc.evict_expired(service::Clock::now() + std::chrono::seconds(6)), 2u);
  EXPECT_EQ(svc.session_count(), 0u);
}

TEST(Service, ConcurrentSessionsAreIsolated) {
  service::Service svc(demo());
  const std::string expected = cli_report_json();
  std::vector<std::string> results(8);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < results.size(); ++i)
    threads.emplace_back([&, i] {
      const std::string id = svc.create(kWedge).body.at("session_id");
      svc.answer(id, answer_body("2"));
      svc.answer(id, answer_body("none"));
      results[i] = svc.report(id).body.dump(2);
    });
  for (std::thread& t : threads) t.join();
  for (const std::string& r : results) EXPECT_EQ(r, expected);
  EXPECT_EQ(svc.session_count(), results.size());
}

TEST(Service, HttpRoundTrip) {
  service::Service svc(demo());
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/sessions", kWedge, "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const std::string id = Json::parse(created->body).at("session_id");
  for (const char* a : {"2", "none"}) {
    auto r = client.Post("/sessions/" + id + "/answers", answer_body(a), "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
  }
  auto view = client.Get("/sessions/" + id);
  ASSERT_TRUE(view);
  EXPECT_EQ(Json::parse(view->body).at("state"), "done");
  auto rep = client.Get("/sessions/" + id + "/report");
  ASSERT_TRUE(rep);
  EXPECT_EQ(rep->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(rep->body, cli_report_json() + "\n");
  auto missing = client.Get("/sessions/0123/report");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto model = client.Get("/sessions/" + id + "/model");
  ASSERT_TRUE(model);
  EXPECT_EQ(model->status, 200);

  server.stop();
  listener.join();
}

TEST(Service, HttpReportEqualsCliReportFile) {
  const std::string path = ::testing::TempDir() + "cli_report.json";
  const std::string cmd = std::string("\"") + SEMDIAG_CLI + "\" diagnose --kb " SEMDIAG_KB_DIR
                          "/demo.json --variant demo-missing-sandwich --sentence \"Bob ate the wedge.\" --answers "
                          SEMDIAG_TEST_DATA "/wedge_answers.txt --report \"" + path + "\" > /dev/null";
  ASSERT_NE(std::system(cmd.c_str()), -1);
  std::ifstream in(path);
  std::stringstream cli;
  cli << in.rdbuf();
  ASSERT_FALSE(cli.str().empty());

  service::Service svc(demo());
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  const std::string id = Json::parse(client.Post("/sessions", kWedge, "application/json")->body).at("session_id");
  client.Post("/sessions/" + id + "/answers", answer_body("2", 0), "application/json");
  client.Post("/sessions/" + id + "/answers", answer_body("none", 1), "application/json");
  auto rep = client.Get("/sessions/" + id + "/report");
  server.stop();
  listener.join();
  ASSERT_TRUE(rep);
  EXPECT_EQ(rep->body, cli.str());
}
