// Prints one PASS/FAIL line per acceptance criterion; exits non-zero on any failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "support/agents.hpp"
#include "support/oracles.hpp"

using namespace semdiag;

namespace {

using Clock = std::chrono::steady_clock;

const kb::KnowledgeBase& demo() {
  static const kb::KnowledgeBase kb = kb::load_file(SEMDIAG_KB_DIR "/demo.json");
  return kb;
}

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string ablation_suite() {
  const std::vector<std::size_t> questions = {0, 6, 6};
  std::size_t i = 0;
  for (const suite::CaseResult& c : suite::run_ablation_suite(demo())) {
    const report::Report& r = c.report;
    if (!c.passed) return c.spec.ablated + ": wrong diagnosis";
    if (c.seconds >= 1.0) return c.spec.ablated + ": took " + std::to_string(c.seconds) + " s";
    if (r.question_count() > questions[i]) return c.spec.ablated + ": asked " + std::to_string(r.question_count());
    if (c.spec.expected_id == "C2" && r.faults.front().roles != std::vector<std::string>{"object", "subject"})
      return c.spec.ablated + ": wrong roles";
    ++i;
  }
  return i == 3 ? "" : "missing cases";
}

std::string wedge_transcript() {
  std::ifstream in(SEMDIAG_TEST_DATA "/wedge_transcript.txt");
  std::stringstream golden;
  golden << in.rdbuf();
  session::ScriptedAgent script({"2", "none"});
  report::Report r = session::run_session("Bob ate the wedge.", suite::variant(demo(), "demo-missing-sandwich"), script);
  if (golden.str().empty()) return "golden file missing";
  if (r.transcript_text() != golden.str()) return "transcript differs from golden file";
  if (r.faulted_assumptions != std::vector<std::string>{"Choice Set #4 (\"wedge\") is complete."})
    return "wedge completeness not faulted";
  return "";
}

std::string soundness() {
  session::OracleAgent oracle(suite::ablation_gold());
  report::Report r = session::run_session(suite::kAblationSentence, demo(), oracle);
  if (r.status != report::Status::done) return "session did not finish";
  return r.faults.empty() && r.faulted_assumptions.empty() ? "" : "phantom fault reported";
}

std::string catms_oracle() {
  const auto start = Clock::now();
  std::mt19937 rng(7);
  for (int i = 0; i < 250; ++i) {
    const std::string failure = oracle::check_network(oracle::random_network(rng));
    if (!failure.empty()) return "network " + std::to_string(i) + ": " + failure;
  }
  const double secs = since(start);
  return secs < 60 ? "" : "took " + std::to_string(secs) + " s";
}

std::string hitting_sets() {
  std::mt19937 rng(99);
  for (int i = 0; i < 600; ++i) {
    std::vector<catms::Environment> conflicts = oracle::random_conflicts(rng, 10);
    if (gde::minimal_diagnoses(conflicts, 10).diagnoses != oracle::brute_hitting_sets(conflicts))
      return "family " + std::to_string(i) + " differs";
  }
  return "";
}

std::string factored_interpretations() {
  std::mt19937 rng(4242);
  for (int i = 0; i < 120; ++i) {
    oracle::RandomTrace rt = oracle::random_trace(rng);
    oracle::FiResult r = oracle::check_fi(rt, rng);
    if (!r.failure.empty()) return "trace " + std::to_string(i) + ": " + r.failure;
    if (r.nodes > r.size_bound) return "trace " + std::to_string(i) + ": node count above linear bound";
  }
  return "";
}

std::string question_economy() {
  unsigned seed = 1;
  for (const auto& [name, _] : suite::demo_variants())
    for (const std::string& s : agents::suite_sentences())
      for (int rep = 0; rep < 4; ++rep) {
        agents::RandomAgent agent(seed++);
        report::Report r = session::run_session(s, suite::variant(demo(), name), agent);
        if (r.status != report::Status::done) return name + " / " + s + ": did not terminate cleanly";
        const std::string v = agents::economy_violation(r);
        if (!v.empty()) return name + " / " + s + ": " + v;
      }
  return "";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
      {"ablation-suite-reproduction", ablation_suite},
      {"wedge-golden-transcript", wedge_transcript},
      {"clean-sentence-soundness", soundness},
      {"catms-oracle-equivalence", catms_oracle},
      {"hitting-set-oracle-equivalence", hitting_sets},
      {"factored-interpretation-correctness", factored_interpretations},
      {"question-economy", question_economy},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    std::string failure;
    try {
      failure = check();
    } catch (const std::exception& e) {
      failure = std::string("exception: ") + e.what();
    }
    if (failure.empty()) {
      std::cout << "PASS " << name << "\n";
    } else {
      std::cout << "FAIL " << name << ": " << failure << "\n";
      ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}
