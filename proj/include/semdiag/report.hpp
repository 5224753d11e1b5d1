#pragma once

// Diagnosis reports: primitive faults with taxonomy ids, the question/answer
// transcript and its plain-text rendering.

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "semdiag/gde.hpp"
#include "semdiag/model.hpp"
#include "semdiag/questions.hpp"

namespace semdiag::report {

using Json = nlohmann::json;

// kind is one of lexicon_missing, semtrans_set_incomplete, valence_missing,
// unresolved_grammar, unresolved.
struct Fault {
  std::string kind;
  std::string taxonomy_id;
  std::string description;
  Json evidence = Json::object();
  std::vector<std::string> roles;  // valence_missing only
};

struct TranscriptEntry {
  questions::Question question;
  std::string answer;
  std::vector<gde::Judgment> judgments;
  std::size_t hypotheses = 0;         // surviving candidate diagnoses when asked
  std::size_t possible_outcomes = 0;  // answers consistent with some candidate
  bool answer_entailed = false;       // answer already followed from earlier measurements
};

enum class Status { awaiting_answer, done, aborted, error };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::awaiting_answer: return "awaiting_answer";
    case Status::done: return "done";
    case Status::aborted: return "aborted";
    case Status::error: return "error";
  }
  return "?";
}

struct Report {
  std::string sentence;
  std::string kb_name;
  std::vector<std::string> kb_provenance;
  Status status = Status::awaiting_answer;
  std::vector<Fault> faults;
  std::vector<std::string> faulted_assumptions;
  bool model_built = false;
  std::vector<TranscriptEntry> transcript;
  model::Stats stats;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  std::string error;

  std::size_t question_count() const { return transcript.size(); }

  int exit_code() const {
    if (status == Status::error) return 2;
    return faults.empty() ? 0 : 1;
  }

  // Questions with echoed answers, then the faulted-assumption block once
  // the session has ended.
  std::string transcript_text() const {
    std::string s;
    for (const TranscriptEntry& e : transcript) s += e.question.render() + "> " + e.answer + "\n\n";
    return s + conclusion_text();
  }

  // The closing faulted-assumption block; empty while a question is pending.
  std::string conclusion_text() const {
    std::string s;
    if (status == Status::awaiting_answer) return s;
    if (!faulted_assumptions.empty()) {
      s += "These assumptions are faulted:\n";
      for (const std::string& a : faulted_assumptions) s += "-" + a + "\n";
    } else if (model_built && status == Status::done) {
      s += "No assumptions are faulted.\n";
    }
    return s;
  }

  // Primitive faults, one per line, for console output after the transcript.
  std::string faults_text() const {
    std::string s;
    if (status == Status::aborted) s += "Diagnosis aborted; results are partial.\n";
    if (status == Status::error) s += "Session error: " + error + "\n";
    if (faults.empty()) {
      if (status == Status::done) s += "No error detected.\n";
      return s;
    }
    s += "Identified errors:\n";
    for (const Fault& f : faults) s += "-[" + (f.taxonomy_id.empty() ? std::string("?") : f.taxonomy_id) + "] " + f.description + "\n";
    return s;
  }
};

inline Json to_json(const Fault& f) {
  Json j = {{"kind", f.kind}, {"taxonomy_id", f.taxonomy_id}, {"description", f.description}, {"evidence", f.evidence}};
  if (!f.roles.empty()) j["roles"] = f.roles;
  return j;
}

inline Json to_json(const Report& r) {
  Json faults = Json::array();
  for (const Fault& f : r.faults) faults.push_back(to_json(f));
  Json transcript = Json::array();
  for (const TranscriptEntry& e : r.transcript) {
    Json judgments = Json::array();
    for (const gde::Judgment& j : e.judgments)
      judgments.push_back({{"element", j.element}, {"verdict", gde::to_string(j.verdict)}});
    transcript.push_back({{"question", questions::to_json(e.question)},
                          {"answer", e.answer},
                          {"judgments", judgments},
                          {"hypotheses", e.hypotheses},
                          {"possible_outcomes", e.possible_outcomes},
                          {"answer_entailed", e.answer_entailed}});
  }
  Json j = {{"sentence", r.sentence},
            {"kb", {{"name", r.kb_name}, {"provenance", r.kb_provenance}}},
            {"status", to_string(r.status)},
            {"faults", faults},
            {"faulted_assumptions", r.faulted_assumptions},
            {"transcript", transcript},
            {"transcript_text", r.transcript_text()},
            {"question_count", r.question_count()},
            {"model_stats",
             {{"nodes", r.stats.nodes},
              {"assumptions", r.stats.assumptions},
              {"justifications", r.stats.justifications},
              {"nogoods", r.stats.nogoods},
              {"elements", r.stats.elements}}},
            {"warnings", r.warnings},
            {"notes", r.notes}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

}  // namespace semdiag::report
