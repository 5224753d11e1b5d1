#pragma once

// User agents and the blocking session driver.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "semdiag/error.hpp"
#include "semdiag/kb.hpp"
#include "semdiag/questions.hpp"
#include "semdiag/report.hpp"
#include "semdiag/strategies.hpp"

namespace semdiag::session {

using Json = nlohmann::json;

class UserAgent {
 public:
  virtual ~UserAgent() = default;
  // Raw answer text, or nullopt to stop answering.
  virtual std::optional<std::string> answer(const questions::Question& q) = 0;
  // Called when the answer was rejected; agents that cannot retry throw.
  virtual void rejected(const questions::Question& q, const std::string& message) {
    throw SessionError("answer to \"" + q.prompt + "\" rejected: " + message);
  }
};

class ScriptedAgent : public UserAgent {
 public:
  explicit ScriptedAgent(std::vector<std::string> answers) : answers_(std::move(answers)) {}

  std::optional<std::string> answer(const questions::Question& q) override {
    if (next_ >= answers_.size()) throw SessionError("scripted answers ran out at \"" + q.prompt + "\"");
    return answers_[next_++];
  }

  std::size_t used() const { return next_; }

  // One answer per line; blank lines and lines starting with '#' are skipped.
  static ScriptedAgent from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SessionError("cannot open answers file " + path);
    std::vector<std::string> answers;
    for (std::string line; std::getline(in, line);) {
      std::string t = questions::trim_lower(line);
      if (t.empty() || t.front() == '#') continue;
      answers.push_back(t);
    }
    return ScriptedAgent(std::move(answers));
  }

 private:
  std::vector<std::string> answers_;
  std::size_t next_ = 0;
};

// Answers from a gold interpretation: the set of option keys (semtrans ids,
// "pos:<word>:<POS>" entries and expression strings) that are acceptable.
class OracleAgent : public UserAgent {
 public:
  explicit OracleAgent(std::set<std::string> acceptable) : acceptable_(std::move(acceptable)) {}

  std::optional<std::string> answer(const questions::Question& q) override {
    if (q.kind == questions::QuestionKind::yes_no) return acceptable_.contains(q.options.front().key) ? "yes" : "no";
    std::string out;
    for (std::size_t i = 0; i < q.options.size(); ++i)
      if (acceptable_.contains(q.options[i].key)) out += (out.empty() ? "" : " ") + std::to_string(i + 1);
    return out.empty() ? "none" : out;
  }

  static OracleAgent from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("acceptable") || !doc.at("acceptable").is_array())
      throw SessionError("gold file must be an object with an \"acceptable\" array");
    return OracleAgent(doc.at("acceptable").get<std::set<std::string>>());
  }

  static OracleAgent from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SessionError("cannot open gold file " + path);
    Json doc;
    try {
      in >> doc;
    } catch (const Json::exception& e) {
      throw SessionError("cannot parse gold file " + path + ": " + e.what());
    }
    return from_json(doc);
  }

 private:
  std::set<std::string> acceptable_;
};

// Console agent: prints each question and re-prompts on invalid input.
class InteractiveAgent : public UserAgent {
 public:
  InteractiveAgent(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

  std::optional<std::string> answer(const questions::Question& q) override {
    if (!shown_) out_ << q.render();
    shown_ = false;
    out_ << "> " << std::flush;
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    out_ << "\n";
    return line;
  }

  void rejected(const questions::Question&, const std::string& message) override {
    out_ << "Invalid answer: " << message << "\n";
    shown_ = true;
  }

 private:
  std::istream& in_;
  std::ostream& out_;
  bool shown_ = false;
};

// Drives a Diagnoser to completion. A session error (for instance a script
// that runs out) yields a report with status error and the partial
// transcript.
inline report::Report run_session(const std::string& sentence, const kb::KnowledgeBase& kb, UserAgent& user) {
  std::unique_ptr<strategies::Diagnoser> d;
  try {
    d = std::make_unique<strategies::Diagnoser>(kb, sentence);
  } catch (const Error& e) {
    report::Report r;
    r.sentence = sentence;
    r.kb_name = kb.name;
    r.status = report::Status::error;
    r.error = e.what();
    return r;
  }
  try {
    while (!d->done()) {
      std::optional<std::string> a = user.answer(*d->pending());
      if (!a) {
        d->abort();
        break;
      }
      try {
        d->answer(*a);
      } catch (const AnswerError& e) {
        user.rejected(*d->pending(), e.what());
      }
    }
  } catch (const Error& e) {
    report::Report r = d->report();
    r.status = report::Status::error;
    r.error = e.what();
    return r;
  }
  return d->report();
}

}  // namespace semdiag::session
