#pragma once

// HTTP facade over Diagnoser sessions. Handlers are plain functions from a
// request to {status, JSON body} so they can be exercised without sockets;
// mount() binds them to an httplib server.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "semdiag/error.hpp"
#include "semdiag/kb.hpp"
#include "semdiag/questions.hpp"
#include "semdiag/report.hpp"
#include "semdiag/strategies.hpp"
#include "semdiag/suite.hpp"

namespace semdiag::service {

using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Response {
  int status = 200;
  Json body;
};

struct Options {
  std::chrono::seconds ttl{3600};
  std::string static_dir;  // served under "/" when set
};

class Service {
 public:
  Service(kb::KnowledgeBase base, Options options = {}) : base_(std::move(base)), options_(std::move(options)) {}

  Response create(const std::string& raw_body) {
    Json body = Json::parse(raw_body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return error(400, "request body must be a JSON object");
    if (!body.contains("sentence") || !body.at("sentence").is_string()) return error(400, "missing \"sentence\"");
    const std::string sentence = body.at("sentence").get<std::string>();

    kb::KnowledgeBase kb;
    try {
      if (body.contains("kb")) {
        kb = kb::from_json(body.at("kb"));
        kb::validate(kb);
      } else {
        kb = suite::variant(base_, body.value("kb_name", std::string("demo")));
      }
    } catch (const Error& e) {
      return error(400, e.what());
    }

    auto entry = std::make_shared<Entry>();
    try {
      entry->diagnoser = std::make_unique<strategies::Diagnoser>(std::move(kb), sentence);
    } catch (const Error& e) {
      return error(400, e.what());
    }
    if (entry->diagnoser->trace().fragmented) {
      Json b = {{"error", "the sentence has no complete parse"}, {"report", report::to_json(entry->diagnoser->report())}};
      return {422, b};
    }
    entry->created = entry->touched = Clock::now();
    const std::string id = new_id();
    {
      std::lock_guard lock(store_mutex_);
      evict_locked(Clock::now());
      sessions_.emplace(id, entry);
    }
    std::lock_guard lock(entry->mutex);
    return {201, view(id, *entry)};
  }

  Response get(const std::string& id) {
    auto entry = find(id);
    if (!entry) return error(404, "unknown session");
    std::lock_guard lock(entry->mutex);
    return {200, view(id, *entry)};
  }

  Response answer(const std::string& id, const std::string& raw_body) {
    auto entry = find(id);
    if (!entry) return error(404, "unknown session");
    Json body = Json::parse(raw_body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return error(400, "request body must be a JSON object");
    if (!body.contains("answer") || !body.at("answer").is_string()) return error(400, "missing \"answer\" string");
    const std::string text = body.at("answer").get<std::string>();

    std::lock_guard lock(entry->mutex);
    const std::size_t answered = entry->replies.size();
    std::size_t index = answered;
    if (body.contains("index")) {
      if (!body.at("index").is_number_unsigned()) return error(400, "\"index\" must be a non-negative integer");
      index = body.at("index").get<std::size_t>();
    }
    if (index < answered) {
      if (entry->answers[index] == questions::trim_lower(text)) return {200, entry->replies[index]};
      return error(409, "question " + std::to_string(index) + " was already answered differently");
    }
    if (index > answered || entry->diagnoser->done())
      return error(409, "no question with index " + std::to_string(index) + " is pending");
    try {
      entry->diagnoser->answer(text);
    } catch (const AnswerError& e) {
      return error(400, e.what());
    } catch (const Error& e) {
      entry->failure = e.what();
      return error(500, e.what());
    }
    entry->touched = Clock::now();
    Json reply = view(id, *entry);
    entry->answers.push_back(questions::trim_lower(text));
    entry->replies.push_back(reply);
    return {200, reply};
  }

  Response report(const std::string& id) {
    auto entry = find(id);
    if (!entry) return error(404, "unknown session");
    std::lock_guard lock(entry->mutex);
    return {200, report::to_json(entry->diagnoser->report())};
  }

  Response model(const std::string& id) {
    auto entry = find(id);
    if (!entry) return error(404, "unknown session");
    std::lock_guard lock(entry->mutex);
    const model::DiagnosisModel* m = entry->diagnoser->model();
    Json b = {{"trace", parse::to_json(entry->diagnoser->trace())}, {"model", m ? m->to_json() : Json(nullptr)}};
    return {200, b};
  }

  std::size_t evict_expired(Clock::time_point now = Clock::now()) {
    std::lock_guard lock(store_mutex_);
    return evict_locked(now);
  }

  std::size_t session_count() const {
    std::lock_guard lock(store_mutex_);
    return sessions_.size();
  }

  void mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const Response& r) {
      res.status = r.status;
      res.set_content(r.body.dump(2) + "\n", "application/json");
    };
    server.Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, create(req.body));
    });
    server.Get(R"(/sessions/([0-9a-f]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, get(req.matches[1]));
    });
    server.Post(R"(/sessions/([0-9a-f]+)/answers)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, answer(req.matches[1], req.body));
    });
    server.Get(R"(/sessions/([0-9a-f]+)/report)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, report(req.matches[1]));
    });
    server.Get(R"(/sessions/([0-9a-f]+)/model)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, model(req.matches[1]));
    });
    if (!options_.static_dir.empty()) server.set_mount_point("/", options_.static_dir);
  }

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<strategies::Diagnoser> diagnoser;
    Clock::time_point created;
    Clock::time_point touched;
    std::vector<std::string> answers;
    std::vector<Json> replies;
    std::string failure;
  };

  static Response error(int status, const std::string& message) { return {status, {{"error", message}}}; }

  std::shared_ptr<Entry> find(const std::string& id) {
    std::lock_guard lock(store_mutex_);
    evict_locked(Clock::now());
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::size_t evict_locked(Clock::time_point now) {
    return std::erase_if(sessions_, [&](const auto& kv) {
      std::unique_lock lock(kv.second->mutex, std::try_to_lock);
      return lock.owns_lock() && now - kv.second->touched > options_.ttl;
    });
  }

  std::string new_id() {
    std::lock_guard lock(rng_mutex_);
    std::ostringstream os;
    os << std::hex;
    for (int i = 0; i < 2; ++i) os << rng_();
    return os.str();
  }

  static Json view(const std::string& id, const Entry& e) {
    const strategies::Diagnoser& d = *e.diagnoser;
    const report::Report& r = d.report();
    std::string state = e.failure.empty() ? (d.done() ? "done" : "awaiting_answer") : "error";
    Json j = {{"session_id", id},
              {"state", state},
              {"sentence", r.sentence},
              {"question_index", r.transcript.size()},
              {"transcript_text", r.transcript_text()}};
    if (const questions::Question* q = d.pending()) {
      j["question"] = questions::to_json(*q);
      j["question_text"] = q->render();
    }
    if (d.done()) j["report"] = report::to_json(r);
    if (!e.failure.empty()) j["error"] = e.failure;
    return j;
  }

  kb::KnowledgeBase base_;
  Options options_;
  mutable std::mutex store_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace semdiag::service
