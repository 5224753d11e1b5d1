#pragma once

// Natural-language questions over parse elements, answer parsing and the
// mapping from answers to acceptability judgments.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "semdiag/error.hpp"
#include "semdiag/gde.hpp"
#include "semdiag/kb.hpp"
#include "semdiag/model.hpp"
#include "semdiag/parse.hpp"

namespace semdiag::questions {

using Json = nlohmann::json;

enum class QuestionKind { multiple_choice, yes_no };

struct Option {
  std::string label;
  std::string key;                   // matched against an oracle's gold set
  std::vector<std::string> targets;  // parse element ids
};

struct Question {
  std::string id;
  QuestionKind kind = QuestionKind::multiple_choice;
  std::string prompt;
  std::vector<Option> options;
  bool allow_none = true;

  std::string instruction() const {
    if (kind == QuestionKind::yes_no) return "(Please enter \"yes\" or \"no\".)";
    return "(Please enter a list of numbers between 1 and " + std::to_string(options.size()) + ", or \"none\".)";
  }

  // Prompt, numbered options and the input instruction, as shown to a user.
  std::string render() const {
    std::string s = prompt + "\n";
    if (kind == QuestionKind::multiple_choice) {
      for (std::size_t i = 0; i < options.size(); ++i) s += std::to_string(i + 1) + ") " + options[i].label + "\n";
      s += "\n";
    }
    return s + instruction() + "\n";
  }
};

inline Json to_json(const Question& q) {
  Json opts = Json::array();
  for (const Option& o : q.options) opts.push_back({{"label", o.label}, {"key", o.key}, {"targets", o.targets}});
  return {{"id", q.id},
          {"kind", q.kind == QuestionKind::yes_no ? "yes_no" : "multiple_choice"},
          {"prompt", q.prompt},
          {"options", opts},
          {"allow_none", q.allow_none},
          {"instruction", q.instruction()}};
}

// A validated answer: `selected` holds zero-based option indices (empty for
// "none" or "no"; {0} for "yes").
struct Answer {
  std::string text;
  std::vector<std::size_t> selected;
};

inline std::string trim_lower(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Accepts "none", or numbers separated by commas and/or spaces; "yes"/"no"
// for yes/no questions. Throws AnswerError with a user-facing message.
inline Answer parse_answer(const Question& q, const std::string& raw) {
  const std::string text = trim_lower(raw);
  if (q.kind == QuestionKind::yes_no) {
    if (text == "yes" || text == "y") return {"yes", {0}};
    if (text == "no" || text == "n") return {"no", {}};
    throw AnswerError("please answer \"yes\" or \"no\"");
  }
  if (text == "none") {
    if (!q.allow_none) throw AnswerError("\"none\" is not allowed for this question");
    return {"none", {}};
  }
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::vector<std::size_t> picked;
  for (std::string tok; in >> tok;) {
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }) ||
        tok.size() > 6)
      throw AnswerError("'" + tok + "' is not an option number");
    const std::size_t n = std::stoul(tok);
    if (n < 1 || n > q.options.size())
      throw AnswerError("option " + tok + " is out of range 1-" + std::to_string(q.options.size()));
    if (std::find(picked.begin(), picked.end(), n - 1) != picked.end())
      throw AnswerError("option " + tok + " was given twice");
    picked.push_back(n - 1);
  }
  if (picked.empty()) throw AnswerError("enter option numbers or \"none\"");
  std::sort(picked.begin(), picked.end());
  std::string canonical;
  for (std::size_t i = 0; i < picked.size(); ++i) canonical += (i ? " " : "") + std::to_string(picked[i] + 1);
  return {canonical, picked};
}

// Selected options' targets become acceptable, every other target
// unacceptable.
inline std::vector<gde::Judgment> judgments_for(const Question& q, const std::vector<std::size_t>& selected) {
  std::vector<gde::Judgment> out;
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    const bool yes = std::find(selected.begin(), selected.end(), i) != selected.end();
    for (const std::string& t : q.options[i].targets)
      out.push_back({t, yes ? gde::Verdict::acceptable : gde::Verdict::unacceptable});
  }
  return out;
}

// All answers a question admits, as selections.
inline std::vector<std::vector<std::size_t>> possible_selections(const Question& q) {
  std::vector<std::vector<std::size_t>> out;
  if (q.kind == QuestionKind::yes_no) return {{0}, {}};
  const std::size_t n = std::min<std::size_t>(q.options.size(), 10);
  for (std::size_t mask = q.allow_none ? 0 : 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> sel;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) sel.push_back(i);
    out.push_back(std::move(sel));
  }
  return out;
}

// A sense installed by a decomposition that the parser had dropped.
struct RecoveredSense {
  std::string element;
  std::size_t token = parse::npos;
  std::string semtrans;
};

struct Generated {
  std::vector<Question> questions;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string two_digit(std::size_t n) { return (n < 10 ? "0" : "") + std::to_string(n); }

inline char word_class(const kb::KnowledgeBase& kb, const std::string& pos) {
  if (pos == "N" || pos == "ProperNoun") return '1';
  if (pos == "V") return '2';
  (void)kb;
  return '0';
}

inline std::string sense_label(const kb::KnowledgeBase& kb, const kb::Semtrans& st, std::vector<std::string>& warnings) {
  if (!st.gloss.empty()) return st.gloss;
  auto it = kb.ontology.glosses.find(st.concept_name);
  if (it == kb.ontology.glosses.end()) {
    warnings.push_back("no gloss for concept " + st.concept_name + "; showing the raw symbol");
    return st.concept_name;
  }
  if (it->second.detail.empty()) return it->second.head;
  return it->second.head + " (" + it->second.detail + ")";
}

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

}  // namespace detail

// Question ids sort by kind first (POS, meaning, confirmation, expression,
// recovered sense), then by word class (entities before events) and token
// position; measurement selection uses them to break ties.
inline Generated generate_questions(const model::DiagnosisModel& model, const parse::ParseTrace& trace,
                                    const kb::KnowledgeBase& kb, const std::vector<RecoveredSense>& recovered = {}) {
  using detail::two_digit;
  Generated out;

  // part of speech
  for (const auto& [tok, pos_options] : trace.ambiguous_pos) {
    Question q;
    q.id = "q1" + std::string(1, detail::word_class(kb, pos_options.front())) + "-" + two_digit(tok + 1) + "-" +
           trace.tokens[tok];
    q.prompt = "What part of speech is \"" + trace.tokens[tok] + "\"?";
    for (const std::string& pos : pos_options)
      q.options.push_back({kb.pos_name(pos), "pos:" + trace.tokens[tok] + ":" + pos, {model::pos_element(tok, pos)}});
    out.questions.push_back(std::move(q));
  }

  // word meanings
  for (const parse::ChoiceSet& set : trace.choice_sets) {
    if (set.kind != parse::ChoiceKind::word_sense || set.choices.empty()) continue;
    std::vector<Option> options;
    std::string pos;
    for (const std::string& cid : set.choices) {
      const parse::Choice* c = trace.find_choice(cid);
      const kb::Semtrans* st = kb.find_semtrans(c->semtrans);
      if (!st) throw ModelError("trace refers to unknown semtrans " + c->semtrans);
      pos = st->pos;
      auto o = std::find_if(options.begin(), options.end(), [&](const Option& x) { return x.key == st->id; });
      if (o == options.end())
        options.push_back({detail::sense_label(kb, *st, out.warnings), st->id, {model::choice_element(cid)}});
      else
        o->targets.push_back(model::choice_element(cid));
    }
    const std::string cls(1, detail::word_class(kb, pos));
    const std::string suffix = cls + "-" + two_digit(set.token + 1) + "-" + set.surface;
    Question q;
    if (options.size() >= 2) {
      q.id = "q2" + suffix;
      q.prompt = "What does \"" + set.surface + "\" mean?";
      q.options = std::move(options);
    } else {
      q.id = "q3" + suffix;
      q.kind = QuestionKind::yes_no;
      q.allow_none = false;
      q.prompt = "Does \"" + set.surface + "\" mean \"" + options.front().label + "\" here?";
      q.options = std::move(options);
    }
    out.questions.push_back(std::move(q));
  }

  // shared conjuncts: expressions that several senses of one word have in common
  std::map<std::string, std::set<std::string>> owners;  // expression -> semtrans ids
  std::map<std::string, const parse::SemanticExpression*> exprs;
  std::map<std::string, std::size_t> expr_token;
  for (const parse::Choice& c : trace.choices)
    for (const parse::SemanticExpression& e : c.expressions) {
      if (e.functor == "isa") continue;
      owners[e.str()].insert(c.semtrans);
      exprs[e.str()] = &e;
      expr_token[e.str()] = c.token;
    }
  std::map<std::string, std::size_t> var_token;
  for (std::size_t i = 0; i < trace.discourse_vars.size(); ++i) var_token[trace.discourse_vars[i]] = i;
  for (const auto& [text, senses] : owners) {
    if (senses.size() < 2) continue;
    const parse::SemanticExpression& e = *exprs[text];
    const kb::RoleSignature* sig = kb.ontology.signature(e.functor);
    auto word_of = [&](std::size_t i) -> std::string {
      if (i >= e.args.size()) return "";
      auto it = var_token.find(e.args[i]);
      return it == var_token.end() ? e.args[i] : trace.tokens[it->second];
    };
    std::string prompt;
    if (sig && !sig->question.empty()) {
      prompt = detail::replace_all(detail::replace_all(sig->question, "{event}", word_of(0)), "{arg}", word_of(1));
    } else {
      prompt = "Is " + text + " part of what the sentence says?";
      out.warnings.push_back("no question template for relation " + e.functor);
    }
    const std::size_t tok = expr_token[text];
    std::size_t arg_tok = 0;
    if (e.args.size() > 1)
      if (auto it = var_token.find(e.args[1]); it != var_token.end()) arg_tok = it->second + 1;
    Question q;
    q.id = "q4" + std::string(1, '2') + "-" + two_digit(tok + 1) + "-" + two_digit(arg_tok) + "-" + e.functor;
    q.kind = QuestionKind::yes_no;
    q.allow_none = false;
    q.prompt = prompt;
    q.options.push_back({text, text, {model::expression_element(e)}});
    out.questions.push_back(std::move(q));
  }

  // recovered senses
  for (const RecoveredSense& r : recovered) {
    const kb::Semtrans* st = kb.find_semtrans(r.semtrans);
    if (!st) throw ModelError("recovered sense refers to unknown semtrans " + r.semtrans);
    const std::string label = detail::sense_label(kb, *st, out.warnings);
    Question q;
    q.id = "q5" + std::string(1, detail::word_class(kb, st->pos)) + "-" + two_digit(r.token + 1) + "-" + st->id;
    q.kind = QuestionKind::yes_no;
    q.allow_none = false;
    q.prompt = "Could \"" + trace.tokens[r.token] + "\" mean \"" + label + "\" here?";
    q.options.push_back({label, st->id, {r.element}});
    out.questions.push_back(std::move(q));
  }

  (void)model;
  std::sort(out.questions.begin(), out.questions.end(), [](const Question& a, const Question& b) { return a.id < b.id; });
  return out;
}

}  // namespace semdiag::questions
