#pragma once

// Outer diagnosis loop. A Diagnoser owns one sentence's trace and model and
// advances step by step: it either has a pending question or is finished.
// Between inner-loop runs it applies decomposition strategies that extend
// the model with senses the parser dropped, and finally reduces the faulted
// assumptions to primitive faults.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "semdiag/catms.hpp"
#include "semdiag/error.hpp"
#include "semdiag/gde.hpp"
#include "semdiag/kb.hpp"
#include "semdiag/model.hpp"
#include "semdiag/parse.hpp"
#include "semdiag/questions.hpp"
#include "semdiag/report.hpp"

namespace semdiag::strategies {

using Json = nlohmann::json;
using catms::Environment;
using catms::NodeId;
using report::Fault;

// Model structure installed by one decomposition of a choice-set fault.
struct Extension {
  std::string choice_set;                  // parse choice set id
  NodeId semtrans_set;                     // complete() node
  std::vector<NodeId> constraint_sets;     // complete() nodes, one per recovered sense
  std::vector<std::string> recovered;      // recovered element ids
};

class Diagnoser {
 public:
  Diagnoser(kb::KnowledgeBase kb, std::string sentence) : kb_(std::move(kb)) {
    report_.sentence = sentence;
    report_.kb_name = kb_.name;
    report_.kb_provenance = kb_.provenance;
    trace_ = parse::parse(sentence, kb_);
    if (trace_.tokens.empty()) throw SessionError("the sentence is empty");
    if (trace_.fragmented) {
      report_fragmented();
      return;
    }
    model_.emplace(model::build_model(trace_));
    report_.model_built = true;
    if (no_known_semtrans()) return;
    for (const model::SetDefault& d : model_->set_defaults()) probe_ = probe_.with(d.pair.complete);
    advance();
  }

  bool done() const { return !pending_; }
  const questions::Question* pending() const { return pending_ ? &*pending_ : nullptr; }
  const report::Report& report() const { return report_; }
  const parse::ParseTrace& trace() const { return trace_; }
  const model::DiagnosisModel* model() const { return model_ ? &*model_ : nullptr; }
  const kb::KnowledgeBase& knowledge_base() const { return kb_; }
  const std::vector<Extension>& extensions() const { return extensions_; }

  // Validates and ingests an answer to the pending question. Throws
  // AnswerError (state unchanged) when the answer does not fit.
  void answer(const std::string& text) {
    if (!pending_) throw SessionError("no question is pending");
    questions::Answer a = questions::parse_answer(*pending_, text);
    std::vector<gde::Judgment> judgments = questions::judgments_for(*pending_, a.selected);
    for (const gde::Judgment& j : judgments)
      for (const gde::MeasurementRecord& r : model_->measurements().records())
        if (r.judgment.element == j.element && r.judgment.verdict != j.verdict)
          throw AnswerError("this answer contradicts an earlier one");

    report::TranscriptEntry entry{*pending_, a.text, judgments, pending_hypotheses_.size(), pending_possible_, true};
    for (const gde::Judgment& j : judgments) {
      const model::Element& el = model_->element(j.element);
      NodeId asserted = j.verdict == gde::Verdict::acceptable ? el.acceptable : el.unacceptable;
      bool entailed = std::all_of(pending_hypotheses_.begin(), pending_hypotheses_.end(), [&](const gde::Hypothesis& h) {
        return model_->tms().holds_in(asserted, h.env);
      });
      if (!entailed) entry.answer_entailed = false;
    }
    for (const gde::Judgment& j : judgments) model_->record(j);
    asked_.insert(pending_->id);
    report_.transcript.push_back(std::move(entry));
    pending_.reset();
    advance();
  }

  // Ends the session early with whatever the current diagnosis suggests.
  void abort() {
    if (!pending_) return;
    pending_.reset();
    report_.status = report::Status::aborted;
    std::vector<Environment> md = current_diagnoses();
    if (!md.empty()) finalize(md.front());
    report_.status = report::Status::aborted;
    report_.notes.push_back("session aborted before the diagnosis converged");
  }

 private:
  void finish(report::Status status = report::Status::done) {
    report_.status = status;
    if (model_) report_.stats = model_->stats();
  }

  void report_fragmented() {
    for (std::size_t i = 0; i < trace_.tokens.size(); ++i) {
      if (!kb_.entries_for(trace_.tokens[i]).empty()) continue;
      report_.faults.push_back({"lexicon_missing", "A1", "Missing lexicon entry for \"" + trace_.tokens[i] + "\"",
                                {{"token", i}, {"surface", trace_.tokens[i]}, {"stage", "lexicon"}}, {}});
    }
    if (report_.faults.empty())
      report_.faults.push_back({"unresolved_grammar", "B1", "No parse covers the whole sentence (possible missing grammar rule)",
                                {{"tokens", trace_.tokens}, {"fragmented", true}}, {}});
    finish();
  }

  // Content words whose roots have no semtrans at all are diagnosed without
  // asking anything.
  bool no_known_semtrans() {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < trace_.tokens.size(); ++i) {
      for (const kb::LexiconEntry* e : kb_.entries_for(trace_.tokens[i])) {
        if (!kb_.is_content_pos(e->pos) || !kb_.semtrans_for(e->root).empty()) continue;
        if (!seen.insert(e->root).second) continue;
        model::SetDefault d;
        d.kind = model::DefaultKind::semtrans_set;
        d.referent = "semtrans-set:" + e->root;
        d.subject = "Semtrans set for \"" + e->root + "\"";
        d.token = i;
        d.word = trace_.tokens[i];
        d.root = e->root;
        const model::SetDefault& added = model_->add_default(std::move(d));
        model_->wire_completeness(added, {});
      }
    }
    if (seen.empty()) return false;
    for (const model::SetDefault& d : model_->set_defaults()) {
      if (d.kind != model::DefaultKind::semtrans_set) continue;
      report_.faulted_assumptions.push_back(d.statement());
      report_.faults.push_back({"semtrans_set_incomplete", "C3", "Missing semtrans for \"" + d.root + "\"",
                                {{"assumption", d.statement()},
                                 {"token", d.token},
                                 {"word", d.word},
                                 {"root", d.root},
                                 {"strategy", "no known semtrans for word"}},
                                {}});
    }
    finish();
    return true;
  }

  std::vector<Environment> current_diagnoses() {
    const Environment& measured = model_->measurements().measured_env();
    std::vector<Environment> conflicts = gde::project_conflicts(model_->tms(), model_->defaults(), measured);
    gde::HittingSets hs = gde::minimal_diagnoses(conflicts);
    std::vector<Environment> md;
    for (const Environment& d : hs.diagnoses)
      if (model_->tms().env_consistent(gde::hypothesis_env(model_->defaults(), d, measured))) md.push_back(d);
    if (hs.exceeded_cap) cap_exceeded_ = true;
    return md;
  }

  std::vector<gde::Hypothesis> hypotheses(const std::vector<Environment>& md) {
    const Environment& measured = model_->measurements().measured_env();
    std::vector<Environment> faults = md;
    bool touches_probe = std::any_of(md.begin(), md.end(), [&](const Environment& d) {
      return std::any_of(d.begin(), d.end(), [&](NodeId a) { return probe_.contains(a); });
    });
    if (!touches_probe)
      for (const Environment& d : md)
        for (NodeId p : probe_) {
          Environment extended = d.with(p);
          if (std::find(faults.begin(), faults.end(), extended) != faults.end()) continue;
          if (model_->tms().env_consistent(gde::hypothesis_env(model_->defaults(), extended, measured)))
            faults.push_back(extended);
        }
    std::vector<gde::Hypothesis> out;
    for (const Environment& f : faults) out.push_back({f, gde::hypothesis_env(model_->defaults(), f, measured)});
    return out;
  }

  void advance() {
    while (true) {
      cap_exceeded_ = false;
      std::vector<Environment> md = current_diagnoses();
      if (cap_exceeded_) {
        report_.faults.push_back({"unresolved", "", "Unresolved: too many simultaneous faults",
                                  {{"cap", gde::kDiagnosisCap}}, {}});
        finish();
        return;
      }
      if (md.empty()) {
        report_.faults.push_back({"unresolved", "", "Unresolved: the answers are inconsistent with every diagnosis",
                                  {{"judgments", model_->measurements().records().size()}}, {}});
        finish();
        return;
      }
      std::vector<gde::Hypothesis> hyps = hypotheses(md);

      questions::Generated gen = questions::generate_questions(*model_, trace_, kb_, recovered_);
      for (const std::string& w : gen.warnings)
        if (std::find(report_.warnings.begin(), report_.warnings.end(), w) == report_.warnings.end())
          report_.warnings.push_back(w);
      std::vector<questions::Question> pool;
      for (questions::Question& q : gen.questions)
        if (!asked_.contains(q.id)) pool.push_back(std::move(q));
      std::vector<gde::Candidate> candidates;
      for (const questions::Question& q : pool) {
        gde::Candidate c{q.id, {}};
        for (const auto& sel : questions::possible_selections(q)) {
          gde::Outcome o;
          for (const gde::Judgment& j : questions::judgments_for(q, sel)) {
            const model::Element& el = model_->element(j.element);
            o.judgments.push_back({model_->judgment_assumption(j),
                                   j.verdict == gde::Verdict::acceptable ? el.acceptable : el.unacceptable});
          }
          c.outcomes.push_back(std::move(o));
        }
        candidates.push_back(std::move(c));
      }

      std::optional<gde::Selection> sel =
          gde::select_measurement(model_->tms(), std::span<const gde::Candidate>(candidates),
                                  std::span<const gde::Hypothesis>(hyps), model_->measurements().measured_env());
      if (sel) {
        pending_ = pool[sel->index];
        pending_hypotheses_ = std::move(hyps);
        pending_possible_ = static_cast<std::size_t>(
            std::count_if(sel->cells.begin(), sel->cells.end(), [](const auto& cell) { return !cell.empty(); }));
        report_.stats = model_->stats();
        return;
      }

      if (md.size() > 1) {
        std::string alt;
        for (std::size_t i = 1; i < md.size(); ++i) alt += (i > 1 ? "; " : "") + describe(md[i]);
        report_.notes.push_back("other minimal diagnoses remain: " + alt);
      }
      if (decompose(md.front())) continue;
      finalize(md.front());
      finish();
      return;
    }
  }

  std::string describe(const Environment& faults) const {
    std::string s = "{";
    bool first = true;
    for (NodeId a : faults) {
      const model::SetDefault* d = model_->find_default(a);
      s += (first ? "" : ", ") + (d ? d->subject : std::to_string(a.value));
      first = false;
    }
    return s + "}";
  }

  static bool semtrans_drop(const parse::DroppedCandidate& d) {
    return d.stage == parse::DropStage::valence || d.stage == parse::DropStage::typecheck;
  }

  const Extension* extension_for(const std::string& choice_set) const {
    for (const Extension& e : extensions_)
      if (e.choice_set == choice_set) return &e;
    return nullptr;
  }

  // "No acceptable semtrans": a faulted word choice set whose word had
  // candidates dropped by valence matching or type checking gets those
  // candidates back as recovered elements, plus lazily installed
  // completeness pairs for the word's semtrans set and for each recovered
  // sense's valence patterns or type constraints. Lowest fault first.
  bool decompose(const Environment& diagnosis) {
    for (NodeId f : diagnosis) {
      const model::SetDefault* d = model_->find_default(f);
      if (!d || d->kind != model::DefaultKind::choice_set || d->token == parse::npos) continue;
      if (extension_for(d->choice_set)) continue;
      std::vector<const parse::DroppedCandidate*> drops;
      for (const parse::DroppedCandidate* dc : trace_.dropped_for_token(d->token))
        if (semtrans_drop(*dc)) drops.push_back(dc);
      if (drops.empty()) continue;
      extend(*d, drops);
      return true;
    }
    return false;
  }

  void extend(const model::SetDefault& set_default, const std::vector<const parse::DroppedCandidate*>& drops) {
    const model::SetDefault set = set_default;  // add_default may reallocate
    const parse::ChoiceSet* cs = trace_.find_set(set.choice_set);
    Extension ext;
    ext.choice_set = set.choice_set;
    std::vector<std::string> members;
    for (const std::string& c : cs->choices) members.push_back(model::choice_element(c));

    Environment fresh;
    for (const parse::DroppedCandidate* drop : drops) {
      const kb::Semtrans* st = kb_.find_semtrans(drop->candidate);
      if (!st) continue;
      const std::string el = "recovered:" + std::to_string(drop->token + 1) + ":" + st->id;
      model_->add_element(el, model::ElementKind::recovered);
      members.push_back(el);
      ext.recovered.push_back(el);
      recovered_.push_back({el, drop->token, st->id});

      model::SetDefault c;
      const bool valence = drop->stage == parse::DropStage::valence;
      c.kind = valence ? model::DefaultKind::valence_set : model::DefaultKind::type_constraint_set;
      c.referent = (valence ? "valence-set:" : "type-constraints:") + st->id;
      c.subject = std::string(valence ? "Valence pattern set" : "Type constraint set") + " for " + st->concept_name +
                  " (\"" + st->root + "\")";
      c.token = drop->token;
      c.word = trace_.tokens[drop->token];
      c.root = st->root;
      c.semtrans = st->id;
      const model::SetDefault& added = model_->add_default(std::move(c));
      NodeId complete = added.pair.complete;
      NodeId bottom = model_->tms().create_node("blocked(" + el + ")", catms::NodeKind::contradiction);
      model_->tms().add_justification({model_->element(el).acceptable, complete}, bottom, "constraint-blocks-sense");
      ext.constraint_sets.push_back(complete);
      fresh = fresh.with(complete);
    }

    model::SetDefault s;
    s.kind = model::DefaultKind::semtrans_set;
    s.referent = "semtrans-set:" + set.root + "@" + std::to_string(set.token + 1);
    s.subject = "Semtrans set for \"" + set.root + "\"";
    s.token = set.token;
    s.word = set.word;
    s.root = set.root;
    const model::SetDefault& sadded = model_->add_default(std::move(s));
    ext.semtrans_set = sadded.pair.complete;
    model_->wire_completeness(sadded, members);
    fresh = fresh.with(ext.semtrans_set);

    extensions_.push_back(std::move(ext));
    probe_ = fresh;
  }

  Json dropped_json(std::size_t token) const {
    Json out = Json::array();
    for (const parse::DroppedCandidate* d : trace_.dropped_for_token(token))
      out.push_back({{"candidate", d->candidate}, {"stage", parse::to_string(d->stage)}, {"reason", d->reason}});
    return out;
  }

  Json judgments_json(const std::vector<std::string>& elements) const {
    Json out = Json::array();
    for (const gde::MeasurementRecord& r : model_->measurements().records())
      if (std::find(elements.begin(), elements.end(), r.judgment.element) != elements.end())
        out.push_back({{"element", r.judgment.element}, {"verdict", gde::to_string(r.judgment.verdict)}});
    return out;
  }

  void add_fault(Fault f) {
    for (const Fault& g : report_.faults)
      if (g.kind == f.kind && g.description == f.description) return;
    report_.faults.push_back(std::move(f));
  }

  void finalize(const Environment& diagnosis) {
    report_.faulted_assumptions.clear();
    for (NodeId f : diagnosis) {
      const model::SetDefault* d = model_->find_default(f);
      if (!d) continue;
      report_.faulted_assumptions.push_back(d->statement());
      switch (d->kind) {
        case model::DefaultKind::choice_set: {
          const parse::ChoiceSet* cs = trace_.find_set(d->choice_set);
          std::vector<std::string> members;
          for (const std::string& c : cs->choices) members.push_back(model::choice_element(c));
          if (cs->kind == parse::ChoiceKind::parse_tree) {
            add_fault({"unresolved_grammar", "B1", "No acceptable parse tree (possible missing grammar rule)",
                       {{"assumption", d->statement()}, {"choice_set", cs->id}, {"judgments", judgments_json(members)}},
                       {}});
            break;
          }
          if (const Extension* ext = extension_for(cs->id)) {
            bool refined = diagnosis.contains(ext->semtrans_set) ||
                           std::any_of(ext->constraint_sets.begin(), ext->constraint_sets.end(),
                                       [&](NodeId c) { return diagnosis.contains(c); });
            if (refined) break;
          }
          add_fault({"semtrans_set_incomplete", "C3", "Missing semtrans for \"" + d->root + "\"",
                     {{"assumption", d->statement()},
                      {"choice_set", cs->id},
                      {"token", cs->token},
                      {"word", cs->surface},
                      {"root", cs->root},
                      {"judgments", judgments_json(members)},
                      {"dropped", dropped_json(cs->token)},
                      {"strategy", "no acceptable semtrans for word"}},
                     {}});
          break;
        }
        case model::DefaultKind::semtrans_set: {
          add_fault({"semtrans_set_incomplete", "C3", "Missing semtrans for \"" + d->root + "\"",
                     {{"assumption", d->statement()},
                      {"token", d->token},
                      {"word", d->word},
                      {"root", d->root},
                      {"dropped", dropped_json(d->token)},
                      {"strategy", "no acceptable semtrans for word"}},
                     {}});
          break;
        }
        case model::DefaultKind::valence_set:
        case model::DefaultKind::type_constraint_set: {
          const parse::DroppedCandidate* drop = nullptr;
          for (const parse::DroppedCandidate* dc : trace_.dropped_for_token(d->token))
            if (dc->candidate == d->semtrans && semtrans_drop(*dc)) drop = dc;
          const kb::Semtrans* st = kb_.find_semtrans(d->semtrans);
          const std::string concept_name = st ? st->concept_name : d->semtrans;
          std::vector<std::string> roles;
          if (drop && drop->reason.contains("bound_roles"))
            for (const auto& [role, _] : drop->reason.at("bound_roles").items()) roles.push_back(role);
          Json evidence = {{"assumption", d->statement()},
                           {"semtrans", d->semtrans},
                           {"token", d->token},
                           {"word", d->word},
                           {"judgments", judgments_json({"recovered:" + std::to_string(d->token + 1) + ":" + d->semtrans})}};
          if (drop) evidence["dropped"] = {{"stage", parse::to_string(drop->stage)}, {"reason", drop->reason}};
          if (d->kind == model::DefaultKind::valence_set) {
            std::string list;
            for (std::size_t i = 0; i < roles.size(); ++i) list += (i ? ", " : "") + roles[i];
            evidence["strategy"] = "missing valence pattern for acceptable semtrans";
            add_fault({"valence_missing", "C2",
                       "Missing valence pattern for the " + concept_name + " semtrans (roles: " + list + ")", evidence, roles});
          } else {
            evidence["strategy"] = "type checking ruled out an acceptable semtrans";
            add_fault({"unresolved", "C1/D1",
                       "Unresolved: type checking ruled out " + concept_name + " for \"" + d->word +
                           "\" (missing type information or overly strict type constraint)",
                       evidence, {}});
          }
          break;
        }
      }
    }
  }

  kb::KnowledgeBase kb_;
  parse::ParseTrace trace_;
  std::optional<model::DiagnosisModel> model_;
  report::Report report_;
  std::optional<questions::Question> pending_;
  std::vector<gde::Hypothesis> pending_hypotheses_;
  std::size_t pending_possible_ = 0;
  std::set<std::string> asked_;
  Environment probe_;
  std::vector<Extension> extensions_;
  std::vector<questions::RecoveredSense> recovered_;
  bool cap_exceeded_ = false;
};

}  // namespace semdiag::strategies
