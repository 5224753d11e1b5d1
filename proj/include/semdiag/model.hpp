#pragma once

// Diagnosis model: acceptable/unacceptable node pairs for parse elements,
// factored interpretations over the enablement graph, a root element and
// completeness/incompleteness defaults, all in one Catms.

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
#include "semdiag/parse.hpp"

namespace semdiag::model {

using Json = nlohmann::json;
using Tms = catms::Catms<std::string>;
using catms::Environment;
using catms::NodeId;
using catms::NodeKind;

enum class ElementKind { root, choice, choice_subset, factored_interpretation, expression, pos_of_word, recovered };

inline const char* to_string(ElementKind k) {
  switch (k) {
    case ElementKind::root: return "root";
    case ElementKind::choice: return "choice";
    case ElementKind::choice_subset: return "choice-subset";
    case ElementKind::factored_interpretation: return "factored-interpretation";
    case ElementKind::expression: return "expression";
    case ElementKind::pos_of_word: return "pos-of-word";
    case ElementKind::recovered: return "recovered";
  }
  return "?";
}

struct Element {
  std::string id;
  ElementKind kind = ElementKind::choice;
  NodeId acceptable;
  NodeId unacceptable;

  gde::ElementNodes nodes() const { return {acceptable, unacceptable}; }
};

struct ChoiceSubset {
  std::string id;
  std::string enabler;     // choice id
  std::string target_set;  // choice set id
  std::vector<std::string> members;
};

struct FactoredInterpretation {
  std::string id;
  std::string choice;
  std::vector<std::string> subsets;
};

enum class DefaultKind { choice_set, semtrans_set, valence_set, type_constraint_set };

inline const char* to_string(DefaultKind k) {
  switch (k) {
    case DefaultKind::choice_set: return "choice-set";
    case DefaultKind::semtrans_set: return "semtrans-set";
    case DefaultKind::valence_set: return "valence-pattern-set";
    case DefaultKind::type_constraint_set: return "type-constraint-set";
  }
  return "?";
}

// Metadata for one completeness pair; `subject` is what the pair claims is
// complete, e.g. `Choice Set #4 ("wedge")`.
struct SetDefault {
  DefaultKind kind = DefaultKind::choice_set;
  std::string referent;
  std::string subject;
  std::string choice_set;  // choice-set defaults
  std::size_t token = parse::npos;
  std::string word;
  std::string root;
  std::string semtrans;    // valence and type-constraint defaults
  gde::DefaultPair pair;

  std::string statement() const { return subject + " is complete."; }
};

struct Stats {
  std::size_t nodes = 0;
  std::size_t assumptions = 0;
  std::size_t justifications = 0;
  std::size_t nogoods = 0;
  std::size_t elements = 0;
};

class DiagnosisModel {
 public:
  DiagnosisModel() { premise_ = tms_.create_node("a desired interpretation exists", NodeKind::ordinary); }

  Tms& tms() { return tms_; }
  const Tms& tms() const { return tms_; }
  const gde::DefaultSet& defaults() const { return defaults_; }
  const gde::Measurements& measurements() const { return measurements_; }
  NodeId premise() const { return premise_; }

  bool has_element(const std::string& id) const { return index_.contains(id); }
  const Element& element(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ModelError("unknown parse element " + id);
    return elements_[it->second];
  }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<ChoiceSubset>& subsets() const { return subsets_; }
  const std::vector<FactoredInterpretation>& interpretations() const { return interpretations_; }
  const std::vector<SetDefault>& set_defaults() const { return set_defaults_; }

  // Creates the element's node pair and registers the pair as contradictory.
  const Element& add_element(const std::string& id, ElementKind kind) {
    if (has_element(id)) return element(id);
    Element e{id, kind, tms_.create_node("acc(" + id + ")", NodeKind::ordinary),
              tms_.create_node("unacc(" + id + ")", NodeKind::ordinary)};
    NodeId bottom = tms_.create_node("clash(" + id + ")", NodeKind::contradiction);
    tms_.add_justification({e.acceptable, e.unacceptable}, bottom, "acc-vs-unacc");
    index_.emplace(id, elements_.size());
    elements_.push_back(e);
    return elements_.back();
  }

  const SetDefault& add_default(SetDefault meta) {
    NodeId bottom = tms_.create_node("clash(" + meta.referent + ")", NodeKind::contradiction);
    meta.pair = defaults_.add_pair(tms_, meta.referent, "complete(" + meta.referent + ")",
                                   "incomplete(" + meta.referent + ")", bottom);
    set_defaults_.push_back(std::move(meta));
    return set_defaults_.back();
  }

  const SetDefault* find_default(NodeId complete) const {
    for (const SetDefault& d : set_defaults_)
      if (d.pair.complete == complete) return &d;
    return nullptr;
  }
  const SetDefault* find_default(const std::string& referent) const {
    for (const SetDefault& d : set_defaults_)
      if (d.referent == referent) return &d;
    return nullptr;
  }

  // complete(set) together with every member unacceptable is a contradiction;
  // so is an acceptable member under incomplete(set).
  void wire_completeness(const SetDefault& d, const std::vector<std::string>& members) {
    NodeId bottom = tms_.create_node("no-member(" + d.referent + ")", NodeKind::contradiction);
    std::vector<NodeId> all{d.pair.complete};
    for (const std::string& m : members) all.push_back(element(m).unacceptable);
    tms_.add_justification(all, bottom, "complete-set");
    for (const std::string& m : members)
      tms_.add_justification({element(m).acceptable, d.pair.incomplete}, bottom, "incomplete-set");
  }

  NodeId judgment_assumption(const gde::Judgment& j) {
    return measurements_.assumption_for(tms_, j, element(j.element).nodes());
  }
  gde::MeasurementRecord record(const gde::Judgment& j) {
    return measurements_.record(tms_, j, element(j.element).nodes());
  }

  const Element& root() const { return element("root"); }

  void add_subset(ChoiceSubset s) { subsets_.push_back(std::move(s)); }
  void add_interpretation(FactoredInterpretation fi) { interpretations_.push_back(std::move(fi)); }

  Stats stats() const {
    return {tms_.node_count(), tms_.assumption_count(), tms_.justifications().size(), tms_.nogoods().size(),
            elements_.size()};
  }

  Json to_json() const {
    Json elements = Json::array();
    for (const Element& e : elements_)
      elements.push_back({{"id", e.id},
                          {"kind", to_string(e.kind)},
                          {"acceptable", e.acceptable.value},
                          {"unacceptable", e.unacceptable.value}});
    Json nodes = Json::array();
    for (const auto& n : tms_.nodes())
      nodes.push_back({{"id", n.id.value}, {"kind", catms::to_string(n.kind)}, {"datum", n.datum}});
    Json justs = Json::array();
    for (const auto& j : tms_.justifications()) {
      Json ants = Json::array();
      for (NodeId a : j.antecedents) ants.push_back(a.value);
      justs.push_back({{"informant", j.informant}, {"antecedents", ants}, {"consequent", j.consequent.value}});
    }
    Json assumptions = Json::array();
    for (const SetDefault& d : set_defaults_)
      assumptions.push_back({{"referent", d.referent},
                             {"kind", to_string(d.kind)},
                             {"statement", d.statement()},
                             {"complete", d.pair.complete.value},
                             {"incomplete", d.pair.incomplete.value}});
    Json judgments = Json::array();
    for (const gde::MeasurementRecord& r : measurements_.records())
      judgments.push_back({{"element", r.judgment.element},
                           {"verdict", gde::to_string(r.judgment.verdict)},
                           {"assumption", r.assumption.value}});
    Json nogoods = Json::array();
    for (const Environment& n : tms_.nogoods()) {
      Json ids = Json::array();
      for (NodeId a : n) ids.push_back(a.value);
      nogoods.push_back(ids);
    }
    Json subsets = Json::array();
    for (const ChoiceSubset& s : subsets_)
      subsets.push_back({{"id", s.id}, {"enabler", s.enabler}, {"target_set", s.target_set}, {"members", s.members}});
    Json fis = Json::array();
    for (const FactoredInterpretation& f : interpretations_)
      fis.push_back({{"id", f.id}, {"choice", f.choice}, {"subsets", f.subsets}});
    return {{"elements", elements},   {"nodes", nodes},           {"justifications", justs},
            {"assumptions", assumptions}, {"judgments", judgments}, {"nogoods", nogoods},
            {"subsets", subsets},     {"interpretations", fis},  {"premise", premise_.value}};
  }

 private:
  Tms tms_;
  gde::DefaultSet defaults_;
  gde::Measurements measurements_;
  NodeId premise_;
  std::vector<Element> elements_;
  std::map<std::string, std::size_t> index_;
  std::vector<ChoiceSubset> subsets_;
  std::vector<FactoredInterpretation> interpretations_;
  std::vector<SetDefault> set_defaults_;
};

// Element id helpers shared with question generation.
inline std::string choice_element(const std::string& choice) { return "choice:" + choice; }
inline std::string expression_element(const parse::SemanticExpression& e) { return "expr:" + e.str(); }
inline std::string pos_element(std::size_t token, const std::string& pos) {
  return "pos:" + std::to_string(token + 1) + ":" + pos;
}
inline std::string fi_element(const std::string& choice) { return "fi:" + choice; }
inline std::string subset_element(const std::string& enabler, const std::string& set) {
  return "subset:" + enabler + ">" + set;
}
inline std::string choice_set_referent(const std::string& set) { return "choice-set:" + set; }

inline std::string choice_set_subject(const parse::ChoiceSet& s) {
  if (s.kind == parse::ChoiceKind::parse_tree) return "Choice Set #" + std::to_string(s.number) + " (parse trees)";
  return "Choice Set #" + std::to_string(s.number) + " (\"" + s.surface + "\")";
}

struct BuildOptions {
  bool premise = true;  // install "a desired interpretation exists"
};

namespace detail {

class Builder {
 public:
  Builder(const parse::ParseTrace& trace, DiagnosisModel& m) : trace_(trace), m_(m) {
    for (const parse::Choice& c : trace.choices)
      for (const std::string& e : c.enabled_by) enables_[e].push_back(c.id);
  }

  const Element& fi(const std::string& choice_id) {
    const std::string id = fi_element(choice_id);
    if (m_.has_element(id)) return m_.element(id);
    if (!in_progress_.insert(choice_id).second) throw ModelError("enablement cycle through " + choice_id);

    const Element choice = m_.element(choice_element(choice_id));
    // group enabled choices by their choice set, preserving trace order
    std::vector<std::pair<std::string, std::vector<std::string>>> groups;
    for (const std::string& enabled : enables_[choice_id]) {
      const parse::Choice* c = trace_.find_choice(enabled);
      if (!c) throw ModelError("enablement refers to unknown choice " + enabled);
      auto g = std::find_if(groups.begin(), groups.end(), [&](const auto& p) { return p.first == c->choice_set; });
      if (g == groups.end()) groups.push_back({c->choice_set, {enabled}});
      else g->second.push_back(enabled);
    }

    FactoredInterpretation info{id, choice_id, {}};
    std::vector<NodeId> acc_antecedents{choice.acceptable};
    std::vector<std::pair<NodeId, std::vector<NodeId>>> unacc_rules;  // per subset
    for (const auto& [set, members] : groups) {
      std::vector<NodeId> member_acc, member_unacc;
      for (const std::string& mem : members) {
        const Element mfi = fi(mem);
        member_acc.push_back(mfi.acceptable);
        member_unacc.push_back(mfi.unacceptable);
      }
      const std::string sid = subset_element(choice_id, set);
      const Element sub = m_.add_element(sid, ElementKind::choice_subset);
      for (NodeId a : member_acc) m_.tms().add_justification({a}, sub.acceptable, "subset-member");
      const SetDefault* d = m_.find_default(choice_set_referent(set));
      std::vector<NodeId> all_bad = member_unacc;
      if (d) all_bad.push_back(d->pair.complete);
      m_.tms().add_justification(all_bad, sub.unacceptable, "subset-exhausted");
      m_.add_subset({sid, choice_id, set, members});
      info.subsets.push_back(sid);
      acc_antecedents.push_back(sub.acceptable);
      unacc_rules.push_back({sub.unacceptable, {}});
    }

    const Element out = m_.add_element(id, ElementKind::factored_interpretation);
    m_.tms().add_justification(acc_antecedents, out.acceptable, "fi");
    m_.tms().add_justification({choice.unacceptable}, out.unacceptable, "fi-choice");
    for (const auto& [sub_unacc, _] : unacc_rules)
      m_.tms().add_justification({sub_unacc}, out.unacceptable, "fi-subset");
    m_.add_interpretation(std::move(info));
    in_progress_.erase(choice_id);
    return m_.element(id);
  }

 private:
  const parse::ParseTrace& trace_;
  DiagnosisModel& m_;
  std::map<std::string, std::vector<std::string>> enables_;
  std::set<std::string> in_progress_;
};

}  // namespace detail

inline DiagnosisModel build_model(const parse::ParseTrace& trace, BuildOptions options = {}) {
  if (trace.fragmented) throw ModelError("cannot build a model for a fragmented parse");
  DiagnosisModel m;
  Tms& tms = m.tms();

  // pos-of-word elements for lexically ambiguous tokens
  for (const auto& [tok, options_pos] : trace.ambiguous_pos)
    for (const std::string& pos : options_pos) m.add_element(pos_element(tok, pos), ElementKind::pos_of_word);

  // expressions, shared across choices
  for (const parse::Choice& c : trace.choices)
    for (const parse::SemanticExpression& e : c.expressions) m.add_element(expression_element(e), ElementKind::expression);

  // choices
  for (const parse::Choice& c : trace.choices) {
    const Element& el = m.add_element(choice_element(c.id), ElementKind::choice);
    std::vector<NodeId> parts_acc, parts_unacc;
    if (c.kind == parse::ChoiceKind::parse_tree) {
      if (c.tree != parse::npos && c.tree < trace.trees.size())
        for (const auto& [tok, _] : trace.ambiguous_pos) {
          const Element& p = m.element(pos_element(tok, trace.trees[c.tree].pos[tok]));
          parts_acc.push_back(p.acceptable);
          parts_unacc.push_back(p.unacceptable);
        }
    } else {
      for (const parse::SemanticExpression& e : c.expressions) {
        const Element& x = m.element(expression_element(e));
        parts_acc.push_back(x.acceptable);
        parts_unacc.push_back(x.unacceptable);
      }
    }
    if (!parts_acc.empty()) tms.add_justification(parts_acc, el.acceptable, "conjuncts");
    for (NodeId u : parts_unacc) tms.add_justification({u}, el.unacceptable, "conjunct-fails");
  }

  // one completeness pair per choice set
  for (const parse::ChoiceSet& s : trace.choice_sets) {
    SetDefault d;
    d.kind = DefaultKind::choice_set;
    d.referent = choice_set_referent(s.id);
    d.subject = choice_set_subject(s);
    d.choice_set = s.id;
    d.token = s.token;
    d.word = s.surface;
    d.root = s.root;
    const SetDefault& added = m.add_default(std::move(d));
    std::vector<std::string> members;
    for (const std::string& c : s.choices) members.push_back(choice_element(c));
    m.wire_completeness(added, members);
  }

  // factored interpretations, bottom-up from the fully independent choices
  detail::Builder builder(trace, m);
  std::vector<std::string> top;
  for (const parse::Choice& c : trace.choices)
    if (c.enabled_by.empty()) top.push_back(c.id);
  for (const parse::Choice& c : trace.choices) builder.fi(c.id);

  // root
  const Element& root = m.add_element("root", ElementKind::root);
  std::vector<NodeId> all_unacc;
  std::optional<NodeId> tree_complete;
  for (const parse::ChoiceSet& s : trace.choice_sets)
    if (s.kind == parse::ChoiceKind::parse_tree)
      tree_complete = m.find_default(choice_set_referent(s.id))->pair.complete;
  for (const std::string& t : top) {
    const Element& f = m.element(fi_element(t));
    tms.add_justification({f.acceptable}, root.acceptable, "root");
    all_unacc.push_back(f.unacceptable);
  }
  if (!all_unacc.empty()) {
    if (tree_complete) all_unacc.push_back(*tree_complete);
    tms.add_justification(all_unacc, root.unacceptable, "root-exhausted");
  }

  if (options.premise) {
    tms.add_justification({}, m.premise(), "premise");
    NodeId bottom = tms.create_node("no-desired-interpretation", NodeKind::contradiction);
    tms.add_justification({m.premise(), root.unacceptable}, bottom, "premise-vs-root");
  }
  return m;
}

inline bool root_acceptability(const DiagnosisModel& m, const Environment& env) {
  return m.tms().holds_in(m.root().acceptable, env);
}

}  // namespace semdiag::model
