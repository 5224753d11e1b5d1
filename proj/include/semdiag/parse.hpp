#pragma once

// A small bottom-up chart parser with feature agreement, followed by semtrans
// instantiation (valence matching, type checking). The result is a
// ParseTrace: choice sets, the enablement graph and a record of every
// candidate that was dropped on the way.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "semdiag/error.hpp"
#include "semdiag/kb.hpp"

namespace semdiag::parse {

using Json = nlohmann::json;
inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

// Whitespace split, terminal punctuation stripped, lowercased.
inline std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> out;
  std::istringstream in{std::string(sentence)};
  for (std::string word; in >> word;) {
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back())) && word.back() != '-')
      word.pop_back();
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front())) && word.front() != '-')
      word.erase(word.begin());
    if (word.empty()) continue;
    for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(word));
  }
  return out;
}

struct SemanticExpression {
  std::string functor;
  std::vector<std::string> args;

  std::string str() const {
    std::string s = "(" + functor;
    for (const std::string& a : args) s += " " + a;
    return s + ")";
  }
  friend auto operator<=>(const SemanticExpression&, const SemanticExpression&) = default;
};

// ------------------------------------------------------- type checking ---

struct TypeCheck {
  bool ok = true;
  std::string reason;
};

inline TypeCheck check_arg(const std::string& actual, const std::string& required, const kb::Ontology& onto) {
  if (required.empty() || onto.is_subtype(actual, required)) return {};
  if (onto.disjoint(actual, required))
    return {false, "type clash: " + actual + " is disjoint with " + required};
  return {false, actual + " is not known to be a " + required};
}

// Checks a role-relation expression against the relation's signature given
// the concepts of its discourse variables. Untyped variables pass. `extra`
// is an additional argument-type constraint (from a valence pattern).
inline TypeCheck type_check(const SemanticExpression& expr, const std::map<std::string, std::string>& types,
                            const kb::Ontology& onto, const std::string& extra = "") {
  if (expr.functor == "isa") return {};
  const kb::RoleSignature* sig = onto.signature(expr.functor);
  if (!sig) throw KnowledgeBaseError("unknown role relation " + expr.functor);
  auto type_of = [&](std::size_t i) -> std::optional<std::string> {
    if (i >= expr.args.size()) return std::nullopt;
    auto it = types.find(expr.args[i]);
    if (it == types.end()) return std::nullopt;
    return it->second;
  };
  if (auto ev = type_of(0)) {
    if (TypeCheck r = check_arg(*ev, sig->event_type, onto); !r.ok) return r;
  }
  if (auto arg = type_of(1)) {
    if (TypeCheck r = check_arg(*arg, sig->arg_type, onto); !r.ok) return r;
    if (TypeCheck r = check_arg(*arg, extra, onto); !r.ok) return r;
  }
  return {};
}

// ----------------------------------------------------- valence matching ---

struct ValenceMatch {
  std::size_t pattern = npos;  // npos for the vacuous match of a role-free semtrans
  std::map<std::string, kb::RoleBinding> assignment;  // grammatical role -> binding
};

struct ValenceFailure {
  std::vector<std::string> uncovered;  // bound roles no pattern can take
};

using ValenceResult = std::variant<std::vector<ValenceMatch>, ValenceFailure>;

// All patterns that give every bound role an open slot.
inline ValenceResult match_valence(const kb::Semtrans& st, const std::set<std::string>& bound_roles) {
  std::vector<ValenceMatch> matches;
  if (st.valence_patterns.empty()) {
    if (bound_roles.empty()) return std::vector<ValenceMatch>{ValenceMatch{}};
    return ValenceFailure{{bound_roles.begin(), bound_roles.end()}};
  }
  std::vector<std::string> best_missing(bound_roles.begin(), bound_roles.end());
  for (std::size_t i = 0; i < st.valence_patterns.size(); ++i) {
    const kb::ValencePattern& p = st.valence_patterns[i];
    std::vector<std::string> missing;
    ValenceMatch m{i, {}};
    for (const std::string& role : bound_roles) {
      auto it = p.bindings.find(role);
      if (it == p.bindings.end())
        missing.push_back(role);
      else
        m.assignment.emplace(role, it->second);
    }
    if (missing.empty())
      matches.push_back(std::move(m));
    else if (missing.size() < best_missing.size())
      best_missing = std::move(missing);
  }
  if (matches.empty()) return ValenceFailure{std::move(best_missing)};
  return matches;
}

// ------------------------------------------------------------ the chart ---

struct Constituent {
  std::string category;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::map<std::string, std::string> features;
  std::size_t head_token = 0;
  std::size_t lexicon_index = npos;  // leaves only
  std::string rule;                  // empty for leaves
  std::vector<std::size_t> children;
};

struct ParseTree {
  std::string bracketed;
  std::vector<std::string> pos;                              // per token
  std::vector<std::size_t> lexicon;                          // per token, index into kb.lexicon
  std::map<std::size_t, std::map<std::string, std::size_t>> roles;  // head token -> role -> filler token
};

class Chart {
 public:
  Chart(const kb::KnowledgeBase& kb, const std::vector<std::string>& tokens) : kb_(kb), n_(tokens.size()) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t li = 0; li < kb.lexicon.size(); ++li)
        if (kb.lexicon[li].surface == tokens[i])
          add({kb.lexicon[li].pos, i, i + 1, kb.lexicon[li].features, i, li, "", {}});
    for (std::size_t len = 1; len <= n_; ++len)
      for (std::size_t b = 0; b + len <= n_; ++b) fill(b, b + len);
  }

  std::vector<ParseTree> complete_trees(const std::string& start = "S", std::size_t limit = 64) const {
    std::vector<ParseTree> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < items_.size() && out.size() < limit; ++i) {
      const Constituent& c = items_[i];
      if (c.category != start || c.begin != 0 || c.end != n_) continue;
      ParseTree t;
      t.pos.assign(n_, "");
      t.lexicon.assign(n_, npos);
      t.bracketed = render(i, t);
      if (seen.insert(t.bracketed).second) out.push_back(std::move(t));
    }
    return out;
  }

  const std::vector<Constituent>& items() const { return items_; }

 private:
  void add(Constituent c) {
    by_span_[{c.begin, c.end}].push_back(items_.size());
    items_.push_back(std::move(c));
  }

  void fill(std::size_t b, std::size_t e) {
    // non-unary rules over strictly shorter children
    for (const kb::GrammarRule& r : kb_.grammar) {
      if (r.rhs.size() < 2) continue;
      std::vector<std::size_t> picked;
      extend(r, b, e, picked);
    }
    // unary closure on this span
    std::size_t cursor = 0;
    for (int guard = 0; guard < 16; ++guard) {
      auto& here = by_span_[{b, e}];
      std::size_t stop = here.size();
      if (cursor == stop) break;
      for (const kb::GrammarRule& r : kb_.grammar) {
        if (r.rhs.size() != 1) continue;
        for (std::size_t k = cursor; k < stop; ++k) {
          std::size_t child = by_span_[{b, e}][k];
          if (items_[child].category == r.rhs[0]) combine(r, {child});
        }
      }
      cursor = stop;
    }
  }

  void extend(const kb::GrammarRule& r, std::size_t pos, std::size_t e, std::vector<std::size_t>& picked) {
    const std::size_t k = picked.size();
    if (k == r.rhs.size()) {
      if (pos == e) combine(r, picked);
      return;
    }
    const std::size_t remaining = r.rhs.size() - k - 1;
    for (std::size_t mid = pos + 1; mid + remaining <= e; ++mid) {
      if (k == 0 && mid == e) continue;  // a child may not cover the whole span
      auto it = by_span_.find({pos, mid});
      if (it == by_span_.end()) continue;
      for (std::size_t child : it->second) {
        if (items_[child].category != r.rhs[k]) continue;
        picked.push_back(child);
        extend(r, mid, e, picked);
        picked.pop_back();
      }
    }
  }

  void combine(const kb::GrammarRule& r, const std::vector<std::size_t>& kids) {
    std::map<std::string, std::string> feats = items_[kids[r.head]].features;
    for (const kb::FeatureConstraint& fc : r.constraints) {
      const auto& lf = items_[kids[fc.left]].features;
      const auto& rf = items_[kids[fc.right]].features;
      auto li = lf.find(fc.feature);
      auto ri = rf.find(fc.feature);
      if (li != lf.end() && ri != rf.end() && li->second != ri->second) return;
      if (!feats.contains(fc.feature)) {
        if (li != lf.end()) feats[fc.feature] = li->second;
        else if (ri != rf.end()) feats[fc.feature] = ri->second;
      }
    }
    const Constituent& first = items_[kids.front()];
    const Constituent& last = items_[kids.back()];
    add({r.lhs, first.begin, last.end, std::move(feats), items_[kids[r.head]].head_token, npos, r.id, kids});
  }

  std::string render(std::size_t idx, ParseTree& t) const {
    const Constituent& c = items_[idx];
    if (c.lexicon_index != npos) {
      t.pos[c.begin] = c.category;
      t.lexicon[c.begin] = c.lexicon_index;
      return "(" + c.category + " " + kb_.lexicon[c.lexicon_index].surface + ")";
    }
    std::string s = "(" + c.category;
    for (std::size_t k : c.children) s += " " + render(k, t);
    const kb::GrammarRule* rule = nullptr;
    for (const kb::GrammarRule& r : kb_.grammar)
      if (r.id == c.rule) rule = &r;
    if (rule)
      for (const auto& [role, position] : rule->roles)
        t.roles[c.head_token][role] = items_[c.children[position]].head_token;
    return s + ")";
  }

  const kb::KnowledgeBase& kb_;
  std::size_t n_;
  std::vector<Constituent> items_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> by_span_;
};

// ------------------------------------------------------------ the trace ---

enum class ChoiceKind { parse_tree, word_sense };

struct Choice {
  std::string id;
  ChoiceKind kind = ChoiceKind::word_sense;
  std::string choice_set;
  std::size_t token = npos;             // word senses
  std::string semtrans;                 // word senses
  std::string concept_name;                  // word senses
  std::vector<SemanticExpression> expressions;
  std::map<std::string, std::size_t> roles;  // bound grammatical role -> filler token
  std::size_t tree = npos;              // parse trees: index into ParseTrace::trees
  std::vector<std::string> enabled_by;
};

struct ChoiceSet {
  std::string id;
  std::size_t number = 0;  // 1-based display number
  ChoiceKind kind = ChoiceKind::word_sense;
  std::size_t token = npos;
  std::string surface;
  std::string root;
  std::vector<std::string> choices;
};

enum class DropStage { lexicon, grammar, valence, typecheck };

inline const char* to_string(DropStage s) {
  switch (s) {
    case DropStage::lexicon: return "lexicon";
    case DropStage::grammar: return "grammar";
    case DropStage::valence: return "valence";
    case DropStage::typecheck: return "typecheck";
  }
  return "?";
}

struct DroppedCandidate {
  std::string candidate;  // semtrans id, or surface/lexicon description
  DropStage stage = DropStage::valence;
  std::size_t token = npos;
  Json reason;  // machine-readable provenance
};

struct ParseTrace {
  std::string sentence;
  std::vector<std::string> tokens;
  std::vector<std::string> discourse_vars;  // per token
  std::vector<ParseTree> trees;
  std::vector<ChoiceSet> choice_sets;
  std::vector<Choice> choices;
  std::vector<DroppedCandidate> dropped;
  std::map<std::size_t, std::vector<std::string>> ambiguous_pos;  // token -> POS options, lexicon order
  std::vector<std::string> unknown_tokens;
  bool fragmented = false;

  const Choice* find_choice(const std::string& id) const {
    for (const Choice& c : choices)
      if (c.id == id) return &c;
    return nullptr;
  }
  const ChoiceSet* find_set(const std::string& id) const {
    for (const ChoiceSet& s : choice_sets)
      if (s.id == id) return &s;
    return nullptr;
  }
  const ChoiceSet* set_for_token(std::size_t token) const {
    for (const ChoiceSet& s : choice_sets)
      if (s.kind == ChoiceKind::word_sense && s.token == token) return &s;
    return nullptr;
  }
  std::vector<const DroppedCandidate*> dropped_for_token(std::size_t token) const {
    std::vector<const DroppedCandidate*> out;
    for (const DroppedCandidate& d : dropped)
      if (d.token == token) out.push_back(&d);
    return out;
  }
};

namespace detail {

inline std::string var_base(const std::string& root) {
  std::string out;
  for (char c : root)
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out.empty() ? "x" : out;
}

struct SenseCandidate {
  std::vector<SemanticExpression> expressions;
  std::map<std::string, std::size_t> roles;
  std::optional<DroppedCandidate> failure;
};

// Instantiates one semtrans for token `tok` under tree `t`; either the
// distinct expression lists it yields, or the reason it was dropped.
inline std::vector<SenseCandidate> instantiate(const kb::KnowledgeBase& kb, const ParseTrace& trace,
                                               const ParseTree& t, std::size_t tok, const kb::Semtrans& st) {
  std::map<std::string, std::size_t> bound;
  if (auto it = t.roles.find(tok); it != t.roles.end()) bound = it->second;
  std::set<std::string> bound_roles;
  for (const auto& [role, _] : bound) bound_roles.insert(role);

  Json bound_json = Json::object();
  for (const auto& [role, filler] : bound) bound_json[role] = trace.tokens[filler];

  ValenceResult vr = match_valence(st, bound_roles);
  if (auto* fail = std::get_if<ValenceFailure>(&vr)) {
    DroppedCandidate d{st.id, DropStage::valence, tok,
                       {{"unhandled_roles", fail->uncovered}, {"bound_roles", bound_json}}};
    return {SenseCandidate{{}, bound, d}};
  }

  const std::string self = trace.discourse_vars[tok];
  std::vector<SenseCandidate> out;
  std::optional<DroppedCandidate> first_failure;
  for (const ValenceMatch& m : std::get<std::vector<ValenceMatch>>(vr)) {
    // type check each bound role against the filler's possible concepts
    std::optional<DroppedCandidate> failure;
    for (const auto& [role, binding] : m.assignment) {
      const std::size_t filler = bound.at(role);
      std::vector<std::string> filler_concepts;
      const kb::LexiconEntry& fe = kb.lexicon[t.lexicon[filler]];
      for (const kb::Semtrans* fs : kb.semtrans_for(fe.root))
        if (fs->pos == fe.pos) filler_concepts.push_back(fs->concept_name);
      if (filler_concepts.empty()) continue;
      SemanticExpression e{binding.relation, {self, trace.discourse_vars[filler]}};
      TypeCheck last;
      bool any = false;
      for (const std::string& fc : filler_concepts) {
        TypeCheck r = type_check(e, {{self, st.concept_name}, {trace.discourse_vars[filler], fc}}, kb.ontology, binding.type);
        if (r.ok) {
          any = true;
          break;
        }
        last = r;
      }
      if (!any) {
        failure = DroppedCandidate{st.id, DropStage::typecheck, tok,
                                   {{"relation", binding.relation},
                                    {"role", role},
                                    {"filler", trace.tokens[filler]},
                                    {"filler_concepts", filler_concepts},
                                    {"required", binding.type},
                                    {"message", last.reason},
                                    {"bound_roles", bound_json}}};
        break;
      }
    }
    if (failure) {
      if (!first_failure) first_failure = failure;
      continue;
    }

    std::map<std::string, std::string> slot;  // relation -> filler var
    for (const auto& [role, binding] : m.assignment) slot[binding.relation] = trace.discourse_vars[bound.at(role)];
    SenseCandidate cand{{}, bound, std::nullopt};
    for (const kb::TemplateExpr& te : st.templ) {
      SemanticExpression e{te.functor, {}};
      bool complete = true;
      for (const std::string& a : te.args) {
        if (a == "?self")
          e.args.push_back(self);
        else if (a.size() > 1 && a[0] == '?') {
          auto it = slot.find(a.substr(1));
          if (it == slot.end()) {
            complete = false;
            break;
          }
          e.args.push_back(it->second);
        } else
          e.args.push_back(a);
      }
      if (complete) cand.expressions.push_back(std::move(e));
    }
    if (std::none_of(out.begin(), out.end(), [&](const SenseCandidate& c) { return c.expressions == cand.expressions; }))
      out.push_back(std::move(cand));
  }
  if (out.empty()) return {SenseCandidate{{}, bound, first_failure}};
  return out;
}

}  // namespace detail

inline ParseTrace parse(std::string_view sentence, const kb::KnowledgeBase& kb) {
  ParseTrace trace;
  trace.sentence = std::string(sentence);
  trace.tokens = tokenize(sentence);
  const std::size_t n = trace.tokens.size();

  std::map<std::string, std::size_t> occurrences;
  for (std::size_t i = 0; i < n; ++i) {
    auto entries = kb.entries_for(trace.tokens[i]);
    std::string root = entries.empty() ? trace.tokens[i] : entries.front()->root;
    const std::string base = detail::var_base(root);
    trace.discourse_vars.push_back(base + std::to_string(++occurrences[base]));
    if (entries.empty()) {
      trace.unknown_tokens.push_back(trace.tokens[i]);
      trace.dropped.push_back({trace.tokens[i], DropStage::lexicon, i, {{"message", "no lexicon entry"}}});
      continue;
    }
    std::vector<std::string> pos;
    for (const kb::LexiconEntry* e : entries)
      if (std::find(pos.begin(), pos.end(), e->pos) == pos.end()) pos.push_back(e->pos);
    if (pos.size() > 1) trace.ambiguous_pos[i] = pos;
  }

  if (n > 0 && trace.unknown_tokens.empty()) {
    Chart chart(kb, trace.tokens);
    trace.trees = chart.complete_trees();
  }
  trace.fragmented = trace.trees.empty();
  if (trace.fragmented) return trace;

  // lexicon entries no complete tree uses
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t li = 0; li < kb.lexicon.size(); ++li) {
      if (kb.lexicon[li].surface != trace.tokens[i]) continue;
      bool used = std::any_of(trace.trees.begin(), trace.trees.end(),
                              [&](const ParseTree& t) { return t.lexicon[i] == li; });
      if (!used)
        trace.dropped.push_back({trace.tokens[i] + "/" + kb.lexicon[li].pos, DropStage::grammar, i,
                                 {{"message", "no complete parse uses this lexicon entry"}}});
    }

  // parse-tree choice set
  ChoiceSet trees{"cs1", 1, ChoiceKind::parse_tree, npos, "", "", {}};
  for (std::size_t t = 0; t < trace.trees.size(); ++t) {
    Choice c;
    c.id = "tree" + std::to_string(t + 1);
    c.kind = ChoiceKind::parse_tree;
    c.choice_set = trees.id;
    c.tree = t;
    trees.choices.push_back(c.id);
    trace.choices.push_back(std::move(c));
  }
  trace.choice_sets.push_back(std::move(trees));

  // word-sense choice sets, one per content-word occurrence with known semtranses
  for (std::size_t i = 0; i < n; ++i) {
    auto entries = kb.entries_for(trace.tokens[i]);
    bool content = std::any_of(entries.begin(), entries.end(),
                               [&](const kb::LexiconEntry* e) { return kb.is_content_pos(e->pos); });
    if (!content) continue;
    std::vector<const kb::Semtrans*> senses;
    std::set<std::string> roots;
    for (const kb::LexiconEntry* e : entries) roots.insert(e->root);
    for (const kb::Semtrans& s : kb.semtrans)
      if (roots.contains(s.root) &&
          std::any_of(entries.begin(), entries.end(), [&](const kb::LexiconEntry* e) { return e->root == s.root; }))
        senses.push_back(&s);
    if (senses.empty()) continue;

    ChoiceSet set{"cs" + std::to_string(trace.choice_sets.size() + 1), trace.choice_sets.size() + 1,
                  ChoiceKind::word_sense, i, trace.tokens[i], entries.front()->root, {}};
    for (const kb::Semtrans* st : senses) {
      std::optional<DroppedCandidate> first_failure;
      std::vector<std::string> made;
      for (std::size_t t = 0; t < trace.trees.size(); ++t) {
        const ParseTree& tree = trace.trees[t];
        const kb::LexiconEntry& used = kb.lexicon[tree.lexicon[i]];
        if (used.root != st->root || used.pos != st->pos) continue;
        for (detail::SenseCandidate& cand : detail::instantiate(kb, trace, tree, i, *st)) {
          if (cand.failure) {
            if (!first_failure) first_failure = std::move(cand.failure);
            continue;
          }
          const std::string tree_id = "tree" + std::to_string(t + 1);
          auto existing = std::find_if(trace.choices.begin(), trace.choices.end(), [&](const Choice& c) {
            return c.kind == ChoiceKind::word_sense && c.token == i && c.semtrans == st->id &&
                   c.expressions == cand.expressions;
          });
          if (existing != trace.choices.end()) {
            existing->enabled_by.push_back(tree_id);
            continue;
          }
          Choice c;
          c.id = trace.tokens[i] + std::to_string(i + 1) + ":" + st->id;
          if (!made.empty()) c.id += "/" + std::to_string(made.size() + 1);
          c.kind = ChoiceKind::word_sense;
          c.choice_set = set.id;
          c.token = i;
          c.semtrans = st->id;
          c.concept_name = st->concept_name;
          c.expressions = std::move(cand.expressions);
          c.roles = std::move(cand.roles);
          c.enabled_by.push_back(tree_id);
          made.push_back(c.id);
          set.choices.push_back(c.id);
          trace.choices.push_back(std::move(c));
        }
      }
      if (!made.empty()) continue;
      if (first_failure) {
        trace.dropped.push_back(std::move(*first_failure));
      } else {
        trace.dropped.push_back({st->id, DropStage::grammar, i,
                                 {{"message", "no complete parse uses '" + trace.tokens[i] + "' as " + st->pos}}});
      }
    }
    trace.choice_sets.push_back(std::move(set));
  }
  return trace;
}

inline Json to_json(const ParseTrace& trace) {
  Json sets = Json::array();
  for (const ChoiceSet& s : trace.choice_sets) {
    Json choices = Json::array();
    for (const std::string& id : s.choices) {
      const Choice* c = trace.find_choice(id);
      Json jc = {{"id", c->id}, {"kind", c->kind == ChoiceKind::parse_tree ? "parse-tree" : "word-sense"}};
      if (c->kind == ChoiceKind::parse_tree) {
        jc["tree"] = trace.trees[c->tree].bracketed;
      } else {
        jc["semtrans"] = c->semtrans;
        jc["concept"] = c->concept_name;
        Json ex = Json::array();
        for (const SemanticExpression& e : c->expressions) ex.push_back(e.str());
        jc["expressions"] = ex;
      }
      choices.push_back(jc);
    }
    Json js = {{"id", s.id}, {"number", s.number}, {"choices", choices}};
    if (s.kind == ChoiceKind::word_sense) {
      js["token"] = s.token;
      js["word"] = s.surface;
    } else {
      js["target"] = "parse-trees";
    }
    sets.push_back(js);
  }
  Json enablement = Json::object();
  for (const Choice& c : trace.choices) enablement[c.id] = c.enabled_by;
  Json dropped = Json::array();
  for (const DroppedCandidate& d : trace.dropped)
    dropped.push_back({{"candidate", d.candidate}, {"stage", to_string(d.stage)}, {"token", d.token}, {"reason", d.reason}});
  return {{"sentence", trace.sentence},
          {"tokens", trace.tokens},
          {"choice_sets", sets},
          {"enablement", enablement},
          {"dropped", dropped},
          {"fragmented", trace.fragmented}};
}

}  // namespace semdiag::parse
