#pragma once

// Parser knowledge: lexicon, grammar, semtranses with valence patterns,
// ontology and glosses. Loaded from a single JSON document.

#include <algorithm>
#include <cstddef>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "semdiag/error.hpp"

namespace semdiag::kb {

using Json = nlohmann::json;

struct LexiconEntry {
  std::string surface;
  std::string root;
  std::string pos;
  std::map<std::string, std::string> features;
};

// feature value of rhs[left] must equal that of rhs[right] when both are set
struct FeatureConstraint {
  std::string feature;
  std::size_t left = 0;
  std::size_t right = 0;
};

struct GrammarRule {
  std::string id;
  std::string lhs;
  std::vector<std::string> rhs;
  std::size_t head = 0;
  std::vector<FeatureConstraint> constraints;
  std::map<std::string, std::size_t> roles;  // grammatical role -> rhs position
};

struct RoleBinding {
  std::string relation;
  std::string type;  // argument type constraint; empty means unconstrained
};

struct ValencePattern {
  std::map<std::string, RoleBinding> bindings;  // grammatical role -> binding
};

// Template expression; arguments are "?self", "?<relation>" role slots or
// constants.
struct TemplateExpr {
  std::string functor;
  std::vector<std::string> args;
};

struct Semtrans {
  std::string id;
  std::string root;
  std::string pos;
  std::string frame;
  std::string concept_name;
  std::vector<TemplateExpr> templ;
  std::vector<ValencePattern> valence_patterns;
  std::string gloss;  // optional override of the concept gloss
};

struct RoleSignature {
  std::string event_type;
  std::string arg_type;
  std::string question;  // yes/no template with {event} and {arg}
};

struct Gloss {
  std::string head;
  std::string detail;
};

class Ontology {
 public:
  std::set<std::pair<std::string, std::string>> isa_links;
  std::set<std::pair<std::string, std::string>> disjoint_pairs;
  std::map<std::string, RoleSignature> role_signatures;
  std::map<std::string, Gloss> glosses;

  std::set<std::string> concepts() const {
    std::set<std::string> out;
    for (const auto& [a, b] : isa_links) {
      out.insert(a);
      out.insert(b);
    }
    for (const auto& [a, b] : disjoint_pairs) {
      out.insert(a);
      out.insert(b);
    }
    for (const auto& [_, sig] : role_signatures) {
      out.insert(sig.event_type);
      out.insert(sig.arg_type);
    }
    return out;
  }

  // Reflexive-transitive isa closure of `name`.
  std::set<std::string> ancestors(const std::string& name) const {
    std::set<std::string> seen{name};
    std::deque<std::string> work{name};
    while (!work.empty()) {
      std::string cur = work.front();
      work.pop_front();
      for (auto it = isa_links.lower_bound({cur, ""}); it != isa_links.end() && it->first == cur; ++it)
        if (seen.insert(it->second).second) work.push_back(it->second);
    }
    return seen;
  }

  bool is_subtype(const std::string& sub, const std::string& super) const {
    return ancestors(sub).contains(super);
  }

  bool disjoint(const std::string& a, const std::string& b) const {
    auto up_a = ancestors(a);
    auto up_b = ancestors(b);
    for (const auto& [x, y] : disjoint_pairs)
      if ((up_a.contains(x) && up_b.contains(y)) || (up_a.contains(y) && up_b.contains(x))) return true;
    return false;
  }

  bool acyclic() const {
    for (const auto& [a, b] : isa_links)
      if (a == b || ancestors(b).contains(a)) return false;
    return true;
  }

  const RoleSignature* signature(const std::string& relation) const {
    auto it = role_signatures.find(relation);
    return it == role_signatures.end() ? nullptr : &it->second;
  }
};

struct KnowledgeBase {
  std::string name;
  std::vector<LexiconEntry> lexicon;
  std::vector<GrammarRule> grammar;
  std::vector<Semtrans> semtrans;
  Ontology ontology;
  std::map<std::string, std::string> pos_names;  // POS symbol -> display name
  std::set<std::string> content_pos;
  std::vector<std::string> provenance;            // ablations applied, in order

  std::vector<const LexiconEntry*> entries_for(const std::string& surface) const {
    std::vector<const LexiconEntry*> out;
    for (const LexiconEntry& e : lexicon)
      if (e.surface == surface) out.push_back(&e);
    return out;
  }

  std::vector<const Semtrans*> semtrans_for(const std::string& root) const {
    std::vector<const Semtrans*> out;
    for (const Semtrans& s : semtrans)
      if (s.root == root) out.push_back(&s);
    return out;
  }

  const Semtrans* find_semtrans(const std::string& id) const {
    for (const Semtrans& s : semtrans)
      if (s.id == id) return &s;
    return nullptr;
  }

  std::string pos_name(const std::string& pos) const {
    auto it = pos_names.find(pos);
    return it == pos_names.end() ? pos : it->second;
  }

  bool is_content_pos(const std::string& pos) const { return content_pos.contains(pos); }

  bool is_lexical_category(const std::string& cat) const {
    return std::any_of(lexicon.begin(), lexicon.end(), [&](const LexiconEntry& e) { return e.pos == cat; });
  }
};

// ---------------------------------------------------------------- JSON ---

inline Json to_json(const TemplateExpr& t) {
  Json j = Json::array({t.functor});
  for (const std::string& a : t.args) j.push_back(a);
  return j;
}

inline Json to_json(const KnowledgeBase& kb) {
  Json lex = Json::array();
  for (const LexiconEntry& e : kb.lexicon)
    lex.push_back({{"surface", e.surface}, {"root", e.root}, {"pos", e.pos}, {"features", e.features}});
  Json grammar = Json::array();
  for (const GrammarRule& r : kb.grammar) {
    Json cons = Json::array();
    for (const FeatureConstraint& c : r.constraints) cons.push_back({c.feature, c.left, c.right});
    grammar.push_back({{"id", r.id}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"head", r.head},
                       {"constraints", cons}, {"roles", r.roles}});
  }
  Json sem = Json::array();
  for (const Semtrans& s : kb.semtrans) {
    Json templ = Json::array();
    for (const TemplateExpr& t : s.templ) templ.push_back(to_json(t));
    Json patterns = Json::array();
    for (const ValencePattern& p : s.valence_patterns) {
      Json jp = Json::object();
      for (const auto& [role, b] : p.bindings) jp[role] = {{"relation", b.relation}, {"type", b.type}};
      patterns.push_back(jp);
    }
    Json js = {{"id", s.id},       {"root", s.root},      {"pos", s.pos},
               {"frame", s.frame}, {"concept", s.concept_name}, {"template", templ},
               {"valence_patterns", patterns}};
    if (!s.gloss.empty()) js["gloss"] = s.gloss;
    sem.push_back(js);
  }
  Json isa = Json::array();
  for (const auto& [a, b] : kb.ontology.isa_links) isa.push_back({a, b});
  Json disjoint = Json::array();
  for (const auto& [a, b] : kb.ontology.disjoint_pairs) disjoint.push_back({a, b});
  Json roles = Json::object();
  for (const auto& [rel, sig] : kb.ontology.role_signatures)
    roles[rel] = {{"event", sig.event_type}, {"arg", sig.arg_type}, {"question", sig.question}};
  Json glosses = Json::object();
  for (const auto& [c, g] : kb.ontology.glosses) glosses[c] = {{"head", g.head}, {"detail", g.detail}};

  Json out = {{"name", kb.name},
              {"lexicon", lex},
              {"grammar", grammar},
              {"semtrans", sem},
              {"ontology", {{"isa", isa}, {"disjoint", disjoint}, {"roles", roles}}},
              {"glosses", glosses},
              {"pos_names", kb.pos_names},
              {"content_pos", kb.content_pos}};
  if (!kb.provenance.empty()) out["provenance"] = kb.provenance;
  return out;
}

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw KnowledgeBaseError(where + ": missing key '" + key + "'");
  return j.at(key);
}

inline std::string str(const Json& j, const char* key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_string()) throw KnowledgeBaseError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

inline std::string opt_str(const Json& j, const char* key) {
  return j.contains(key) && j.at(key).is_string() ? j.at(key).get<std::string>() : std::string{};
}

}  // namespace detail

inline KnowledgeBase from_json(const Json& doc) {
  using detail::opt_str;
  using detail::require;
  using detail::str;
  KnowledgeBase kb;
  try {
    kb.name = opt_str(doc, "name");
    for (const Json& e : require(doc, "lexicon", "kb")) {
      LexiconEntry le{str(e, "surface", "lexicon"), str(e, "root", "lexicon"), str(e, "pos", "lexicon"), {}};
      if (e.contains("features")) le.features = e.at("features").get<std::map<std::string, std::string>>();
      kb.lexicon.push_back(std::move(le));
    }
    for (const Json& r : require(doc, "grammar", "kb")) {
      GrammarRule rule;
      rule.id = str(r, "id", "grammar");
      rule.lhs = str(r, "lhs", "grammar rule " + rule.id);
      rule.rhs = require(r, "rhs", "grammar rule " + rule.id).get<std::vector<std::string>>();
      rule.head = r.value("head", std::size_t{0});
      if (r.contains("constraints"))
        for (const Json& c : r.at("constraints"))
          rule.constraints.push_back({c.at(0).get<std::string>(), c.at(1).get<std::size_t>(),
                                      c.at(2).get<std::size_t>()});
      if (r.contains("roles")) rule.roles = r.at("roles").get<std::map<std::string, std::size_t>>();
      kb.grammar.push_back(std::move(rule));
    }
    for (const Json& s : require(doc, "semtrans", "kb")) {
      Semtrans st;
      st.id = str(s, "id", "semtrans");
      const std::string where = "semtrans " + st.id;
      st.root = str(s, "root", where);
      st.pos = str(s, "pos", where);
      st.frame = opt_str(s, "frame");
      st.concept_name = str(s, "concept", where);
      st.gloss = opt_str(s, "gloss");
      for (const Json& t : require(s, "template", where)) {
        if (!t.is_array() || t.empty()) throw KnowledgeBaseError(where + ": malformed template expression");
        TemplateExpr te{t.at(0).get<std::string>(), {}};
        for (std::size_t i = 1; i < t.size(); ++i) te.args.push_back(t.at(i).get<std::string>());
        st.templ.push_back(std::move(te));
      }
      if (s.contains("valence_patterns"))
        for (const Json& p : s.at("valence_patterns")) {
          ValencePattern vp;
          for (const auto& [role, b] : p.items())
            vp.bindings[role] = {str(b, "relation", where), opt_str(b, "type")};
          st.valence_patterns.push_back(std::move(vp));
        }
      kb.semtrans.push_back(std::move(st));
    }
    const Json& onto = require(doc, "ontology", "kb");
    if (onto.contains("isa"))
      for (const Json& l : onto.at("isa")) kb.ontology.isa_links.insert({l.at(0).get<std::string>(), l.at(1).get<std::string>()});
    if (onto.contains("disjoint"))
      for (const Json& l : onto.at("disjoint")) kb.ontology.disjoint_pairs.insert({l.at(0).get<std::string>(), l.at(1).get<std::string>()});
    if (onto.contains("roles"))
      for (const auto& [rel, sig] : onto.at("roles").items())
        kb.ontology.role_signatures[rel] = {str(sig, "event", "role " + rel), str(sig, "arg", "role " + rel),
                                            opt_str(sig, "question")};
    if (doc.contains("glosses"))
      for (const auto& [c, g] : doc.at("glosses").items()) {
        if (g.is_string())
          kb.ontology.glosses[c] = {g.get<std::string>(), ""};
        else
          kb.ontology.glosses[c] = {str(g, "head", "gloss " + c), opt_str(g, "detail")};
      }
    if (doc.contains("pos_names")) kb.pos_names = doc.at("pos_names").get<std::map<std::string, std::string>>();
    if (doc.contains("content_pos"))
      kb.content_pos = doc.at("content_pos").get<std::set<std::string>>();
    else
      kb.content_pos = {"N", "ProperNoun", "V", "Adj"};
    if (doc.contains("provenance")) kb.provenance = doc.at("provenance").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw KnowledgeBaseError(std::string("malformed knowledge base: ") + e.what());
  }
  return kb;
}

// Structural checks. Hard errors throw; soft issues (for instance template
// role slots no pattern covers, which is what a valence ablation leaves
// behind) come back as warnings.
inline std::vector<std::string> validate(const KnowledgeBase& kb) {
  std::vector<std::string> warnings;
  if (!kb.ontology.acyclic()) throw KnowledgeBaseError("isa hierarchy contains a cycle");
  for (const GrammarRule& r : kb.grammar) {
    if (r.rhs.empty()) throw KnowledgeBaseError("grammar rule " + r.id + " has an empty right-hand side");
    if (r.head >= r.rhs.size()) throw KnowledgeBaseError("grammar rule " + r.id + " has an invalid head");
    for (const auto& [role, pos] : r.roles)
      if (pos >= r.rhs.size())
        throw KnowledgeBaseError("grammar rule " + r.id + " binds role " + role + " to an invalid position");
    for (const FeatureConstraint& c : r.constraints)
      if (c.left >= r.rhs.size() || c.right >= r.rhs.size())
        throw KnowledgeBaseError("grammar rule " + r.id + " constrains an invalid position");
  }
  std::set<std::tuple<std::string, std::string, std::string, std::map<std::string, std::string>>> seen;
  for (const LexiconEntry& e : kb.lexicon)
    if (!seen.insert({e.surface, e.pos, e.root, e.features}).second)
      throw KnowledgeBaseError("duplicate lexicon entry for '" + e.surface + "' as " + e.pos);
  std::set<std::string> ids;
  for (const Semtrans& s : kb.semtrans) {
    if (!ids.insert(s.id).second) throw KnowledgeBaseError("duplicate semtrans id " + s.id);
    for (const ValencePattern& p : s.valence_patterns)
      for (const auto& [role, b] : p.bindings)
        if (!kb.ontology.signature(b.relation))
          throw KnowledgeBaseError("semtrans " + s.id + " uses undeclared role relation " + b.relation);
    for (const TemplateExpr& t : s.templ)
      for (const std::string& a : t.args) {
        if (a.size() < 2 || a[0] != '?' || a == "?self") continue;
        const std::string rel = a.substr(1);
        bool covered = std::any_of(s.valence_patterns.begin(), s.valence_patterns.end(), [&](const ValencePattern& p) {
          return std::any_of(p.bindings.begin(), p.bindings.end(),
                             [&](const auto& kv) { return kv.second.relation == rel; });
        });
        if (!covered) warnings.push_back("semtrans " + s.id + ": role slot " + a + " is not covered by any valence pattern");
      }
    if (!kb.ontology.glosses.contains(s.concept_name) && s.gloss.empty())
      warnings.push_back("semtrans " + s.id + ": no gloss for concept " + s.concept_name);
  }
  return warnings;
}

inline KnowledgeBase load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw KnowledgeBaseError("cannot open knowledge base " + path);
  Json doc;
  try {
    in >> doc;
  } catch (const Json::exception& e) {
    throw KnowledgeBaseError("cannot parse " + path + ": " + e.what());
  }
  KnowledgeBase kb = from_json(doc);
  validate(kb);
  return kb;
}

// ------------------------------------------------------------- ablation ---

struct Edit {
  enum class Kind { remove_semtrans, remove_valence_patterns, remove_lexicon_entry };
  Kind kind = Kind::remove_semtrans;
  std::string word;     // root for semtrans edits, surface for lexicon edits
  std::string concept_name;  // unused for lexicon edits

  std::string describe() const {
    switch (kind) {
      case Kind::remove_semtrans: return "remove_semtrans:" + word + ":" + concept_name;
      case Kind::remove_valence_patterns: return "remove_valence_patterns:" + word + ":" + concept_name;
      case Kind::remove_lexicon_entry: return "remove_lexicon_entry:" + word;
    }
    return {};
  }
};

// "remove_semtrans:apple:Apple", "remove_valence_patterns:eat:EatingEvent",
// "remove_lexicon_entry:wedge"
inline Edit parse_edit(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() == 3 && parts[0] == "remove_semtrans") return {Edit::Kind::remove_semtrans, parts[1], parts[2]};
  if (parts.size() == 3 && parts[0] == "remove_valence_patterns")
    return {Edit::Kind::remove_valence_patterns, parts[1], parts[2]};
  if (parts.size() == 2 && parts[0] == "remove_lexicon_entry") return {Edit::Kind::remove_lexicon_entry, parts[1], ""};
  throw KnowledgeBaseError("malformed edit '" + spec + "'");
}

inline KnowledgeBase ablate(const KnowledgeBase& kb, const Edit& edit) {
  KnowledgeBase out = kb;
  auto matches = [&](const Semtrans& s) { return s.root == edit.word && s.concept_name == edit.concept_name; };
  switch (edit.kind) {
    case Edit::Kind::remove_semtrans: {
      if (std::erase_if(out.semtrans, matches) == 0)
        throw KnowledgeBaseError("no semtrans " + edit.concept_name + " for '" + edit.word + "'");
      break;
    }
    case Edit::Kind::remove_valence_patterns: {
      auto it = std::find_if(out.semtrans.begin(), out.semtrans.end(), matches);
      if (it == out.semtrans.end()) throw KnowledgeBaseError("no semtrans " + edit.concept_name + " for '" + edit.word + "'");
      it->valence_patterns.clear();
      break;
    }
    case Edit::Kind::remove_lexicon_entry: {
      if (std::erase_if(out.lexicon, [&](const LexiconEntry& e) { return e.surface == edit.word; }) == 0)
        throw KnowledgeBaseError("no lexicon entry for '" + edit.word + "'");
      break;
    }
  }
  out.provenance.push_back(edit.describe());
  return out;
}

}  // namespace semdiag::kb
