#pragma once

// Named variants of the bundled demo knowledge base and the synthetic
// ablation suite built on "Joe ate the apple."

#include <chrono>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "semdiag/error.hpp"
#include "semdiag/kb.hpp"
#include "semdiag/report.hpp"
#include "semdiag/session.hpp"

namespace semdiag::suite {

// Variant name -> edits applied to the base knowledge base.
inline const std::map<std::string, std::vector<std::string>>& demo_variants() {
  static const std::map<std::string, std::vector<std::string>> variants = {
      {"demo", {}},
      {"demo-missing-sandwich", {"remove_semtrans:wedge:Wedge-Sandwich"}},
      {"demo-no-apple-sense", {"remove_semtrans:apple:Apple"}},
      {"demo-no-eating-event", {"remove_semtrans:eat:EatingEvent"}},
      {"demo-no-eating-valence", {"remove_valence_patterns:eat:EatingEvent"}},
  };
  return variants;
}

inline kb::KnowledgeBase variant(const kb::KnowledgeBase& base, const std::string& name) {
  auto it = demo_variants().find(name);
  if (it == demo_variants().end()) throw KnowledgeBaseError("unknown knowledge base '" + name + "'");
  kb::KnowledgeBase out = base;
  for (const std::string& edit : it->second) out = kb::ablate(out, kb::parse_edit(edit));
  out.name = name;
  return out;
}

struct Case {
  std::string ablated;      // what was removed
  std::string edit;         // ablation spec
  std::string expected_id;  // taxonomy id
  std::string expected_description;
  std::string strategy;
};

inline const std::string kAblationSentence = "Joe ate the apple.";

inline const std::vector<Case>& ablation_cases() {
  static const std::vector<Case> cases = {
      {"Semtrans for \"apple\"", "remove_semtrans:apple:Apple", "C3", "Missing semtrans for \"apple\"",
       "No Known Semtrans for Word"},
      {"EatingEvent semtrans", "remove_semtrans:eat:EatingEvent", "C3", "Missing semtrans for \"eat\"",
       "No Acceptable Semtrans for Word"},
      {"Valence patterns for the EatingEvent semtrans", "remove_valence_patterns:eat:EatingEvent", "C2",
       "Missing valence pattern for the EatingEvent semtrans", "Missing Valence Pattern for Acceptable Semtrans"},
  };
  return cases;
}

inline const std::set<std::string>& ablation_gold() {
  static const std::set<std::string> gold = {"joe-Person", "eat-EatingEvent", "apple-Apple",
                                             "(performedBy eat1 joe1)", "(consumedObject eat1 apple1)"};
  return gold;
}

struct CaseResult {
  Case spec;
  report::Report report;
  double seconds = 0;
  bool passed = false;
};

inline bool matches(const Case& c, const report::Report& r) {
  if (r.faults.size() != 1) return false;
  const report::Fault& f = r.faults.front();
  return f.taxonomy_id == c.expected_id && f.description.rfind(c.expected_description, 0) == 0;
}

inline std::vector<CaseResult> run_ablation_suite(const kb::KnowledgeBase& base) {
  std::vector<CaseResult> out;
  for (const Case& c : ablation_cases()) {
    const auto start = std::chrono::steady_clock::now();
    kb::KnowledgeBase ablated = kb::ablate(base, kb::parse_edit(c.edit));
    session::OracleAgent oracle(ablation_gold());
    report::Report r = session::run_session(kAblationSentence, ablated, oracle);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back({c, r, secs, matches(c, r)});
  }
  return out;
}

}  // namespace semdiag::suite
