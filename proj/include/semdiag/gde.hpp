#pragma once

// Inner diagnosis loop: defaults, conflicts, minimal diagnoses and
// measurement selection on top of a Catms.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semdiag/catms.hpp"
#include "semdiag/error.hpp"

namespace semdiag::gde {

using catms::Environment;
using catms::NodeId;
using catms::NodeKind;

struct DefaultAssumption {
  NodeId node;
  bool fault_eligible = false;
  std::string referent;
};

// Completeness/incompleteness pair over one referent.
struct DefaultPair {
  std::string referent;
  NodeId complete;
  NodeId incomplete;
};

class DefaultSet {
 public:
  // Creates both assumptions, registers them as contradictory through
  // `contradiction` and returns the pair.
  template <class Datum>
  DefaultPair add_pair(catms::Catms<Datum>& tms, const std::string& referent, Datum complete_datum,
                       Datum incomplete_datum, NodeId contradiction) {
    for (const DefaultPair& p : pairs_)
      if (p.referent == referent) throw ModelError("duplicate completeness pair for " + referent);
    DefaultPair pair{referent, tms.create_node(std::move(complete_datum), NodeKind::assumption),
                     tms.create_node(std::move(incomplete_datum), NodeKind::assumption)};
    tms.add_justification({pair.complete, pair.incomplete}, contradiction, "complete-vs-incomplete");
    pairs_.push_back(pair);
    defaults_.push_back({pair.complete, true, referent});
    defaults_.push_back({pair.incomplete, false, referent});
    return pair;
  }

  const std::vector<DefaultPair>& pairs() const { return pairs_; }
  const std::vector<DefaultAssumption>& defaults() const { return defaults_; }

  const DefaultPair* find_by_complete(NodeId complete) const {
    for (const DefaultPair& p : pairs_)
      if (p.complete == complete) return &p;
    return nullptr;
  }
  const DefaultPair* find(const std::string& referent) const {
    for (const DefaultPair& p : pairs_)
      if (p.referent == referent) return &p;
    return nullptr;
  }

  bool is_default(NodeId id) const {
    return std::any_of(defaults_.begin(), defaults_.end(),
                       [&](const DefaultAssumption& d) { return d.node == id; });
  }
  bool is_fault_eligible(NodeId id) const {
    return std::any_of(defaults_.begin(), defaults_.end(),
                       [&](const DefaultAssumption& d) { return d.node == id && d.fault_eligible; });
  }

 private:
  std::vector<DefaultPair> pairs_;
  std::vector<DefaultAssumption> defaults_;
};

enum class Verdict { acceptable, unacceptable };

inline const char* to_string(Verdict v) {
  return v == Verdict::acceptable ? "acceptable" : "unacceptable";
}

struct Judgment {
  std::string element;
  Verdict verdict = Verdict::acceptable;
  friend bool operator==(const Judgment&, const Judgment&) = default;
};

struct ElementNodes {
  NodeId acceptable;
  NodeId unacceptable;
};

struct MeasurementRecord {
  Judgment judgment;
  NodeId assumption;
};

// Judgment assumptions are created on first use and shared afterwards, so
// measurement selection can reason about answers that were never given.
class Measurements {
 public:
  template <class Datum>
  NodeId assumption_for(catms::Catms<Datum>& tms, const Judgment& j, ElementNodes nodes) {
    auto key = std::make_pair(j.element, j.verdict);
    if (auto it = assumptions_.find(key); it != assumptions_.end()) return it->second;
    NodeId a = tms.create_node(Datum("judge(" + j.element + "=" + to_string(j.verdict) + ")"),
                               NodeKind::assumption);
    tms.add_justification({a}, j.verdict == Verdict::acceptable ? nodes.acceptable : nodes.unacceptable,
                          "judgment");
    assumptions_.emplace(key, a);
    return a;
  }

  template <class Datum>
  MeasurementRecord record(catms::Catms<Datum>& tms, const Judgment& j, ElementNodes nodes) {
    for (const MeasurementRecord& r : records_) {
      if (r.judgment.element != j.element) continue;
      if (r.judgment.verdict == j.verdict) return r;
      throw AnswerError("element " + j.element + " was already judged " + to_string(r.judgment.verdict));
    }
    MeasurementRecord rec{j, assumption_for(tms, j, nodes)};
    records_.push_back(rec);
    measured_ = measured_.with(rec.assumption);
    return rec;
  }

  const std::vector<MeasurementRecord>& records() const { return records_; }
  const Environment& measured_env() const { return measured_; }
  bool is_judgment(NodeId id) const {
    return std::any_of(assumptions_.begin(), assumptions_.end(),
                       [&](const auto& kv) { return kv.second == id; });
  }

 private:
  std::map<std::pair<std::string, Verdict>, NodeId> assumptions_;
  std::vector<MeasurementRecord> records_;
  Environment measured_;
};

// Nogoods built only from defaults and measured judgments, restricted to
// their fault-eligible members and reduced to a subsumption-minimal family.
template <class Datum>
std::vector<Environment> project_conflicts(const catms::Catms<Datum>& tms, const DefaultSet& defaults,
                                           const Environment& measured) {
  std::vector<Environment> conflicts;
  for (const Environment& nogood : tms.nogoods()) {
    bool admissible = std::all_of(nogood.begin(), nogood.end(), [&](NodeId a) {
      return defaults.is_fault_eligible(a) || measured.contains(a);
    });
    if (!admissible) continue;
    std::vector<NodeId> faults;
    for (NodeId a : nogood)
      if (defaults.is_fault_eligible(a)) faults.push_back(a);
    if (faults.empty()) continue;
    catms::insert_minimal(conflicts, Environment(std::move(faults)));
  }
  std::sort(conflicts.begin(), conflicts.end());
  return conflicts;
}

struct HittingSets {
  std::vector<Environment> diagnoses;  // by cardinality, then lexicographic
  bool exceeded_cap = false;           // conflicts exist but no hitting set fits under the cap
};

inline constexpr std::size_t kDiagnosisCap = 4;

// Breadth-first over cardinality; a candidate containing a smaller hitting
// set is pruned, so everything emitted is minimal.
inline HittingSets minimal_diagnoses(std::span<const Environment> conflicts,
                                     std::size_t cap = kDiagnosisCap) {
  HittingSets out;
  if (conflicts.empty()) {
    out.diagnoses.push_back(Environment{});
    return out;
  }
  std::vector<NodeId> universe;
  for (const Environment& c : conflicts) universe.insert(universe.end(), c.begin(), c.end());
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());

  auto hits_all = [&](const std::vector<NodeId>& cand) {
    return std::all_of(conflicts.begin(), conflicts.end(), [&](const Environment& c) {
      return std::any_of(cand.begin(), cand.end(), [&](NodeId x) { return c.contains(x); });
    });
  };
  auto pruned = [&](const Environment& cand) {
    return std::any_of(out.diagnoses.begin(), out.diagnoses.end(),
                       [&](const Environment& d) { return d.subsumes(cand); });
  };

  const std::size_t n = universe.size();
  for (std::size_t k = 1; k <= std::min(cap, n); ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      std::vector<NodeId> cand;
      cand.reserve(k);
      for (std::size_t i : idx) cand.push_back(universe[i]);
      Environment env(cand);
      if (!pruned(env) && hits_all(cand)) out.diagnoses.push_back(std::move(env));
      // next k-combination in lexicographic order
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t m = i; m < k; ++m) idx[m] = idx[m - 1] + 1;
    }
  }
  out.exceeded_cap = out.diagnoses.empty();
  return out;
}

// One possible answer to a candidate question: the judgment assumptions it
// would install, each paired with the node that judgment asserts.
struct Outcome {
  std::vector<std::pair<NodeId, NodeId>> judgments;
};

struct Candidate {
  std::string id;
  std::vector<Outcome> outcomes;
};

// A candidate diagnosis together with the environment it stands for
// (its defaults plus every measurement so far).
struct Hypothesis {
  Environment faults;
  Environment env;
};

inline Environment hypothesis_env(const DefaultSet& defaults, const Environment& faults,
                           const Environment& measured) {
  Environment env = measured;
  for (const DefaultPair& p : defaults.pairs())
    env = env.with(faults.contains(p.complete) ? p.incomplete : p.complete);
  return env;
}

struct Selection {
  std::size_t index = 0;
  std::size_t score = 0;                   // largest surviving cell
  std::vector<std::vector<std::size_t>> cells;  // hypotheses consistent with each outcome
};

template <class Datum>
std::vector<std::size_t> outcome_cell(const catms::Catms<Datum>& tms, const Outcome& outcome,
                                      std::span<const Hypothesis> hypotheses) {
  std::vector<std::size_t> cell;
  for (std::size_t h = 0; h < hypotheses.size(); ++h) {
    Environment env = hypotheses[h].env;
    for (const auto& [assumption, _] : outcome.judgments) env = env.with(assumption);
    if (tms.env_consistent(env)) cell.push_back(h);
  }
  return cell;
}

// Partition-balance measurement selection. A candidate is skipped when every
// outcome only repeats measured or entailed judgments, or when no possible
// outcome removes a hypothesis. Lowest largest-cell wins; ties go to the
// lexicographically smallest id.
template <class Datum>
std::optional<Selection> select_measurement(const catms::Catms<Datum>& tms,
                                            std::span<const Candidate> candidates,
                                            std::span<const Hypothesis> hypotheses,
                                            const Environment& measured) {
  if (hypotheses.size() <= 1) return std::nullopt;

  auto entailed = [&](NodeId asserted) {
    return std::all_of(hypotheses.begin(), hypotheses.end(),
                       [&](const Hypothesis& h) { return tms.holds_in(asserted, h.env); });
  };

  std::optional<Selection> best;
  std::string best_id;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Candidate& cand = candidates[i];
    bool redundant = std::all_of(cand.outcomes.begin(), cand.outcomes.end(), [&](const Outcome& o) {
      return std::all_of(o.judgments.begin(), o.judgments.end(), [&](const auto& jv) {
        return measured.contains(jv.first) || entailed(jv.second);
      });
    });
    if (redundant) continue;

    Selection sel{i, 0, {}};
    bool splits = false;
    std::size_t possible = 0;
    for (const Outcome& o : cand.outcomes) {
      std::vector<std::size_t> cell = outcome_cell(tms, o, hypotheses);
      if (!cell.empty()) ++possible;
      if (!cell.empty() && cell.size() < hypotheses.size()) splits = true;
      sel.score = std::max(sel.score, cell.size());
      sel.cells.push_back(std::move(cell));
    }
    // A single possible outcome means the answer is already entailed.
    if (!splits || possible < 2) continue;
    if (!best || sel.score < best->score || (sel.score == best->score && cand.id < best_id)) {
      best = std::move(sel);
      best_id = cand.id;
    }
  }
  return best;
}

}  // namespace semdiag::gde
