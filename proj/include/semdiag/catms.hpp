#pragma once

// Compressed assumption-based truth maintenance.
//
// Labels are ordinary ATMS labels except that propagation stops at assumption
// nodes: an assumption's label is always {{self}}, and justifications whose
// consequent is an assumption are only recorded. Queries unfold those
// recorded justifications on demand (see Catms::expand).

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semdiag/error.hpp"

namespace semdiag::catms {

struct NodeId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

struct JustificationId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(JustificationId, JustificationId) = default;
};

enum class NodeKind { ordinary, assumption, contradiction };

inline const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::ordinary: return "ordinary";
    case NodeKind::assumption: return "assumption";
    case NodeKind::contradiction: return "contradiction";
  }
  return "?";
}

// Sorted, duplicate-free set of assumption ids.
class Environment {
 public:
  Environment() = default;
  Environment(std::initializer_list<NodeId> ids) : ids_(ids) { normalize(); }
  explicit Environment(std::vector<NodeId> ids) : ids_(std::move(ids)) { normalize(); }

  // True iff this ⊆ other.
  bool subsumes(const Environment& other) const {
    return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
  }
  bool contains(NodeId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

  Environment unite(const Environment& other) const {
    Environment out;
    out.ids_.reserve(ids_.size() + other.ids_.size());
    std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                   std::back_inserter(out.ids_));
    return out;
  }
  Environment with(NodeId id) const {
    if (contains(id)) return *this;
    Environment out = *this;
    out.ids_.insert(std::upper_bound(out.ids_.begin(), out.ids_.end(), id), id);
    return out;
  }
  Environment without(NodeId id) const {
    Environment out = *this;
    std::erase(out.ids_, id);
    return out;
  }

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }
  const std::vector<NodeId>& ids() const { return ids_; }

  friend auto operator<=>(const Environment&, const Environment&) = default;
  friend bool operator==(const Environment&, const Environment&) = default;

 private:
  void normalize() {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  std::vector<NodeId> ids_;
};

using Label = std::vector<Environment>;

inline std::ostream& operator<<(std::ostream& os, const Environment& env) {
  os << '{';
  bool first = true;
  for (NodeId id : env) {
    if (!first) os << ',';
    os << id.value;
    first = false;
  }
  return os << '}';
}

// Adds env to a subsumption-minimal family. Returns false if env was already
// subsumed by a member.
inline bool insert_minimal(std::vector<Environment>& family, const Environment& env) {
  for (const Environment& e : family)
    if (e.subsumes(env)) return false;
  std::erase_if(family, [&](const Environment& e) { return env.subsumes(e); });
  family.push_back(env);
  return true;
}

template <class Datum = std::string>
class Catms {
 public:
  struct Node {
    NodeId id;
    Datum datum;
    NodeKind kind;
    Label label;
    std::vector<JustificationId> justifications;  // incoming
    std::vector<JustificationId> consumers;       // outgoing
  };

  struct Justification {
    JustificationId id;
    std::string informant;
    std::vector<NodeId> antecedents;
    NodeId consequent;
  };

  NodeId create_node(Datum datum, NodeKind kind) {
    NodeId id{static_cast<std::uint32_t>(nodes_.size())};
    Node node{id, std::move(datum), kind, {}, {}, {}};
    if (kind == NodeKind::assumption) node.label.push_back(Environment{id});
    nodes_.push_back(std::move(node));
    return id;
  }

  JustificationId add_justification(std::vector<NodeId> antecedents, NodeId consequent,
                                    std::string informant) {
    check(consequent);
    for (NodeId a : antecedents) check(a);
    if (creates_cycle(antecedents, consequent))
      throw TmsError("justification '" + informant + "' closes a cycle through ordinary nodes");

    JustificationId jid{static_cast<std::uint32_t>(justifications_.size())};
    justifications_.push_back({jid, std::move(informant), antecedents, consequent});
    nodes_[consequent.value].justifications.push_back(jid);
    std::sort(antecedents.begin(), antecedents.end());
    antecedents.erase(std::unique(antecedents.begin(), antecedents.end()), antecedents.end());
    for (NodeId a : antecedents) nodes_[a.value].consumers.push_back(jid);
    invalidate();

    std::deque<JustificationId> work{jid};
    propagate(work);
    return jid;
  }

  // Closure of env under the recorded justifications of assumption nodes:
  // every assumption whose support holds given the assumptions collected so
  // far is added, until nothing changes.
  Environment expand(const Environment& env) const {
    if (auto it = expansion_memo_.find(env); it != expansion_memo_.end()) return it->second;
    Environment closed = env;
    bool changed = true;
    while (changed) {
      changed = false;
      for (NodeId a : justified_assumptions_) {
        if (closed.contains(a)) continue;
        for (JustificationId jid : nodes_[a.value].justifications) {
          if (supported(justifications_[jid.value], closed)) {
            closed = closed.with(a);
            changed = true;
            break;
          }
        }
      }
    }
    expansion_memo_.emplace(env, closed);
    return closed;
  }

  bool env_consistent(const Environment& env) const {
    const Environment closed = expand(env);
    return std::none_of(nogoods_.begin(), nogoods_.end(),
                        [&](const Environment& n) { return n.subsumes(closed); });
  }

  // Nothing is believed in an inconsistent environment, so holds_in is false
  // there for every node.
  bool holds_in(NodeId node, const Environment& env) const {
    check(node);
    for (NodeId a : env) {
      check(a);
      if (nodes_[a.value].kind != NodeKind::assumption)
        throw TmsError("environment member " + std::to_string(a.value) + " is not an assumption");
    }
    const Environment closed = expand(env);
    if (std::any_of(nogoods_.begin(), nogoods_.end(),
                    [&](const Environment& n) { return n.subsumes(closed); }))
      return false;
    return label_holds(node, closed);
  }

  const Node& node(NodeId id) const {
    check(id);
    return nodes_[id.value];
  }
  // Environments that are consistent once expanded. The stored label keeps
  // every environment not directly subsumed by a nogood, which expansion
  // needs to unfold assumption support.
  Label label(NodeId id) const {
    Label out = node(id).label;
    if (node(id).kind != NodeKind::assumption)
      std::erase_if(out, [&](const Environment& e) { return !env_consistent(e); });
    return out;
  }
  NodeKind kind(NodeId id) const { return node(id).kind; }
  const Datum& datum(NodeId id) const { return node(id).datum; }

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Justification> justifications() const { return justifications_; }
  const std::vector<Environment>& nogoods() const { return nogoods_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t assumption_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) {
      return n.kind == NodeKind::assumption;
    }));
  }

  // Text dump used by golden tests:
  //   <id>\t<kind>\t<datum>\t{env,env,...}
  //   nogood\t{a,b}
  void dump(std::ostream& os) const {
    for (const Node& n : nodes_) {
      os << n.id.value << '\t' << to_string(n.kind) << '\t' << n.datum << "\t{";
      const Label shown = label(n.id);
      for (std::size_t i = 0; i < shown.size(); ++i) os << (i ? "," : "") << shown[i];
      os << "}\n";
    }
    for (const Environment& n : nogoods_) os << "nogood\t" << n << '\n';
  }

 private:
  void check(NodeId id) const {
    if (id.value >= nodes_.size()) throw TmsError("unknown node id " + std::to_string(id.value));
  }

  void invalidate() { expansion_memo_.clear(); }

  bool label_holds(NodeId id, const Environment& closed) const {
    const Node& n = nodes_[id.value];
    if (n.kind == NodeKind::assumption) return closed.contains(id);
    return std::any_of(n.label.begin(), n.label.end(),
                       [&](const Environment& e) { return e.subsumes(closed); });
  }

  bool supported(const Justification& j, const Environment& closed) const {
    return std::all_of(j.antecedents.begin(), j.antecedents.end(),
                       [&](NodeId a) { return label_holds(a, closed); });
  }

  // A new edge antecedents -> consequent closes a cycle iff some ordinary
  // antecedent is reachable from the consequent along edges whose targets are
  // not assumptions (propagation never crosses an assumption).
  bool creates_cycle(const std::vector<NodeId>& antecedents, NodeId consequent) const {
    if (nodes_[consequent.value].kind == NodeKind::assumption) return false;
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<NodeId> stack{consequent};
    seen[consequent.value] = true;
    auto is_target = [&](NodeId n) {
      return nodes_[n.value].kind != NodeKind::assumption &&
             std::find(antecedents.begin(), antecedents.end(), n) != antecedents.end();
    };
    while (!stack.empty()) {
      NodeId cur = stack.back();
      stack.pop_back();
      if (is_target(cur)) return true;
      for (JustificationId jid : nodes_[cur.value].consumers) {
        NodeId next = justifications_[jid.value].consequent;
        if (nodes_[next.value].kind == NodeKind::assumption || seen[next.value]) continue;
        seen[next.value] = true;
        stack.push_back(next);
      }
    }
    return false;
  }

  bool consistent_label_env(const Environment& env) const {
    return std::none_of(nogoods_.begin(), nogoods_.end(),
                        [&](const Environment& n) { return n.subsumes(env); });
  }

  // Minimal consistent unions of one environment per antecedent label.
  Label combine(const Justification& j) const {
    Label acc{Environment{}};
    for (NodeId a : j.antecedents) {
      const Label& in = nodes_[a.value].label;
      Label next;
      for (const Environment& left : acc)
        for (const Environment& right : in) {
          Environment u = left.unite(right);
          if (consistent_label_env(u)) insert_minimal(next, u);
        }
      acc = std::move(next);
      if (acc.empty()) break;
    }
    std::erase_if(acc, [&](const Environment& e) { return !consistent_label_env(e); });
    return acc;
  }

  void propagate(std::deque<JustificationId>& work) {
    while (!work.empty()) {
      const Justification& j = justifications_[work.front().value];
      work.pop_front();
      Node& target = nodes_[j.consequent.value];
      if (target.kind == NodeKind::assumption) {
        if (std::find(justified_assumptions_.begin(), justified_assumptions_.end(), target.id) ==
            justified_assumptions_.end())
          justified_assumptions_.push_back(target.id);
        continue;
      }
      Label incoming = combine(j);
      if (target.kind == NodeKind::contradiction) {
        for (const Environment& env : incoming) add_nogood(env);
        continue;
      }
      bool changed = false;
      for (const Environment& env : incoming) changed |= insert_minimal(target.label, env);
      if (changed)
        for (JustificationId c : target.consumers) work.push_back(c);
    }
  }

  void add_nogood(const Environment& env) {
    if (!insert_minimal(nogoods_, env)) return;
    invalidate();
    for (Node& n : nodes_) {
      if (n.kind == NodeKind::assumption) continue;
      std::erase_if(n.label, [&](const Environment& e) { return env.subsumes(e); });
    }
  }

  std::vector<Node> nodes_;
  std::vector<Justification> justifications_;
  std::vector<Environment> nogoods_;
  std::vector<NodeId> justified_assumptions_;
  mutable std::map<Environment, Environment> expansion_memo_;
};

}  // namespace semdiag::catms
