#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpst/ast.hpp"
#include "mpst/types.hpp"

namespace mpst {

/// Shared environment Γ: names and variables to sorts, process variables to
/// session environments (the latter only inside typing derivations).
struct SessionEnv;

struct SharedEnv {
  std::map<std::string, Sort> ids;

  bool contains(const std::string& u) const { return ids.count(u) != 0; }
  std::optional<Sort> lookup(const std::string& u) const;
  SharedEnv extended(const std::string& u, Sort s) const;
};

std::string print(const SharedEnv& g);

/// Session (linear) environment Δ: channels to local types; each channel at
/// most once.
struct SessionEnv {
  std::map<Channel, LocalTypePtr> entries;

  bool contains(const Channel& c) const { return entries.count(c) != 0; }
  bool contains_endpoint(const Endpoint& ep) const {
    return entries.count(Channel::make_endpoint(ep)) != 0;
  }
  std::optional<LocalTypePtr> lookup(const Channel& c) const;
  void insert(const Channel& c, LocalTypePtr t);  // throws on duplicates

  /// Δ·Δ' — defined only on disjoint domains.
  static std::optional<SessionEnv> disjoint_union(const SessionEnv& a, const SessionEnv& b);

  /// Drops entries whose type is end (the ⟨Complete⟩ normal form).
  SessionEnv without_end_entries() const;

  EndpointTypeMap endpoint_types() const;

  friend bool operator==(const SessionEnv& a, const SessionEnv& b);
};

std::string print(const SessionEnv& d);
/// Alpha-invariant identity key.
std::string env_key(const SessionEnv& d);

SessionEnv parse_session_env(const std::string& text);

/// Labels of the global-environment and linear-typing labelled reductions:
/// s: p -> q : <U>  and  s: p -> q : l.
struct GlobalLabel {
  enum class Kind { Val, Sel };
  Kind kind = Kind::Val;
  std::string session;
  Role from = 0, to = 0;
  Exchange exch;       // Val
  std::string label;   // Sel

  static GlobalLabel make_val(std::string s, Role from, Role to, Exchange u);
  static GlobalLabel make_sel(std::string s, Role from, Role to, std::string l);
};

std::string print(const GlobalLabel& l);
bool equal(const GlobalLabel& a, const GlobalLabel& b);
bool mentions_role(const GlobalLabel& l, Role p);

/// One-step session environment reduction (unlabelled).
std::vector<SessionEnv> delta_step(const SessionEnv& d);

/// The labelled refinement of delta_step.
std::vector<std::pair<GlobalLabel, SessionEnv>> delta_labeled_step(const SessionEnv& d);

/// All ->*-reachable session environments (finite).
std::vector<SessionEnv> delta_reachable(const SessionEnv& d);

/// True iff the reachable sets of d1 and d2 intersect.
bool delta_converges(const SessionEnv& d1, const SessionEnv& d2);

}  // namespace mpst
