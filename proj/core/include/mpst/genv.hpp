#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpst/envs.hpp"
#include "mpst/labels.hpp"
#include "mpst/lts.hpp"
#include "mpst/types.hpp"

namespace mpst {

struct UnfoldBoundExceeded : std::runtime_error {
  explicit UnfoldBoundExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Global environment E: session names to global types (the witness).
struct GlobalEnv {
  std::map<std::string, GlobalTypePtr> sessions;

  bool contains(const std::string& s) const { return sessions.count(s) != 0; }
  std::optional<GlobalTypePtr> lookup(const std::string& s) const;
  GlobalEnv extended(const std::string& s, GlobalTypePtr g) const;
};

std::string print(const GlobalEnv& e);
std::string env_key(const GlobalEnv& e);
bool equal(const GlobalEnv& a, const GlobalEnv& b);

/// Union of the projection sets of all bindings.
std::optional<SessionEnv> projset(const GlobalEnv& e, std::string* why = nullptr);

/// Labelled global-environment reduction (Inter/SelBra/IPerm/SBPerm/GEnv).
std::vector<std::pair<GlobalLabel, GlobalEnv>> genv_step(const GlobalEnv& e,
                                                         int unfold_bound = 16);

/// The full ->* closure; finite. Throws UnfoldBoundExceeded when a recursive
/// binding needs more than the configured unfoldings.
std::vector<GlobalEnv> genv_reachable(const GlobalEnv& e, int unfold_bound = 16);

/// Environment configuration (E, Γ, Δ).
struct EnvConfig {
  GlobalEnv e;
  SharedEnv gamma;
  SessionEnv delta;
};

/// Context threaded through the environment-side transition rules.
struct EnvStepOptions {
  /// Global types for sessions opened by bound session output (rule ResS
  /// leaves the source type implicit); looked up by session name, with the
  /// witness E taking precedence when present.
  std::map<std::string, GlobalTypePtr> session_types;
  int unfold_bound = 16;
};

/// The environment LTS on (Γ, Δ): all successors under the given label.
/// Visible labels have at most one successor; tau yields the identity plus
/// every one-step Δ-reduct.
std::vector<std::pair<SharedEnv, SessionEnv>> env_step(const SharedEnv& g,
                                                       const SessionEnv& d,
                                                       const ActionLabel& l,
                                                       const EnvStepOptions& opts = {});

/// ∃E' with E ->* E' and Δ ⊆ projset(E').
bool is_env_config(const EnvConfig& c, int unfold_bound = 16);
bool is_governance_judgement(const EnvConfig& c, const ProcessPtr& p,
                             const struct TypingOptions& topts, int unfold_bound = 16);

/// Configuration LTS on (E, Γ, Δ): each rule pairs env_step with the
/// matching labelled reduction of a ->*-reduct of E (rule Inv).
std::vector<EnvConfig> config_step(const EnvConfig& c, const ActionLabel& l,
                                   const EnvStepOptions& opts = {});

/// Syntactic-tree inclusion: t1 occurs as a suffix of t2 along continuations
/// and branch arms.
bool type_leq(const LocalTypePtr& t1, const LocalTypePtr& t2);
bool global_leq(const GlobalTypePtr& g1, const GlobalTypePtr& g2);

/// Per-session join picking the ⊒-larger binding; disjoint union elsewhere;
/// absent when some shared session has incomparable bindings.
std::optional<GlobalEnv> genv_join(const GlobalEnv& e1, const GlobalEnv& e2);

/// Barbs enabled both by the Δ shape and by a reachable reduct of E.
std::vector<Barb> governed_barbs(const EnvConfig& c, int unfold_bound = 16);

}  // namespace mpst
