#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpst/envs.hpp"
#include "mpst/genv.hpp"
#include "mpst/labels.hpp"
#include "mpst/lts.hpp"
#include "mpst/typing.hpp"

namespace mpst {

/// Shared knobs for the typed and governed analyses.
struct AnalysisOptions {
  std::vector<Value> universe;
  int unfold_bound = 16;
  size_t max_states = 10000;
  std::map<std::string, GlobalTypePtr> session_types;

  StepOptions step_options() const { return {universe, unfold_bound}; }
  EnvStepOptions env_options() const { return {session_types, unfold_bound}; }
  TypingOptions typing_options() const { return {session_types}; }
};

/// A typed LTS state: Γ ⊢ P ▷ Δ with check holding.
struct TypedState {
  SharedEnv gamma;
  ProcessPtr process;  // canonical form
  SessionEnv delta;
};

std::string state_key(const TypedState& s);

/// A governed state: E, Γ ⊢ P ▷ Δ.
struct GovState {
  GlobalEnv e;
  TypedState inner;
};

std::string state_key(const GovState& s);

/// Intersection of the untyped process LTS with the environment LTS.
std::vector<std::pair<ActionLabel, TypedState>> typed_step(const TypedState& s,
                                                           const AnalysisOptions& opts,
                                                           bool* truncated = nullptr);

/// typed_step further constrained by the configuration LTS on (E, Γ, Δ).
std::vector<std::pair<ActionLabel, GovState>> gov_step(const GovState& s,
                                                       const AnalysisOptions& opts,
                                                       bool* truncated = nullptr);

/// Weak saturation: tau edges become tau* pairs, visible edges tau* l tau*.
LtsGraph weak_closure(const LtsGraph& g);

/// A pair of related states plus the fresh-name bijection under which their
/// labels correspond. For governed relations e is the shared witness, kept in
/// the left state's namespace.
struct StatePair {
  GlobalEnv e;
  TypedState left;
  TypedState right;
  std::vector<std::pair<std::string, std::string>> bijection;
};

struct BisimVerdict {
  enum class Outcome { Bisimilar, NotBisimilar, Inconclusive, Error };
  Outcome outcome = Outcome::Error;
  std::string error;
  std::vector<StatePair> relation;          // on Bisimilar
  std::vector<ActionLabel> distinguishing;  // on NotBisimilar
  int failing_side = 0;
  bool delta_converged = false;

  bool related() const { return outcome == Outcome::Bisimilar; }
};

BisimVerdict bisim_standard(const SharedEnv& g, const ProcessPtr& p1, const SessionEnv& d1,
                            const ProcessPtr& p2, const SessionEnv& d2,
                            const AnalysisOptions& opts);

BisimVerdict bisim_governed(const GlobalEnv& e, const SharedEnv& g, const ProcessPtr& p1,
                            const SessionEnv& d1, const ProcessPtr& p2, const SessionEnv& d2,
                            const AnalysisOptions& opts);

/// Certificate check: does the claimed relation satisfy the transfer
/// condition of the chosen bisimulation?
bool check_relation(const std::vector<StatePair>& claimed, bool governed,
                    const AnalysisOptions& opts, std::string* why = nullptr);

}  // namespace mpst
