#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mpst/ast.hpp"
#include "mpst/envs.hpp"
#include "mpst/labels.hpp"

namespace mpst {

/// Bounds and the finite input universe for free receive transitions. The
/// untyped LTS is input-enabled over this declared universe only; the typed
/// layer filters inputs by sort.
struct StepOptions {
  std::vector<Value> universe;
  int unfold_bound = 16;
};

struct StepResult {
  ActionLabel label;
  ProcessPtr target;
};

/// All one-step successors of a closed process (Fig. process LTS). Successors
/// are not normalised; *truncated is set when lazy unfolding hit the bound.
std::vector<StepResult> step(const ProcessPtr& p, const StepOptions& opts,
                             bool* truncated = nullptr);

/// One-step reducts up to structural congruence (Fig. operational semantics).
/// Implemented directly on the reduction rules, independent of step().
std::vector<ProcessPtr> reduce(const ProcessPtr& p, const StepOptions& opts,
                               bool* truncated = nullptr);

struct LtsGraph {
  struct Transition {
    int from = 0;
    ActionLabel label;
    int to = 0;
  };
  std::vector<std::string> states;  // canonical printed terms
  std::vector<ProcessPtr> terms;
  std::vector<Transition> transitions;
  int initial = 0;
  bool truncated = false;

  int state_count() const { return static_cast<int>(states.size()); }
};

/// Bounded BFS closure of step with canonical states and deterministic fresh
/// session names (#s1, #s2, ... per state).
LtsGraph explore(const ProcessPtr& p, size_t max_states, const StepOptions& opts);

std::string graph_to_json(const LtsGraph& g);
LtsGraph graph_from_json(const std::string& text);

/// An observable: an output offer s[p][q] or a request on a shared name.
struct Barb {
  bool is_request = false;
  std::string subject;  // session or shared name
  Role p = 0, q = 0;

  friend bool operator==(const Barb&, const Barb&) = default;
  friend auto operator<=>(const Barb&, const Barb&) = default;
};

std::string print(const Barb& b);

std::vector<Barb> barbs(const SharedEnv& g, const ProcessPtr& p, const SessionEnv& d);

}  // namespace mpst
