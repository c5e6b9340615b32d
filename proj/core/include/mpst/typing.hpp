#pragma once

#include <map>
#include <optional>
#include <string>

#include "mpst/ast.hpp"
#include "mpst/envs.hpp"
#include "mpst/types.hpp"

namespace mpst {

struct TypeError : std::runtime_error {
  std::string rule;
  TypeError(std::string rule_, const std::string& msg)
      : std::runtime_error("[" + rule_ + "] " + msg), rule(std::move(rule_)) {}
};

/// Resolution table for types the syntax leaves implicit: global types of
/// hidden shared names and of delegated sessions.
struct TypingOptions {
  std::map<std::string, GlobalTypePtr> session_types;
};

struct Verdict {
  bool ok = false;
  SessionEnv delta;  // inferred minimal session environment when ok
  std::string rule;
  std::string message;
};

/// Sort of an expression under Γ (rules Name/Bool/And/Match).
Sort typecheck_expr(const SharedEnv& g, const ExprPtr& e);

/// Infers the least Δ with Γ ⊢ P ▷ Δ. End-typed entries are normalised away.
Verdict infer(const SharedEnv& g, const ProcessPtr& p, const TypingOptions& opts = {});

/// True iff Γ ⊢ P ▷ Δ is derivable for the given Δ: the inferred environment
/// must match d, which may additionally bind end-typed channels.
bool check(const SharedEnv& g, const ProcessPtr& p, const SessionEnv& d,
           const TypingOptions& opts = {}, std::string* why = nullptr);

}  // namespace mpst
