#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpst/bisim.hpp"
#include "mpst/envs.hpp"
#include "mpst/genv.hpp"
#include "mpst/types.hpp"

namespace mpst {

/// A parsed workspace file: named declarations shared by all commands.
struct Workspace {
  std::map<std::string, GlobalTypePtr> globals;
  std::map<std::string, SharedEnv> gammas;
  std::map<std::string, ProcessPtr> processes;
  std::map<std::string, SessionEnv> deltas;
  std::map<std::string, GlobalEnv> witnesses;
  std::map<std::string, GlobalTypePtr> session_table;  // sessions { s: G }
  std::vector<std::pair<std::string, Sort>> value_decls;  // values { v: U }

  /// First (or only) gamma; commands default to it.
  std::optional<std::string> default_gamma() const;

  /// Declared universe plus booleans plus one canonical atom per atom sort
  /// mentioned in the gammas.
  std::vector<Value> universe() const;

  AnalysisOptions analysis_options(size_t max_states, int unfold_bound) const;
};

Workspace parse_workspace(const std::string& text);
Workspace load_workspace(const std::string& path);

struct RunConfig {
  size_t max_states = 10000;
  int unfold_bound = 16;
  bool json = false;
  unsigned seed = 0;  // reserved for randomized modes
};

// Command drivers shared by the CLI and the test suites. Exit codes:
// 0 success / bisimilar; 1 not bisimilar; 2 typing, projection or governance
// error; 3 unresolved name; 4 inconclusive.
int cmd_check(const Workspace& ws, const std::string& proc,
              const std::optional<std::string>& gamma,
              const std::optional<std::string>& expected_delta, const RunConfig& cfg,
              std::ostream& out, std::ostream& err);

int cmd_project(const Workspace& ws, const std::string& global,
                std::optional<Role> role, const RunConfig& cfg, std::ostream& out,
                std::ostream& err);

int cmd_lts(const Workspace& ws, const std::string& proc, bool typed,
            const std::optional<std::string>& gamma,
            const std::optional<std::string>& delta,
            const std::optional<std::string>& out_path, const RunConfig& cfg,
            std::ostream& out, std::ostream& err);

int cmd_reduce(const Workspace& ws, const std::string& proc, int max_steps,
               const RunConfig& cfg, std::ostream& out, std::ostream& err);

int cmd_bisim(const Workspace& ws, bool governed,
              const std::optional<std::string>& witness, const std::string& p1,
              const std::optional<std::string>& d1, const std::string& p2,
              const std::optional<std::string>& d2,
              const std::optional<std::string>& gamma, const RunConfig& cfg,
              std::ostream& out, std::ostream& err);

/// JSON rendering of a verdict ({verdict, relation?, distinguishing?}).
std::string verdict_to_json(const BisimVerdict& v);

}  // namespace mpst
