// mpst: multiparty session workbench front end.
//
//   mpst check   --workspace FILE PROC [--gamma G] [--delta D]
//   mpst project --workspace FILE GLOBAL [ROLE]
//   mpst lts     --workspace FILE PROC [--typed] [--gamma G] [--delta D] [--out FILE]
//   mpst reduce  --workspace FILE PROC [--steps N]
//   mpst bisim   --workspace FILE (--standard | --governed --witness E) P1 P2
//                [--delta1 D1] [--delta2 D2] [--gamma G]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mpst/workspace.hpp"

using namespace mpst;

int main(int argc, char** argv) {
  CLI::App app{"synchronous multiparty session workbench"};
  app.require_subcommand(1);

  std::string workspace_path;
  RunConfig cfg;
  app.add_option("--workspace", workspace_path, "workspace file")->required();
  app.add_option("--max-states", cfg.max_states, "state bound for explorations");
  app.add_option("--unfold-bound", cfg.unfold_bound, "recursion unfolding bound");
  app.add_flag("--json", cfg.json, "JSON output");
  app.add_option("--seed", cfg.seed, "seed for randomized modes (reserved)");

  auto* check = app.add_subcommand("check", "type-check a process");
  std::string check_proc;
  std::string check_gamma, check_delta;
  check->add_option("proc", check_proc)->required();
  check->add_option("--gamma", check_gamma);
  check->add_option("--delta", check_delta);

  auto* project = app.add_subcommand("project", "project a global type");
  std::string project_global;
  long project_role = -1;
  project->add_option("global", project_global)->required();
  project->add_option("role", project_role);

  auto* lts = app.add_subcommand("lts", "explore the transition system");
  std::string lts_proc, lts_gamma, lts_delta, lts_out;
  bool lts_typed = false;
  lts->add_option("proc", lts_proc)->required();
  lts->add_flag("--typed", lts_typed);
  lts->add_option("--gamma", lts_gamma);
  lts->add_option("--delta", lts_delta);
  lts->add_option("--out", lts_out);

  auto* red = app.add_subcommand("reduce", "enumerate reducts");
  std::string red_proc;
  int red_steps = 1;
  red->add_option("proc", red_proc)->required();
  red->add_option("--steps", red_steps);

  auto* bis = app.add_subcommand("bisim", "decide bisimilarity");
  std::string bis_p1, bis_p2, bis_d1, bis_d2, bis_gamma, bis_witness;
  bool bis_standard = false, bis_governed = false;
  bis->add_option("p1", bis_p1)->required();
  bis->add_option("p2", bis_p2)->required();
  bis->add_flag("--standard", bis_standard);
  bis->add_flag("--governed", bis_governed);
  bis->add_option("--witness", bis_witness);
  bis->add_option("--delta1", bis_d1);
  bis->add_option("--delta2", bis_d2);
  bis->add_option("--gamma", bis_gamma);

  CLI11_PARSE(app, argc, argv);

  auto opt = [](const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::string>(s);
  };

  Workspace ws;
  try {
    ws = load_workspace(workspace_path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }

  try {
    if (check->parsed())
      return cmd_check(ws, check_proc, opt(check_gamma), opt(check_delta), cfg, std::cout,
                       std::cerr);
    if (project->parsed())
      return cmd_project(ws, project_global,
                         project_role < 0 ? std::nullopt
                                          : std::optional<Role>(static_cast<Role>(project_role)),
                         cfg, std::cout, std::cerr);
    if (lts->parsed())
      return cmd_lts(ws, lts_proc, lts_typed, opt(lts_gamma), opt(lts_delta), opt(lts_out),
                     cfg, std::cout, std::cerr);
    if (red->parsed()) return cmd_reduce(ws, red_proc, red_steps, cfg, std::cout, std::cerr);
    if (bis->parsed()) {
      if (bis_standard == bis_governed) {
        std::cerr << "choose exactly one of --standard / --governed\n";
        return 3;
      }
      return cmd_bisim(ws, bis_governed, opt(bis_witness), bis_p1, opt(bis_d1), bis_p2,
                       opt(bis_d2), opt(bis_gamma), cfg, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 3;
}
