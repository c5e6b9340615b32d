#include "mpst/workspace.hpp"

#include <deque>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mpst/lts.hpp"
#include "mpst/typing.hpp"
#include "parsers.hpp"

namespace mpst {

namespace {

struct UnresolvedName : std::runtime_error {
  explicit UnresolvedName(const std::string& what) : std::runtime_error(what) {}
};

template <typename M>
const typename M::mapped_type& resolve(const M& m, const std::string& name,
                                       const char* what) {
  auto it = m.find(name);
  if (it == m.end())
    throw UnresolvedName("unknown " + std::string(what) + " '" + name + "'");
  return it->second;
}

}  // namespace

std::optional<std::string> Workspace::default_gamma() const {
  if (gammas.empty()) return std::nullopt;
  return gammas.begin()->first;
}

std::vector<Value> Workspace::universe() const {
  std::vector<Value> out;
  std::set<std::string> have_names;
  out.push_back(Value::make_bool(true));
  out.push_back(Value::make_bool(false));
  for (const auto& [n, s] : value_decls) {
    if (s.kind == Sort::Kind::Bool) continue;
    if (have_names.insert(n).second) out.push_back(Value::make_name(n));
  }
  // one canonical atom per atom sort found in the gammas, plus the declared
  // shared names (they may be received and used for initiation)
  std::set<std::string> sorts_covered;
  for (const auto& [n, s] : value_decls)
    if (s.kind == Sort::Kind::Atom) sorts_covered.insert(s.atom);
  for (const auto& [gn, gamma] : gammas) {
    for (const auto& [n, s] : gamma.ids) {
      if (s.kind == Sort::Kind::Global) {
        if (have_names.insert(n).second) out.push_back(Value::make_name(n));
        continue;
      }
      if (s.kind != Sort::Kind::Atom) continue;
      if (!sorts_covered.insert(s.atom).second) continue;
      if (have_names.insert(n).second) out.push_back(Value::make_name(n));
    }
  }
  return out;
}

AnalysisOptions Workspace::analysis_options(size_t max_states, int unfold_bound) const {
  AnalysisOptions opts;
  opts.universe = universe();
  opts.max_states = max_states;
  opts.unfold_bound = unfold_bound;
  opts.session_types = session_table;
  return opts;
}

// ---------------------------------------------------------------------------
// Workspace file grammar
// ---------------------------------------------------------------------------

namespace {

GlobalTypePtr parse_global_ref(detail::Lexer& lx,
                               const std::map<std::string, GlobalTypePtr>& globals) {
  // Either a named reference or an inline global type. A bare identifier that
  // is not a declared global falls through to the type parser (a type var
  // would be ill-formed here anyway).
  if (lx.peek().kind == detail::Token::Kind::Ident) {
    auto it = globals.find(lx.peek().text);
    if (it != globals.end()) {
      lx.next();
      return it->second;
    }
  }
  return detail::parse_global(lx);
}

Sort parse_sort_decl(detail::Lexer& lx, const std::map<std::string, GlobalTypePtr>& globals) {
  if (lx.is_ident("bool")) {
    lx.next();
    return Sort::make_bool();
  }
  if (lx.is_punct("<")) {
    lx.next();
    GlobalTypePtr g = parse_global_ref(lx, globals);
    lx.expect_punct(">");
    return Sort::make_global(g);
  }
  std::string id = lx.expect_ident();
  return Sort::make_atom(id);
}

}  // namespace

Workspace parse_workspace(const std::string& text) {
  detail::Lexer lx(text);
  Workspace ws;
  auto unique = [&](auto& map, const std::string& name, const char* what) {
    if (map.count(name))
      lx.fail("duplicate " + std::string(what) + " '" + name + "'");
  };
  while (!lx.at_end()) {
    if (lx.is_ident("global")) {
      lx.next();
      std::string name = lx.expect_ident();
      unique(ws.globals, name, "global");
      lx.expect_punct("=");
      ws.globals[name] = detail::parse_global(lx);
      if (lx.is_punct(";")) lx.next();
      continue;
    }
    if (lx.is_ident("gamma")) {
      lx.next();
      std::string name = lx.expect_ident();
      unique(ws.gammas, name, "gamma");
      lx.expect_punct("{");
      SharedEnv g;
      while (!lx.is_punct("}")) {
        std::string id = lx.expect_ident();
        lx.expect_punct(":");
        if (g.ids.count(id)) lx.fail("duplicate entry '" + id + "'");
        g.ids[id] = parse_sort_decl(lx, ws.globals);
        if (lx.is_punct(";") || lx.is_punct(",")) lx.next();
      }
      lx.next();
      ws.gammas[name] = std::move(g);
      continue;
    }
    if (lx.is_ident("proc")) {
      lx.next();
      std::string name = lx.expect_ident();
      unique(ws.processes, name, "proc");
      lx.expect_punct("=");
      ws.processes[name] = detail::parse_process(lx);
      if (lx.is_punct(";")) lx.next();
      continue;
    }
    if (lx.is_ident("delta")) {
      lx.next();
      std::string name = lx.expect_ident();
      unique(ws.deltas, name, "delta");
      lx.expect_punct("{");
      SessionEnv d;
      while (!lx.is_punct("}")) {
        std::string session = lx.expect_ident();
        lx.expect_punct("[");
        long role = lx.expect_int();
        if (role < 1) lx.fail("roles are positive integers");
        lx.expect_punct("]");
        lx.expect_punct(":");
        d.insert(Channel::make_endpoint({session, static_cast<Role>(role)}),
                 detail::parse_local(lx));
        if (lx.is_punct(";") || lx.is_punct(",")) lx.next();
      }
      lx.next();
      ws.deltas[name] = std::move(d);
      continue;
    }
    if (lx.is_ident("witness")) {
      lx.next();
      std::string name = lx.expect_ident();
      unique(ws.witnesses, name, "witness");
      lx.expect_punct("{");
      GlobalEnv e;
      while (!lx.is_punct("}")) {
        std::string session = lx.expect_ident();
        lx.expect_punct(":");
        if (e.contains(session)) lx.fail("duplicate session '" + session + "'");
        e.sessions[session] = parse_global_ref(lx, ws.globals);
        if (lx.is_punct(";") || lx.is_punct(",")) lx.next();
      }
      lx.next();
      ws.witnesses[name] = std::move(e);
      continue;
    }
    if (lx.is_ident("sessions")) {
      lx.next();
      lx.expect_punct("{");
      while (!lx.is_punct("}")) {
        std::string session = lx.expect_ident();
        lx.expect_punct(":");
        if (ws.session_table.count(session)) lx.fail("duplicate session '" + session + "'");
        ws.session_table[session] = parse_global_ref(lx, ws.globals);
        if (lx.is_punct(";") || lx.is_punct(",")) lx.next();
      }
      lx.next();
      continue;
    }
    if (lx.is_ident("values")) {
      lx.next();
      lx.expect_punct("{");
      while (!lx.is_punct("}")) {
        std::string id = lx.expect_ident();
        lx.expect_punct(":");
        ws.value_decls.emplace_back(id, parse_sort_decl(lx, ws.globals));
        if (lx.is_punct(";") || lx.is_punct(",")) lx.next();
      }
      lx.next();
      continue;
    }
    lx.fail("expected a declaration (global/gamma/proc/delta/witness/sessions/values)");
  }
  return ws;
}

Workspace load_workspace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open workspace file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_workspace(ss.str());
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

SharedEnv pick_gamma(const Workspace& ws, const std::optional<std::string>& gamma) {
  if (gamma) return resolve(ws.gammas, *gamma, "gamma");
  auto def = ws.default_gamma();
  if (!def) return SharedEnv{};
  return ws.gammas.at(*def);
}

}  // namespace

int cmd_check(const Workspace& ws, const std::string& proc,
              const std::optional<std::string>& gamma,
              const std::optional<std::string>& expected_delta, const RunConfig& cfg,
              std::ostream& out, std::ostream& err) {
  try {
    const ProcessPtr& p = resolve(ws.processes, proc, "proc");
    SharedEnv g = pick_gamma(ws, gamma);
    TypingOptions topts{ws.session_table};
    if (expected_delta) {
      const SessionEnv& d = resolve(ws.deltas, *expected_delta, "delta");
      std::string why;
      bool ok = check(g, p, d, topts, &why);
      if (cfg.json) {
        nlohmann::json j;
        j["ok"] = ok;
        if (!ok) j["error"] = why;
        out << j.dump(2) << "\n";
      } else if (ok) {
        out << "ok: " << print(d) << "\n";
      } else {
        err << "type error: " << why << "\n";
      }
      return ok ? 0 : 2;
    }
    Verdict v = infer(g, p, topts);
    if (cfg.json) {
      nlohmann::json j;
      j["ok"] = v.ok;
      if (v.ok) j["delta"] = print(v.delta);
      else j["error"] = v.message;
      out << j.dump(2) << "\n";
    } else if (v.ok) {
      out << print(v.delta) << "\n";
    } else {
      err << "type error: " << v.message << "\n";
    }
    return v.ok ? 0 : 2;
  } catch (const UnresolvedName& e) {
    err << e.what() << "\n";
    return 3;
  }
}

int cmd_project(const Workspace& ws, const std::string& global, std::optional<Role> role,
                const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const GlobalTypePtr& g = resolve(ws.globals, global, "global");
    std::string why;
    if (role) {
      auto t = project_global(g, *role, &why);
      if (!t) {
        err << "projection undefined: " << why << "\n";
        return 2;
      }
      if (cfg.json) {
        nlohmann::json j;
        j["role"] = *role;
        j["local"] = print(*t);
        out << j.dump(2) << "\n";
      } else {
        out << print(*t) << "\n";
      }
      return 0;
    }
    auto ps = projection_set("s", g, &why);
    if (!ps) {
      err << "projection undefined: " << why << "\n";
      return 2;
    }
    if (cfg.json) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& [ep, t] : *ps)
        j.push_back({{"role", ep.role}, {"local", print(t)}});
      out << j.dump(2) << "\n";
    } else {
      for (const auto& [ep, t] : *ps)
        out << ep.role << ": " << print(t) << "\n";
    }
    return 0;
  } catch (const UnresolvedName& e) {
    err << e.what() << "\n";
    return 3;
  }
}

int cmd_lts(const Workspace& ws, const std::string& proc, bool typed,
            const std::optional<std::string>& gamma, const std::optional<std::string>& delta,
            const std::optional<std::string>& out_path, const RunConfig& cfg,
            std::ostream& out, std::ostream& err) {
  try {
    const ProcessPtr& p = resolve(ws.processes, proc, "proc");
    AnalysisOptions opts = ws.analysis_options(cfg.max_states, cfg.unfold_bound);
    LtsGraph graph;
    if (!typed) {
      graph = explore(p, cfg.max_states, opts.step_options());
    } else {
      SharedEnv g = pick_gamma(ws, gamma);
      SessionEnv d;
      if (delta) {
        d = resolve(ws.deltas, *delta, "delta");
      } else {
        Verdict v = infer(g, p, opts.typing_options());
        if (!v.ok) {
          err << "type error: " << v.message << "\n";
          return 2;
        }
        d = v.delta;
      }
      // BFS over typed states
      TypedState init{g, normal_form(p), d};
      std::map<std::string, int> index;
      std::deque<int> work;
      std::vector<TypedState> states;
      auto text_of = [](const TypedState& s) {
        return print(s.process) + "  |-  " + print(s.delta);
      };
      states.push_back(init);
      graph.states.push_back(text_of(init));
      graph.terms.push_back(init.process);
      index[state_key(init)] = 0;
      work.push_back(0);
      while (!work.empty()) {
        int cur = work.front();
        work.pop_front();
        bool trunc = false;
        for (auto& [lab, next] : typed_step(states[static_cast<size_t>(cur)], opts, &trunc)) {
          std::string key = state_key(next);
          auto it = index.find(key);
          int id;
          if (it == index.end()) {
            if (states.size() >= cfg.max_states) {
              graph.truncated = true;
              continue;
            }
            id = static_cast<int>(states.size());
            index[key] = id;
            states.push_back(next);
            graph.states.push_back(text_of(next));
            graph.terms.push_back(next.process);
            work.push_back(id);
          } else {
            id = it->second;
          }
          graph.transitions.push_back({cur, lab, id});
        }
        if (trunc) graph.truncated = true;
      }
    }
    if (out_path) {
      std::ofstream f(*out_path);
      if (!f) {
        err << "cannot write '" << *out_path << "'\n";
        return 2;
      }
      f << graph_to_json(graph);
    }
    if (cfg.json && !out_path) {
      out << graph_to_json(graph) << "\n";
    } else {
      out << graph.state_count() << " states, " << graph.transitions.size()
          << " transitions" << (graph.truncated ? " (truncated)" : "") << "\n";
    }
    return 0;
  } catch (const UnresolvedName& e) {
    err << e.what() << "\n";
    return 3;
  }
}

int cmd_reduce(const Workspace& ws, const std::string& proc, int max_steps,
               const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const ProcessPtr& p = resolve(ws.processes, proc, "proc");
    AnalysisOptions opts = ws.analysis_options(cfg.max_states, cfg.unfold_bound);
    std::vector<ProcessPtr> frontier{normal_form(p)};
    std::set<std::string> seen{print(frontier[0])};
    nlohmann::json layers = nlohmann::json::array();
    for (int stepno = 1; stepno <= max_steps && !frontier.empty(); ++stepno) {
      std::vector<ProcessPtr> next;
      for (const auto& cur : frontier) {
        for (const auto& r : reduce(cur, opts.step_options())) {
          if (seen.insert(print(r)).second) next.push_back(r);
        }
      }
      if (next.empty()) break;
      if (cfg.json) {
        nlohmann::json layer = nlohmann::json::array();
        for (const auto& r : next) layer.push_back(print(r));
        layers.push_back(layer);
      } else {
        out << "step " << stepno << ":\n";
        for (const auto& r : next) out << "  " << print(r) << "\n";
      }
      frontier = std::move(next);
    }
    if (cfg.json) out << layers.dump(2) << "\n";
    return 0;
  } catch (const UnresolvedName& e) {
    err << e.what() << "\n";
    return 3;
  }
}

std::string verdict_to_json(const BisimVerdict& v) {
  nlohmann::json j;
  switch (v.outcome) {
    case BisimVerdict::Outcome::Bisimilar: j["verdict"] = "bisimilar"; break;
    case BisimVerdict::Outcome::NotBisimilar: j["verdict"] = "not-bisimilar"; break;
    case BisimVerdict::Outcome::Inconclusive: j["verdict"] = "inconclusive"; break;
    case BisimVerdict::Outcome::Error: j["verdict"] = "error"; break;
  }
  if (!v.error.empty()) j["error"] = v.error;
  if (v.outcome == BisimVerdict::Outcome::Bisimilar) {
    nlohmann::json rel = nlohmann::json::array();
    for (const auto& sp : v.relation) {
      nlohmann::json pj;
      pj["left"] = print(sp.left.process) + "  |-  " + print(sp.left.delta);
      pj["right"] = print(sp.right.process) + "  |-  " + print(sp.right.delta);
      if (!sp.e.sessions.empty()) pj["witness"] = print(sp.e);
      if (!sp.bijection.empty()) {
        nlohmann::json bj = nlohmann::json::array();
        for (const auto& [l, r] : sp.bijection) bj.push_back({{"left", l}, {"right", r}});
        pj["bijection"] = bj;
      }
      rel.push_back(pj);
    }
    j["relation"] = rel;
    j["deltaConverged"] = v.delta_converged;
  }
  if (v.outcome == BisimVerdict::Outcome::NotBisimilar) {
    nlohmann::json d;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& l : v.distinguishing) trace.push_back(print(l));
    d["trace"] = trace;
    d["failingSide"] = v.failing_side;
    j["distinguishing"] = d;
  }
  return j.dump(2);
}

int cmd_bisim(const Workspace& ws, bool governed, const std::optional<std::string>& witness,
              const std::string& p1, const std::optional<std::string>& d1,
              const std::string& p2, const std::optional<std::string>& d2,
              const std::optional<std::string>& gamma, const RunConfig& cfg,
              std::ostream& out, std::ostream& err) {
  try {
    const ProcessPtr& proc1 = resolve(ws.processes, p1, "proc");
    const ProcessPtr& proc2 = resolve(ws.processes, p2, "proc");
    SharedEnv g = pick_gamma(ws, gamma);
    AnalysisOptions opts = ws.analysis_options(cfg.max_states, cfg.unfold_bound);
    auto pick_delta = [&](const std::optional<std::string>& name,
                          const ProcessPtr& p) -> std::optional<SessionEnv> {
      if (name) return resolve(ws.deltas, *name, "delta");
      Verdict v = infer(g, p, opts.typing_options());
      if (!v.ok) {
        err << "type error: " << v.message << "\n";
        return std::nullopt;
      }
      return v.delta;
    };
    auto delta1 = pick_delta(d1, proc1);
    if (!delta1) return 2;
    auto delta2 = pick_delta(d2, proc2);
    if (!delta2) return 2;

    BisimVerdict v;
    if (governed) {
      if (!witness) {
        err << "--governed requires --witness\n";
        return 3;
      }
      const GlobalEnv& e = resolve(ws.witnesses, *witness, "witness");
      v = bisim_governed(e, g, proc1, *delta1, proc2, *delta2, opts);
    } else {
      v = bisim_standard(g, proc1, *delta1, proc2, *delta2, opts);
    }

    if (cfg.json) {
      out << verdict_to_json(v) << "\n";
    } else {
      switch (v.outcome) {
        case BisimVerdict::Outcome::Bisimilar:
          out << "bisimilar (" << v.relation.size() << " related pairs"
              << (v.delta_converged ? ", session environments converge" : "") << ")\n";
          break;
        case BisimVerdict::Outcome::NotBisimilar: {
          out << "not bisimilar; distinguishing trace:";
          for (const auto& l : v.distinguishing) out << " " << print(l);
          out << " (failing side " << v.failing_side << ")\n";
          break;
        }
        case BisimVerdict::Outcome::Inconclusive:
          out << "inconclusive: " << v.error << "\n";
          break;
        case BisimVerdict::Outcome::Error:
          err << "error: " << v.error << "\n";
          break;
      }
    }
    switch (v.outcome) {
      case BisimVerdict::Outcome::Bisimilar: return 0;
      case BisimVerdict::Outcome::NotBisimilar: return 1;
      case BisimVerdict::Outcome::Inconclusive: return 4;
      case BisimVerdict::Outcome::Error: return 2;
    }
    return 2;
  } catch (const UnresolvedName& e) {
    err << e.what() << "\n";
    return 3;
  }
}

}  // namespace mpst
