#include "mpst/bisim.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

namespace mpst {

std::string state_key(const TypedState& s) {
  return print(s.gamma) + "\x01" + print(s.process) + "\x01" + env_key(s.delta);
}

std::string state_key(const GovState& s) {
  return env_key(s.e) + "\x01" + state_key(s.inner);
}

// ---------------------------------------------------------------------------
// Typed and governed steps
// ---------------------------------------------------------------------------

std::vector<std::pair<ActionLabel, TypedState>> typed_step(const TypedState& s,
                                                           const AnalysisOptions& opts,
                                                           bool* truncated) {
  std::vector<std::pair<ActionLabel, TypedState>> out;
  std::set<std::string> seen;
  auto topts = opts.typing_options();
  auto eopts = opts.env_options();
  for (const auto& sr : step(s.process, opts.step_options(), truncated)) {
    ProcessPtr target = normal_form(sr.target);
    for (auto& [g2, d2] : env_step(s.gamma, s.delta, sr.label, eopts)) {
      if (!check(g2, target, d2, topts)) continue;
      TypedState next{std::move(g2), target, std::move(d2)};
      std::string key = label_key(sr.label) + "\x01" + state_key(next);
      if (seen.insert(key).second) out.emplace_back(sr.label, std::move(next));
    }
  }
  return out;
}

std::vector<std::pair<ActionLabel, GovState>> gov_step(const GovState& s,
                                                       const AnalysisOptions& opts,
                                                       bool* truncated) {
  std::vector<std::pair<ActionLabel, GovState>> out;
  std::set<std::string> seen;
  auto eopts = opts.env_options();
  for (auto& [label, typed_next] : typed_step(s.inner, opts, truncated)) {
    EnvConfig cfg{s.e, s.inner.gamma, s.inner.delta};
    for (auto& next_cfg : config_step(cfg, label, eopts)) {
      if (env_key(next_cfg.delta) != env_key(typed_next.delta)) continue;
      if (print(next_cfg.gamma) != print(typed_next.gamma)) continue;
      GovState next{next_cfg.e, typed_next};
      std::string key = label_key(label) + "\x01" + state_key(next);
      if (seen.insert(key).second) out.emplace_back(label, std::move(next));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weak closure of a finite graph
// ---------------------------------------------------------------------------

LtsGraph weak_closure(const LtsGraph& g) {
  int n = g.state_count();
  std::vector<std::vector<int>> tau_succ(static_cast<size_t>(n));
  std::vector<std::vector<std::pair<ActionLabel, int>>> vis(static_cast<size_t>(n));
  for (const auto& t : g.transitions) {
    if (t.label.is_tau()) tau_succ[static_cast<size_t>(t.from)].push_back(t.to);
    else vis[static_cast<size_t>(t.from)].push_back({t.label, t.to});
  }
  // tau* reachability per state
  std::vector<std::set<int>> reach(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::deque<int> work{i};
    reach[static_cast<size_t>(i)].insert(i);
    while (!work.empty()) {
      int cur = work.front();
      work.pop_front();
      for (int nx : tau_succ[static_cast<size_t>(cur)]) {
        if (reach[static_cast<size_t>(i)].insert(nx).second) work.push_back(nx);
      }
    }
  }
  LtsGraph out;
  out.states = g.states;
  out.terms = g.terms;
  out.initial = g.initial;
  out.truncated = g.truncated;
  std::set<std::string> seen;
  for (int i = 0; i < n; ++i) {
    for (int mid : reach[static_cast<size_t>(i)]) {
      // weak tau edges (reflexive-transitive closure)
      std::string k = std::to_string(i) + ">tau>" + std::to_string(mid);
      if (seen.insert(k).second)
        out.transitions.push_back({i, ActionLabel::make_tau(), mid});
      for (const auto& [lab, tgt] : vis[static_cast<size_t>(mid)]) {
        for (int fin : reach[static_cast<size_t>(tgt)]) {
          std::string k2 =
              std::to_string(i) + ">" + label_key(lab) + ">" + std::to_string(fin);
          if (seen.insert(k2).second) out.transitions.push_back({i, lab, fin});
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// The bisimulation engine
// ---------------------------------------------------------------------------

namespace {

using Bijection = std::vector<std::pair<std::string, std::string>>;

bool is_fresh_name(const std::string& n) { return !n.empty() && n[0] == '#'; }

std::optional<std::string> bij_forward(const Bijection& b, const std::string& n) {
  for (const auto& [l, r] : b)
    if (l == n) return r;
  return std::nullopt;
}

std::optional<std::string> bij_backward(const Bijection& b, const std::string& n) {
  for (const auto& [l, r] : b)
    if (r == n) return l;
  return std::nullopt;
}

// Matches one name of the challenger label against the defender's under the
// bijection; plain names must coincide, fresh names must correspond.
bool name_match(const std::string& a, const std::string& b, const Bijection& bij) {
  if (!is_fresh_name(a) && !is_fresh_name(b)) return a == b;
  if (!is_fresh_name(a) || !is_fresh_name(b)) return false;
  auto f = bij_forward(bij, a);
  return f && *f == b;
}

bool value_match(const Value& a, const Value& b, const Bijection& bij) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Value::Kind::Bool: return a.boolean == b.boolean;
    case Value::Kind::Name: return name_match(a.name, b.name, bij);
    case Value::Kind::Endpoint:
      return a.endpoint.role == b.endpoint.role &&
             name_match(a.endpoint.session, b.endpoint.session, bij);
  }
  return false;
}

// Adds a pair of freshly introduced names, dropping any stale entries that
// would collide.
void bij_bind(Bijection& b, const std::string& l, const std::string& r) {
  b.erase(std::remove_if(b.begin(), b.end(),
                         [&](const auto& pr) { return pr.first == l || pr.second == r; }),
          b.end());
  b.push_back({l, r});
  std::sort(b.begin(), b.end());
}

// Label match: returns the extended bijection when the defender's label
// corresponds to the challenger's. `flip` swaps the direction (challenger on
// the right).
std::optional<Bijection> match_labels(const ActionLabel& cha, const ActionLabel& def,
                                      const Bijection& bij_in, bool flip) {
  using K = ActionLabel::Kind;
  const ActionLabel& a = flip ? def : cha;   // side-1 label
  const ActionLabel& b = flip ? cha : def;   // side-2 label
  if (cha.kind != def.kind) return std::nullopt;
  Bijection bij = bij_in;
  switch (a.kind) {
    case K::Tau:
      return bij;
    case K::Accept:
    case K::Request: {
      if (a.shared != b.shared || a.roles != b.roles) return std::nullopt;
      bij_bind(bij, a.session, b.session);
      return bij;
    }
    case K::Out:
    case K::In: {
      if (a.from != b.from || a.to != b.to) return std::nullopt;
      if (!name_match(a.session, b.session, bij)) return std::nullopt;
      if (!value_match(a.value, b.value, bij)) return std::nullopt;
      return bij;
    }
    case K::BOutName: {
      if (a.from != b.from || a.to != b.to) return std::nullopt;
      if (!name_match(a.session, b.session, bij)) return std::nullopt;
      bij_bind(bij, a.value.name, b.value.name);
      return bij;
    }
    case K::BOutSess: {
      if (a.from != b.from || a.to != b.to) return std::nullopt;
      if (!name_match(a.session, b.session, bij)) return std::nullopt;
      if (a.value.endpoint.role != b.value.endpoint.role) return std::nullopt;
      bij_bind(bij, a.value.endpoint.session, b.value.endpoint.session);
      return bij;
    }
    case K::Sel:
    case K::Bra: {
      if (a.from != b.from || a.to != b.to || a.label != b.label) return std::nullopt;
      if (!name_match(a.session, b.session, bij)) return std::nullopt;
      return bij;
    }
  }
  return std::nullopt;
}

std::set<std::string> fresh_names_of(const TypedState& s) {
  std::set<std::string> out;
  for (const auto& n : free_names(s.process))
    if (is_fresh_name(n)) out.insert(n);
  for (const auto& [c, t] : s.delta.entries)
    if (c.kind == Channel::Kind::Endpoint && is_fresh_name(c.endpoint.session))
      out.insert(c.endpoint.session);
  for (const auto& [u, srt] : s.gamma.ids)
    if (is_fresh_name(u)) out.insert(u);
  return out;
}

GlobalEnv rename_genv(const GlobalEnv& e, const Bijection& bij, bool forward) {
  GlobalEnv out;
  for (const auto& [s, g] : e.sessions) {
    std::string name = s;
    if (is_fresh_name(s)) {
      auto m = forward ? bij_forward(bij, s) : bij_backward(bij, s);
      if (m) name = *m;
    }
    out.sessions[name] = g;
  }
  return out;
}

// One side of a product node.
struct Node {
  GlobalEnv e;  // governed only (kept per side in its own namespace)
  TypedState state;
};

struct Engine {
  const AnalysisOptions& opts;
  bool governed;
  bool truncated = false;

  std::map<std::string, Node> nodes;
  std::map<std::string, std::vector<std::pair<ActionLabel, std::string>>> strong;
  std::map<std::string, std::vector<std::string>> weak_tau;
  std::map<std::string, std::vector<std::pair<ActionLabel, std::string>>> weak_vis;

  explicit Engine(const AnalysisOptions& o, bool gov) : opts(o), governed(gov) {}

  std::string intern(Node n) {
    std::string key = governed ? env_key(n.e) + "\x01" + state_key(n.state)
                               : state_key(n.state);
    if (!nodes.count(key)) {
      if (nodes.size() >= opts.max_states) {
        truncated = true;
      }
      nodes.emplace(key, std::move(n));
    }
    return key;
  }

  const std::vector<std::pair<ActionLabel, std::string>>& strong_steps(const std::string& k) {
    auto it = strong.find(k);
    if (it != strong.end()) return it->second;
    std::vector<std::pair<ActionLabel, std::string>> out;
    const Node& n = nodes.at(k);
    bool trunc = false;
    if (governed) {
      GovState gs{n.e, n.state};
      for (auto& [lab, next] : gov_step(gs, opts, &trunc))
        out.emplace_back(lab, intern(Node{next.e, next.inner}));
    } else {
      for (auto& [lab, next] : typed_step(n.state, opts, &trunc))
        out.emplace_back(lab, intern(Node{GlobalEnv{}, next}));
    }
    if (trunc) truncated = true;
    return strong.emplace(k, std::move(out)).first->second;
  }

  const std::vector<std::string>& tau_closure(const std::string& k) {
    auto it = weak_tau.find(k);
    if (it != weak_tau.end()) return it->second;
    // insert a placeholder first to tolerate tau cycles
    weak_tau[k] = {};
    std::set<std::string> seen{k};
    std::deque<std::string> work{k};
    std::vector<std::string> out{k};
    while (!work.empty()) {
      std::string cur = work.front();
      work.pop_front();
      for (const auto& [lab, next] : strong_steps(cur)) {
        if (!lab.is_tau()) continue;
        if (seen.insert(next).second) {
          out.push_back(next);
          work.push_back(next);
        }
      }
    }
    weak_tau[k] = out;
    return weak_tau.at(k);
  }

  const std::vector<std::pair<ActionLabel, std::string>>& weak_visible(const std::string& k) {
    auto it = weak_vis.find(k);
    if (it != weak_vis.end()) return it->second;
    std::vector<std::pair<ActionLabel, std::string>> out;
    std::set<std::string> seen;
    for (const auto& mid : tau_closure(k)) {
      for (const auto& [lab, tgt] : strong_steps(mid)) {
        if (lab.is_tau()) continue;
        for (const auto& fin : tau_closure(tgt)) {
          std::string key = label_key(lab) + "\x01" + fin;
          if (seen.insert(key).second) out.emplace_back(lab, fin);
        }
      }
    }
    weak_vis[k] = std::move(out);
    return weak_vis.at(k);
  }
};

std::string bij_key(const Bijection& b) {
  std::string out;
  for (const auto& [l, r] : b) {
    out += l;
    out += "=";
    out += r;
    out += ",";
  }
  return out;
}

struct PairNode {
  std::string left, right;   // node keys (side-2 nodes live in side-2 namespace)
  Bijection bij;
};

std::string pair_key(const PairNode& p) {
  return p.left + "\x02" + p.right + "\x02" + bij_key(p.bij);
}

struct PairData {
  PairNode node;
  bool alive = true;
  int removal_round = 0;
  int failing_side = 0;
  ActionLabel failing_label;
  std::vector<std::string> failing_candidates;  // pair keys the challenger reached
};

class BisimChecker {
 public:
  BisimChecker(const AnalysisOptions& opts, bool governed)
      : engine_(opts, governed), governed_(governed) {}

  // Restricts a bijection to the names still live on either side.
  Bijection restrict_bij(const Bijection& b, const std::string& lk, const std::string& rk) {
    auto ln = live_names(lk);
    auto rn = live_names(rk);
    Bijection out;
    for (const auto& [l, r] : b)
      if (ln.count(l) || rn.count(r)) out.push_back({l, r});
    return out;
  }

  std::set<std::string> live_names(const std::string& k) {
    auto it = live_cache_.find(k);
    if (it != live_cache_.end()) return it->second;
    const Node& n = engine_.nodes.at(k);
    auto names = fresh_names_of(n.state);
    for (const auto& [s, g] : n.e.sessions)
      if (is_fresh_name(s)) names.insert(s);
    live_cache_[k] = names;
    return names;
  }

  // Successor pair candidates for a challenger move from `from` on `side`.
  // The witness join threads through governed pairs.
  std::vector<PairNode> defender_matches(const PairNode& from, int side,
                                         const ActionLabel& cha_label,
                                         const std::string& cha_target) {
    std::vector<PairNode> out;
    const std::string& def_key = side == 1 ? from.right : from.left;
    bool flip = side == 2;

    auto push = [&](const std::string& def_target, const Bijection& bij2) {
      std::string lk = side == 1 ? cha_target : def_target;
      std::string rk = side == 1 ? def_target : cha_target;
      PairNode nxt{lk, rk, restrict_bij(bij2, lk, rk)};
      if (governed_) {
        // join of the two evolved witnesses, in side-1 namespace
        const Node& ln = engine_.nodes.at(lk);
        const Node& rn = engine_.nodes.at(rk);
        GlobalEnv right_in_left = rename_genv(rn.e, nxt.bij, false);
        auto join = genv_join(ln.e, right_in_left);
        if (!join) return;
        Node merged_l{*join, ln.state};
        Node merged_r{rename_genv(*join, nxt.bij, true), rn.state};
        nxt.left = engine_.intern(std::move(merged_l));
        nxt.right = engine_.intern(std::move(merged_r));
        nxt.bij = restrict_bij(nxt.bij, nxt.left, nxt.right);
      }
      out.push_back(std::move(nxt));
    };

    if (cha_label.is_tau()) {
      for (const auto& def_target : engine_.tau_closure(def_key)) push(def_target, from.bij);
      return out;
    }
    for (const auto& [def_label, def_target] : engine_.weak_visible(def_key)) {
      auto bij2 = match_labels(cha_label, def_label, from.bij, flip);
      if (!bij2) continue;
      push(def_target, *bij2);
    }
    return out;
  }

  BisimVerdict run(Node left, Node right) {
    BisimVerdict v;
    std::string lk = engine_.intern(std::move(left));
    std::string rk = engine_.intern(std::move(right));
    PairNode init{lk, rk, {}};
    init.bij = restrict_bij(seed_bijection(lk, rk), lk, rk);

    // Discover the candidate relation.
    std::deque<std::string> work;
    auto add_pair = [&](const PairNode& p) -> std::string {
      std::string key = pair_key(p);
      if (!pairs_.count(key)) {
        pairs_[key] = PairData{p, true, 0, 0, ActionLabel::make_tau(), {}};
        work.push_back(key);
      }
      return key;
    };
    add_pair(init);
    while (!work.empty()) {
      std::string key = work.front();
      work.pop_front();
      PairNode p = pairs_.at(key).node;
      for (int side = 1; side <= 2; ++side) {
        const std::string& src = side == 1 ? p.left : p.right;
        for (const auto& [lab, tgt] : engine_.strong_steps(src)) {
          for (const auto& cand : defender_matches(p, side, lab, tgt)) add_pair(cand);
        }
      }
      if (engine_.truncated || pairs_.size() > engine_.opts.max_states * 4) {
        v.outcome = BisimVerdict::Outcome::Inconclusive;
        v.error = "state space truncated during exploration";
        return v;
      }
    }
    if (engine_.truncated) {
      v.outcome = BisimVerdict::Outcome::Inconclusive;
      v.error = "state space truncated during exploration";
      return v;
    }

    // Greatest fixpoint: repeatedly remove pairs violating the transfer
    // condition.
    int round = 0;
    bool changed = true;
    while (changed) {
      changed = false;
      ++round;
      for (auto& [key, data] : pairs_) {
        if (!data.alive) continue;
        const PairNode& p = data.node;
        bool violated = false;
        for (int side = 1; side <= 2 && !violated; ++side) {
          const std::string& src = side == 1 ? p.left : p.right;
          for (const auto& [lab, tgt] : engine_.strong_steps(src)) {
            auto cands = defender_matches(p, side, lab, tgt);
            bool matched = false;
            std::vector<std::string> cand_keys;
            for (const auto& cand : cands) {
              std::string ck = pair_key(cand);
              cand_keys.push_back(ck);
              auto it = pairs_.find(ck);
              if (it != pairs_.end() && it->second.alive) {
                matched = true;
                break;
              }
            }
            if (!matched) {
              data.alive = false;
              data.removal_round = round;
              data.failing_side = side;
              data.failing_label = lab;
              data.failing_candidates = std::move(cand_keys);
              violated = true;
              changed = true;
              break;
            }
          }
        }
      }
    }

    std::string init_key = pair_key(init);
    const PairData& root = pairs_.at(init_key);
    if (root.alive) {
      v.outcome = BisimVerdict::Outcome::Bisimilar;
      for (const auto& [key, data] : pairs_) {
        if (!data.alive) continue;
        StatePair sp;
        const Node& ln = engine_.nodes.at(data.node.left);
        const Node& rn = engine_.nodes.at(data.node.right);
        sp.e = ln.e;
        sp.left = ln.state;
        sp.right = rn.state;
        sp.bijection = data.node.bij;
        v.relation.push_back(std::move(sp));
      }
    } else {
      v.outcome = BisimVerdict::Outcome::NotBisimilar;
      // walk the removal witnesses to a trace
      std::string cur = init_key;
      while (true) {
        const PairData& d = pairs_.at(cur);
        v.distinguishing.push_back(d.failing_label);
        v.failing_side = d.failing_side;
        std::string next;
        int best_round = d.removal_round;
        for (const auto& ck : d.failing_candidates) {
          auto it = pairs_.find(ck);
          if (it == pairs_.end()) continue;
          if (it->second.removal_round < best_round) {
            best_round = it->second.removal_round;
            next = ck;
          }
        }
        if (next.empty()) break;
        cur = next;
      }
    }
    return v;
  }

  // Verifies the transfer condition over a fixed set of pairs.
  bool check_fixed(const std::vector<PairNode>& set, std::string* why) {
    std::set<std::string> keys;
    for (const auto& p : set) keys.insert(pair_key(p));
    for (const auto& p : set) {
      for (int side = 1; side <= 2; ++side) {
        const std::string& src = side == 1 ? p.left : p.right;
        for (const auto& [lab, tgt] : engine_.strong_steps(src)) {
          bool matched = false;
          for (const auto& cand : defender_matches(p, side, lab, tgt)) {
            if (keys.count(pair_key(cand))) {
              matched = true;
              break;
            }
          }
          if (!matched) {
            if (why)
              *why = "challenger " + print(lab) + " on side " + std::to_string(side) +
                     " of pair <" + print(engine_.nodes.at(p.left).state.process) + " , " +
                     print(engine_.nodes.at(p.right).state.process) +
                     "> has no matching defender in the claimed relation";
            return false;
          }
        }
      }
    }
    return true;
  }

  Engine& engine() { return engine_; }

 private:
  // Free fresh names common to both initial states correspond to themselves.
  Bijection seed_bijection(const std::string& lk, const std::string& rk) {
    Bijection b;
    auto ln = live_names(lk);
    auto rn = live_names(rk);
    for (const auto& n : ln)
      if (rn.count(n)) b.push_back({n, n});
    return b;
  }

  Engine engine_;
  bool governed_;
  std::map<std::string, PairData> pairs_;
  std::map<std::string, std::set<std::string>> live_cache_;
};

}  // namespace

BisimVerdict bisim_standard(const SharedEnv& g, const ProcessPtr& p1, const SessionEnv& d1,
                            const ProcessPtr& p2, const SessionEnv& d2,
                            const AnalysisOptions& opts) {
  BisimVerdict v;
  std::string why;
  auto topts = opts.typing_options();
  if (!check(g, p1, d1, topts, &why)) {
    v.outcome = BisimVerdict::Outcome::Error;
    v.error = "left process does not type-check: " + why;
    return v;
  }
  if (!check(g, p2, d2, topts, &why)) {
    v.outcome = BisimVerdict::Outcome::Error;
    v.error = "right process does not type-check: " + why;
    return v;
  }
  BisimChecker checker(opts, false);
  v = checker.run(Node{GlobalEnv{}, TypedState{g, normal_form(p1), d1}},
                  Node{GlobalEnv{}, TypedState{g, normal_form(p2), d2}});
  v.delta_converged = delta_converges(d1, d2);
  return v;
}

BisimVerdict bisim_governed(const GlobalEnv& e, const SharedEnv& g, const ProcessPtr& p1,
                            const SessionEnv& d1, const ProcessPtr& p2, const SessionEnv& d2,
                            const AnalysisOptions& opts) {
  BisimVerdict v;
  std::string why;
  auto topts = opts.typing_options();
  if (!check(g, p1, d1, topts, &why)) {
    v.outcome = BisimVerdict::Outcome::Error;
    v.error = "left process does not type-check: " + why;
    return v;
  }
  if (!check(g, p2, d2, topts, &why)) {
    v.outcome = BisimVerdict::Outcome::Error;
    v.error = "right process does not type-check: " + why;
    return v;
  }
  if (!is_env_config({e, g, d1}, opts.unfold_bound) ||
      !is_env_config({e, g, d2}, opts.unfold_bound)) {
    v.outcome = BisimVerdict::Outcome::Error;
    v.error = "witness does not govern the session environments (not a configuration)";
    return v;
  }
  BisimChecker checker(opts, true);
  v = checker.run(Node{e, TypedState{g, normal_form(p1), d1}},
                  Node{e, TypedState{g, normal_form(p2), d2}});
  v.delta_converged = delta_converges(d1, d2);
  return v;
}

bool check_relation(const std::vector<StatePair>& claimed, bool governed,
                    const AnalysisOptions& opts, std::string* why) {
  BisimChecker checker(opts, governed);
  std::vector<PairNode> set;
  for (const auto& sp : claimed) {
    GlobalEnv right_env = rename_genv(sp.e, sp.bijection, true);
    Node l{governed ? sp.e : GlobalEnv{}, sp.left};
    Node r{governed ? right_env : GlobalEnv{}, sp.right};
    PairNode p;
    p.left = checker.engine().intern(std::move(l));
    p.right = checker.engine().intern(std::move(r));
    p.bij = sp.bijection;
    std::sort(p.bij.begin(), p.bij.end());
    p.bij = checker.restrict_bij(p.bij, p.left, p.right);
    set.push_back(std::move(p));
  }
  return checker.check_fixed(set, why);
}

}  // namespace mpst
