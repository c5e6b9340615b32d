#include "mpst/genv.hpp"

#include <deque>
#include <functional>
#include <set>

#include "mpst/typing.hpp"

namespace mpst {

std::optional<GlobalTypePtr> GlobalEnv::lookup(const std::string& s) const {
  auto it = sessions.find(s);
  if (it == sessions.end()) return std::nullopt;
  return it->second;
}

GlobalEnv GlobalEnv::extended(const std::string& s, GlobalTypePtr g) const {
  GlobalEnv out = *this;
  out.sessions[s] = std::move(g);
  return out;
}

std::string print(const GlobalEnv& e) {
  if (e.sessions.empty()) return "(empty)";
  std::string out;
  bool first = true;
  for (const auto& [s, g] : e.sessions) {
    if (!first) out += " . ";
    first = false;
    out += s + ": " + print(g);
  }
  return out;
}

std::string env_key(const GlobalEnv& e) {
  std::string out;
  for (const auto& [s, g] : e.sessions) {
    out += s;
    out += ':';
    out += type_key(g);
    out += ';';
  }
  return out;
}

bool equal(const GlobalEnv& a, const GlobalEnv& b) { return env_key(a) == env_key(b); }

std::optional<SessionEnv> projset(const GlobalEnv& e, std::string* why) {
  SessionEnv out;
  for (const auto& [s, g] : e.sessions) {
    auto ps = projection_set(s, g, why);
    if (!ps) return std::nullopt;
    for (const auto& [ep, t] : *ps) out.entries[Channel::make_endpoint(ep)] = t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Global environment reduction
// ---------------------------------------------------------------------------

namespace {

// Labels of a single global type, with the permutation rules IPerm/SBPerm:
// an inner interaction may fire when its roles are disjoint from every
// prefix above it. The reduct for a given label is unique. Recursive types
// revisit their own unfoldings; the seen set cuts those off.
void global_labels(const std::string& session, const GlobalTypePtr& g,
                   std::set<Role>& excluded, int& budget,
                   std::set<std::string>& seen,
                   std::vector<std::pair<GlobalLabel, GlobalTypePtr>>& out) {
  GlobalTypePtr cur = g;
  if (cur->kind == GlobalType::Kind::Rec) {
    std::string key = type_key(cur);
    for (Role r : excluded) key += "," + std::to_string(r);
    if (!seen.insert(key).second) return;
  }
  int local_unfolds = 0;
  while (cur->kind == GlobalType::Kind::Rec) {
    if (budget-- <= 0 || ++local_unfolds > 64)
      throw UnfoldBoundExceeded("global type unfolding exceeded the bound for session " +
                                session);
    cur = unfold(cur);
  }
  switch (cur->kind) {
    case GlobalType::Kind::End:
    case GlobalType::Kind::Var:
      return;
    case GlobalType::Kind::Rec:
      return;  // unreachable
    case GlobalType::Kind::Msg: {
      if (!excluded.count(cur->from) && !excluded.count(cur->to)) {
        out.emplace_back(
            GlobalLabel::make_val(session, cur->from, cur->to, cur->exch), cur->body);
      }
      bool f = excluded.insert(cur->from).second;
      bool t = excluded.insert(cur->to).second;
      std::vector<std::pair<GlobalLabel, GlobalTypePtr>> deep;
      global_labels(session, cur->body, excluded, budget, seen, deep);
      if (f) excluded.erase(cur->from);
      if (t) excluded.erase(cur->to);
      for (auto& [l, reduct] : deep)
        out.emplace_back(l, GlobalType::make_msg(cur->from, cur->to, cur->exch, reduct));
      return;
    }
    case GlobalType::Kind::Choice: {
      if (!excluded.count(cur->from) && !excluded.count(cur->to)) {
        for (const auto& [l, cont] : cur->arms)
          out.emplace_back(GlobalLabel::make_sel(session, cur->from, cur->to, l), cont);
      }
      bool f = excluded.insert(cur->from).second;
      bool t = excluded.insert(cur->to).second;
      std::vector<std::vector<std::pair<GlobalLabel, GlobalTypePtr>>> per_arm;
      for (const auto& [l, cont] : cur->arms) {
        per_arm.emplace_back();
        global_labels(session, cont, excluded, budget, seen, per_arm.back());
      }
      if (f) excluded.erase(cur->from);
      if (t) excluded.erase(cur->to);
      if (!per_arm.empty()) {
        for (const auto& [lab, reduct0] : per_arm.front()) {
          std::vector<std::pair<std::string, GlobalTypePtr>> arms;
          arms.emplace_back(cur->arms.front().first, reduct0);
          bool all = true;
          for (size_t i = 1; i < per_arm.size(); ++i) {
            const GlobalTypePtr* found = nullptr;
            for (const auto& [lab2, red2] : per_arm[i])
              if (equal(lab2, lab)) found = &red2;
            if (!found) {
              all = false;
              break;
            }
            arms.emplace_back(cur->arms[i].first, *found);
          }
          if (all)
            out.emplace_back(lab,
                             GlobalType::make_choice(cur->from, cur->to, std::move(arms)));
        }
      }
      return;
    }
  }
}

}  // namespace

std::vector<std::pair<GlobalLabel, GlobalEnv>> genv_step(const GlobalEnv& e,
                                                         int unfold_bound) {
  std::vector<std::pair<GlobalLabel, GlobalEnv>> out;
  std::set<std::string> seen;
  for (const auto& [s, g] : e.sessions) {
    std::vector<std::pair<GlobalLabel, GlobalTypePtr>> labels;
    std::set<Role> excluded;
    std::set<std::string> seen;
    int budget = unfold_bound;
    global_labels(s, g, excluded, budget, seen, labels);
    for (auto& [l, reduct] : labels) {
      GlobalEnv next = e;
      next.sessions[s] = reduct;
      std::string key = print(l) + "\x01" + env_key(next);
      if (seen.insert(key).second) out.emplace_back(l, std::move(next));
    }
  }
  return out;
}

std::vector<GlobalEnv> genv_reachable(const GlobalEnv& e, int unfold_bound) {
  std::vector<GlobalEnv> out;
  std::set<std::string> seen;
  std::deque<GlobalEnv> work;
  work.push_back(e);
  seen.insert(env_key(e));
  while (!work.empty()) {
    GlobalEnv cur = std::move(work.front());
    work.pop_front();
    for (auto& [l, next] : genv_step(cur, unfold_bound)) {
      if (seen.insert(env_key(next)).second) work.push_back(std::move(next));
    }
    out.push_back(std::move(cur));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Environment LTS on (Γ, Δ)
// ---------------------------------------------------------------------------

namespace {

bool session_in_delta(const SessionEnv& d, const std::string& s) {
  for (const auto& [c, t] : d.entries)
    if (c.kind == Channel::Kind::Endpoint && c.endpoint.session == s) return true;
  return false;
}

std::optional<Sort> value_sort(const SharedEnv& g, const Value& v) {
  if (v.kind == Value::Kind::Bool) return Sort::make_bool();
  if (v.kind == Value::Kind::Name) return g.lookup(v.name);
  return std::nullopt;
}

}  // namespace

std::vector<std::pair<SharedEnv, SessionEnv>> env_step(const SharedEnv& g,
                                                       const SessionEnv& d,
                                                       const ActionLabel& l,
                                                       const EnvStepOptions& opts) {
  using K = ActionLabel::Kind;
  std::vector<std::pair<SharedEnv, SessionEnv>> out;
  switch (l.kind) {
    case K::Tau: {
      out.emplace_back(g, d);
      for (auto& next : delta_step(d)) out.emplace_back(g, std::move(next));
      return out;
    }
    case K::Accept:
    case K::Request: {
      auto s = g.lookup(l.shared);
      if (!s || s->kind != Sort::Kind::Global) return out;
      if (session_in_delta(d, l.session)) return out;
      SessionEnv next = d;
      for (Role r : l.roles) {
        auto t = project_global(s->global, r);
        if (!t) return out;
        Channel c = Channel::make_endpoint({l.session, r});
        if (next.contains(c)) return out;
        next.entries[c] = *t;
      }
      out.emplace_back(g, std::move(next));
      return out;
    }
    default:
      break;
  }

  Channel subject = Channel::make_endpoint({l.session, l.from});
  auto entry = d.lookup(subject);
  if (!entry) return out;
  LocalTypePtr t = unfold(*entry);
  if (d.contains_endpoint({l.session, l.to})) return out;  // s[q] ∉ dom(Δ)

  switch (l.kind) {
    case K::Out: {
      if (t->kind != LocalType::Kind::Send || t->peer != l.to) return out;
      if (t->exch.kind == Exchange::Kind::Sort) {
        auto vs = value_sort(g, l.value);
        if (!vs || !equal(*vs, t->exch.sort)) return out;
        SessionEnv next = d;
        next.entries[subject] = t->body;
        out.emplace_back(g, std::move(next));
        return out;
      }
      // free session output (delegation): the payload endpoint leaves Δ
      if (l.value.kind != Value::Kind::Endpoint) return out;
      Channel payload = Channel::make_endpoint(l.value.endpoint);
      auto pt = d.lookup(payload);
      if (!pt || !equal(*pt, t->exch.local)) return out;
      SessionEnv next = d;
      next.entries.erase(payload);
      next.entries[subject] = t->body;
      out.emplace_back(g, std::move(next));
      return out;
    }
    case K::BOutName: {
      if (t->kind != LocalType::Kind::Send || t->peer != l.to) return out;
      if (t->exch.kind != Exchange::Kind::Sort) return out;
      if (g.contains(l.value.name)) return out;  // a ∉ dom(Γ)
      SessionEnv next = d;
      next.entries[subject] = t->body;
      out.emplace_back(g.extended(l.value.name, t->exch.sort), std::move(next));
      return out;
    }
    case K::BOutSess: {
      if (t->kind != LocalType::Kind::Send || t->peer != l.to) return out;
      if (t->exch.kind != Exchange::Kind::Local) return out;
      const Endpoint& opened = l.value.endpoint;
      auto git = opts.session_types.find(opened.session);
      if (git == opts.session_types.end()) return out;
      std::string why;
      auto proj = project_global(git->second, opened.role, &why);
      if (!proj || !equal(*proj, t->exch.local)) return out;
      SessionEnv next = d;
      next.entries[subject] = t->body;
      Role n = max_role(roles_global(git->second));
      for (Role r = 1; r <= n; ++r) {
        if (r == opened.role) continue;
        auto tr = project_global(git->second, r);
        if (!tr) return out;
        Channel c = Channel::make_endpoint({opened.session, r});
        if (next.contains(c)) return out;
        next.entries[c] = *tr;
      }
      out.emplace_back(g, std::move(next));
      return out;
    }
    case K::In: {
      if (t->kind != LocalType::Kind::Recv || t->peer != l.to) return out;
      if (t->exch.kind == Exchange::Kind::Sort) {
        if (l.value.kind == Value::Kind::Endpoint) return out;
        if (l.value.kind == Value::Kind::Bool) {
          if (t->exch.sort.kind != Sort::Kind::Bool) return out;
          SessionEnv next = d;
          next.entries[subject] = t->body;
          out.emplace_back(g, std::move(next));
          return out;
        }
        auto known = g.lookup(l.value.name);
        SessionEnv next = d;
        next.entries[subject] = t->body;
        if (known) {  // Recv: sorts must agree
          if (!equal(*known, t->exch.sort)) return out;
          out.emplace_back(g, std::move(next));
        } else {  // RecvN: a fresh name extends Γ
          out.emplace_back(g.extended(l.value.name, t->exch.sort), std::move(next));
        }
        return out;
      }
      // RecvS: receiving an endpoint
      if (l.value.kind != Value::Kind::Endpoint) return out;
      Channel incoming = Channel::make_endpoint(l.value.endpoint);
      if (d.contains(incoming)) return out;
      SessionEnv next = d;
      next.entries[subject] = t->body;
      next.entries[incoming] = t->exch.local;
      out.emplace_back(g, std::move(next));
      return out;
    }
    case K::Sel:
    case K::Bra: {
      bool sel = l.kind == K::Sel;
      if (t->kind != (sel ? LocalType::Kind::Select : LocalType::Kind::Branch)) return out;
      if (t->peer != l.to) return out;
      for (const auto& [lab, cont] : t->arms) {
        if (lab != l.label) continue;
        SessionEnv next = d;
        next.entries[subject] = cont;
        out.emplace_back(g, std::move(next));
        return out;
      }
      return out;
    }
    default:
      return out;
  }
}

// ---------------------------------------------------------------------------
// Environment configurations
// ---------------------------------------------------------------------------

namespace {

bool delta_covered(const SessionEnv& d, const GlobalEnv& e) {
  auto ps = projset(e);
  if (!ps) return false;
  for (const auto& [c, t] : d.entries) {
    // ended endpoints have no behaviour left to govern; a fully reduced
    // binding drops them from its projection set
    if (t->kind == LocalType::Kind::End) continue;
    auto got = ps->lookup(c);
    if (!got || !equal(*got, t)) return false;
  }
  return true;
}

}  // namespace

bool is_env_config(const EnvConfig& c, int unfold_bound) {
  for (const auto& e : genv_reachable(c.e, unfold_bound)) {
    if (delta_covered(c.delta, e)) return true;
  }
  return false;
}

bool is_governance_judgement(const EnvConfig& c, const ProcessPtr& p,
                             const TypingOptions& topts, int unfold_bound) {
  if (!is_env_config(c, unfold_bound)) return false;
  return check(c.gamma, p, c.delta, topts);
}

std::vector<EnvConfig> config_step(const EnvConfig& c, const ActionLabel& l,
                                   const EnvStepOptions& opts) {
  using K = ActionLabel::Kind;
  std::vector<EnvConfig> out;
  std::set<std::string> seen;
  auto emit = [&](GlobalEnv e, SharedEnv g, SessionEnv d) {
    EnvConfig next{std::move(e), std::move(g), std::move(d)};
    if (!is_env_config(next, opts.unfold_bound)) return;
    std::string key = env_key(next.e) + "\x01" + env_key(next.delta) + "\x01" + print(next.gamma);
    if (seen.insert(key).second) out.push_back(std::move(next));
  };

  for (const auto& e1 : genv_reachable(c.e, opts.unfold_bound)) {  // rule Inv
    // the premise transition lives on configurations
    if (!is_env_config({e1, c.gamma, c.delta}, opts.unfold_bound)) continue;
    switch (l.kind) {
      case K::Accept:
      case K::Request: {
        if (e1.contains(l.session)) break;
        auto sort = c.gamma.lookup(l.shared);
        if (!sort || sort->kind != Sort::Kind::Global) break;
        for (auto& [g2, d2] : env_step(c.gamma, c.delta, l, opts))
          emit(e1.extended(l.session, sort->global), std::move(g2), std::move(d2));
        break;
      }
      case K::Tau: {
        emit(e1, c.gamma, c.delta);  // identity disjunct
        for (auto& [lam, d2] : delta_labeled_step(c.delta)) {
          for (auto& [lam2, e2] : genv_step(e1, opts.unfold_bound)) {
            if (!equal(lam, lam2)) continue;
            emit(e2, c.gamma, d2);
          }
        }
        break;
      }
      default: {
        if (!delta_covered(c.delta, e1)) break;  // base-rule premise
        auto envs = env_step(c.gamma, c.delta, l, opts);
        if (envs.empty()) break;
        // the matching global-environment label
        std::optional<GlobalLabel> lam;
        auto subject_type = [&]() -> LocalTypePtr {
          auto t = c.delta.lookup(Channel::make_endpoint({l.session, l.from}));
          return t ? unfold(*t) : nullptr;
        };
        switch (l.kind) {
          case K::Out:
          case K::BOutName:
          case K::BOutSess: {
            LocalTypePtr t = subject_type();
            if (!t || t->kind != LocalType::Kind::Send) break;
            lam = GlobalLabel::make_val(l.session, l.from, l.to, t->exch);
            break;
          }
          case K::In: {
            LocalTypePtr t = subject_type();
            if (!t || t->kind != LocalType::Kind::Recv) break;
            lam = GlobalLabel::make_val(l.session, l.to, l.from, t->exch);
            break;
          }
          case K::Sel:
            lam = GlobalLabel::make_sel(l.session, l.from, l.to, l.label);
            break;
          case K::Bra:
            lam = GlobalLabel::make_sel(l.session, l.to, l.from, l.label);
            break;
          default:
            break;
        }
        if (!lam) break;
        for (auto& [lam2, e2] : genv_step(e1, opts.unfold_bound)) {
          if (!equal(*lam, lam2)) continue;
          GlobalEnv e_result = e2;
          if (l.kind == K::BOutSess) {
            // rule ResS: the opened session enters the witness
            const std::string& s2 = l.value.endpoint.session;
            if (e1.contains(s2)) continue;
            auto git = opts.session_types.find(s2);
            if (git == opts.session_types.end()) continue;
            e_result = e2.extended(s2, git->second);
          }
          for (auto& [g2, d2] : envs) emit(e_result, g2, d2);
        }
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Witness ordering and join
// ---------------------------------------------------------------------------

bool type_leq(const LocalTypePtr& t1, const LocalTypePtr& t2) {
  if (type_key(t1) == type_key(t2)) return true;
  switch (t2->kind) {
    case LocalType::Kind::End:
    case LocalType::Kind::Var:
      return false;
    case LocalType::Kind::Rec:
      return type_leq(t1, t2->body);
    case LocalType::Kind::Send:
    case LocalType::Kind::Recv:
      return type_leq(t1, t2->body);
    case LocalType::Kind::Select:
    case LocalType::Kind::Branch:
      for (const auto& [l, cont] : t2->arms)
        if (type_leq(t1, cont)) return true;
      return false;
  }
  return false;
}

bool global_leq(const GlobalTypePtr& g1, const GlobalTypePtr& g2) {
  Role n1 = max_role(roles_global(g1));
  Role n2 = max_role(roles_global(g2));
  Role n = std::max(n1, n2);
  for (Role p = 1; p <= n; ++p) {
    auto t1 = project_global(g1, p);
    auto t2 = project_global(g2, p);
    if (!t1 || !t2) return false;
    if (!type_leq(*t1, *t2)) return false;
  }
  return true;
}

std::optional<GlobalEnv> genv_join(const GlobalEnv& e1, const GlobalEnv& e2) {
  GlobalEnv out;
  for (const auto& [s, g1] : e1.sessions) {
    auto g2 = e2.lookup(s);
    if (!g2) {
      out.sessions[s] = g1;
      continue;
    }
    if (global_leq(*g2, g1)) {
      out.sessions[s] = g1;
    } else if (global_leq(g1, *g2)) {
      out.sessions[s] = *g2;
    } else {
      return std::nullopt;
    }
  }
  for (const auto& [s, g2] : e2.sessions) {
    if (!e1.contains(s)) out.sessions[s] = g2;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Governed barbs
// ---------------------------------------------------------------------------

std::vector<Barb> governed_barbs(const EnvConfig& c, int unfold_bound) {
  std::set<Barb> out;
  for (const auto& [u, s] : c.gamma.ids) {
    if (s.kind == Sort::Kind::Global) out.insert(Barb{true, u, 0, 0});
  }
  std::vector<GlobalEnv> reach = genv_reachable(c.e, unfold_bound);
  for (const auto& [ch, t_raw] : c.delta.entries) {
    if (ch.kind != Channel::Kind::Endpoint) continue;
    LocalTypePtr t = unfold(t_raw);
    const Endpoint& ep = ch.endpoint;
    if (t->kind != LocalType::Kind::Send && t->kind != LocalType::Kind::Select) continue;
    if (c.delta.contains_endpoint({ep.session, t->peer})) continue;
    bool enabled = false;
    for (const auto& e1 : reach) {
      if (!delta_covered(c.delta, e1)) continue;
      for (const auto& [lam, e2] : genv_step(e1, unfold_bound)) {
        if (lam.session != ep.session || lam.from != ep.role || lam.to != t->peer) continue;
        if (t->kind == LocalType::Kind::Send) {
          if (lam.kind == GlobalLabel::Kind::Val && equal(lam.exch, t->exch)) enabled = true;
        } else {
          if (lam.kind == GlobalLabel::Kind::Sel) {
            for (const auto& [l, cont] : t->arms)
              if (l == lam.label) enabled = true;
          }
        }
        if (enabled) break;
      }
      if (enabled) break;
    }
    if (enabled) out.insert(Barb{false, ep.session, ep.role, t->peer});
  }
  return std::vector<Barb>(out.begin(), out.end());
}

}  // namespace mpst
