#include "mpst/lts.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>

#include <json.hpp>

namespace mpst {

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

ActionLabel ActionLabel::make_accept(std::string a, RoleSet roles, std::string s) {
  ActionLabel l;
  l.kind = Kind::Accept;
  l.shared = std::move(a);
  l.roles = std::move(roles);
  l.session = std::move(s);
  return l;
}

ActionLabel ActionLabel::make_request(std::string a, RoleSet roles, std::string s) {
  ActionLabel l;
  l.kind = Kind::Request;
  l.shared = std::move(a);
  l.roles = std::move(roles);
  l.session = std::move(s);
  return l;
}

ActionLabel ActionLabel::make_out(std::string s, Role p, Role q, Value v) {
  ActionLabel l;
  l.kind = Kind::Out;
  l.session = std::move(s);
  l.from = p;
  l.to = q;
  l.value = std::move(v);
  return l;
}

ActionLabel ActionLabel::make_bout_name(std::string s, Role p, Role q, std::string a) {
  ActionLabel l;
  l.kind = Kind::BOutName;
  l.session = std::move(s);
  l.from = p;
  l.to = q;
  l.value = Value::make_name(std::move(a));
  return l;
}

ActionLabel ActionLabel::make_bout_sess(std::string s, Role p, Role q, Endpoint ep) {
  ActionLabel l;
  l.kind = Kind::BOutSess;
  l.session = std::move(s);
  l.from = p;
  l.to = q;
  l.value = Value::make_endpoint(std::move(ep));
  return l;
}

ActionLabel ActionLabel::make_in(std::string s, Role p, Role q, Value v) {
  ActionLabel l;
  l.kind = Kind::In;
  l.session = std::move(s);
  l.from = p;
  l.to = q;
  l.value = std::move(v);
  return l;
}

ActionLabel ActionLabel::make_sel(std::string s, Role p, Role q, std::string lab) {
  ActionLabel l;
  l.kind = Kind::Sel;
  l.session = std::move(s);
  l.from = p;
  l.to = q;
  l.label = std::move(lab);
  return l;
}

ActionLabel ActionLabel::make_bra(std::string s, Role p, Role q, std::string lab) {
  ActionLabel l;
  l.kind = Kind::Bra;
  l.session = std::move(s);
  l.from = p;
  l.to = q;
  l.label = std::move(lab);
  return l;
}

ActionLabel ActionLabel::make_tau() { return ActionLabel{}; }

static std::string roles_text(const RoleSet& rs) {
  std::string out = "{";
  bool first = true;
  for (Role r : rs) {
    if (!first) out += ",";
    first = false;
    out += std::to_string(r);
  }
  return out + "}";
}

std::string print(const ActionLabel& l) {
  using K = ActionLabel::Kind;
  switch (l.kind) {
    case K::Accept:
      return l.shared + "<" + roles_text(l.roles) + ">(" + l.session + ")";
    case K::Request:
      return "~" + l.shared + "<" + roles_text(l.roles) + ">(" + l.session + ")";
    case K::Out:
      return l.session + "!<" + std::to_string(l.from) + "," + std::to_string(l.to) + "," +
             print(l.value) + ">";
    case K::BOutName:
    case K::BOutSess:
      return l.session + "!<" + std::to_string(l.from) + "," + std::to_string(l.to) + ",(" +
             print(l.value) + ")>";
    case K::In:
      return l.session + "?<" + std::to_string(l.from) + "," + std::to_string(l.to) + "," +
             print(l.value) + ">";
    case K::Sel:
      return l.session + "(+)<" + std::to_string(l.from) + "," + std::to_string(l.to) + "," +
             l.label + ">";
    case K::Bra:
      return l.session + "&<" + std::to_string(l.from) + "," + std::to_string(l.to) + "," +
             l.label + ">";
    case K::Tau:
      return "tau";
  }
  return "?";
}

std::string label_key(const ActionLabel& l) { return print(l); }

bool equal(const ActionLabel& a, const ActionLabel& b) { return print(a) == print(b); }

std::set<std::string> free_names(const ActionLabel& l) {
  using K = ActionLabel::Kind;
  std::set<std::string> out;
  switch (l.kind) {
    case K::Accept:
    case K::Request:
      out.insert(l.shared);
      return out;
    case K::Out:
    case K::In:
      out.insert(l.session);
      if (l.value.kind == Value::Kind::Name) out.insert(l.value.name);
      if (l.value.kind == Value::Kind::Endpoint) out.insert(l.value.endpoint.session);
      return out;
    case K::BOutName:
    case K::BOutSess:
      out.insert(l.session);
      return out;
    case K::Sel:
    case K::Bra:
      out.insert(l.session);
      return out;
    case K::Tau:
      return out;
  }
  return out;
}

std::set<std::string> bound_names(const ActionLabel& l) {
  using K = ActionLabel::Kind;
  std::set<std::string> out;
  switch (l.kind) {
    case K::Accept:
    case K::Request:
      out.insert(l.session);
      return out;
    case K::BOutName:
      out.insert(l.value.name);
      return out;
    case K::BOutSess:
      out.insert(l.value.endpoint.session);
      return out;
    default:
      return out;
  }
}

bool dual_labels(const ActionLabel& a, const ActionLabel& b) {
  using K = ActionLabel::Kind;
  auto check = [](const ActionLabel& o, const ActionLabel& i) {
    if (i.kind != K::In) return false;
    if (o.kind != K::Out && o.kind != K::BOutName && o.kind != K::BOutSess) return false;
    return o.session == i.session && o.from == i.to && o.to == i.from && o.value == i.value;
  };
  auto check_sel = [](const ActionLabel& s, const ActionLabel& br) {
    if (s.kind != K::Sel || br.kind != K::Bra) return false;
    return s.session == br.session && s.from == br.to && s.to == br.from &&
           s.label == br.label;
  };
  return check(a, b) || check(b, a) || check_sel(a, b) || check_sel(b, a);
}

bool complete_role_set(const RoleSet& a, Role n) {
  if (a.empty() || max_role(a) != n) return false;
  if (a.size() != n) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != i + 1) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Spine machinery shared by step and reduce
// ---------------------------------------------------------------------------

namespace {

struct SpineView {
  std::vector<std::string> binders;
  std::vector<ProcessPtr> comps;
};

void flatten(const ProcessPtr& p, SpineView& s) {
  if (p->kind == Process::Kind::Hide) {
    s.binders.push_back(p->name);
    flatten(p->body, s);
    return;
  }
  if (p->kind == Process::Kind::Par) {
    flatten(p->left, s);
    flatten(p->right, s);
    return;
  }
  if (p->kind == Process::Kind::Inact) return;
  s.comps.push_back(p);
}

ProcessPtr assemble(const std::vector<std::string>& binders,
                    const std::vector<ProcessPtr>& comps) {
  ProcessPtr body;
  std::vector<ProcessPtr> live;
  for (const auto& c : comps)
    if (c->kind != Process::Kind::Inact) live.push_back(c);
  if (live.empty()) {
    body = Process::make_inact();
  } else {
    body = live.front();
    for (size_t i = 1; i < live.size(); ++i) body = Process::make_par(body, live[i]);
  }
  for (auto it = binders.rbegin(); it != binders.rend(); ++it)
    body = Process::make_hide(*it, body);
  return body;
}

void collect_all_names(const ProcessPtr& p, std::set<std::string>& out) {
  using K = Process::Kind;
  auto expr_names = [&](const ExprPtr& e) {
    std::function<void(const ExprPtr&)> rec = [&](const ExprPtr& ex) {
      if (!ex) return;
      if (ex->kind == Expr::Kind::Name) out.insert(ex->id);
      if (ex->kind == Expr::Kind::Endpoint) out.insert(ex->endpoint.session);
      if (ex->kind == Expr::Kind::And || ex->kind == Expr::Kind::Eq) {
        rec(ex->lhs);
        rec(ex->rhs);
      }
    };
    rec(e);
  };
  switch (p->kind) {
    case K::Inact:
    case K::ProcVar:
      return;
    case K::Request:
    case K::Accept:
      out.insert(p->shared_id);
      collect_all_names(p->body, out);
      return;
    case K::Send:
      if (p->channel.kind == Channel::Kind::Endpoint) out.insert(p->channel.endpoint.session);
      expr_names(p->expr);
      collect_all_names(p->body, out);
      return;
    case K::Recv:
    case K::Select:
      if (p->channel.kind == Channel::Kind::Endpoint) out.insert(p->channel.endpoint.session);
      collect_all_names(p->body, out);
      return;
    case K::Branch:
      if (p->channel.kind == Channel::Kind::Endpoint) out.insert(p->channel.endpoint.session);
      for (const auto& a : p->arms) collect_all_names(a.body, out);
      return;
    case K::If:
      expr_names(p->expr);
      collect_all_names(p->left, out);
      collect_all_names(p->right, out);
      return;
    case K::Par:
      collect_all_names(p->left, out);
      collect_all_names(p->right, out);
      return;
    case K::Hide:
      out.insert(p->name);
      collect_all_names(p->body, out);
      return;
    case K::Rec:
      collect_all_names(p->body, out);
      return;
  }
}

std::string fresh_session_name(const ProcessPtr& state) {
  std::set<std::string> taken;
  collect_all_names(state, taken);
  for (int i = 1;; ++i) {
    std::string cand = "#s" + std::to_string(i);
    if (!taken.count(cand)) return cand;
  }
}

// Unfolds Rec-headed components in place (bounded); re-normalises when an
// unfolding exposes parallel structure.
struct PreparedState {
  SpineView spine;
  ProcessPtr term;
  bool truncated = false;
};

PreparedState prepare(const ProcessPtr& p, const StepOptions& opts) {
  PreparedState st;
  st.term = normal_form(p);
  int unfolds = 0;
  while (true) {
    st.spine = SpineView{};
    flatten(st.term, st.spine);
    bool changed = false;
    for (auto& comp : st.spine.comps) {
      if (comp->kind != Process::Kind::Rec) continue;
      if (unfolds >= opts.unfold_bound) {
        st.truncated = true;
        continue;
      }
      ++unfolds;
      comp = substitute_proc_var(comp->body, comp->name, comp);
      changed = true;
    }
    if (!changed) break;
    st.term = normal_form(assemble(st.spine.binders, st.spine.comps));
  }
  return st;
}

struct Candidate {
  ActionLabel label;
  std::vector<std::string> binders;
  std::vector<ProcessPtr> comps;
};

// Per-component transitions of the prefix rules.
std::vector<StepResult> comp_steps(const ProcessPtr& c, const std::string& fresh_s,
                                   const StepOptions& opts) {
  using K = Process::Kind;
  std::vector<StepResult> out;
  switch (c->kind) {
    case K::Request: {
      if (c->shared_is_var) break;
      Value ep = Value::make_endpoint({fresh_s, c->role});
      out.push_back({ActionLabel::make_request(c->shared_id, {c->role}, fresh_s),
                     substitute(c->body, c->binder, ep)});
      break;
    }
    case K::Accept: {
      if (c->shared_is_var) break;
      Value ep = Value::make_endpoint({fresh_s, c->role});
      out.push_back({ActionLabel::make_accept(c->shared_id, {c->role}, fresh_s),
                     substitute(c->body, c->binder, ep)});
      break;
    }
    case K::Send: {
      if (c->channel.kind != Channel::Kind::Endpoint) break;
      auto v = eval(c->expr);
      if (!v) break;
      out.push_back({ActionLabel::make_out(c->channel.endpoint.session,
                                           c->channel.endpoint.role, c->role, *v),
                     c->body});
      break;
    }
    case K::Recv: {
      if (c->channel.kind != Channel::Kind::Endpoint) break;
      for (const Value& u : opts.universe) {
        out.push_back({ActionLabel::make_in(c->channel.endpoint.session,
                                            c->channel.endpoint.role, c->role, u),
                       substitute(c->body, c->binder, u)});
      }
      break;
    }
    case K::Select: {
      if (c->channel.kind != Channel::Kind::Endpoint) break;
      out.push_back({ActionLabel::make_sel(c->channel.endpoint.session,
                                           c->channel.endpoint.role, c->role, c->label),
                     c->body});
      break;
    }
    case K::Branch: {
      if (c->channel.kind != Channel::Kind::Endpoint) break;
      for (const auto& arm : c->arms) {
        out.push_back({ActionLabel::make_bra(c->channel.endpoint.session,
                                             c->channel.endpoint.role, c->role, arm.label),
                       arm.body});
      }
      break;
    }
    case K::If: {
      auto v = eval(c->expr);
      if (!v || v->kind != Value::Kind::Bool) break;
      out.push_back({ActionLabel::make_tau(), v->boolean ? c->left : c->right});
      break;
    }
    default:
      break;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// step
// ---------------------------------------------------------------------------

std::vector<StepResult> step(const ProcessPtr& p, const StepOptions& opts, bool* truncated) {
  PreparedState st = prepare(p, opts);
  if (truncated && st.truncated) *truncated = true;
  const auto& binders = st.spine.binders;
  const auto& comps = st.spine.comps;
  std::string fresh_s = fresh_session_name(st.term);

  std::vector<Candidate> cands;
  auto replace = [&](size_t i, const ProcessPtr& t) {
    std::vector<ProcessPtr> next = comps;
    next[i] = t;
    return next;
  };

  std::vector<std::vector<StepResult>> base(comps.size());
  for (size_t i = 0; i < comps.size(); ++i) base[i] = comp_steps(comps[i], fresh_s, opts);

  // Single-component lifts (Par) — binder side conditions handled below.
  for (size_t i = 0; i < comps.size(); ++i)
    for (const auto& sr : base[i]) cands.push_back({sr.label, binders, replace(i, sr.target)});

  // Tau synchronisation of dual prefixes (rule Tau), built structurally so
  // payloads outside the declared input universe still communicate.
  for (size_t i = 0; i < comps.size(); ++i) {
    for (const auto& sr : base[i]) {
      if (sr.label.kind != ActionLabel::Kind::Out && sr.label.kind != ActionLabel::Kind::Sel)
        continue;
      for (size_t j = 0; j < comps.size(); ++j) {
        if (j == i) continue;
        const ProcessPtr& cj = comps[j];
        if (sr.label.kind == ActionLabel::Kind::Out) {
          if (cj->kind != Process::Kind::Recv ||
              cj->channel.kind != Channel::Kind::Endpoint)
            continue;
          if (cj->channel.endpoint.session != sr.label.session) continue;
          if (cj->channel.endpoint.role != sr.label.to || cj->role != sr.label.from) continue;
          std::vector<ProcessPtr> next = comps;
          next[i] = sr.target;
          next[j] = substitute(cj->body, cj->binder, sr.label.value);
          cands.push_back({ActionLabel::make_tau(), binders, std::move(next)});
        } else {
          if (cj->kind != Process::Kind::Branch ||
              cj->channel.kind != Channel::Kind::Endpoint)
            continue;
          if (cj->channel.endpoint.session != sr.label.session) continue;
          if (cj->channel.endpoint.role != sr.label.to || cj->role != sr.label.from) continue;
          for (const auto& arm : cj->arms) {
            if (arm.label != sr.label.label) continue;
            std::vector<ProcessPtr> next = comps;
            next[i] = sr.target;
            next[j] = arm.body;
            cands.push_back({ActionLabel::make_tau(), binders, std::move(next)});
          }
        }
      }
    }
  }

  // Session initiation merging (AccPar / ReqPar / TauS).
  struct InitCap {
    size_t comp;
    Role role;
    ProcessPtr target;
  };
  std::map<std::string, std::vector<InitCap>> accs, reqs;
  for (size_t i = 0; i < comps.size(); ++i) {
    for (const auto& sr : base[i]) {
      if (sr.label.kind == ActionLabel::Kind::Accept)
        accs[sr.label.shared].push_back({i, sr.label.roles.front(), sr.target});
      if (sr.label.kind == ActionLabel::Kind::Request)
        reqs[sr.label.shared].push_back({i, sr.label.roles.front(), sr.target});
    }
  }
  for (const auto& [a, list] : accs) {
    size_t n = list.size();
    for (size_t mask = 1; mask < (size_t{1} << n); ++mask) {
      if (__builtin_popcountll(mask) < 2) continue;
      std::vector<Role> roles;
      std::vector<ProcessPtr> next = comps;
      bool ok = true;
      for (size_t k = 0; k < n; ++k) {
        if (!(mask & (size_t{1} << k))) continue;
        if (std::find(roles.begin(), roles.end(), list[k].role) != roles.end()) {
          ok = false;
          break;
        }
        roles.push_back(list[k].role);
        next[list[k].comp] = list[k].target;
      }
      if (!ok) continue;
      cands.push_back(
          {ActionLabel::make_accept(a, make_role_set(roles), fresh_s), binders, next});
    }
  }
  for (const auto& [a, rlist] : reqs) {
    const auto& alist = accs.count(a) ? accs.at(a) : std::vector<InitCap>{};
    size_t n = alist.size();
    for (const auto& r : rlist) {
      for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
        std::vector<Role> roles{r.role};
        std::vector<ProcessPtr> next = comps;
        next[r.comp] = r.target;
        bool ok = true;
        for (size_t k = 0; k < n; ++k) {
          if (!(mask & (size_t{1} << k))) continue;
          if (alist[k].comp == r.comp ||
              std::find(roles.begin(), roles.end(), alist[k].role) != roles.end()) {
            ok = false;
            break;
          }
          roles.push_back(alist[k].role);
          next[alist[k].comp] = alist[k].target;
        }
        if (!ok) continue;
        RoleSet rs = make_role_set(roles);
        if (complete_role_set(rs, max_role(rs))) {
          std::vector<std::string> bs = binders;
          bs.push_back(fresh_s);
          cands.push_back({ActionLabel::make_tau(), std::move(bs), std::move(next)});
        } else if (mask != 0) {
          cands.push_back({ActionLabel::make_request(a, rs, fresh_s), binders, next});
        }
      }
    }
  }

  // Restriction rules (Res / OpenN / OpenS), innermost binder first.
  std::vector<StepResult> out;
  std::set<std::string> seen;
  for (auto& cand : cands) {
    bool blocked = false;
    std::vector<std::string> kept;
    ActionLabel lab = cand.label;
    // original spine binders are a prefix of cand.binders
    for (auto it = cand.binders.rbegin(); it != cand.binders.rend() && !blocked; ++it) {
      const std::string& b = *it;
      if (lab.kind == ActionLabel::Kind::Out) {
        if (lab.session == b) {
          blocked = true;
          break;
        }
        if (lab.value.kind == Value::Kind::Name && lab.value.name == b) {
          lab = ActionLabel::make_bout_name(lab.session, lab.from, lab.to, b);
          continue;  // binder consumed by the opening
        }
        if (lab.value.kind == Value::Kind::Endpoint && lab.value.endpoint.session == b) {
          lab = ActionLabel::make_bout_sess(lab.session, lab.from, lab.to, lab.value.endpoint);
          continue;
        }
      }
      if (free_names(lab).count(b)) {
        blocked = true;
        break;
      }
      kept.push_back(b);
    }
    if (blocked) continue;
    std::reverse(kept.begin(), kept.end());
    ProcessPtr target = assemble(kept, cand.comps);
    std::string key = label_key(lab) + "\x01" + canonical(target);
    if (!seen.insert(key).second) continue;
    out.push_back({lab, target});
  }
  // reproducible successor order: kind, then session/subject, roles, payload
  auto rank = [](const ActionLabel& l) {
    using K = ActionLabel::Kind;
    switch (l.kind) {
      case K::Accept: return 0;
      case K::Request: return 1;
      case K::Out: return 2;
      case K::BOutName: return 3;
      case K::BOutSess: return 4;
      case K::In: return 5;
      case K::Sel: return 6;
      case K::Bra: return 7;
      case K::Tau: return 8;
    }
    return 9;
  };
  std::stable_sort(out.begin(), out.end(), [&](const StepResult& a, const StepResult& b) {
    if (rank(a.label) != rank(b.label)) return rank(a.label) < rank(b.label);
    return label_key(a.label) < label_key(b.label);
  });
  return out;
}

// ---------------------------------------------------------------------------
// reduce (independent implementation of the reduction semantics)
// ---------------------------------------------------------------------------

std::vector<ProcessPtr> reduce(const ProcessPtr& p, const StepOptions& opts, bool* truncated) {
  PreparedState st = prepare(p, opts);
  if (truncated && st.truncated) *truncated = true;
  const auto& binders = st.spine.binders;
  const auto& comps = st.spine.comps;

  std::vector<ProcessPtr> out;
  std::set<std::string> seen;
  auto emit = [&](const std::vector<std::string>& bs, std::vector<ProcessPtr> next) {
    ProcessPtr t = normal_form(assemble(bs, next));
    if (seen.insert(print(t)).second) out.push_back(t);
  };

  // Link: a requester at role n with acceptors covering 1..n-1.
  std::string fresh_s = fresh_session_name(st.term);
  for (size_t i = 0; i < comps.size(); ++i) {
    const ProcessPtr& r = comps[i];
    if (r->kind != Process::Kind::Request || r->shared_is_var) continue;
    Role n = r->role;
    std::map<Role, std::vector<size_t>> by_role;
    for (size_t j = 0; j < comps.size(); ++j) {
      if (j == i) continue;
      const ProcessPtr& c = comps[j];
      if (c->kind == Process::Kind::Accept && !c->shared_is_var &&
          c->shared_id == r->shared_id && c->role >= 1 && c->role < n)
        by_role[c->role].push_back(j);
    }
    bool covered = true;
    for (Role q = 1; q < n; ++q)
      if (!by_role.count(q)) covered = false;
    if (!covered) continue;
    std::vector<size_t> pick(n, 0);
    std::function<void(Role)> choose = [&](Role q) {
      if (q == n) {
        std::vector<ProcessPtr> next = comps;
        next[i] = substitute(r->body, r->binder, Value::make_endpoint({fresh_s, n}));
        for (Role k = 1; k < n; ++k) {
          const ProcessPtr& acc = comps[pick[k]];
          next[pick[k]] =
              substitute(acc->body, acc->binder, Value::make_endpoint({fresh_s, k}));
        }
        std::vector<std::string> bs = binders;
        bs.push_back(fresh_s);
        emit(bs, std::move(next));
        return;
      }
      for (size_t j : by_role[q]) {
        bool used = false;
        for (Role k = 1; k < q; ++k)
          if (pick[k] == j) used = true;
        if (used) continue;
        pick[q] = j;
        choose(q + 1);
      }
    };
    choose(1);
  }

  for (size_t i = 0; i < comps.size(); ++i) {
    const ProcessPtr& c = comps[i];
    // Comm
    if (c->kind == Process::Kind::Send && c->channel.kind == Channel::Kind::Endpoint) {
      auto v = eval(c->expr);
      if (v) {
        const Endpoint& ep = c->channel.endpoint;
        for (size_t j = 0; j < comps.size(); ++j) {
          if (j == i) continue;
          const ProcessPtr& d = comps[j];
          if (d->kind != Process::Kind::Recv || d->channel.kind != Channel::Kind::Endpoint)
            continue;
          if (d->channel.endpoint.session != ep.session) continue;
          if (d->channel.endpoint.role != c->role || d->role != ep.role) continue;
          std::vector<ProcessPtr> next = comps;
          next[i] = c->body;
          next[j] = substitute(d->body, d->binder, *v);
          emit(binders, std::move(next));
        }
      }
    }
    // Label
    if (c->kind == Process::Kind::Select && c->channel.kind == Channel::Kind::Endpoint) {
      const Endpoint& ep = c->channel.endpoint;
      for (size_t j = 0; j < comps.size(); ++j) {
        if (j == i) continue;
        const ProcessPtr& d = comps[j];
        if (d->kind != Process::Kind::Branch || d->channel.kind != Channel::Kind::Endpoint)
          continue;
        if (d->channel.endpoint.session != ep.session) continue;
        if (d->channel.endpoint.role != c->role || d->role != ep.role) continue;
        for (const auto& arm : d->arms) {
          if (arm.label != c->label) continue;
          std::vector<ProcessPtr> next = comps;
          next[i] = c->body;
          next[j] = arm.body;
          emit(binders, std::move(next));
        }
      }
    }
    // If
    if (c->kind == Process::Kind::If) {
      auto v = eval(c->expr);
      if (v && v->kind == Value::Kind::Bool) {
        std::vector<ProcessPtr> next = comps;
        next[i] = v->boolean ? c->left : c->right;
        emit(binders, std::move(next));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// explore
// ---------------------------------------------------------------------------

LtsGraph explore(const ProcessPtr& p, size_t max_states, const StepOptions& opts) {
  LtsGraph g;
  std::map<std::string, int> index;
  std::deque<int> work;

  ProcessPtr init = normal_form(p);
  g.states.push_back(print(init));
  g.terms.push_back(init);
  index[g.states[0]] = 0;
  g.initial = 0;
  work.push_back(0);

  while (!work.empty()) {
    int cur = work.front();
    work.pop_front();
    bool trunc = false;
    auto steps = step(g.terms[static_cast<size_t>(cur)], opts, &trunc);
    if (trunc) g.truncated = true;
    for (const auto& sr : steps) {
      ProcessPtr tgt = normal_form(sr.target);
      std::string key = print(tgt);
      auto it = index.find(key);
      int id;
      if (it == index.end()) {
        if (g.states.size() >= max_states) {
          g.truncated = true;
          continue;
        }
        id = static_cast<int>(g.states.size());
        g.states.push_back(key);
        g.terms.push_back(tgt);
        index[key] = id;
        work.push_back(id);
      } else {
        id = it->second;
      }
      g.transitions.push_back({cur, sr.label, id});
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// JSON serialisation
// ---------------------------------------------------------------------------

namespace {

nlohmann::json value_to_json(const Value& v) {
  nlohmann::json j;
  switch (v.kind) {
    case Value::Kind::Bool:
      j["kind"] = "bool";
      j["value"] = v.boolean;
      break;
    case Value::Kind::Name:
      j["kind"] = "name";
      j["name"] = v.name;
      break;
    case Value::Kind::Endpoint:
      j["kind"] = "endpoint";
      j["session"] = v.endpoint.session;
      j["role"] = v.endpoint.role;
      break;
  }
  return j;
}

Value value_from_json(const nlohmann::json& j) {
  std::string k = j.at("kind");
  if (k == "bool") return Value::make_bool(j.at("value").get<bool>());
  if (k == "name") return Value::make_name(j.at("name").get<std::string>());
  return Value::make_endpoint(
      {j.at("session").get<std::string>(), j.at("role").get<Role>()});
}

nlohmann::json label_to_json(const ActionLabel& l) {
  using K = ActionLabel::Kind;
  nlohmann::json j;
  j["text"] = print(l);
  switch (l.kind) {
    case K::Accept:
    case K::Request:
      j["kind"] = l.kind == K::Accept ? "accept" : "request";
      j["shared"] = l.shared;
      j["roles"] = l.roles;
      j["session"] = l.session;
      return j;
    case K::Out:
    case K::BOutName:
    case K::BOutSess:
    case K::In:
      j["kind"] = l.kind == K::Out ? "out"
                  : l.kind == K::In ? "in"
                  : l.kind == K::BOutName ? "bout-name"
                                          : "bout-session";
      j["session"] = l.session;
      j["from"] = l.from;
      j["to"] = l.to;
      j["value"] = value_to_json(l.value);
      return j;
    case K::Sel:
    case K::Bra:
      j["kind"] = l.kind == K::Sel ? "select" : "branch";
      j["session"] = l.session;
      j["from"] = l.from;
      j["to"] = l.to;
      j["label"] = l.label;
      return j;
    case K::Tau:
      j["kind"] = "tau";
      return j;
  }
  return j;
}

ActionLabel label_from_json(const nlohmann::json& j) {
  std::string k = j.at("kind");
  if (k == "tau") return ActionLabel::make_tau();
  if (k == "accept" || k == "request") {
    RoleSet rs = j.at("roles").get<RoleSet>();
    std::string a = j.at("shared");
    std::string s = j.at("session");
    return k == "accept" ? ActionLabel::make_accept(a, rs, s)
                         : ActionLabel::make_request(a, rs, s);
  }
  std::string s = j.at("session");
  Role from = j.at("from"), to = j.at("to");
  if (k == "select") return ActionLabel::make_sel(s, from, to, j.at("label"));
  if (k == "branch") return ActionLabel::make_bra(s, from, to, j.at("label"));
  Value v = value_from_json(j.at("value"));
  if (k == "out") return ActionLabel::make_out(s, from, to, v);
  if (k == "in") return ActionLabel::make_in(s, from, to, v);
  if (k == "bout-name") return ActionLabel::make_bout_name(s, from, to, v.name);
  return ActionLabel::make_bout_sess(s, from, to, v.endpoint);
}

}  // namespace

std::string graph_to_json(const LtsGraph& g) {
  nlohmann::json j;
  j["states"] = nlohmann::json::array();
  for (size_t i = 0; i < g.states.size(); ++i)
    j["states"].push_back({{"id", i}, {"term", g.states[i]}});
  j["transitions"] = nlohmann::json::array();
  for (const auto& t : g.transitions)
    j["transitions"].push_back(
        {{"from", t.from}, {"label", label_to_json(t.label)}, {"to", t.to}});
  j["initial"] = g.initial;
  j["truncated"] = g.truncated;
  return j.dump(2);
}

LtsGraph graph_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  LtsGraph g;
  g.initial = j.at("initial");
  g.truncated = j.at("truncated");
  g.states.resize(j.at("states").size());
  g.terms.resize(j.at("states").size());
  for (const auto& s : j.at("states")) {
    size_t id = s.at("id");
    g.states[id] = s.at("term").get<std::string>();
    g.terms[id] = parse_process(g.states[id]);
  }
  for (const auto& t : j.at("transitions"))
    g.transitions.push_back(
        {t.at("from").get<int>(), label_from_json(t.at("label")), t.at("to").get<int>()});
  return g;
}

// ---------------------------------------------------------------------------
// Barbs
// ---------------------------------------------------------------------------

std::string print(const Barb& b) {
  if (b.is_request) return b.subject;
  return b.subject + "[" + std::to_string(b.p) + "][" + std::to_string(b.q) + "]";
}

std::vector<Barb> barbs(const SharedEnv& g, const ProcessPtr& p, const SessionEnv& d) {
  (void)g;
  SpineView s;
  ProcessPtr nfp = normal_form(p);
  flatten(nfp, s);
  std::set<std::string> hidden(s.binders.begin(), s.binders.end());
  std::set<Barb> out;
  for (const auto& c : s.comps) {
    if (c->kind == Process::Kind::Send && c->channel.kind == Channel::Kind::Endpoint) {
      const Endpoint& ep = c->channel.endpoint;
      if (hidden.count(ep.session)) continue;
      if (d.contains_endpoint({ep.session, c->role})) continue;
      out.insert(Barb{false, ep.session, ep.role, c->role});
    }
    if (c->kind == Process::Kind::Request && !c->shared_is_var) {
      if (hidden.count(c->shared_id)) continue;
      out.insert(Barb{true, c->shared_id, 0, 0});
    }
  }
  return std::vector<Barb>(out.begin(), out.end());
}

}  // namespace mpst
