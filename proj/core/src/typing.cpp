#include "mpst/typing.hpp"

#include <functional>
#include <set>

namespace mpst {

namespace {

class Inferencer {
 public:
  Inferencer(const SharedEnv& g, const TypingOptions& opts) : opts_(opts) {
    for (const auto& [u, s] : g.ids) values_[u] = s;
  }

  SessionEnv run(const ProcessPtr& p) {
    SessionEnv d = infer(p);
    return resolve_env(d).without_end_entries();
  }

  // check-mode entry: match the inferred environment against a given one.
  bool matches(const ProcessPtr& p, const SessionEnv& given, std::string* why) {
    SessionEnv inferred = infer(p);
    for (const auto& [c, t] : inferred.entries) {
      auto exp = given.lookup(c);
      LocalTypePtr want = exp ? *exp : LocalType::make_end();
      if (!try_embed(t, want)) {
        std::set<std::pair<std::string, std::string>> seen;
        if (!equirec_unify(t, want, 16, seen, /*embed=*/true)) {
          if (why)
            *why = "channel " + print(c) + ": inferred " + print(resolve_local(t)) +
                   " does not match declared " + print(resolve_local(want));
          return false;
        }
      }
    }
    for (const auto& [c, t] : given.entries) {
      if (inferred.contains(c)) continue;
      if (t->kind != LocalType::Kind::End) {
        if (why)
          *why = "channel " + print(c) + ": declared " + print(t) +
                 " but the process does not use the channel";
        return false;
      }
    }
    return true;
  }

 private:
  // --- sort variables (union-find over Sort::Var ids) ---

  Sort fresh_sort_var() {
    svars_.push_back(std::nullopt);
    return Sort::make_var(static_cast<int>(svars_.size()) - 1);
  }

  Sort resolve_sort(Sort s) const {
    while (s.kind == Sort::Kind::Var) {
      const auto& slot = svars_[static_cast<size_t>(s.var_id)];
      if (!slot) return s;
      s = *slot;
    }
    return s;
  }

  void unify_sort(const Sort& a_in, const Sort& b_in, const char* rule) {
    Sort a = resolve_sort(a_in);
    Sort b = resolve_sort(b_in);
    if (a.kind == Sort::Kind::Var && b.kind == Sort::Kind::Var && a.var_id == b.var_id) return;
    if (a.kind == Sort::Kind::Var) {
      svars_[static_cast<size_t>(a.var_id)] = b;
      return;
    }
    if (b.kind == Sort::Kind::Var) {
      svars_[static_cast<size_t>(b.var_id)] = a;
      return;
    }
    if (!equal(a, b))
      throw TypeError(rule, "sort mismatch: " + print(a) + " vs " + print(b));
  }

  void unify_exchange(const Exchange& a, const Exchange& b, const char* rule) {
    if (a.kind != b.kind) {
      // a sort variable may stand for either side only when it is a sort
      throw TypeError(rule, "exchange mismatch: " + print(a) + " vs " + print(b));
    }
    if (a.kind == Exchange::Kind::Sort) {
      unify_sort(a.sort, b.sort, rule);
    } else {
      std::map<std::string, std::string> tvmap;
      unify_local(a.local, b.local, rule, false, tvmap);
    }
  }

  // Structural unification of local types. embed=true lets a select with
  // fewer arms match a wider expected select (the j ∈ I freedom of rule Sel).
  void unify_local(const LocalTypePtr& a, const LocalTypePtr& b, const char* rule, bool embed,
                   std::map<std::string, std::string>& tvmap) {
    if (a->kind == LocalType::Kind::Var && b->kind == LocalType::Kind::Var) {
      auto it = tvmap.find(a->tvar);
      std::string expect = it != tvmap.end() ? it->second : a->tvar;
      if (expect != b->tvar)
        throw TypeError(rule, "type variable mismatch: " + a->tvar + " vs " + b->tvar);
      return;
    }
    if (a->kind != b->kind)
      throw TypeError(rule, "type mismatch: " + print(resolve_local(a)) + " vs " +
                                print(resolve_local(b)));
    switch (a->kind) {
      case LocalType::Kind::End:
        return;
      case LocalType::Kind::Var:
        return;  // unreachable
      case LocalType::Kind::Rec: {
        auto saved = tvmap;
        tvmap[a->tvar] = b->tvar;
        unify_local(a->body, b->body, rule, embed, tvmap);
        tvmap = saved;
        return;
      }
      case LocalType::Kind::Send:
      case LocalType::Kind::Recv:
        if (a->peer != b->peer)
          throw TypeError(rule, "peer role mismatch: " + std::to_string(a->peer) + " vs " +
                                    std::to_string(b->peer));
        unify_exchange(a->exch, b->exch, rule);
        unify_local(a->body, b->body, rule, embed, tvmap);
        return;
      case LocalType::Kind::Select: {
        if (a->peer != b->peer)
          throw TypeError(rule, "peer role mismatch in select");
        for (const auto& [l, cont] : a->arms) {
          const LocalTypePtr* match = nullptr;
          for (const auto& [l2, cont2] : b->arms)
            if (l2 == l) match = &cont2;
          if (!match) throw TypeError(rule, "select label '" + l + "' not offered");
          unify_local(cont, *match, rule, embed, tvmap);
        }
        if (!embed && a->arms.size() != b->arms.size())
          throw TypeError(rule, "select arity mismatch");
        return;
      }
      case LocalType::Kind::Branch: {
        if (a->peer != b->peer) throw TypeError(rule, "peer role mismatch in branch");
        if (a->arms.size() != b->arms.size())
          throw TypeError(rule, "branch arity mismatch");
        for (size_t i = 0; i < a->arms.size(); ++i) {
          if (a->arms[i].first != b->arms[i].first)
            throw TypeError(rule, "branch label mismatch: " + a->arms[i].first + " vs " +
                                      b->arms[i].first);
          unify_local(a->arms[i].second, b->arms[i].second, rule, embed, tvmap);
        }
        return;
      }
    }
  }

  bool try_embed(const LocalTypePtr& a, const LocalTypePtr& b) {
    auto saved = svars_;
    try {
      std::map<std::string, std::string> tvmap;
      unify_local(a, b, "check", true, tvmap);
      return true;
    } catch (const TypeError&) {
      svars_ = saved;
      return false;
    }
  }

  // Join of two environment types for If/Bra agreement: selects widen to the
  // union of their arms, everything else must unify exactly.
  LocalTypePtr merge_local(const LocalTypePtr& a, const LocalTypePtr& b, const char* rule) {
    if (a->kind == LocalType::Kind::Select && b->kind == LocalType::Kind::Select &&
        a->peer == b->peer) {
      std::vector<std::pair<std::string, LocalTypePtr>> arms;
      for (const auto& [l, cont] : a->arms) {
        const LocalTypePtr* other = nullptr;
        for (const auto& [l2, cont2] : b->arms)
          if (l2 == l) other = &cont2;
        arms.emplace_back(l, other ? merge_local(cont, *other, rule) : cont);
      }
      for (const auto& [l, cont] : b->arms) {
        bool present = false;
        for (const auto& [l2, cont2] : a->arms)
          if (l2 == l) present = true;
        if (!present) arms.emplace_back(l, cont);
      }
      std::sort(arms.begin(), arms.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      return LocalType::make_select(a->peer, std::move(arms));
    }
    if (a->kind == LocalType::Kind::Send && b->kind == LocalType::Kind::Send &&
        a->peer == b->peer) {
      unify_exchange(a->exch, b->exch, rule);
      return LocalType::make_send(a->peer, a->exch, merge_local(a->body, b->body, rule));
    }
    if (a->kind == LocalType::Kind::Recv && b->kind == LocalType::Kind::Recv &&
        a->peer == b->peer) {
      unify_exchange(a->exch, b->exch, rule);
      return LocalType::make_recv(a->peer, a->exch, merge_local(a->body, b->body, rule));
    }
    std::map<std::string, std::string> tvmap;
    unify_local(a, b, rule, false, tvmap);
    return a;
  }

  SessionEnv merge_envs(const SessionEnv& a, const SessionEnv& b, const char* rule) {
    SessionEnv out;
    for (const auto& [c, t] : a.entries) {
      auto other = b.lookup(c);
      LocalTypePtr tb = other ? *other : LocalType::make_end();
      out.entries[c] = merge_local(t, tb, rule);
    }
    for (const auto& [c, t] : b.entries) {
      if (out.entries.count(c)) continue;
      out.entries[c] = merge_local(LocalType::make_end(), t, rule);
    }
    return out;
  }

  // --- expression sorts ---

  Sort expr_sort(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Kind::Bool:
        return Sort::make_bool();
      case Expr::Kind::Name:
      case Expr::Kind::Var: {
        auto it = values_.find(e->id);
        if (it == values_.end())
          throw TypeError("Name", "unbound identifier '" + e->id + "'");
        return it->second;
      }
      case Expr::Kind::Endpoint:
        throw TypeError("Name", "session endpoints are typed linearly, not by sorts");
      case Expr::Kind::And: {
        unify_sort(expr_sort(e->lhs), Sort::make_bool(), "And");
        unify_sort(expr_sort(e->rhs), Sort::make_bool(), "And");
        return Sort::make_bool();
      }
      case Expr::Kind::Eq: {
        bool lep = e->lhs->kind == Expr::Kind::Endpoint;
        bool rep = e->rhs->kind == Expr::Kind::Endpoint;
        if (lep != rep) throw TypeError("Match", "cannot compare an endpoint with a name");
        if (!lep) unify_sort(expr_sort(e->lhs), expr_sort(e->rhs), "Match");
        return Sort::make_bool();
      }
    }
    throw TypeError("Name", "malformed expression");
  }

  // --- resolution of inference variables ---

  LocalTypePtr resolve_local(const LocalTypePtr& t) {
    switch (t->kind) {
      case LocalType::Kind::End:
      case LocalType::Kind::Var:
        return t;
      case LocalType::Kind::Rec:
        return LocalType::make_rec(t->tvar, resolve_local(t->body));
      case LocalType::Kind::Send:
        return LocalType::make_send(t->peer, resolve_exchange(t->exch), resolve_local(t->body));
      case LocalType::Kind::Recv:
        return LocalType::make_recv(t->peer, resolve_exchange(t->exch), resolve_local(t->body));
      case LocalType::Kind::Select:
      case LocalType::Kind::Branch: {
        std::vector<std::pair<std::string, LocalTypePtr>> arms;
        for (const auto& [l, cont] : t->arms) arms.emplace_back(l, resolve_local(cont));
        return t->kind == LocalType::Kind::Select
                   ? LocalType::make_select(t->peer, std::move(arms))
                   : LocalType::make_branch(t->peer, std::move(arms));
      }
    }
    return t;
  }

  Exchange resolve_exchange(const Exchange& u) {
    if (u.kind == Exchange::Kind::Sort) return Exchange::make_sort(resolve_sort(u.sort));
    return Exchange::make_local(resolve_local(u.local));
  }

  SessionEnv resolve_env(const SessionEnv& d) {
    SessionEnv out;
    for (const auto& [c, t] : d.entries) out.entries[c] = resolve_local(t);
    return out;
  }

  // --- helpers ---

  GlobalTypePtr global_of(const std::string& id, const char* rule) {
    auto it = values_.find(id);
    if (it == values_.end()) throw TypeError(rule, "unbound identifier '" + id + "'");
    Sort s = resolve_sort(it->second);
    if (s.kind != Sort::Kind::Global)
      throw TypeError(rule, "'" + id + "' does not carry a global type");
    return s.global;
  }

  LocalTypePtr take(SessionEnv& d, const Channel& c) {
    auto it = d.entries.find(c);
    if (it == d.entries.end()) return LocalType::make_end();
    LocalTypePtr t = it->second;
    d.entries.erase(it);
    return t;
  }

  static bool uses_as_channel(const ProcessPtr& p, const std::string& x) {
    using K = Process::Kind;
    auto chan_is = [&](const Channel& c) {
      return c.kind == Channel::Kind::Var && c.var == x;
    };
    switch (p->kind) {
      case K::Inact:
      case K::ProcVar:
        return false;
      case K::Request:
      case K::Accept:
        if (p->binder == x) return false;
        return uses_as_channel(p->body, x);
      case K::Send:
      case K::Select:
        if (chan_is(p->channel)) return true;
        return uses_as_channel(p->body, x);
      case K::Recv:
        if (chan_is(p->channel)) return true;
        if (p->binder == x) return false;
        return uses_as_channel(p->body, x);
      case K::Branch:
        if (chan_is(p->channel)) return true;
        for (const auto& a : p->arms)
          if (uses_as_channel(a.body, x)) return true;
        return false;
      case K::If:
        return uses_as_channel(p->left, x) || uses_as_channel(p->right, x);
      case K::Par:
        return uses_as_channel(p->left, x) || uses_as_channel(p->right, x);
      case K::Hide:
      case K::Rec:
        return uses_as_channel(p->body, x);
    }
    return false;
  }

  static bool uses_name_as_session(const ProcessPtr& p, const std::string& n) {
    using K = Process::Kind;
    auto chan_is = [&](const Channel& c) {
      return c.kind == Channel::Kind::Endpoint && c.endpoint.session == n;
    };
    auto expr_has = [&](const ExprPtr& e) {
      std::function<bool(const ExprPtr&)> rec = [&](const ExprPtr& ex) -> bool {
        if (!ex) return false;
        if (ex->kind == Expr::Kind::Endpoint && ex->endpoint.session == n) return true;
        if (ex->kind == Expr::Kind::And || ex->kind == Expr::Kind::Eq)
          return rec(ex->lhs) || rec(ex->rhs);
        return false;
      };
      return rec(e);
    };
    switch (p->kind) {
      case K::Inact:
      case K::ProcVar:
        return false;
      case K::Request:
      case K::Accept:
        return uses_name_as_session(p->body, n);
      case K::Send:
        if (chan_is(p->channel) || expr_has(p->expr)) return true;
        return uses_name_as_session(p->body, n);
      case K::Recv:
      case K::Select:
        if (chan_is(p->channel)) return true;
        return uses_name_as_session(p->body, n);
      case K::Branch:
        if (chan_is(p->channel)) return true;
        for (const auto& a : p->arms)
          if (uses_name_as_session(a.body, n)) return true;
        return false;
      case K::If:
        if (expr_has(p->expr)) return true;
        return uses_name_as_session(p->left, n) || uses_name_as_session(p->right, n);
      case K::Par:
        return uses_name_as_session(p->left, n) || uses_name_as_session(p->right, n);
      case K::Hide:
        if (p->name == n) return false;
        return uses_name_as_session(p->body, n);
      case K::Rec:
        return uses_name_as_session(p->body, n);
    }
    return false;
  }

  // --- the typing rules ---

  SessionEnv infer(const ProcessPtr& p) {
    using K = Process::Kind;
    switch (p->kind) {
      case K::Inact:
        return SessionEnv{};

      case K::ProcVar: {
        auto it = proc_vars_.find(p->name);
        if (it == proc_vars_.end())
          throw TypeError("Var", "unbound process variable '" + p->name + "'");
        if (!it->second) {
          hit_unknown_proc_var_ = true;
          return SessionEnv{};
        }
        return *it->second;
      }

      case K::Request:
      case K::Accept: {
        const char* rule = p->kind == K::Request ? "MReq" : "MAcc";
        if (!p->shared_is_var && virtual_names_.count(p->shared_id)) {
          // hidden shared name without a declared protocol: collect the
          // binder's behaviour; the enclosing restriction checks that the
          // recorded family is mutually dual with the requester on top
          SessionEnv d = infer_under_binder(p->binder, p->body);
          LocalTypePtr got = take(d, Channel::make_var(p->binder));
          virtual_inits_[p->shared_id].push_back(
              {p->role, p->kind == K::Request, got});
          return d;
        }
        GlobalTypePtr g = global_of(p->shared_id, rule);
        Role maxr = max_role(roles_global(g));
        if (p->kind == K::Request && p->role != maxr)
          throw TypeError(rule, "request role " + std::to_string(p->role) +
                                    " must be the maximum role " + std::to_string(maxr));
        if (p->kind == K::Accept && !(p->role >= 1 && p->role < maxr))
          throw TypeError(rule, "accept role " + std::to_string(p->role) +
                                    " must satisfy 1 <= p < " + std::to_string(maxr));
        std::string why;
        auto proj = project_global(g, p->role, &why);
        if (!proj) throw TypeError(rule, "projection undefined: " + why);
        SessionEnv d = infer_under_binder(p->binder, p->body);
        LocalTypePtr got = take(d, Channel::make_var(p->binder));
        std::map<std::string, std::string> tvmap;
        unify_local(got, *proj, rule, true, tvmap);
        return d;
      }

      case K::Send: {
        // Delegation when the payload is an endpoint or a session variable.
        if (p->expr->kind == Expr::Kind::Endpoint) {
          SessionEnv d = infer(p->body);
          Channel payload = Channel::make_endpoint(p->expr->endpoint);
          if (d.contains(payload))
            throw TypeError("Deleg", "delegated endpoint " + print(payload) +
                                         " still used by the continuation");
          auto it = opts_.session_types.find(p->expr->endpoint.session);
          if (it == opts_.session_types.end())
            throw TypeError("Deleg", "no declared global type for delegated session '" +
                                         p->expr->endpoint.session +
                                         "' (declare it in a sessions block)");
          std::string why;
          auto tp = project_global(it->second, p->expr->endpoint.role, &why);
          if (!tp) throw TypeError("Deleg", "projection undefined: " + why);
          LocalTypePtr tc = take(d, p->channel);
          d.insert(p->channel,
                   LocalType::make_send(p->role, Exchange::make_local(*tp), tc));
          d.insert(payload, *tp);
          return d;
        }
        if (p->expr->kind == Expr::Kind::Var && !values_.count(p->expr->id)) {
          throw TypeError("Deleg",
                          "cannot type payload '" + p->expr->id +
                              "': session variables may only be delegated as endpoints");
        }
        Sort s = expr_sort(p->expr);
        SessionEnv d = infer(p->body);
        LocalTypePtr tc = take(d, p->channel);
        d.insert(p->channel,
                 LocalType::make_send(p->role, Exchange::make_sort(s), tc));
        return d;
      }

      case K::Recv: {
        if (uses_as_channel(p->body, p->binder)) {
          // session receive
          SessionEnv d = infer_under_binder_hidden(p->binder, p->body);
          LocalTypePtr tx = take(d, Channel::make_var(p->binder));
          LocalTypePtr tc = take(d, p->channel);
          d.insert(p->channel,
                   LocalType::make_recv(p->role, Exchange::make_local(tx), tc));
          return d;
        }
        Sort alpha = fresh_sort_var();
        SessionEnv d = infer_under_value_binder(p->binder, alpha, p->body);
        LocalTypePtr tc = take(d, p->channel);
        d.insert(p->channel,
                 LocalType::make_recv(p->role, Exchange::make_sort(alpha), tc));
        return d;
      }

      case K::Select: {
        SessionEnv d = infer(p->body);
        LocalTypePtr tc = take(d, p->channel);
        d.insert(p->channel, LocalType::make_select(p->role, {{p->label, tc}}));
        return d;
      }

      case K::Branch: {
        std::optional<SessionEnv> rest;
        std::vector<std::pair<std::string, LocalTypePtr>> arms;
        for (const auto& arm : p->arms) {
          SessionEnv d = infer(arm.body);
          LocalTypePtr tc = take(d, p->channel);
          arms.emplace_back(arm.label, tc);
          SessionEnv d_norm = d.without_end_entries();
          if (!rest) rest = d_norm;
          else rest = merge_envs(*rest, d_norm, "Bra");
        }
        std::sort(arms.begin(), arms.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        SessionEnv d = rest.value_or(SessionEnv{});
        if (d.contains(p->channel))
          throw TypeError("Bra", "subject channel escapes through another arm");
        d.insert(p->channel, LocalType::make_branch(p->role, std::move(arms)));
        return d;
      }

      case K::If: {
        unify_sort(expr_sort(p->expr), Sort::make_bool(), "If");
        SessionEnv dl = infer(p->left).without_end_entries();
        SessionEnv dr = infer(p->right).without_end_entries();
        return merge_envs(dl, dr, "If");
      }

      case K::Par: {
        SessionEnv dl = infer(p->left).without_end_entries();
        SessionEnv dr = infer(p->right).without_end_entries();
        auto u = SessionEnv::disjoint_union(dl, dr);
        if (!u) {
          std::string overlap;
          for (const auto& [c, t] : dr.entries)
            if (dl.contains(c)) overlap = print(c);
          throw TypeError("Conc", "channel " + overlap + " used by both parallel components");
        }
        return *u;
      }

      case K::Hide: {
        bool as_session = uses_name_as_session(p->body, p->name);
        bool as_shared = [&] {
          auto fn = free_names(p->body);
          if (!fn.count(p->name)) return false;
          return !as_session;
        }();
        if (as_session) {
          SessionEnv d = infer(p->body);
          // Collect and remove this session's endpoints, then demand full
          // coherency of the removed fragment (rule SRes).
          EndpointTypeMap fragment;
          for (auto it = d.entries.begin(); it != d.entries.end();) {
            if (it->first.kind == Channel::Kind::Endpoint &&
                it->first.endpoint.session == p->name) {
              fragment[it->first.endpoint] = it->second;
              it = d.entries.erase(it);
            } else {
              ++it;
            }
          }
          if (!session_fragment_coherent(fragment))
            throw TypeError("SRes", "hidden session '" + p->name +
                                        "' has incoherent endpoint types");
          return d;
        }
        if (as_shared) {
          auto it = opts_.session_types.find(p->name);
          if (it != opts_.session_types.end()) {
            auto saved = values_.find(p->name) != values_.end()
                             ? std::optional<Sort>(values_[p->name])
                             : std::nullopt;
            values_[p->name] = Sort::make_global(it->second);
            SessionEnv d = infer(p->body);
            if (saved) values_[p->name] = *saved;
            else values_.erase(p->name);
            return d;
          }
          // Undeclared hidden protocol: type the initiations against an
          // existentially quantified global type, realised as mutual duality
          // of the recorded binder behaviours with the requester at the top.
          bool fresh = virtual_names_.insert(p->name).second;
          auto saved_inits = virtual_inits_.find(p->name) != virtual_inits_.end()
                                 ? std::optional<std::vector<VirtualInit>>(
                                       virtual_inits_[p->name])
                                 : std::nullopt;
          virtual_inits_[p->name].clear();
          SessionEnv d = infer(p->body);
          validate_virtual_session(p->name);
          if (fresh) virtual_names_.erase(p->name);
          if (saved_inits) virtual_inits_[p->name] = *saved_inits;
          else virtual_inits_.erase(p->name);
          return d;
        }
        return infer(p->body);
      }

      case K::Rec: {
        // Pass 1: discover the channels threaded through the recursion.
        auto saved = proc_vars_.find(p->name) != proc_vars_.end()
                         ? std::optional<std::optional<SessionEnv>>(proc_vars_[p->name])
                         : std::nullopt;
        bool saved_hit = hit_unknown_proc_var_;
        proc_vars_[p->name] = std::nullopt;
        hit_unknown_proc_var_ = false;
        SessionEnv d1 = infer(p->body).without_end_entries();
        bool loops = hit_unknown_proc_var_;
        hit_unknown_proc_var_ = saved_hit;
        if (!loops) {
          if (saved) proc_vars_[p->name] = *saved;
          else proc_vars_.erase(p->name);
          return d1;
        }
        // Pass 2: thread a type variable through every recursion channel.
        std::string tv = "#t_" + p->name;
        SessionEnv dx;
        for (const auto& [c, t] : d1.entries) dx.entries[c] = LocalType::make_var(tv);
        proc_vars_[p->name] = dx;
        SessionEnv d2 = infer(p->body);
        SessionEnv result;
        for (const auto& [c, t] : d2.entries) {
          if (local_mentions_tvar(t, tv)) result.entries[c] = LocalType::make_rec(tv, t);
          else result.entries[c] = t;
        }
        // Verification pass: the recursion body must reproduce its own
        // environment (rule Rec), compared equi-recursively.
        proc_vars_[p->name] = result;
        SessionEnv d3 = infer(p->body);
        for (const auto& [c, t] : result.entries) {
          auto t3 = d3.lookup(c);
          if (!t3 || !equirec_unify(*t3, t))
            throw TypeError("Rec", "recursion on " + print(c) +
                                       " is not tail-consistent: body yields " +
                                       (t3 ? print(resolve_local(*t3)) : std::string("nothing")) +
                                       " against " + print(resolve_local(t)));
        }
        for (const auto& [c, t] : d3.entries) {
          if (!result.contains(c) && t->kind != LocalType::Kind::End)
            throw TypeError("Rec", "channel " + print(c) + " appears only after unrolling");
        }
        if (saved) proc_vars_[p->name] = *saved;
        else proc_vars_.erase(p->name);
        return result;
      }
    }
    throw TypeError("?", "unhandled process form");
  }

  static bool local_mentions_tvar(const LocalTypePtr& t, const std::string& tv) {
    switch (t->kind) {
      case LocalType::Kind::End: return false;
      case LocalType::Kind::Var: return t->tvar == tv;
      case LocalType::Kind::Rec:
        if (t->tvar == tv) return false;
        return local_mentions_tvar(t->body, tv);
      case LocalType::Kind::Send:
      case LocalType::Kind::Recv:
        return local_mentions_tvar(t->body, tv);
      case LocalType::Kind::Select:
      case LocalType::Kind::Branch:
        for (const auto& [l, cont] : t->arms)
          if (local_mentions_tvar(cont, tv)) return true;
        return false;
    }
    return false;
  }

  SessionEnv infer_under_binder(const std::string& x, const ProcessPtr& body) {
    // session binder: shadows any value binding of the same identifier
    auto saved = values_.find(x) != values_.end() ? std::optional<Sort>(values_[x])
                                                  : std::nullopt;
    values_.erase(x);
    SessionEnv d = infer(body);
    if (saved) values_[x] = *saved;
    return d;
  }

  SessionEnv infer_under_binder_hidden(const std::string& x, const ProcessPtr& body) {
    return infer_under_binder(x, body);
  }

  SessionEnv infer_under_value_binder(const std::string& x, Sort s, const ProcessPtr& body) {
    auto saved = values_.find(x) != values_.end() ? std::optional<Sort>(values_[x])
                                                  : std::nullopt;
    values_[x] = s;
    SessionEnv d = infer(body);
    if (saved) values_[x] = *saved;
    else values_.erase(x);
    return d;
  }

  // Pairwise duality of the binary projections of a hidden session's
  // endpoints, unifying undetermined sorts along the way. A select may be
  // narrower than its dual branch: the Sel rule types a selection with any
  // superset of the used labels, so width is existentially quantified here.
  bool session_fragment_coherent(const EndpointTypeMap& fragment) {
    for (const auto& [ep1, t1] : fragment) {
      for (const auto& [ep2, t2] : fragment) {
        if (ep1.role == ep2.role) continue;
        auto b12 = project_unify(resolve_local(t1), ep2.role);
        auto b21 = project_unify(resolve_local(t2), ep1.role);
        if (!b12 || !b21) return false;
        std::set<std::pair<std::string, std::string>> seen;
        if (!compatible_dual(*b12, dual(*b21), 16, seen)) return false;
      }
      // full coherency also demands every mentioned role to be present
      for (Role q : roles_local(resolve_local(t1))) {
        if (!fragment.count(Endpoint{ep1.session, q})) return false;
      }
    }
    return true;
  }

  // Local-to-binary projection whose agreement clause unifies undetermined
  // sorts: branch arms that an outsider cannot distinguish may still carry
  // open receive sorts, which the existential reading identifies.
  std::optional<BinaryTypePtr> project_unify(const LocalTypePtr& t, Role q) {
    switch (t->kind) {
      case LocalType::Kind::End:
        return BinaryType::make_end();
      case LocalType::Kind::Var:
        return BinaryType::make_var(t->tvar);
      case LocalType::Kind::Rec: {
        auto body = project_unify(t->body, q);
        if (!body) return std::nullopt;
        if ((*body)->kind == BinaryType::Kind::Var && (*body)->tvar == t->tvar)
          return BinaryType::make_end();
        return BinaryType::make_rec(t->tvar, *body);
      }
      case LocalType::Kind::Send:
      case LocalType::Kind::Recv: {
        auto cont = project_unify(t->body, q);
        if (!cont) return std::nullopt;
        if (t->peer == q)
          return t->kind == LocalType::Kind::Send ? BinaryType::make_out(t->exch, *cont)
                                                  : BinaryType::make_in(t->exch, *cont);
        return cont;
      }
      case LocalType::Kind::Select:
      case LocalType::Kind::Branch: {
        if (t->peer == q) {
          std::vector<std::pair<std::string, BinaryTypePtr>> arms;
          for (const auto& [l, cont] : t->arms) {
            auto pc = project_unify(cont, q);
            if (!pc) return std::nullopt;
            arms.emplace_back(l, *pc);
          }
          return t->kind == LocalType::Kind::Select
                     ? BinaryType::make_select(std::move(arms))
                     : BinaryType::make_branch(std::move(arms));
        }
        auto first = project_unify(t->arms.front().second, q);
        if (!first) return std::nullopt;
        for (size_t i = 1; i < t->arms.size(); ++i) {
          auto pi = project_unify(t->arms[i].second, q);
          if (!pi) return std::nullopt;
          if (!binary_unify_equal(*first, *pi)) return std::nullopt;
        }
        return first;
      }
    }
    return std::nullopt;
  }

  // Exact-width equality up to bounded unfolding, unifying open sorts.
  bool binary_unify_equal(const BinaryTypePtr& a_in, const BinaryTypePtr& b_in) {
    std::set<std::pair<std::string, std::string>> seen;
    return binary_unify_equal(a_in, b_in, 16, seen);
  }

  bool binary_unify_equal(const BinaryTypePtr& a_in, const BinaryTypePtr& b_in, int budget,
                          std::set<std::pair<std::string, std::string>>& seen) {
    BinaryTypePtr a = resolve_binary(a_in), b = resolve_binary(b_in);
    std::string ka = type_key(a), kb = type_key(b);
    if (ka == kb) return true;
    if (seen.count({ka, kb})) return true;
    if (a->kind == BinaryType::Kind::Rec || b->kind == BinaryType::Kind::Rec) {
      if (budget <= 0) return false;
      seen.insert({ka, kb});
      return binary_unify_equal(unfold(a), unfold(b), budget - 1, seen);
    }
    if (a->kind != b->kind) return false;
    switch (a->kind) {
      case BinaryType::Kind::End:
        return true;
      case BinaryType::Kind::Var:
        return a->tvar == b->tvar;
      case BinaryType::Kind::Rec:
        return false;
      case BinaryType::Kind::Out:
      case BinaryType::Kind::In: {
        if (a->exch.kind != b->exch.kind) return false;
        if (a->exch.kind == Exchange::Kind::Sort) {
          try {
            unify_sort(a->exch.sort, b->exch.sort, "SRes");
          } catch (const TypeError&) {
            return false;
          }
        } else if (!equal(resolve_local(a->exch.local), resolve_local(b->exch.local))) {
          return false;
        }
        seen.insert({ka, kb});
        return binary_unify_equal(a->body, b->body, budget, seen);
      }
      case BinaryType::Kind::Select:
      case BinaryType::Kind::Branch: {
        if (a->arms.size() != b->arms.size()) return false;
        seen.insert({ka, kb});
        for (size_t i = 0; i < a->arms.size(); ++i) {
          if (a->arms[i].first != b->arms[i].first) return false;
          if (!binary_unify_equal(a->arms[i].second, b->arms[i].second, budget, seen))
            return false;
        }
        return true;
      }
    }
    return false;
  }

  // Equi-recursive (bounded, coinductive) comparison of a binary projection
  // against its partner's dual, unifying undetermined sorts. Select width is
  // existentially quantified (the Sel rule's label-set freedom).
  bool compatible_dual(const BinaryTypePtr& a_in, const BinaryTypePtr& b_in, int budget,
                       std::set<std::pair<std::string, std::string>>& seen) {
    BinaryTypePtr a = resolve_binary(a_in), b = resolve_binary(b_in);
    std::string ka = type_key(a), kb = type_key(b);
    if (ka == kb) return true;
    if (seen.count({ka, kb})) return true;
    if (a->kind == BinaryType::Kind::Rec || b->kind == BinaryType::Kind::Rec) {
      if (budget <= 0) return false;
      seen.insert({ka, kb});
      return compatible_dual(unfold(a), unfold(b), budget - 1, seen);
    }
    if (a->kind != b->kind) return false;
    switch (a->kind) {
      case BinaryType::Kind::End:
        return true;
      case BinaryType::Kind::Var:
        return a->tvar == b->tvar;
      case BinaryType::Kind::Rec:
        return false;  // unreachable
      case BinaryType::Kind::Out:
      case BinaryType::Kind::In: {
        if (a->exch.kind != b->exch.kind) return false;
        if (a->exch.kind == Exchange::Kind::Sort) {
          try {
            unify_sort(a->exch.sort, b->exch.sort, "SRes");
          } catch (const TypeError&) {
            return false;
          }
        } else if (!equal(resolve_local(a->exch.local), resolve_local(b->exch.local))) {
          return false;
        }
        seen.insert({ka, kb});
        return compatible_dual(a->body, b->body, budget, seen);
      }
      case BinaryType::Kind::Select:
      case BinaryType::Kind::Branch: {
        const auto& narrow = a->arms.size() <= b->arms.size() ? a->arms : b->arms;
        const auto& wide = a->arms.size() <= b->arms.size() ? b->arms : a->arms;
        seen.insert({ka, kb});
        for (const auto& [l, cont] : narrow) {
          const BinaryTypePtr* other = nullptr;
          for (const auto& [l2, cont2] : wide)
            if (l2 == l) other = &cont2;
          if (!other) return false;
          if (!compatible_dual(cont, *other, budget, seen)) return false;
        }
        return true;
      }
    }
    return false;
  }

  BinaryTypePtr resolve_binary(const BinaryTypePtr& b) {
    switch (b->kind) {
      case BinaryType::Kind::End:
      case BinaryType::Kind::Var:
        return b;
      case BinaryType::Kind::Rec:
        return BinaryType::make_rec(b->tvar, resolve_binary(b->body));
      case BinaryType::Kind::Out:
        return BinaryType::make_out(resolve_exchange(b->exch), resolve_binary(b->body));
      case BinaryType::Kind::In:
        return BinaryType::make_in(resolve_exchange(b->exch), resolve_binary(b->body));
      case BinaryType::Kind::Select:
      case BinaryType::Kind::Branch: {
        std::vector<std::pair<std::string, BinaryTypePtr>> arms;
        for (const auto& [l, cont] : b->arms) arms.emplace_back(l, resolve_binary(cont));
        return b->kind == BinaryType::Kind::Select
                   ? BinaryType::make_select(std::move(arms))
                   : BinaryType::make_branch(std::move(arms));
      }
    }
    return b;
  }

  // Equality up to bounded unfolding that also unifies sort variables; used
  // to verify recursion environments across passes and as the check-mode
  // fallback when the declared type is folded differently. With embed set, a
  // narrower select matches a wider one.
  bool equirec_unify(const LocalTypePtr& a, const LocalTypePtr& b, int budget,
                     std::set<std::pair<std::string, std::string>>& seen,
                     bool embed = false) {
    LocalTypePtr x = resolve_local(a), y = resolve_local(b);
    std::string kx = type_key(x), ky = type_key(y);
    if (kx == ky) return true;
    if (seen.count({kx, ky})) return true;
    if (x->kind == LocalType::Kind::Rec || y->kind == LocalType::Kind::Rec) {
      if (budget <= 0) return false;
      seen.insert({kx, ky});
      return equirec_unify(unfold(x), unfold(y), budget - 1, seen, embed);
    }
    if (x->kind != y->kind) return false;
    switch (x->kind) {
      case LocalType::Kind::End: return true;
      case LocalType::Kind::Var: return x->tvar == y->tvar;
      case LocalType::Kind::Send:
      case LocalType::Kind::Recv: {
        if (x->peer != y->peer) return false;
        if (x->exch.kind != y->exch.kind) return false;
        if (x->exch.kind == Exchange::Kind::Sort) {
          try {
            unify_sort(x->exch.sort, y->exch.sort, "Rec");
          } catch (const TypeError&) {
            return false;
          }
        } else if (!equal(resolve_local(x->exch.local), resolve_local(y->exch.local))) {
          return false;
        }
        seen.insert({kx, ky});
        return equirec_unify(x->body, y->body, budget, seen, embed);
      }
      case LocalType::Kind::Select:
      case LocalType::Kind::Branch: {
        if (x->peer != y->peer) return false;
        bool subset_ok = embed && x->kind == LocalType::Kind::Select;
        if (!subset_ok && x->arms.size() != y->arms.size()) return false;
        seen.insert({kx, ky});
        for (const auto& [l, cont] : x->arms) {
          const LocalTypePtr* other = nullptr;
          for (const auto& [l2, cont2] : y->arms)
            if (l2 == l) other = &cont2;
          if (!other) return false;
          if (!equirec_unify(cont, *other, budget, seen, embed)) return false;
        }
        if (!subset_ok && x->arms.size() != y->arms.size()) return false;
        return true;
      }
      case LocalType::Kind::Rec:
        return false;
    }
    return false;
  }

  bool equirec_unify(const LocalTypePtr& a, const LocalTypePtr& b) {
    std::set<std::pair<std::string, std::string>> seen;
    return equirec_unify(a, b, 16, seen);
  }

  struct VirtualInit {
    Role role;
    bool is_request;
    LocalTypePtr type;
  };

  void validate_virtual_session(const std::string& name) {
    const auto& inits = virtual_inits_[name];
    if (inits.empty()) return;
    Role maxr = 0;
    for (const auto& i : inits) maxr = std::max(maxr, i.role);
    for (const auto& i : inits) {
      if (i.is_request && i.role != maxr)
        throw TypeError("MReq", "request on hidden '" + name + "' at role " +
                                    std::to_string(i.role) +
                                    " is below a recorded role");
      if (!i.is_request && i.role >= maxr && std::any_of(inits.begin(), inits.end(),
                                                         [](const VirtualInit& j) {
                                                           return j.is_request;
                                                         }))
        throw TypeError("MAcc", "accept on hidden '" + name + "' at the requester role");
    }
    for (const auto& a : inits) {
      for (const auto& b : inits) {
        if (a.role == b.role) continue;
        auto pab = project_unify(resolve_local(a.type), b.role);
        auto pba = project_unify(resolve_local(b.type), a.role);
        if (!pab || !pba)
          throw TypeError("NRes", "hidden protocol '" + name + "' has undefined projections");
        std::set<std::pair<std::string, std::string>> seen;
        if (!compatible_dual(*pab, dual(*pba), 16, seen))
          throw TypeError("NRes", "hidden protocol '" + name +
                                      "' has incompatible behaviours at roles " +
                                      std::to_string(a.role) + " and " +
                                      std::to_string(b.role));
      }
    }
  }

  const TypingOptions& opts_;
  std::map<std::string, Sort> values_;
  std::map<std::string, std::optional<SessionEnv>> proc_vars_;
  std::set<std::string> virtual_names_;
  std::map<std::string, std::vector<VirtualInit>> virtual_inits_;
  std::vector<std::optional<Sort>> svars_;
  bool hit_unknown_proc_var_ = false;
};

}  // namespace

Sort typecheck_expr(const SharedEnv& g, const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Bool:
      return Sort::make_bool();
    case Expr::Kind::Name:
    case Expr::Kind::Var: {
      auto s = g.lookup(e->id);
      if (!s) throw TypeError("Name", "unbound identifier '" + e->id + "'");
      return *s;
    }
    case Expr::Kind::Endpoint:
      throw TypeError("Name", "session endpoints are typed linearly, not by sorts");
    case Expr::Kind::And: {
      Sort l = typecheck_expr(g, e->lhs);
      Sort r = typecheck_expr(g, e->rhs);
      if (l.kind != Sort::Kind::Bool || r.kind != Sort::Kind::Bool)
        throw TypeError("And", "conjunction over non-booleans");
      return Sort::make_bool();
    }
    case Expr::Kind::Eq: {
      bool lep = e->lhs->kind == Expr::Kind::Endpoint;
      bool rep = e->rhs->kind == Expr::Kind::Endpoint;
      if (lep && rep) return Sort::make_bool();
      if (lep != rep) throw TypeError("Match", "cannot compare an endpoint with a name");
      Sort l = typecheck_expr(g, e->lhs);
      Sort r = typecheck_expr(g, e->rhs);
      if (!equal(l, r))
        throw TypeError("Match", "sort mismatch: " + print(l) + " vs " + print(r));
      return Sort::make_bool();
    }
  }
  throw TypeError("Name", "malformed expression");
}

Verdict infer(const SharedEnv& g, const ProcessPtr& p, const TypingOptions& opts) {
  Verdict v;
  try {
    Inferencer inf(g, opts);
    v.delta = inf.run(p);
    v.ok = true;
  } catch (const TypeError& e) {
    v.ok = false;
    v.rule = e.rule;
    v.message = e.what();
  } catch (const std::exception& e) {
    v.ok = false;
    v.rule = "internal";
    v.message = e.what();
  }
  return v;
}

bool check(const SharedEnv& g, const ProcessPtr& p, const SessionEnv& d,
           const TypingOptions& opts, std::string* why) {
  try {
    Inferencer inf(g, opts);
    return inf.matches(p, d, why);
  } catch (const TypeError& e) {
    if (why) *why = e.what();
    return false;
  } catch (const std::exception& e) {
    if (why) *why = e.what();
    return false;
  }
}

}  // namespace mpst
