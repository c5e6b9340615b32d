#include "mpst/types.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace mpst {

Sort Sort::make_bool() { return Sort{Kind::Bool, "", nullptr, 0}; }
Sort Sort::make_atom(std::string name) { return Sort{Kind::Atom, std::move(name), nullptr, 0}; }
Sort Sort::make_global(GlobalTypePtr g) { return Sort{Kind::Global, "", std::move(g), 0}; }
Sort Sort::make_var(int id) { return Sort{Kind::Var, "", nullptr, id}; }

Exchange Exchange::make_sort(Sort s) { return Exchange{Kind::Sort, std::move(s), nullptr}; }
Exchange Exchange::make_local(LocalTypePtr t) {
  return Exchange{Kind::Local, Sort{}, std::move(t)};
}

GlobalTypePtr GlobalType::make_msg(Role from, Role to, Exchange u, GlobalTypePtr cont) {
  auto g = std::make_shared<GlobalType>();
  g->kind = Kind::Msg;
  g->from = from;
  g->to = to;
  g->exch = std::move(u);
  g->body = std::move(cont);
  return g;
}

GlobalTypePtr GlobalType::make_choice(Role from, Role to,
                                      std::vector<std::pair<std::string, GlobalTypePtr>> arms) {
  auto g = std::make_shared<GlobalType>();
  g->kind = Kind::Choice;
  g->from = from;
  g->to = to;
  g->arms = std::move(arms);
  return g;
}

GlobalTypePtr GlobalType::make_rec(std::string t, GlobalTypePtr body) {
  auto g = std::make_shared<GlobalType>();
  g->kind = Kind::Rec;
  g->tvar = std::move(t);
  g->body = std::move(body);
  return g;
}

GlobalTypePtr GlobalType::make_var(std::string t) {
  auto g = std::make_shared<GlobalType>();
  g->kind = Kind::Var;
  g->tvar = std::move(t);
  return g;
}

GlobalTypePtr GlobalType::make_end() {
  static const GlobalTypePtr e = [] {
    auto g = std::make_shared<GlobalType>();
    g->kind = Kind::End;
    return g;
  }();
  return e;
}

LocalTypePtr LocalType::make_send(Role peer, Exchange u, LocalTypePtr cont) {
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Send;
  t->peer = peer;
  t->exch = std::move(u);
  t->body = std::move(cont);
  return t;
}

LocalTypePtr LocalType::make_recv(Role peer, Exchange u, LocalTypePtr cont) {
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Recv;
  t->peer = peer;
  t->exch = std::move(u);
  t->body = std::move(cont);
  return t;
}

LocalTypePtr LocalType::make_select(Role peer,
                                    std::vector<std::pair<std::string, LocalTypePtr>> arms) {
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Select;
  t->peer = peer;
  t->arms = std::move(arms);
  return t;
}

LocalTypePtr LocalType::make_branch(Role peer,
                                    std::vector<std::pair<std::string, LocalTypePtr>> arms) {
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Branch;
  t->peer = peer;
  t->arms = std::move(arms);
  return t;
}

LocalTypePtr LocalType::make_rec(std::string tv, LocalTypePtr body) {
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Rec;
  t->tvar = std::move(tv);
  t->body = std::move(body);
  return t;
}

LocalTypePtr LocalType::make_var(std::string tv) {
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Var;
  t->tvar = std::move(tv);
  return t;
}

LocalTypePtr LocalType::make_end() {
  static const LocalTypePtr e = [] {
    auto t = std::make_shared<LocalType>();
    t->kind = Kind::End;
    return t;
  }();
  return e;
}

BinaryTypePtr BinaryType::make_out(Exchange u, BinaryTypePtr cont) {
  auto b = std::make_shared<BinaryType>();
  b->kind = Kind::Out;
  b->exch = std::move(u);
  b->body = std::move(cont);
  return b;
}

BinaryTypePtr BinaryType::make_in(Exchange u, BinaryTypePtr cont) {
  auto b = std::make_shared<BinaryType>();
  b->kind = Kind::In;
  b->exch = std::move(u);
  b->body = std::move(cont);
  return b;
}

BinaryTypePtr BinaryType::make_select(std::vector<std::pair<std::string, BinaryTypePtr>> arms) {
  auto b = std::make_shared<BinaryType>();
  b->kind = Kind::Select;
  b->arms = std::move(arms);
  return b;
}

BinaryTypePtr BinaryType::make_branch(std::vector<std::pair<std::string, BinaryTypePtr>> arms) {
  auto b = std::make_shared<BinaryType>();
  b->kind = Kind::Branch;
  b->arms = std::move(arms);
  return b;
}

BinaryTypePtr BinaryType::make_rec(std::string t, BinaryTypePtr body) {
  auto b = std::make_shared<BinaryType>();
  b->kind = Kind::Rec;
  b->tvar = std::move(t);
  b->body = std::move(body);
  return b;
}

BinaryTypePtr BinaryType::make_var(std::string t) {
  auto b = std::make_shared<BinaryType>();
  b->kind = Kind::Var;
  b->tvar = std::move(t);
  return b;
}

BinaryTypePtr BinaryType::make_end() {
  static const BinaryTypePtr e = [] {
    auto b = std::make_shared<BinaryType>();
    b->kind = Kind::End;
    return b;
  }();
  return e;
}

// ---------------------------------------------------------------------------
// Printing (round-trips through the parsers) and alpha-invariant keys
// ---------------------------------------------------------------------------

namespace {

struct TvarEnv {
  std::map<std::string, std::string> map;
  int depth = 0;
  bool canonical = false;

  std::string resolve(const std::string& t) const {
    auto it = map.find(t);
    return it != map.end() ? it->second : t;
  }
};

void print_global(const GlobalTypePtr& g, TvarEnv& env, std::string& out);
void print_local(const LocalTypePtr& t, TvarEnv& env, std::string& out);
void print_binary(const BinaryTypePtr& b, TvarEnv& env, std::string& out);

void print_sort(const Sort& s, TvarEnv& env, std::string& out) {
  switch (s.kind) {
    case Sort::Kind::Bool: out += "bool"; return;
    case Sort::Kind::Atom: out += s.atom; return;
    case Sort::Kind::Global: {
      out += "<";
      TvarEnv inner;
      inner.canonical = env.canonical;
      print_global(s.global, inner, out);
      out += ">";
      return;
    }
    case Sort::Kind::Var:
      out += "?s" + std::to_string(s.var_id);
      return;
  }
}

void print_exchange(const Exchange& u, TvarEnv& env, std::string& out) {
  if (u.kind == Exchange::Kind::Sort) {
    print_sort(u.sort, env, out);
  } else {
    TvarEnv inner;
    inner.canonical = env.canonical;
    print_local(u.local, inner, out);
  }
}

template <typename Env, typename Body>
void with_tvar(Env& env, const std::string& tv, Body body) {
  if (!env.canonical) {
    body(tv);
    return;
  }
  std::string tok = "$t" + std::to_string(++env.depth);
  auto it = env.map.find(tv);
  std::optional<std::string> saved;
  if (it != env.map.end()) saved = it->second;
  env.map[tv] = tok;
  body(tok);
  if (saved) env.map[tv] = *saved;
  else env.map.erase(tv);
}

void print_global(const GlobalTypePtr& g, TvarEnv& env, std::string& out) {
  switch (g->kind) {
    case GlobalType::Kind::End: out += "end"; return;
    case GlobalType::Kind::Var: out += env.canonical ? env.resolve(g->tvar) : g->tvar; return;
    case GlobalType::Kind::Rec:
      with_tvar(env, g->tvar, [&](const std::string& tv) {
        out += "rec " + tv + ". ";
        print_global(g->body, env, out);
      });
      return;
    case GlobalType::Kind::Msg:
      out += std::to_string(g->from) + "->" + std::to_string(g->to) + ":<";
      print_exchange(g->exch, env, out);
      out += ">.";
      print_global(g->body, env, out);
      return;
    case GlobalType::Kind::Choice: {
      out += std::to_string(g->from) + "->" + std::to_string(g->to) + ":{";
      bool first = true;
      for (const auto& [l, cont] : g->arms) {
        if (!first) out += ", ";
        first = false;
        out += l + ": ";
        print_global(cont, env, out);
      }
      out += "}";
      return;
    }
  }
}

void print_local(const LocalTypePtr& t, TvarEnv& env, std::string& out) {
  switch (t->kind) {
    case LocalType::Kind::End: out += "end"; return;
    case LocalType::Kind::Var: out += env.canonical ? env.resolve(t->tvar) : t->tvar; return;
    case LocalType::Kind::Rec:
      with_tvar(env, t->tvar, [&](const std::string& tv) {
        out += "rec " + tv + ". ";
        print_local(t->body, env, out);
      });
      return;
    case LocalType::Kind::Send:
      out += std::to_string(t->peer) + "!<";
      print_exchange(t->exch, env, out);
      out += ">.";
      print_local(t->body, env, out);
      return;
    case LocalType::Kind::Recv:
      out += std::to_string(t->peer) + "?(";
      print_exchange(t->exch, env, out);
      out += ").";
      print_local(t->body, env, out);
      return;
    case LocalType::Kind::Select:
    case LocalType::Kind::Branch: {
      out += std::to_string(t->peer);
      out += t->kind == LocalType::Kind::Select ? "(+){" : "&{";
      bool first = true;
      for (const auto& [l, cont] : t->arms) {
        if (!first) out += ", ";
        first = false;
        out += l + ": ";
        print_local(cont, env, out);
      }
      out += "}";
      return;
    }
  }
}

void print_binary(const BinaryTypePtr& b, TvarEnv& env, std::string& out) {
  switch (b->kind) {
    case BinaryType::Kind::End: out += "end"; return;
    case BinaryType::Kind::Var: out += env.canonical ? env.resolve(b->tvar) : b->tvar; return;
    case BinaryType::Kind::Rec:
      with_tvar(env, b->tvar, [&](const std::string& tv) {
        out += "rec " + tv + ". ";
        print_binary(b->body, env, out);
      });
      return;
    case BinaryType::Kind::Out:
      out += "!<";
      print_exchange(b->exch, env, out);
      out += ">.";
      print_binary(b->body, env, out);
      return;
    case BinaryType::Kind::In:
      out += "?(";
      print_exchange(b->exch, env, out);
      out += ").";
      print_binary(b->body, env, out);
      return;
    case BinaryType::Kind::Select:
    case BinaryType::Kind::Branch: {
      out += b->kind == BinaryType::Kind::Select ? "(+){" : "&{";
      bool first = true;
      for (const auto& [l, cont] : b->arms) {
        if (!first) out += ", ";
        first = false;
        out += l + ": ";
        print_binary(cont, env, out);
      }
      out += "}";
      return;
    }
  }
}

}  // namespace

std::string print(const Sort& s) {
  TvarEnv env;
  std::string out;
  print_sort(s, env, out);
  return out;
}

std::string print(const Exchange& u) {
  TvarEnv env;
  std::string out;
  print_exchange(u, env, out);
  return out;
}

std::string print(const GlobalTypePtr& g) {
  TvarEnv env;
  std::string out;
  print_global(g, env, out);
  return out;
}

std::string print(const LocalTypePtr& t) {
  TvarEnv env;
  std::string out;
  print_local(t, env, out);
  return out;
}

std::string print(const BinaryTypePtr& b) {
  TvarEnv env;
  std::string out;
  print_binary(b, env, out);
  return out;
}

std::string type_key(const GlobalTypePtr& g) {
  TvarEnv env;
  env.canonical = true;
  std::string out;
  print_global(g, env, out);
  return out;
}

std::string type_key(const LocalTypePtr& t) {
  TvarEnv env;
  env.canonical = true;
  std::string out;
  print_local(t, env, out);
  return out;
}

std::string type_key(const BinaryTypePtr& b) {
  TvarEnv env;
  env.canonical = true;
  std::string out;
  print_binary(b, env, out);
  return out;
}

bool equal(const GlobalTypePtr& a, const GlobalTypePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return type_key(a) == type_key(b);
}

bool equal(const LocalTypePtr& a, const LocalTypePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return type_key(a) == type_key(b);
}

bool equal(const BinaryTypePtr& a, const BinaryTypePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return type_key(a) == type_key(b);
}

bool equal(const Sort& a, const Sort& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Sort::Kind::Bool: return true;
    case Sort::Kind::Atom: return a.atom == b.atom;
    case Sort::Kind::Global: return equal(a.global, b.global);
    case Sort::Kind::Var: return a.var_id == b.var_id;
  }
  return false;
}

bool equal(const Exchange& a, const Exchange& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Exchange::Kind::Sort) return equal(a.sort, b.sort);
  return equal(a.local, b.local);
}

// ---------------------------------------------------------------------------
// Roles, sizes, unfolding, well-formedness
// ---------------------------------------------------------------------------

namespace {

void roles_global_into(const GlobalTypePtr& g, std::set<Role>& out) {
  switch (g->kind) {
    case GlobalType::Kind::End:
    case GlobalType::Kind::Var:
      return;
    case GlobalType::Kind::Rec:
      roles_global_into(g->body, out);
      return;
    case GlobalType::Kind::Msg:
      out.insert(g->from);
      out.insert(g->to);
      roles_global_into(g->body, out);
      return;
    case GlobalType::Kind::Choice:
      out.insert(g->from);
      out.insert(g->to);
      for (const auto& [l, cont] : g->arms) roles_global_into(cont, out);
      return;
  }
}

void roles_local_into(const LocalTypePtr& t, std::set<Role>& out) {
  switch (t->kind) {
    case LocalType::Kind::End:
    case LocalType::Kind::Var:
      return;
    case LocalType::Kind::Rec:
      roles_local_into(t->body, out);
      return;
    case LocalType::Kind::Send:
    case LocalType::Kind::Recv:
      out.insert(t->peer);
      roles_local_into(t->body, out);
      return;
    case LocalType::Kind::Select:
    case LocalType::Kind::Branch:
      out.insert(t->peer);
      for (const auto& [l, cont] : t->arms) roles_local_into(cont, out);
      return;
  }
}

GlobalTypePtr subst_tvar_global(const GlobalTypePtr& g, const std::string& tv,
                                const GlobalTypePtr& repl) {
  switch (g->kind) {
    case GlobalType::Kind::End:
      return g;
    case GlobalType::Kind::Var:
      return g->tvar == tv ? repl : g;
    case GlobalType::Kind::Rec:
      if (g->tvar == tv) return g;
      return GlobalType::make_rec(g->tvar, subst_tvar_global(g->body, tv, repl));
    case GlobalType::Kind::Msg:
      return GlobalType::make_msg(g->from, g->to, g->exch,
                                  subst_tvar_global(g->body, tv, repl));
    case GlobalType::Kind::Choice: {
      std::vector<std::pair<std::string, GlobalTypePtr>> arms;
      for (const auto& [l, cont] : g->arms)
        arms.emplace_back(l, subst_tvar_global(cont, tv, repl));
      return GlobalType::make_choice(g->from, g->to, std::move(arms));
    }
  }
  return g;
}

LocalTypePtr subst_tvar_local(const LocalTypePtr& t, const std::string& tv,
                              const LocalTypePtr& repl) {
  switch (t->kind) {
    case LocalType::Kind::End:
      return t;
    case LocalType::Kind::Var:
      return t->tvar == tv ? repl : t;
    case LocalType::Kind::Rec:
      if (t->tvar == tv) return t;
      return LocalType::make_rec(t->tvar, subst_tvar_local(t->body, tv, repl));
    case LocalType::Kind::Send:
      return LocalType::make_send(t->peer, t->exch, subst_tvar_local(t->body, tv, repl));
    case LocalType::Kind::Recv:
      return LocalType::make_recv(t->peer, t->exch, subst_tvar_local(t->body, tv, repl));
    case LocalType::Kind::Select:
    case LocalType::Kind::Branch: {
      std::vector<std::pair<std::string, LocalTypePtr>> arms;
      for (const auto& [l, cont] : t->arms)
        arms.emplace_back(l, subst_tvar_local(cont, tv, repl));
      return t->kind == LocalType::Kind::Select
                 ? LocalType::make_select(t->peer, std::move(arms))
                 : LocalType::make_branch(t->peer, std::move(arms));
    }
  }
  return t;
}

}  // namespace

RoleSet roles_global(const GlobalTypePtr& g) {
  std::set<Role> s;
  roles_global_into(g, s);
  return RoleSet(s.begin(), s.end());
}

RoleSet roles_local(const LocalTypePtr& t) {
  std::set<Role> s;
  roles_local_into(t, s);
  return RoleSet(s.begin(), s.end());
}

Role max_role(const RoleSet& roles) { return roles.empty() ? 0 : roles.back(); }

GlobalTypePtr unfold(const GlobalTypePtr& g) {
  if (g->kind != GlobalType::Kind::Rec) return g;
  return subst_tvar_global(g->body, g->tvar, g);
}

LocalTypePtr unfold(const LocalTypePtr& t) {
  if (t->kind != LocalType::Kind::Rec) return t;
  return subst_tvar_local(t->body, t->tvar, t);
}

namespace {

BinaryTypePtr subst_tvar_binary(const BinaryTypePtr& b, const std::string& tv,
                                const BinaryTypePtr& repl) {
  switch (b->kind) {
    case BinaryType::Kind::End:
      return b;
    case BinaryType::Kind::Var:
      return b->tvar == tv ? repl : b;
    case BinaryType::Kind::Rec:
      if (b->tvar == tv) return b;
      return BinaryType::make_rec(b->tvar, subst_tvar_binary(b->body, tv, repl));
    case BinaryType::Kind::Out:
      return BinaryType::make_out(b->exch, subst_tvar_binary(b->body, tv, repl));
    case BinaryType::Kind::In:
      return BinaryType::make_in(b->exch, subst_tvar_binary(b->body, tv, repl));
    case BinaryType::Kind::Select:
    case BinaryType::Kind::Branch: {
      std::vector<std::pair<std::string, BinaryTypePtr>> arms;
      for (const auto& [l, cont] : b->arms)
        arms.emplace_back(l, subst_tvar_binary(cont, tv, repl));
      return b->kind == BinaryType::Kind::Select
                 ? BinaryType::make_select(std::move(arms))
                 : BinaryType::make_branch(std::move(arms));
    }
  }
  return b;
}

}  // namespace

BinaryTypePtr unfold(const BinaryTypePtr& b) {
  if (b->kind != BinaryType::Kind::Rec) return b;
  return subst_tvar_binary(b->body, b->tvar, b);
}

namespace {

bool global_has_free_tvar(const GlobalTypePtr& g, std::set<std::string> bound) {
  switch (g->kind) {
    case GlobalType::Kind::End: return false;
    case GlobalType::Kind::Var: return !bound.count(g->tvar);
    case GlobalType::Kind::Rec:
      bound.insert(g->tvar);
      return global_has_free_tvar(g->body, bound);
    case GlobalType::Kind::Msg:
      return global_has_free_tvar(g->body, bound);
    case GlobalType::Kind::Choice:
      for (const auto& [l, cont] : g->arms)
        if (global_has_free_tvar(cont, bound)) return true;
      return false;
  }
  return false;
}

bool local_has_free_tvar(const LocalTypePtr& t, std::set<std::string> bound) {
  switch (t->kind) {
    case LocalType::Kind::End: return false;
    case LocalType::Kind::Var: return !bound.count(t->tvar);
    case LocalType::Kind::Rec:
      bound.insert(t->tvar);
      return local_has_free_tvar(t->body, bound);
    case LocalType::Kind::Send:
    case LocalType::Kind::Recv:
      return local_has_free_tvar(t->body, bound);
    case LocalType::Kind::Select:
    case LocalType::Kind::Branch:
      for (const auto& [l, cont] : t->arms)
        if (local_has_free_tvar(cont, bound)) return true;
      return false;
  }
  return false;
}

// A recursion variable is guarded when every occurrence sits under a prefix.
bool guarded(const GlobalTypePtr& g, const std::string& tv) {
  switch (g->kind) {
    case GlobalType::Kind::End: return true;
    case GlobalType::Kind::Var: return g->tvar != tv;
    case GlobalType::Kind::Rec:
      if (g->tvar == tv) return true;
      return guarded(g->body, tv);
    case GlobalType::Kind::Msg:
    case GlobalType::Kind::Choice:
      return true;
  }
  return true;
}

std::optional<std::string> well_formed_rec(const GlobalTypePtr& g) {
  switch (g->kind) {
    case GlobalType::Kind::End:
    case GlobalType::Kind::Var:
      return std::nullopt;
    case GlobalType::Kind::Rec:
      if (!guarded(g->body, g->tvar))
        return "unguarded recursion variable '" + g->tvar + "'";
      return well_formed_rec(g->body);
    case GlobalType::Kind::Msg: {
      if (g->from == g->to)
        return "sender and receiver coincide (role " + std::to_string(g->from) + ")";
      if (g->exch.kind == Exchange::Kind::Sort && g->exch.sort.kind == Sort::Kind::Global &&
          global_has_free_tvar(g->exch.sort.global, {}))
        return "carried global type has free type variables";
      if (g->exch.kind == Exchange::Kind::Local && local_has_free_tvar(g->exch.local, {}))
        return "carried local type has free type variables";
      return well_formed_rec(g->body);
    }
    case GlobalType::Kind::Choice: {
      if (g->from == g->to)
        return "selector and brancher coincide (role " + std::to_string(g->from) + ")";
      if (g->arms.empty()) return "empty choice";
      for (const auto& [l, cont] : g->arms) {
        auto r = well_formed_rec(cont);
        if (r) return r;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> well_formed(const GlobalTypePtr& g) {
  if (auto r = well_formed_rec(g)) return r;
  if (global_has_free_tvar(g, {})) return "free type variable";
  RoleSet roles = roles_global(g);
  for (size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] != i + 1)
      return "roles must form a contiguous set {1..n}, missing role " +
             std::to_string(i + 1);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

namespace {

// Equality up to bounded unfolding, for the projection agreement clauses.
enum class Tri { True, False, Unknown };

Tri bounded_equal(const LocalTypePtr& a, const LocalTypePtr& b, int budget,
                  std::set<std::pair<std::string, std::string>>& seen) {
  std::string ka = type_key(a), kb = type_key(b);
  if (ka == kb) return Tri::True;
  if (seen.count({ka, kb})) return Tri::True;  // coinductive hypothesis
  bool unfolded = false;
  LocalTypePtr ua = a, ub = b;
  if (ua->kind == LocalType::Kind::Rec) { ua = unfold(ua); unfolded = true; }
  if (ub->kind == LocalType::Kind::Rec) { ub = unfold(ub); unfolded = true; }
  if (unfolded) {
    if (budget <= 0) return Tri::Unknown;
    seen.insert({ka, kb});
    return bounded_equal(ua, ub, budget - 1, seen);
  }
  if (ua->kind != ub->kind) return Tri::False;
  switch (ua->kind) {
    case LocalType::Kind::End: return Tri::True;
    case LocalType::Kind::Var: return ua->tvar == ub->tvar ? Tri::True : Tri::False;
    case LocalType::Kind::Send:
    case LocalType::Kind::Recv: {
      if (ua->peer != ub->peer || !equal(ua->exch, ub->exch)) return Tri::False;
      seen.insert({ka, kb});
      return bounded_equal(ua->body, ub->body, budget, seen);
    }
    case LocalType::Kind::Select:
    case LocalType::Kind::Branch: {
      if (ua->peer != ub->peer || ua->arms.size() != ub->arms.size()) return Tri::False;
      seen.insert({ka, kb});
      Tri acc = Tri::True;
      for (size_t i = 0; i < ua->arms.size(); ++i) {
        if (ua->arms[i].first != ub->arms[i].first) return Tri::False;
        Tri r = bounded_equal(ua->arms[i].second, ub->arms[i].second, budget, seen);
        if (r == Tri::False) return Tri::False;
        if (r == Tri::Unknown) acc = Tri::Unknown;
      }
      return acc;
    }
    case LocalType::Kind::Rec:
      return Tri::Unknown;  // unreachable
  }
  return Tri::Unknown;
}

constexpr int kAgreementUnfoldBudget = 8;

Tri agree(const LocalTypePtr& a, const LocalTypePtr& b) {
  std::set<std::pair<std::string, std::string>> seen;
  return bounded_equal(a, b, kAgreementUnfoldBudget, seen);
}

Tri agree_binary(const BinaryTypePtr& a, const BinaryTypePtr& b);

}  // namespace

std::optional<LocalTypePtr> project_global(const GlobalTypePtr& g, Role p, std::string* why) {
  switch (g->kind) {
    case GlobalType::Kind::End:
      return LocalType::make_end();
    case GlobalType::Kind::Var:
      return LocalType::make_var(g->tvar);
    case GlobalType::Kind::Rec: {
      auto body = project_global(g->body, p, why);
      if (!body) return std::nullopt;
      if ((*body)->kind == LocalType::Kind::Var && (*body)->tvar == g->tvar)
        return LocalType::make_end();
      return LocalType::make_rec(g->tvar, *body);
    }
    case GlobalType::Kind::Msg: {
      auto cont = project_global(g->body, p, why);
      if (!cont) return std::nullopt;
      if (p == g->from) return LocalType::make_send(g->to, g->exch, *cont);
      if (p == g->to) return LocalType::make_recv(g->from, g->exch, *cont);
      return cont;
    }
    case GlobalType::Kind::Choice: {
      if (p == g->from || p == g->to) {
        std::vector<std::pair<std::string, LocalTypePtr>> arms;
        for (const auto& [l, cont] : g->arms) {
          auto pc = project_global(cont, p, why);
          if (!pc) return std::nullopt;
          arms.emplace_back(l, *pc);
        }
        return p == g->from ? LocalType::make_select(g->to, std::move(arms))
                            : LocalType::make_branch(g->from, std::move(arms));
      }
      auto first = project_global(g->arms.front().second, p, why);
      if (!first) return std::nullopt;
      for (size_t i = 1; i < g->arms.size(); ++i) {
        auto pi = project_global(g->arms[i].second, p, why);
        if (!pi) return std::nullopt;
        Tri eq = agree(*first, *pi);
        if (eq != Tri::True) {
          if (why)
            *why = "projection onto role " + std::to_string(p) +
                   " disagrees across branches '" + g->arms.front().first + "' (" +
                   print(*first) + ") and '" + g->arms[i].first + "' (" + print(*pi) +
                   ")" + (eq == Tri::Unknown ? " [undecided at unfold bound]" : "");
          return std::nullopt;
        }
      }
      return first;
    }
  }
  return std::nullopt;
}

std::optional<EndpointTypeMap> projection_set(const std::string& session,
                                              const GlobalTypePtr& g, std::string* why) {
  EndpointTypeMap out;
  Role n = max_role(roles_global(g));
  for (Role p = 1; p <= n; ++p) {
    auto t = project_global(g, p, why);
    if (!t) return std::nullopt;
    out[Endpoint{session, p}] = *t;
  }
  return out;
}

std::optional<BinaryTypePtr> project_local(const LocalTypePtr& t, Role q, std::string* why) {
  switch (t->kind) {
    case LocalType::Kind::End:
      return BinaryType::make_end();
    case LocalType::Kind::Var:
      return BinaryType::make_var(t->tvar);
    case LocalType::Kind::Rec: {
      auto body = project_local(t->body, q, why);
      if (!body) return std::nullopt;
      if ((*body)->kind == BinaryType::Kind::Var && (*body)->tvar == t->tvar)
        return BinaryType::make_end();
      return BinaryType::make_rec(t->tvar, *body);
    }
    case LocalType::Kind::Send:
    case LocalType::Kind::Recv: {
      auto cont = project_local(t->body, q, why);
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
          auto pc = project_local(cont, q, why);
          if (!pc) return std::nullopt;
          arms.emplace_back(l, *pc);
        }
        return t->kind == LocalType::Kind::Select
                   ? BinaryType::make_select(std::move(arms))
                   : BinaryType::make_branch(std::move(arms));
      }
      auto first = project_local(t->arms.front().second, q, why);
      if (!first) return std::nullopt;
      for (size_t i = 1; i < t->arms.size(); ++i) {
        auto pi = project_local(t->arms[i].second, q, why);
        if (!pi) return std::nullopt;
        if (agree_binary(*first, *pi) != Tri::True) {
          if (why)
            *why = "local projection onto role " + std::to_string(q) +
                   " disagrees across branches";
          return std::nullopt;
        }
      }
      return first;
    }
  }
  return std::nullopt;
}

namespace {

Tri agree_binary_rec(const BinaryTypePtr& a, const BinaryTypePtr& b, int budget,
                     std::set<std::pair<std::string, std::string>>& seen) {
  std::string ka = type_key(a), kb = type_key(b);
  if (ka == kb) return Tri::True;
  if (seen.count({ka, kb})) return Tri::True;
  BinaryTypePtr ua = a, ub = b;
  if (ua->kind == BinaryType::Kind::Rec || ub->kind == BinaryType::Kind::Rec) {
    if (budget <= 0) return Tri::Unknown;
    seen.insert({ka, kb});
    auto unfold_b = [](const BinaryTypePtr& x) -> BinaryTypePtr {
      if (x->kind != BinaryType::Kind::Rec) return x;
      std::function<BinaryTypePtr(const BinaryTypePtr&)> subst =
          [&](const BinaryTypePtr& y) -> BinaryTypePtr {
        switch (y->kind) {
          case BinaryType::Kind::End: return y;
          case BinaryType::Kind::Var: return y->tvar == x->tvar ? x : y;
          case BinaryType::Kind::Rec:
            if (y->tvar == x->tvar) return y;
            return BinaryType::make_rec(y->tvar, subst(y->body));
          case BinaryType::Kind::Out: return BinaryType::make_out(y->exch, subst(y->body));
          case BinaryType::Kind::In: return BinaryType::make_in(y->exch, subst(y->body));
          case BinaryType::Kind::Select:
          case BinaryType::Kind::Branch: {
            std::vector<std::pair<std::string, BinaryTypePtr>> arms;
            for (const auto& [l, c] : y->arms) arms.emplace_back(l, subst(c));
            return y->kind == BinaryType::Kind::Select
                       ? BinaryType::make_select(std::move(arms))
                       : BinaryType::make_branch(std::move(arms));
          }
        }
        return y;
      };
      return subst(x->body);
    };
    return agree_binary_rec(unfold_b(ua), unfold_b(ub), budget - 1, seen);
  }
  if (ua->kind != ub->kind) return Tri::False;
  switch (ua->kind) {
    case BinaryType::Kind::End: return Tri::True;
    case BinaryType::Kind::Var: return ua->tvar == ub->tvar ? Tri::True : Tri::False;
    case BinaryType::Kind::Out:
    case BinaryType::Kind::In: {
      if (!equal(ua->exch, ub->exch)) return Tri::False;
      seen.insert({ka, kb});
      return agree_binary_rec(ua->body, ub->body, budget, seen);
    }
    case BinaryType::Kind::Select:
    case BinaryType::Kind::Branch: {
      if (ua->arms.size() != ub->arms.size()) return Tri::False;
      seen.insert({ka, kb});
      Tri acc = Tri::True;
      for (size_t i = 0; i < ua->arms.size(); ++i) {
        if (ua->arms[i].first != ub->arms[i].first) return Tri::False;
        Tri r = agree_binary_rec(ua->arms[i].second, ub->arms[i].second, budget, seen);
        if (r == Tri::False) return Tri::False;
        if (r == Tri::Unknown) acc = Tri::Unknown;
      }
      return acc;
    }
    case BinaryType::Kind::Rec:
      return Tri::Unknown;
  }
  return Tri::Unknown;
}

Tri agree_binary(const BinaryTypePtr& a, const BinaryTypePtr& b) {
  std::set<std::pair<std::string, std::string>> seen;
  return agree_binary_rec(a, b, kAgreementUnfoldBudget, seen);
}

}  // namespace

BinaryTypePtr dual(const BinaryTypePtr& b) {
  switch (b->kind) {
    case BinaryType::Kind::End:
      return b;
    case BinaryType::Kind::Var:
      return b;
    case BinaryType::Kind::Rec:
      return BinaryType::make_rec(b->tvar, dual(b->body));
    case BinaryType::Kind::Out:
      return BinaryType::make_in(b->exch, dual(b->body));
    case BinaryType::Kind::In:
      return BinaryType::make_out(b->exch, dual(b->body));
    case BinaryType::Kind::Select:
    case BinaryType::Kind::Branch: {
      std::vector<std::pair<std::string, BinaryTypePtr>> arms;
      for (const auto& [l, cont] : b->arms) arms.emplace_back(l, dual(cont));
      return b->kind == BinaryType::Kind::Select ? BinaryType::make_branch(std::move(arms))
                                                 : BinaryType::make_select(std::move(arms));
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Coherence
// ---------------------------------------------------------------------------

bool coherent_at(const EndpointTypeMap& endpoints, const std::string& session) {
  std::vector<std::pair<Role, LocalTypePtr>> here;
  for (const auto& [ep, t] : endpoints)
    if (ep.session == session) here.emplace_back(ep.role, t);
  for (size_t i = 0; i < here.size(); ++i) {
    for (size_t j = 0; j < here.size(); ++j) {
      if (i == j) continue;
      auto bij = project_local(here[i].second, here[j].first);
      auto bji = project_local(here[j].second, here[i].first);
      if (!bij || !bji) return false;
      if (!equal(*bij, dual(*bji))) return false;
    }
  }
  return true;
}

bool coherent(const EndpointTypeMap& endpoints) {
  std::set<std::string> sessions;
  for (const auto& [ep, t] : endpoints) sessions.insert(ep.session);
  for (const auto& s : sessions)
    if (!coherent_at(endpoints, s)) return false;
  return true;
}

bool fully_coherent(const EndpointTypeMap& endpoints) {
  if (!coherent(endpoints)) return false;
  for (const auto& [ep, t] : endpoints) {
    for (Role q : roles_local(t)) {
      if (!endpoints.count(Endpoint{ep.session, q})) return false;
    }
  }
  return true;
}

size_t type_size(const GlobalTypePtr& g) {
  switch (g->kind) {
    case GlobalType::Kind::End:
    case GlobalType::Kind::Var:
      return 1;
    case GlobalType::Kind::Rec:
      return 1 + type_size(g->body);
    case GlobalType::Kind::Msg:
      return 1 + type_size(g->body);
    case GlobalType::Kind::Choice: {
      size_t n = 1;
      for (const auto& [l, cont] : g->arms) n += type_size(cont);
      return n;
    }
  }
  return 1;
}

size_t type_size(const LocalTypePtr& t) {
  switch (t->kind) {
    case LocalType::Kind::End:
    case LocalType::Kind::Var:
      return 1;
    case LocalType::Kind::Rec:
    case LocalType::Kind::Send:
    case LocalType::Kind::Recv:
      return 1 + (t->body ? type_size(t->body) : 0);
    case LocalType::Kind::Select:
    case LocalType::Kind::Branch: {
      size_t n = 1;
      for (const auto& [l, cont] : t->arms) n += type_size(cont);
      return n;
    }
  }
  return 1;
}

size_t type_size(const BinaryTypePtr& b) {
  switch (b->kind) {
    case BinaryType::Kind::End:
    case BinaryType::Kind::Var:
      return 1;
    case BinaryType::Kind::Rec:
    case BinaryType::Kind::Out:
    case BinaryType::Kind::In:
      return 1 + (b->body ? type_size(b->body) : 0);
    case BinaryType::Kind::Select:
    case BinaryType::Kind::Branch: {
      size_t n = 1;
      for (const auto& [l, cont] : b->arms) n += type_size(cont);
      return n;
    }
  }
  return 1;
}

}  // namespace mpst
