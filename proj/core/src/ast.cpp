#include "mpst/ast.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <sstream>

namespace mpst {

RoleSet make_role_set(std::vector<Role> roles) {
  std::sort(roles.begin(), roles.end());
  roles.erase(std::unique(roles.begin(), roles.end()), roles.end());
  return roles;
}

RoleSet role_union(const RoleSet& a, const RoleSet& b) {
  RoleSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool roles_disjoint(const RoleSet& a, const RoleSet& b) {
  RoleSet tmp;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(tmp));
  return tmp.empty();
}

Value Value::make_bool(bool b) {
  Value v;
  v.kind = Kind::Bool;
  v.boolean = b;
  return v;
}

Value Value::make_name(std::string n) {
  Value v;
  v.kind = Kind::Name;
  v.name = std::move(n);
  return v;
}

Value Value::make_endpoint(Endpoint ep) {
  Value v;
  v.kind = Kind::Endpoint;
  v.endpoint = std::move(ep);
  return v;
}

std::string print(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Bool: return v.boolean ? "true" : "false";
    case Value::Kind::Name: return v.name;
    case Value::Kind::Endpoint:
      return v.endpoint.session + "[" + std::to_string(v.endpoint.role) + "]";
  }
  return "?";
}

ExprPtr Expr::make_bool(bool b) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Bool;
  e->boolean = b;
  return e;
}

ExprPtr Expr::make_var(std::string x) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Var;
  e->id = std::move(x);
  return e;
}

ExprPtr Expr::make_name(std::string n) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Name;
  e->id = std::move(n);
  return e;
}

ExprPtr Expr::make_endpoint(Endpoint ep) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Endpoint;
  e->endpoint = std::move(ep);
  return e;
}

ExprPtr Expr::make_and(ExprPtr l, ExprPtr r) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::And;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  return e;
}

ExprPtr Expr::make_eq(ExprPtr l, ExprPtr r) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Eq;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  return e;
}

std::string print(const ExprPtr& e) {
  if (!e) return "?";
  switch (e->kind) {
    case Expr::Kind::Bool: return e->boolean ? "true" : "false";
    case Expr::Kind::Var:
    case Expr::Kind::Name: return e->id;
    case Expr::Kind::Endpoint:
      return e->endpoint.session + "[" + std::to_string(e->endpoint.role) + "]";
    case Expr::Kind::And:
      return print(e->lhs) + " and " + print(e->rhs);
    case Expr::Kind::Eq:
      return print(e->lhs) + " == " + print(e->rhs);
  }
  return "?";
}

std::optional<Value> eval(const ExprPtr& e) {
  if (!e) return std::nullopt;
  switch (e->kind) {
    case Expr::Kind::Bool: return Value::make_bool(e->boolean);
    case Expr::Kind::Name: return Value::make_name(e->id);
    case Expr::Kind::Endpoint: return Value::make_endpoint(e->endpoint);
    case Expr::Kind::Var: return std::nullopt;
    case Expr::Kind::And: {
      auto l = eval(e->lhs);
      auto r = eval(e->rhs);
      if (!l || !r) return std::nullopt;
      if (l->kind != Value::Kind::Bool || r->kind != Value::Kind::Bool) return std::nullopt;
      return Value::make_bool(l->boolean && r->boolean);
    }
    case Expr::Kind::Eq: {
      auto l = eval(e->lhs);
      auto r = eval(e->rhs);
      if (!l || !r) return std::nullopt;
      return Value::make_bool(*l == *r);
    }
  }
  return std::nullopt;
}

ExprPtr value_to_expr(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Bool: return Expr::make_bool(v.boolean);
    case Value::Kind::Name: return Expr::make_name(v.name);
    case Value::Kind::Endpoint: return Expr::make_endpoint(v.endpoint);
  }
  return nullptr;
}

Channel Channel::make_var(std::string x) {
  Channel c;
  c.kind = Kind::Var;
  c.var = std::move(x);
  return c;
}

Channel Channel::make_endpoint(Endpoint ep) {
  Channel c;
  c.kind = Kind::Endpoint;
  c.endpoint = std::move(ep);
  return c;
}

std::string print(const Channel& c) {
  if (c.kind == Channel::Kind::Var) return c.var;
  return c.endpoint.session + "[" + std::to_string(c.endpoint.role) + "]";
}

ProcessPtr Process::make_inact() {
  static const ProcessPtr inact = [] {
    auto p = std::make_shared<Process>();
    p->kind = Kind::Inact;
    return p;
  }();
  return inact;
}

ProcessPtr Process::make_request(bool uvar, std::string u, Role p, std::string x, ProcessPtr body) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::Request;
  n->shared_is_var = uvar;
  n->shared_id = std::move(u);
  n->role = p;
  n->binder = std::move(x);
  n->body = std::move(body);
  return n;
}

ProcessPtr Process::make_accept(bool uvar, std::string u, Role p, std::string x, ProcessPtr body) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::Accept;
  n->shared_is_var = uvar;
  n->shared_id = std::move(u);
  n->role = p;
  n->binder = std::move(x);
  n->body = std::move(body);
  return n;
}

ProcessPtr Process::make_send(Channel c, Role q, ExprPtr e, ProcessPtr body) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::Send;
  n->channel = std::move(c);
  n->role = q;
  n->expr = std::move(e);
  n->body = std::move(body);
  return n;
}

ProcessPtr Process::make_recv(Channel c, Role q, std::string x, ProcessPtr body) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::Recv;
  n->channel = std::move(c);
  n->role = q;
  n->binder = std::move(x);
  n->body = std::move(body);
  return n;
}

ProcessPtr Process::make_select(Channel c, Role q, std::string l, ProcessPtr body) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::Select;
  n->channel = std::move(c);
  n->role = q;
  n->label = std::move(l);
  n->body = std::move(body);
  return n;
}

ProcessPtr Process::make_branch(Channel c, Role q, std::vector<BranchArm> arms) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::Branch;
  n->channel = std::move(c);
  n->role = q;
  n->arms = std::move(arms);
  return n;
}

ProcessPtr Process::make_if(ExprPtr e, ProcessPtr thenp, ProcessPtr elsep) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::If;
  n->expr = std::move(e);
  n->left = std::move(thenp);
  n->right = std::move(elsep);
  return n;
}

ProcessPtr Process::make_par(ProcessPtr l, ProcessPtr r) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::Par;
  n->left = std::move(l);
  n->right = std::move(r);
  return n;
}

ProcessPtr Process::make_hide(std::string nm, ProcessPtr body) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::Hide;
  n->name = std::move(nm);
  n->body = std::move(body);
  return n;
}

ProcessPtr Process::make_rec(std::string x, ProcessPtr body) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::Rec;
  n->name = std::move(x);
  n->body = std::move(body);
  return n;
}

ProcessPtr Process::make_proc_var(std::string x) {
  auto n = std::make_shared<Process>();
  n->kind = Kind::ProcVar;
  n->name = std::move(x);
  return n;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

bool needs_parens_as_tail(const ProcessPtr& p) {
  return p->kind == Process::Kind::Par;
}

void print_into(const ProcessPtr& p, std::string& out);

void print_tail(const ProcessPtr& p, std::string& out) {
  if (needs_parens_as_tail(p)) {
    out += "(";
    print_into(p, out);
    out += ")";
  } else {
    print_into(p, out);
  }
}

void print_into(const ProcessPtr& p, std::string& out) {
  using K = Process::Kind;
  switch (p->kind) {
    case K::Inact:
      out += "0";
      return;
    case K::Request:
      out += p->shared_id + "~[" + std::to_string(p->role) + "](" + p->binder + "). ";
      print_tail(p->body, out);
      return;
    case K::Accept:
      out += p->shared_id + "[" + std::to_string(p->role) + "](" + p->binder + "). ";
      print_tail(p->body, out);
      return;
    case K::Send:
      out += print(p->channel) + "[" + std::to_string(p->role) + "]!<" + print(p->expr) + ">. ";
      print_tail(p->body, out);
      return;
    case K::Recv:
      out += print(p->channel) + "[" + std::to_string(p->role) + "]?(" + p->binder + "). ";
      print_tail(p->body, out);
      return;
    case K::Select:
      out += print(p->channel) + "[" + std::to_string(p->role) + "](+)" + p->label + ". ";
      print_tail(p->body, out);
      return;
    case K::Branch: {
      out += print(p->channel) + "[" + std::to_string(p->role) + "]&{";
      bool first = true;
      for (const auto& arm : p->arms) {
        if (!first) out += ", ";
        first = false;
        out += arm.label + ": ";
        print_tail(arm.body, out);
      }
      out += "}";
      return;
    }
    case K::If:
      out += "if " + print(p->expr) + " then (";
      print_into(p->left, out);
      out += ") else (";
      print_into(p->right, out);
      out += ")";
      return;
    case K::Par:
      if (p->left->kind == K::Par) {
        out += "(";
        print_into(p->left, out);
        out += ")";
      } else if (p->left->kind == K::If) {
        out += "(";
        print_into(p->left, out);
        out += ")";
      } else {
        print_into(p->left, out);
      }
      out += " | ";
      if (p->right->kind == K::Par || p->right->kind == K::If) {
        out += "(";
        print_into(p->right, out);
        out += ")";
      } else {
        print_into(p->right, out);
      }
      return;
    case K::Hide:
      out += "(new " + p->name + ") ";
      print_tail(p->body, out);
      return;
    case K::Rec:
      out += "rec " + p->name + ". ";
      print_tail(p->body, out);
      return;
    case K::ProcVar:
      out += p->name;
      return;
  }
}

}  // namespace

std::string print(const ProcessPtr& p) {
  std::string out;
  print_into(p, out);
  return out;
}

// ---------------------------------------------------------------------------
// Free names / variables
// ---------------------------------------------------------------------------

namespace {

void expr_names_vars(const ExprPtr& e, std::set<std::string>* names,
                     std::set<std::string>* vars) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::Bool: return;
    case Expr::Kind::Var:
      if (vars) vars->insert(e->id);
      return;
    case Expr::Kind::Name:
      if (names) names->insert(e->id);
      return;
    case Expr::Kind::Endpoint:
      if (names) names->insert(e->endpoint.session);
      return;
    case Expr::Kind::And:
    case Expr::Kind::Eq:
      expr_names_vars(e->lhs, names, vars);
      expr_names_vars(e->rhs, names, vars);
      return;
  }
}

void collect_free(const ProcessPtr& p, std::set<std::string>& names,
                  std::set<std::string>& vars) {
  using K = Process::Kind;
  switch (p->kind) {
    case K::Inact:
      return;
    case K::Request:
    case K::Accept: {
      if (p->shared_is_var) vars.insert(p->shared_id);
      else names.insert(p->shared_id);
      std::set<std::string> bn, bv;
      collect_free(p->body, bn, bv);
      bv.erase(p->binder);
      names.insert(bn.begin(), bn.end());
      vars.insert(bv.begin(), bv.end());
      return;
    }
    case K::Send:
    case K::Select: {
      if (p->channel.kind == Channel::Kind::Var) vars.insert(p->channel.var);
      else names.insert(p->channel.endpoint.session);
      if (p->kind == K::Send) expr_names_vars(p->expr, &names, &vars);
      collect_free(p->body, names, vars);
      return;
    }
    case K::Recv: {
      if (p->channel.kind == Channel::Kind::Var) vars.insert(p->channel.var);
      else names.insert(p->channel.endpoint.session);
      std::set<std::string> bn, bv;
      collect_free(p->body, bn, bv);
      bv.erase(p->binder);
      names.insert(bn.begin(), bn.end());
      vars.insert(bv.begin(), bv.end());
      return;
    }
    case K::Branch: {
      if (p->channel.kind == Channel::Kind::Var) vars.insert(p->channel.var);
      else names.insert(p->channel.endpoint.session);
      for (const auto& arm : p->arms) collect_free(arm.body, names, vars);
      return;
    }
    case K::If:
      expr_names_vars(p->expr, &names, &vars);
      collect_free(p->left, names, vars);
      collect_free(p->right, names, vars);
      return;
    case K::Par:
      collect_free(p->left, names, vars);
      collect_free(p->right, names, vars);
      return;
    case K::Hide: {
      std::set<std::string> bn, bv;
      collect_free(p->body, bn, bv);
      bn.erase(p->name);
      names.insert(bn.begin(), bn.end());
      vars.insert(bv.begin(), bv.end());
      return;
    }
    case K::Rec: {
      std::set<std::string> bn, bv;
      collect_free(p->body, bn, bv);
      bv.erase(p->name);
      names.insert(bn.begin(), bn.end());
      vars.insert(bv.begin(), bv.end());
      return;
    }
    case K::ProcVar:
      vars.insert(p->name);
      return;
  }
}

}  // namespace

std::set<std::string> free_names(const ProcessPtr& p) {
  std::set<std::string> names, vars;
  collect_free(p, names, vars);
  return names;
}

std::set<std::string> free_vars(const ProcessPtr& p) {
  std::set<std::string> names, vars;
  collect_free(p, names, vars);
  return vars;
}

bool is_closed(const ProcessPtr& p) { return free_vars(p).empty(); }

// ---------------------------------------------------------------------------
// Substitution and renaming
// ---------------------------------------------------------------------------

namespace {

std::string fresh_name(const std::string& prefix, const std::set<std::string>& avoid) {
  for (int i = 1;; ++i) {
    std::string candidate = prefix + std::to_string(i);
    if (!avoid.count(candidate)) return candidate;
  }
}

ExprPtr subst_expr(const ExprPtr& e, const std::string& var, const Value& v) {
  if (!e) return e;
  switch (e->kind) {
    case Expr::Kind::Bool:
    case Expr::Kind::Name:
    case Expr::Kind::Endpoint:
      return e;
    case Expr::Kind::Var:
      if (e->id == var) return value_to_expr(v);
      return e;
    case Expr::Kind::And:
      return Expr::make_and(subst_expr(e->lhs, var, v), subst_expr(e->rhs, var, v));
    case Expr::Kind::Eq:
      return Expr::make_eq(subst_expr(e->lhs, var, v), subst_expr(e->rhs, var, v));
  }
  return e;
}

Channel subst_channel(const Channel& c, const std::string& var, const Value& v) {
  if (c.kind == Channel::Kind::Var && c.var == var && v.kind == Value::Kind::Endpoint) {
    return Channel::make_endpoint(v.endpoint);
  }
  return c;
}

// Renames a free name throughout (names only; variables untouched).
ProcessPtr rename_name(const ProcessPtr& p, const std::string& from, const std::string& to);

ExprPtr rename_name_expr(const ExprPtr& e, const std::string& from, const std::string& to) {
  if (!e) return e;
  switch (e->kind) {
    case Expr::Kind::Bool:
    case Expr::Kind::Var:
      return e;
    case Expr::Kind::Name:
      if (e->id == from) return Expr::make_name(to);
      return e;
    case Expr::Kind::Endpoint:
      if (e->endpoint.session == from) return Expr::make_endpoint({to, e->endpoint.role});
      return e;
    case Expr::Kind::And:
      return Expr::make_and(rename_name_expr(e->lhs, from, to), rename_name_expr(e->rhs, from, to));
    case Expr::Kind::Eq:
      return Expr::make_eq(rename_name_expr(e->lhs, from, to), rename_name_expr(e->rhs, from, to));
  }
  return e;
}

ProcessPtr rename_name(const ProcessPtr& p, const std::string& from, const std::string& to) {
  using K = Process::Kind;
  auto ch = [&](const Channel& c) {
    if (c.kind == Channel::Kind::Endpoint && c.endpoint.session == from)
      return Channel::make_endpoint({to, c.endpoint.role});
    return c;
  };
  switch (p->kind) {
    case K::Inact:
    case K::ProcVar:
      return p;
    case K::Request:
    case K::Accept: {
      std::string u = (!p->shared_is_var && p->shared_id == from) ? to : p->shared_id;
      auto b = rename_name(p->body, from, to);
      if (u == p->shared_id && b == p->body) return p;
      return p->kind == K::Request
                 ? Process::make_request(p->shared_is_var, u, p->role, p->binder, b)
                 : Process::make_accept(p->shared_is_var, u, p->role, p->binder, b);
    }
    case K::Send:
      return Process::make_send(ch(p->channel), p->role, rename_name_expr(p->expr, from, to),
                                rename_name(p->body, from, to));
    case K::Recv:
      return Process::make_recv(ch(p->channel), p->role, p->binder,
                                rename_name(p->body, from, to));
    case K::Select:
      return Process::make_select(ch(p->channel), p->role, p->label,
                                  rename_name(p->body, from, to));
    case K::Branch: {
      std::vector<BranchArm> arms;
      arms.reserve(p->arms.size());
      for (const auto& a : p->arms) arms.push_back({a.label, rename_name(a.body, from, to)});
      return Process::make_branch(ch(p->channel), p->role, std::move(arms));
    }
    case K::If:
      return Process::make_if(rename_name_expr(p->expr, from, to),
                              rename_name(p->left, from, to), rename_name(p->right, from, to));
    case K::Par:
      return Process::make_par(rename_name(p->left, from, to), rename_name(p->right, from, to));
    case K::Hide: {
      if (p->name == from) return p;  // shadowed
      if (p->name == to) {
        // Avoid capture of the incoming name by this binder.
        auto avoid = free_names(p->body);
        avoid.insert(from);
        avoid.insert(to);
        std::string nn = fresh_name("#n", avoid);
        auto body = rename_name(p->body, p->name, nn);
        return Process::make_hide(nn, rename_name(body, from, to));
      }
      return Process::make_hide(p->name, rename_name(p->body, from, to));
    }
    case K::Rec:
      return Process::make_rec(p->name, rename_name(p->body, from, to));
  }
  return p;
}

}  // namespace

ProcessPtr substitute(const ProcessPtr& p, const std::string& var, const Value& v) {
  using K = Process::Kind;
  switch (p->kind) {
    case K::Inact:
    case K::ProcVar:
      return p;
    case K::Request:
    case K::Accept: {
      bool uvar = p->shared_is_var;
      std::string u = p->shared_id;
      if (uvar && u == var && v.kind == Value::Kind::Name) {
        uvar = false;
        u = v.name;
      }
      ProcessPtr body = p->body;
      if (p->binder != var) body = substitute(body, var, v);
      if (uvar == p->shared_is_var && u == p->shared_id && body == p->body) return p;
      return p->kind == K::Request
                 ? Process::make_request(uvar, u, p->role, p->binder, body)
                 : Process::make_accept(uvar, u, p->role, p->binder, body);
    }
    case K::Send:
      return Process::make_send(subst_channel(p->channel, var, v), p->role,
                                subst_expr(p->expr, var, v), substitute(p->body, var, v));
    case K::Recv: {
      ProcessPtr body = p->body;
      if (p->binder != var) body = substitute(body, var, v);
      return Process::make_recv(subst_channel(p->channel, var, v), p->role, p->binder, body);
    }
    case K::Select:
      return Process::make_select(subst_channel(p->channel, var, v), p->role, p->label,
                                  substitute(p->body, var, v));
    case K::Branch: {
      std::vector<BranchArm> arms;
      arms.reserve(p->arms.size());
      for (const auto& a : p->arms) arms.push_back({a.label, substitute(a.body, var, v)});
      return Process::make_branch(subst_channel(p->channel, var, v), p->role, std::move(arms));
    }
    case K::If:
      return Process::make_if(subst_expr(p->expr, var, v), substitute(p->left, var, v),
                              substitute(p->right, var, v));
    case K::Par:
      return Process::make_par(substitute(p->left, var, v), substitute(p->right, var, v));
    case K::Hide: {
      // The value may mention this bound name; rename the binder first.
      bool clash = (v.kind == Value::Kind::Name && v.name == p->name) ||
                   (v.kind == Value::Kind::Endpoint && v.endpoint.session == p->name);
      if (clash) {
        auto avoid = free_names(p->body);
        avoid.insert(p->name);
        if (v.kind == Value::Kind::Name) avoid.insert(v.name);
        else avoid.insert(v.endpoint.session);
        std::string nn = fresh_name("#n", avoid);
        auto body = rename_name(p->body, p->name, nn);
        return Process::make_hide(nn, substitute(body, var, v));
      }
      return Process::make_hide(p->name, substitute(p->body, var, v));
    }
    case K::Rec:
      return Process::make_rec(p->name, substitute(p->body, var, v));
  }
  return p;
}

ProcessPtr substitute_proc_var(const ProcessPtr& p, const std::string& x, const ProcessPtr& q) {
  using K = Process::Kind;
  switch (p->kind) {
    case K::Inact:
      return p;
    case K::ProcVar:
      return p->name == x ? q : p;
    case K::Request:
      return Process::make_request(p->shared_is_var, p->shared_id, p->role, p->binder,
                                   substitute_proc_var(p->body, x, q));
    case K::Accept:
      return Process::make_accept(p->shared_is_var, p->shared_id, p->role, p->binder,
                                  substitute_proc_var(p->body, x, q));
    case K::Send:
      return Process::make_send(p->channel, p->role, p->expr, substitute_proc_var(p->body, x, q));
    case K::Recv:
      return Process::make_recv(p->channel, p->role, p->binder,
                                substitute_proc_var(p->body, x, q));
    case K::Select:
      return Process::make_select(p->channel, p->role, p->label,
                                  substitute_proc_var(p->body, x, q));
    case K::Branch: {
      std::vector<BranchArm> arms;
      for (const auto& a : p->arms) arms.push_back({a.label, substitute_proc_var(a.body, x, q)});
      return Process::make_branch(p->channel, p->role, std::move(arms));
    }
    case K::If:
      return Process::make_if(p->expr, substitute_proc_var(p->left, x, q),
                              substitute_proc_var(p->right, x, q));
    case K::Par:
      return Process::make_par(substitute_proc_var(p->left, x, q),
                               substitute_proc_var(p->right, x, q));
    case K::Hide: {
      // Bound name must not capture free names of q.
      auto qn = free_names(q);
      if (qn.count(p->name)) {
        auto avoid = free_names(p->body);
        avoid.insert(qn.begin(), qn.end());
        std::string nn = fresh_name("#n", avoid);
        auto body = rename_name(p->body, p->name, nn);
        return Process::make_hide(nn, substitute_proc_var(body, x, q));
      }
      return Process::make_hide(p->name, substitute_proc_var(p->body, x, q));
    }
    case K::Rec:
      if (p->name == x) return p;
      return Process::make_rec(p->name, substitute_proc_var(p->body, x, q));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Structural equality
// ---------------------------------------------------------------------------

namespace {

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::Bool: return a->boolean == b->boolean;
    case Expr::Kind::Var:
    case Expr::Kind::Name: return a->id == b->id;
    case Expr::Kind::Endpoint: return a->endpoint == b->endpoint;
    case Expr::Kind::And:
    case Expr::Kind::Eq:
      return expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
  }
  return false;
}

}  // namespace

bool equal(const ProcessPtr& a, const ProcessPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  using K = Process::Kind;
  switch (a->kind) {
    case K::Inact: return true;
    case K::Request:
    case K::Accept:
      return a->shared_is_var == b->shared_is_var && a->shared_id == b->shared_id &&
             a->role == b->role && a->binder == b->binder && equal(a->body, b->body);
    case K::Send:
      return a->channel == b->channel && a->role == b->role && expr_equal(a->expr, b->expr) &&
             equal(a->body, b->body);
    case K::Recv:
      return a->channel == b->channel && a->role == b->role && a->binder == b->binder &&
             equal(a->body, b->body);
    case K::Select:
      return a->channel == b->channel && a->role == b->role && a->label == b->label &&
             equal(a->body, b->body);
    case K::Branch: {
      if (!(a->channel == b->channel) || a->role != b->role || a->arms.size() != b->arms.size())
        return false;
      for (size_t i = 0; i < a->arms.size(); ++i) {
        if (a->arms[i].label != b->arms[i].label) return false;
        if (!equal(a->arms[i].body, b->arms[i].body)) return false;
      }
      return true;
    }
    case K::If:
      return expr_equal(a->expr, b->expr) && equal(a->left, b->left) && equal(a->right, b->right);
    case K::Par:
      return equal(a->left, b->left) && equal(a->right, b->right);
    case K::Hide:
    case K::Rec:
      return a->name == b->name && equal(a->body, b->body);
    case K::ProcVar:
      return a->name == b->name;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Normal form
// ---------------------------------------------------------------------------

namespace {

struct Spine {
  std::vector<std::string> binders;
  std::vector<ProcessPtr> comps;
};

// Flattens the top parallel/restriction structure; binders renamed apart
// using temporary names so the caller can pick canonical ones.
void collect_spine(const ProcessPtr& p, Spine& s, int& tmp_counter) {
  using K = Process::Kind;
  switch (p->kind) {
    case K::Inact:
      return;
    case K::Par:
      collect_spine(p->left, s, tmp_counter);
      collect_spine(p->right, s, tmp_counter);
      return;
    case K::Hide: {
      std::string tmp = "#tmp" + std::to_string(++tmp_counter);
      auto body = rename_name(p->body, p->name, tmp);
      s.binders.push_back(tmp);
      collect_spine(body, s, tmp_counter);
      return;
    }
    default:
      s.comps.push_back(p);
      return;
  }
}

// Alpha-invariant print used for ordering components: prefix binders are
// rendered positionally, free identifiers literally.
void compare_print(const ProcessPtr& p, std::map<std::string, std::string>& env, int& depth,
                   std::string& out);

void compare_print_expr(const ExprPtr& e, std::map<std::string, std::string>& env,
                        std::string& out) {
  if (!e) { out += "?"; return; }
  switch (e->kind) {
    case Expr::Kind::Bool: out += e->boolean ? "true" : "false"; return;
    case Expr::Kind::Var: {
      auto it = env.find("v:" + e->id);
      out += it != env.end() ? it->second : e->id;
      return;
    }
    case Expr::Kind::Name: out += e->id; return;
    case Expr::Kind::Endpoint:
      out += e->endpoint.session + "[" + std::to_string(e->endpoint.role) + "]";
      return;
    case Expr::Kind::And:
      compare_print_expr(e->lhs, env, out);
      out += " and ";
      compare_print_expr(e->rhs, env, out);
      return;
    case Expr::Kind::Eq:
      compare_print_expr(e->lhs, env, out);
      out += " == ";
      compare_print_expr(e->rhs, env, out);
      return;
  }
}

void compare_print_channel(const Channel& c, std::map<std::string, std::string>& env,
                           std::string& out) {
  if (c.kind == Channel::Kind::Var) {
    auto it = env.find("v:" + c.var);
    out += it != env.end() ? it->second : c.var;
  } else {
    out += c.endpoint.session + "[" + std::to_string(c.endpoint.role) + "]";
  }
}

void compare_print(const ProcessPtr& p, std::map<std::string, std::string>& env, int& depth,
                   std::string& out) {
  using K = Process::Kind;
  switch (p->kind) {
    case K::Inact: out += "0"; return;
    case K::Request:
    case K::Accept: {
      if (p->shared_is_var) {
        auto it = env.find("v:" + p->shared_id);
        out += it != env.end() ? it->second : p->shared_id;
      } else {
        out += p->shared_id;
      }
      out += p->kind == K::Request ? "~[" : "[";
      out += std::to_string(p->role) + "](";
      std::string tok = "$" + std::to_string(++depth);
      out += tok + ").";
      auto saved = env.find("v:" + p->binder) != env.end()
                       ? std::optional<std::string>(env["v:" + p->binder])
                       : std::nullopt;
      env["v:" + p->binder] = tok;
      compare_print(p->body, env, depth, out);
      if (saved) env["v:" + p->binder] = *saved; else env.erase("v:" + p->binder);
      return;
    }
    case K::Send:
      compare_print_channel(p->channel, env, out);
      out += "[" + std::to_string(p->role) + "]!<";
      compare_print_expr(p->expr, env, out);
      out += ">.";
      compare_print(p->body, env, depth, out);
      return;
    case K::Recv: {
      compare_print_channel(p->channel, env, out);
      out += "[" + std::to_string(p->role) + "]?(";
      std::string tok = "$" + std::to_string(++depth);
      out += tok + ").";
      auto saved = env.find("v:" + p->binder) != env.end()
                       ? std::optional<std::string>(env["v:" + p->binder])
                       : std::nullopt;
      env["v:" + p->binder] = tok;
      compare_print(p->body, env, depth, out);
      if (saved) env["v:" + p->binder] = *saved; else env.erase("v:" + p->binder);
      return;
    }
    case K::Select:
      compare_print_channel(p->channel, env, out);
      out += "[" + std::to_string(p->role) + "](+)" + p->label + ".";
      compare_print(p->body, env, depth, out);
      return;
    case K::Branch: {
      compare_print_channel(p->channel, env, out);
      out += "[" + std::to_string(p->role) + "]&{";
      for (const auto& a : p->arms) {
        out += a.label + ":";
        compare_print(a.body, env, depth, out);
        out += ",";
      }
      out += "}";
      return;
    }
    case K::If:
      out += "if ";
      compare_print_expr(p->expr, env, out);
      out += " then (";
      compare_print(p->left, env, depth, out);
      out += ") else (";
      compare_print(p->right, env, depth, out);
      out += ")";
      return;
    case K::Par:
      compare_print(p->left, env, depth, out);
      out += " | ";
      compare_print(p->right, env, depth, out);
      return;
    case K::Hide: {
      std::string tok = "$" + std::to_string(++depth);
      out += "(new " + tok + ")(";
      auto body = rename_name(p->body, p->name, tok);
      compare_print(body, env, depth, out);
      out += ")";
      return;
    }
    case K::Rec: {
      std::string tok = "$" + std::to_string(++depth);
      out += "rec " + tok + ".";
      auto body = substitute_proc_var(p->body, p->name, Process::make_proc_var(tok));
      compare_print(body, env, depth, out);
      return;
    }
    case K::ProcVar: {
      out += p->name;
      return;
    }
  }
}

std::string compare_key(const ProcessPtr& p) {
  std::map<std::string, std::string> env;
  int depth = 0;
  std::string out;
  compare_print(p, env, depth, out);
  return out;
}

// Picks canonical restriction names and component order by minimising the
// printed candidate over all binder-name assignments (k! candidates; spines
// deeper than kPermBound fall back to first-use order).
constexpr size_t kPermBound = 6;

ProcessPtr assemble(const std::vector<std::string>& binders,
                    const std::vector<ProcessPtr>& comps) {
  ProcessPtr body;
  if (comps.empty()) {
    body = Process::make_inact();
  } else {
    body = comps.front();
    for (size_t i = 1; i < comps.size(); ++i) body = Process::make_par(body, comps[i]);
  }
  for (auto it = binders.rbegin(); it != binders.rend(); ++it)
    body = Process::make_hide(*it, body);
  return body;
}

// Single canonicalisation pass: binders are renamed deterministically while
// descending, so spine components are ordered against already-canonical
// outer names; restriction names and order are fixed by minimising over the
// k! assignments.
  // Renames a value/session variable (binder occurrences handled by caller).
ProcessPtr rename_var(const ProcessPtr& p, const std::string& from,
                               const std::string& to) {
    using K = Process::Kind;
    auto rch = [&](const Channel& c) {
      if (c.kind == Channel::Kind::Var && c.var == from) return Channel::make_var(to);
      return c;
    };
    std::function<ExprPtr(const ExprPtr&)> rex = [&](const ExprPtr& e) -> ExprPtr {
      if (!e) return e;
      switch (e->kind) {
        case Expr::Kind::Bool:
        case Expr::Kind::Name:
        case Expr::Kind::Endpoint:
          return e;
        case Expr::Kind::Var:
          return e->id == from ? Expr::make_var(to) : e;
        case Expr::Kind::And:
          return Expr::make_and(rex(e->lhs), rex(e->rhs));
        case Expr::Kind::Eq:
          return Expr::make_eq(rex(e->lhs), rex(e->rhs));
      }
      return e;
    };
    switch (p->kind) {
      case K::Inact:
      case K::ProcVar:
        return p;
      case K::Request:
      case K::Accept: {
        bool uvar = p->shared_is_var;
        std::string u = (uvar && p->shared_id == from) ? to : p->shared_id;
        auto body = p->binder == from ? p->body : rename_var(p->body, from, to);
        return p->kind == K::Request
                   ? Process::make_request(uvar, u, p->role, p->binder, body)
                   : Process::make_accept(uvar, u, p->role, p->binder, body);
      }
      case K::Send:
        return Process::make_send(rch(p->channel), p->role, rex(p->expr),
                                  rename_var(p->body, from, to));
      case K::Recv: {
        auto body = p->binder == from ? p->body : rename_var(p->body, from, to);
        return Process::make_recv(rch(p->channel), p->role, p->binder, body);
      }
      case K::Select:
        return Process::make_select(rch(p->channel), p->role, p->label,
                                    rename_var(p->body, from, to));
      case K::Branch: {
        std::vector<BranchArm> arms;
        for (const auto& a : p->arms) arms.push_back({a.label, rename_var(a.body, from, to)});
        return Process::make_branch(rch(p->channel), p->role, std::move(arms));
      }
      case K::If:
        return Process::make_if(rex(p->expr), rename_var(p->left, from, to),
                                rename_var(p->right, from, to));
      case K::Par:
        return Process::make_par(rename_var(p->left, from, to), rename_var(p->right, from, to));
      case K::Hide:
        return Process::make_hide(p->name, rename_var(p->body, from, to));
      case K::Rec:
        return Process::make_rec(p->name, rename_var(p->body, from, to));
    }
    return p;
  }

// Gives every variable and recursion binder a globally fresh temporary name
// so the subsequent canonical renaming can never capture.
struct Uniquifier {
  int counter = 0;

  ProcessPtr run(const ProcessPtr& p) {
    using K = Process::Kind;
    switch (p->kind) {
      case K::Inact:
      case K::ProcVar:
        return p;
      case K::Request:
      case K::Accept: {
        std::string tmp = fresh();
        auto body = rename_var(p->body, p->binder, tmp);
        body = run(body);
        return p->kind == K::Request
                   ? Process::make_request(p->shared_is_var, p->shared_id, p->role, tmp, body)
                   : Process::make_accept(p->shared_is_var, p->shared_id, p->role, tmp, body);
      }
      case K::Send:
        return Process::make_send(p->channel, p->role, p->expr, run(p->body));
      case K::Recv: {
        std::string tmp = fresh();
        auto body = rename_var(p->body, p->binder, tmp);
        return Process::make_recv(p->channel, p->role, tmp, run(body));
      }
      case K::Select:
        return Process::make_select(p->channel, p->role, p->label, run(p->body));
      case K::Branch: {
        std::vector<BranchArm> arms;
        for (const auto& a : p->arms) arms.push_back({a.label, run(a.body)});
        return Process::make_branch(p->channel, p->role, std::move(arms));
      }
      case K::If:
        return Process::make_if(p->expr, run(p->left), run(p->right));
      case K::Par:
        return Process::make_par(run(p->left), run(p->right));
      case K::Hide:
        return Process::make_hide(p->name, run(p->body));
      case K::Rec: {
        std::string tmp = "\x01X" + std::to_string(++counter);
        auto body = substitute_proc_var(p->body, p->name, Process::make_proc_var(tmp));
        return Process::make_rec(tmp, run(body));
      }
    }
    return p;
  }

  std::string fresh() { return "\x01u" + std::to_string(++counter); }

};

struct Canonicalizer {
  int vcount = 0;
  int xcount = 0;
  std::set<std::string> avoid;  // free variables and names: never reuse

  ProcessPtr run(const ProcessPtr& p) {
    using K = Process::Kind;
    switch (p->kind) {
      case K::Inact:
      case K::ProcVar:
        return p;
      case K::Request:
      case K::Accept: {
        std::string nx = next_var();
        auto body = p->binder == nx ? p->body : rename_var(p->body, p->binder, nx);
        body = run(body);
        return p->kind == K::Request
                   ? Process::make_request(p->shared_is_var, p->shared_id, p->role, nx, body)
                   : Process::make_accept(p->shared_is_var, p->shared_id, p->role, nx, body);
      }
      case K::Send:
        return Process::make_send(p->channel, p->role, p->expr, run(p->body));
      case K::Recv: {
        std::string nx = next_var();
        auto body = p->binder == nx ? p->body : rename_var(p->body, p->binder, nx);
        body = run(body);
        return Process::make_recv(p->channel, p->role, nx, body);
      }
      case K::Select:
        return Process::make_select(p->channel, p->role, p->label, run(p->body));
      case K::Branch: {
        std::vector<BranchArm> arms;
        for (const auto& a : p->arms) arms.push_back({a.label, run(a.body)});
        return Process::make_branch(p->channel, p->role, std::move(arms));
      }
      case K::If:
        return Process::make_if(p->expr, run(p->left), run(p->right));
      case K::Rec: {
        std::string nx = next_rec_var();
        auto body = p->name == nx
                        ? p->body
                        : substitute_proc_var(p->body, p->name, Process::make_proc_var(nx));
        return Process::make_rec(nx, run(body));
      }
      case K::Par:
      case K::Hide:
        return spine(p);
    }
    return p;
  }

 private:
  std::string next_var() {
    std::string cand;
    do {
      cand = "#v" + std::to_string(++vcount);
    } while (avoid.count(cand));
    return cand;
  }

  std::string next_rec_var() {
    std::string cand;
    do {
      cand = "#X" + std::to_string(++xcount);
    } while (avoid.count(cand));
    return cand;
  }

  ProcessPtr spine(const ProcessPtr& p) {
    Spine s;
    int tmp = 0;
    collect_spine(p, s, tmp);

    // Drop binders that are no longer used.
    {
      std::set<std::string> used;
      for (const auto& c : s.comps) {
        auto fn = free_names(c);
        used.insert(fn.begin(), fn.end());
      }
      std::vector<std::string> kept;
      for (const auto& b : s.binders)
        if (used.count(b)) kept.push_back(b);
      s.binders = kept;
    }

    // Canonical name pool, skipping names free in the components.
    std::set<std::string> freebies;
    for (const auto& c : s.comps) {
      auto fn = free_names(c);
      freebies.insert(fn.begin(), fn.end());
    }
    for (const auto& b : s.binders) freebies.erase(b);
    std::vector<std::string> pool;
    for (int i = 1; pool.size() < s.binders.size(); ++i) {
      std::string cand = "#n" + std::to_string(i);
      if (!freebies.count(cand)) pool.push_back(cand);
    }

    auto realize = [&](const std::vector<std::string>& assignment) {
      std::vector<ProcessPtr> comps = s.comps;
      for (size_t i = 0; i < s.binders.size(); ++i)
        for (auto& c : comps) c = rename_name(c, s.binders[i], assignment[i]);
      std::vector<std::pair<std::string, ProcessPtr>> keyed;
      keyed.reserve(comps.size());
      for (auto& c : comps) keyed.emplace_back(compare_key(c), c);
      std::stable_sort(keyed.begin(), keyed.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      std::vector<ProcessPtr> sorted;
      std::string key;
      for (auto& [k, c] : keyed) {
        sorted.push_back(c);
        key += k;
        key += '\x01';
      }
      std::vector<std::string> names(assignment.begin(),
                                     assignment.begin() + s.binders.size());
      std::sort(names.begin(), names.end());
      return std::make_pair(key, std::make_pair(names, sorted));
    };

    std::pair<std::vector<std::string>, std::vector<ProcessPtr>> best_parts;
    if (s.binders.empty()) {
      best_parts = realize({}).second;
    } else if (s.binders.size() <= kPermBound) {
      std::vector<size_t> idx(s.binders.size());
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::optional<std::string> best_key;
      do {
        std::vector<std::string> assignment(s.binders.size());
        for (size_t i = 0; i < idx.size(); ++i) assignment[i] = pool[idx[i]];
        auto cand = realize(assignment);
        if (!best_key || cand.first < *best_key) {
          best_key = cand.first;
          best_parts = cand.second;
        }
      } while (std::next_permutation(idx.begin(), idx.end()));
    } else {
      std::vector<std::string> assignment(pool.begin(), pool.begin() + s.binders.size());
      best_parts = realize(assignment).second;
    }

    // Canonicalise components in their final order (deterministic numbering).
    for (auto& c : best_parts.second) c = run(c);
    return assemble(best_parts.first, best_parts.second);
  }

 public:
};

}  // namespace

ProcessPtr normal_form(const ProcessPtr& p) {
  Uniquifier u;
  ProcessPtr q = u.run(p);
  Canonicalizer c;
  c.avoid = free_vars(q);
  for (const auto& n : free_names(q)) c.avoid.insert(n);
  return c.run(q);
}

std::string canonical(const ProcessPtr& p) { return print(normal_form(p)); }

}  // namespace mpst
