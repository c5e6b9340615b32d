#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpst {

/// Roles are positive integers; 0 is never a valid role.
using Role = std::uint32_t;

/// Sorted, duplicate-free role set.
using RoleSet = std::vector<Role>;

RoleSet make_role_set(std::vector<Role> roles);
RoleSet role_union(const RoleSet& a, const RoleSet& b);
bool roles_disjoint(const RoleSet& a, const RoleSet& b);

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(int line_, int col_, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                           std::to_string(col_) + ": " + msg),
        line(line_), col(col_) {}
};

/// A session endpoint s[p].
struct Endpoint {
  std::string session;
  Role role = 0;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

/// Closed run-time values: booleans, names (shared names or atoms), endpoints.
struct Value {
  enum class Kind { Bool, Name, Endpoint };
  Kind kind = Kind::Name;
  bool boolean = false;
  std::string name;     // Kind::Name
  Endpoint endpoint;    // Kind::Endpoint

  static Value make_bool(bool b);
  static Value make_name(std::string n);
  static Value make_endpoint(Endpoint ep);

  friend bool operator==(const Value&, const Value&) = default;
  friend auto operator<=>(const Value&, const Value&) = default;
};

std::string print(const Value& v);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expressions: values, variables, conjunction and name matching.
/// Identifier occurrences are classified as Var or Name at parse time
/// from the enclosing binders.
struct Expr {
  enum class Kind { Bool, Var, Name, Endpoint, And, Eq };
  Kind kind;
  bool boolean = false;
  std::string id;          // Var / Name
  Endpoint endpoint;       // Endpoint
  ExprPtr lhs, rhs;        // And / Eq

  static ExprPtr make_bool(bool b);
  static ExprPtr make_var(std::string x);
  static ExprPtr make_name(std::string n);
  static ExprPtr make_endpoint(Endpoint ep);
  static ExprPtr make_and(ExprPtr l, ExprPtr r);
  static ExprPtr make_eq(ExprPtr l, ExprPtr r);
};

std::string print(const ExprPtr& e);

/// Evaluates a closed expression; empty optional when the expression is
/// open or compares values of different kinds in a way the calculus
/// leaves undefined.
std::optional<Value> eval(const ExprPtr& e);

ExprPtr value_to_expr(const Value& v);

/// A communication subject: a session variable or an endpoint s[p].
struct Channel {
  enum class Kind { Var, Endpoint };
  Kind kind = Kind::Var;
  std::string var;
  Endpoint endpoint;

  static Channel make_var(std::string x);
  static Channel make_endpoint(Endpoint ep);

  friend bool operator==(const Channel&, const Channel&) = default;
  friend auto operator<=>(const Channel&, const Channel&) = default;
};

std::string print(const Channel& c);

struct Process;
using ProcessPtr = std::shared_ptr<const Process>;

struct BranchArm {
  std::string label;
  ProcessPtr body;
};

/// Process terms of the synchronous multiparty session calculus.
struct Process {
  enum class Kind {
    Request,   // u~[p](x). body       session request (maximum role)
    Accept,    // u[p](x). body        session accept
    Send,      // c[q]!<e>. body
    Recv,      // c[q]?(x). body
    Select,    // c[q](+)l. body
    Branch,    // c[q]&{ l1: P1, ... }
    If,        // if e then P else Q
    Par,       // P | Q
    Inact,     // 0
    Hide,      // (new n) body
    Rec,       // rec X. body
    ProcVar,   // X
  };

  Kind kind = Kind::Inact;

  // Request / Accept
  bool shared_is_var = false;  // u is a variable rather than a name
  std::string shared_id;
  Role role = 0;               // also the peer role of Send/Recv/Select/Branch
  std::string binder;          // bound variable of Request/Accept/Recv
  Channel channel;             // Send/Recv/Select/Branch subject
  ExprPtr expr;                // Send payload / If condition
  std::string label;           // Select label
  std::vector<BranchArm> arms; // Branch
  std::string name;            // Hide name / Rec and ProcVar variable
  ProcessPtr left, right;      // Par / If(then, else)
  ProcessPtr body;             // continuation of prefixes, Hide, Rec

  static ProcessPtr make_inact();
  static ProcessPtr make_request(bool uvar, std::string u, Role p, std::string x, ProcessPtr body);
  static ProcessPtr make_accept(bool uvar, std::string u, Role p, std::string x, ProcessPtr body);
  static ProcessPtr make_send(Channel c, Role q, ExprPtr e, ProcessPtr body);
  static ProcessPtr make_recv(Channel c, Role q, std::string x, ProcessPtr body);
  static ProcessPtr make_select(Channel c, Role q, std::string l, ProcessPtr body);
  static ProcessPtr make_branch(Channel c, Role q, std::vector<BranchArm> arms);
  static ProcessPtr make_if(ExprPtr e, ProcessPtr thenp, ProcessPtr elsep);
  static ProcessPtr make_par(ProcessPtr l, ProcessPtr r);
  static ProcessPtr make_hide(std::string n, ProcessPtr body);
  static ProcessPtr make_rec(std::string x, ProcessPtr body);
  static ProcessPtr make_proc_var(std::string x);
};

/// Parses the concrete process syntax. Branch arms must carry pairwise
/// distinct labels.
ProcessPtr parse_process(const std::string& text);

/// Prints a process; output re-parses to the same AST.
std::string print(const ProcessPtr& p);

/// Capture-avoiding substitution of a value for a variable.
ProcessPtr substitute(const ProcessPtr& p, const std::string& var, const Value& v);

/// Substitution of a process for a recursion variable (rec unfolding).
ProcessPtr substitute_proc_var(const ProcessPtr& p, const std::string& x, const ProcessPtr& q);

std::set<std::string> free_names(const ProcessPtr& p);
/// Free value/session variables plus free process variables.
std::set<std::string> free_vars(const ProcessPtr& p);

bool is_closed(const ProcessPtr& p);

/// Canonical representative of the structural-congruence class, closed
/// under: unit and monoid laws of |, restriction reordering and garbage
/// collection, scope extrusion to a top-left (new ...) spine, and
/// deterministic renaming of all binders. Recursion is not unfolded.
ProcessPtr normal_form(const ProcessPtr& p);

/// print(normal_form(p)) — the state key used by the LTS layers.
std::string canonical(const ProcessPtr& p);

/// Structural equality (exact, not up to alpha).
bool equal(const ProcessPtr& a, const ProcessPtr& b);

}  // namespace mpst
