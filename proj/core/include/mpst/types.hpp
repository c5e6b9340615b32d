#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpst/ast.hpp"

namespace mpst {

struct GlobalType;
struct LocalType;
struct BinaryType;
using GlobalTypePtr = std::shared_ptr<const GlobalType>;
using LocalTypePtr = std::shared_ptr<const LocalType>;
using BinaryTypePtr = std::shared_ptr<const BinaryType>;

/// Value sorts: bool, nominal atom sorts, carried global types. Kind::Var
/// is internal to type inference (an undetermined sort).
struct Sort {
  enum class Kind { Bool, Atom, Global, Var };
  Kind kind = Kind::Bool;
  std::string atom;
  GlobalTypePtr global;
  int var_id = 0;

  static Sort make_bool();
  static Sort make_atom(std::string name);
  static Sort make_global(GlobalTypePtr g);
  static Sort make_var(int id);
};

/// Exchange types U ::= S | T (sorts for values, local types for delegation).
struct Exchange {
  enum class Kind { Sort, Local };
  Kind kind = Kind::Sort;
  Sort sort;
  LocalTypePtr local;

  static Exchange make_sort(Sort s);
  static Exchange make_local(LocalTypePtr t);
};

struct GlobalType {
  enum class Kind { Msg, Choice, Rec, Var, End };
  Kind kind = Kind::End;
  Role from = 0, to = 0;
  Exchange exch;                                        // Msg
  std::vector<std::pair<std::string, GlobalTypePtr>> arms;  // Choice
  std::string tvar;                                     // Rec / Var
  GlobalTypePtr body;                                   // Rec

  static GlobalTypePtr make_msg(Role from, Role to, Exchange u, GlobalTypePtr cont);
  static GlobalTypePtr make_choice(Role from, Role to,
                                   std::vector<std::pair<std::string, GlobalTypePtr>> arms);
  static GlobalTypePtr make_rec(std::string t, GlobalTypePtr body);
  static GlobalTypePtr make_var(std::string t);
  static GlobalTypePtr make_end();
};

struct LocalType {
  enum class Kind { Send, Recv, Select, Branch, Rec, Var, End };
  Kind kind = Kind::End;
  Role peer = 0;
  Exchange exch;                                        // Send / Recv
  std::vector<std::pair<std::string, LocalTypePtr>> arms;   // Select / Branch
  std::string tvar;
  LocalTypePtr body;

  static LocalTypePtr make_send(Role peer, Exchange u, LocalTypePtr cont);
  static LocalTypePtr make_recv(Role peer, Exchange u, LocalTypePtr cont);
  static LocalTypePtr make_select(Role peer,
                                  std::vector<std::pair<std::string, LocalTypePtr>> arms);
  static LocalTypePtr make_branch(Role peer,
                                  std::vector<std::pair<std::string, LocalTypePtr>> arms);
  static LocalTypePtr make_rec(std::string t, LocalTypePtr body);
  static LocalTypePtr make_var(std::string t);
  static LocalTypePtr make_end();
};

struct BinaryType {
  enum class Kind { Out, In, Select, Branch, Rec, Var, End };
  Kind kind = Kind::End;
  Exchange exch;
  std::vector<std::pair<std::string, BinaryTypePtr>> arms;
  std::string tvar;
  BinaryTypePtr body;

  static BinaryTypePtr make_out(Exchange u, BinaryTypePtr cont);
  static BinaryTypePtr make_in(Exchange u, BinaryTypePtr cont);
  static BinaryTypePtr make_select(std::vector<std::pair<std::string, BinaryTypePtr>> arms);
  static BinaryTypePtr make_branch(std::vector<std::pair<std::string, BinaryTypePtr>> arms);
  static BinaryTypePtr make_rec(std::string t, BinaryTypePtr body);
  static BinaryTypePtr make_var(std::string t);
  static BinaryTypePtr make_end();
};

std::string print(const Sort& s);
std::string print(const Exchange& u);
std::string print(const GlobalTypePtr& g);
std::string print(const LocalTypePtr& t);
std::string print(const BinaryTypePtr& b);

GlobalTypePtr parse_global_type(const std::string& text);
LocalTypePtr parse_local_type(const std::string& text);

/// Syntactic equality after alpha-renaming of type variables; no unfolding.
bool equal(const Sort& a, const Sort& b);
bool equal(const Exchange& a, const Exchange& b);
bool equal(const GlobalTypePtr& a, const GlobalTypePtr& b);
bool equal(const LocalTypePtr& a, const LocalTypePtr& b);
bool equal(const BinaryTypePtr& a, const BinaryTypePtr& b);

/// Alpha-invariant keys (used for maps and equality).
std::string type_key(const GlobalTypePtr& g);
std::string type_key(const LocalTypePtr& t);
std::string type_key(const BinaryTypePtr& b);

RoleSet roles_global(const GlobalTypePtr& g);
RoleSet roles_local(const LocalTypePtr& t);
Role max_role(const RoleSet& roles);

/// One-step unfolding of a top-level Rec; identity otherwise.
GlobalTypePtr unfold(const GlobalTypePtr& g);
LocalTypePtr unfold(const LocalTypePtr& t);
BinaryTypePtr unfold(const BinaryTypePtr& b);

/// Checks role contiguity {1..n}, from != to, guarded type variables and
/// closed carried types; returns a diagnostic when violated.
std::optional<std::string> well_formed(const GlobalTypePtr& g);

/// Projection G|p. Empty when a choice the role does not participate in has
/// disagreeing branch projections (diagnostic in *why when provided).
std::optional<LocalTypePtr> project_global(const GlobalTypePtr& g, Role p,
                                           std::string* why = nullptr);

using EndpointTypeMap = std::map<Endpoint, LocalTypePtr>;

/// {s[p] : G|p} for p in 1..max(roles(G)). Includes end entries for roles a
/// reduced G no longer mentions, so projection sets shrink pointwise under
/// global-environment reduction.
std::optional<EndpointTypeMap> projection_set(const std::string& session,
                                              const GlobalTypePtr& g,
                                              std::string* why = nullptr);

/// Local-to-binary projection T|q.
std::optional<BinaryTypePtr> project_local(const LocalTypePtr& t, Role q,
                                           std::string* why = nullptr);

BinaryTypePtr dual(const BinaryTypePtr& b);

/// Pairwise duality of binary projections among the endpoints of s.
bool coherent_at(const EndpointTypeMap& endpoints, const std::string& session);
bool coherent(const EndpointTypeMap& endpoints);
/// Coherent, and every role mentioned by an entry of s is itself present.
bool fully_coherent(const EndpointTypeMap& endpoints);

size_t type_size(const GlobalTypePtr& g);
size_t type_size(const LocalTypePtr& t);
size_t type_size(const BinaryTypePtr& b);

}  // namespace mpst
