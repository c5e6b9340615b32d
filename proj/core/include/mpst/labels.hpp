#pragma once

#include <set>
#include <string>

#include "mpst/ast.hpp"

namespace mpst {

/// Transition labels of the process LTS. `from` is the acting endpoint's
/// role (sender of an output, receiver of an input) and `to` the peer role.
struct ActionLabel {
  enum class Kind { Accept, Request, Out, BOutName, BOutSess, In, Sel, Bra, Tau };
  Kind kind = Kind::Tau;
  std::string shared;    // Accept / Request subject
  RoleSet roles;         // Accept / Request role set
  std::string session;   // fresh session of Accept/Request; subject otherwise
  Role from = 0, to = 0;
  Value value;           // Out / In payload; BOutName carries Kind::Name,
                         // BOutSess carries Kind::Endpoint
  std::string label;     // Sel / Bra

  static ActionLabel make_accept(std::string a, RoleSet roles, std::string s);
  static ActionLabel make_request(std::string a, RoleSet roles, std::string s);
  static ActionLabel make_out(std::string s, Role p, Role q, Value v);
  static ActionLabel make_bout_name(std::string s, Role p, Role q, std::string a);
  static ActionLabel make_bout_sess(std::string s, Role p, Role q, Endpoint ep);
  static ActionLabel make_in(std::string s, Role p, Role q, Value v);
  static ActionLabel make_sel(std::string s, Role p, Role q, std::string l);
  static ActionLabel make_bra(std::string s, Role p, Role q, std::string l);
  static ActionLabel make_tau();

  bool is_tau() const { return kind == Kind::Tau; }
};

std::string print(const ActionLabel& l);
std::string label_key(const ActionLabel& l);
bool equal(const ActionLabel& a, const ActionLabel& b);

std::set<std::string> free_names(const ActionLabel& l);
std::set<std::string> bound_names(const ActionLabel& l);

/// The duality relation between labels (out/in, bound-out/in, sel/bra on the
/// same session with complementary roles). Tau has no dual.
bool dual_labels(const ActionLabel& a, const ActionLabel& b);

/// A = {1..n} with n = max(A).
bool complete_role_set(const RoleSet& a, Role n);

}  // namespace mpst
