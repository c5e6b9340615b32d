#include "mpst/envs.hpp"

#include <deque>
#include <set>
#include <stdexcept>

#include "parsers.hpp"

namespace mpst {

std::optional<Sort> SharedEnv::lookup(const std::string& u) const {
  auto it = ids.find(u);
  if (it == ids.end()) return std::nullopt;
  return it->second;
}

SharedEnv SharedEnv::extended(const std::string& u, Sort s) const {
  SharedEnv g = *this;
  g.ids[u] = std::move(s);
  return g;
}

std::string print(const SharedEnv& g) {
  std::string out;
  bool first = true;
  for (const auto& [u, s] : g.ids) {
    if (!first) out += " . ";
    first = false;
    if (s.kind == Sort::Kind::Global) {
      out += u + ": <" + print(s.global) + ">";
    } else {
      out += u + ": " + print(s);
    }
  }
  if (first) out = "(empty)";
  return out;
}

std::optional<LocalTypePtr> SessionEnv::lookup(const Channel& c) const {
  auto it = entries.find(c);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

void SessionEnv::insert(const Channel& c, LocalTypePtr t) {
  auto [it, fresh] = entries.emplace(c, std::move(t));
  if (!fresh)
    throw std::runtime_error("linearity violation: channel " + print(c) +
                             " bound twice in session environment");
}

std::optional<SessionEnv> SessionEnv::disjoint_union(const SessionEnv& a, const SessionEnv& b) {
  SessionEnv out = a;
  for (const auto& [c, t] : b.entries) {
    if (out.entries.count(c)) return std::nullopt;
    out.entries.emplace(c, t);
  }
  return out;
}

SessionEnv SessionEnv::without_end_entries() const {
  SessionEnv out;
  for (const auto& [c, t] : entries)
    if (t->kind != LocalType::Kind::End) out.entries.emplace(c, t);
  return out;
}

EndpointTypeMap SessionEnv::endpoint_types() const {
  EndpointTypeMap out;
  for (const auto& [c, t] : entries)
    if (c.kind == Channel::Kind::Endpoint) out[c.endpoint] = t;
  return out;
}

bool operator==(const SessionEnv& a, const SessionEnv& b) {
  return env_key(a) == env_key(b);
}

std::string print(const SessionEnv& d) {
  if (d.entries.empty()) return "(empty)";
  std::string out;
  bool first = true;
  for (const auto& [c, t] : d.entries) {
    if (!first) out += " . ";
    first = false;
    out += print(c) + ": " + print(t);
  }
  return out;
}

std::string env_key(const SessionEnv& d) {
  std::string out;
  for (const auto& [c, t] : d.entries) {
    out += print(c);
    out += ':';
    out += type_key(t);
    out += ';';
  }
  return out;
}

SessionEnv parse_session_env(const std::string& text) {
  detail::Lexer lx(text);
  SessionEnv d;
  if (lx.is_punct("{")) lx.next();
  while (!lx.at_end() && !lx.is_punct("}")) {
    std::string session = lx.expect_ident();
    lx.expect_punct("[");
    long role = lx.expect_int();
    if (role < 1) lx.fail("roles are positive integers");
    lx.expect_punct("]");
    lx.expect_punct(":");
    LocalTypePtr t = detail::parse_local(lx);
    d.insert(Channel::make_endpoint({session, static_cast<Role>(role)}), t);
    if (lx.is_punct(";") || lx.is_punct(",")) lx.next();
  }
  if (lx.is_punct("}")) lx.next();
  return d;
}

GlobalLabel GlobalLabel::make_val(std::string s, Role from, Role to, Exchange u) {
  GlobalLabel l;
  l.kind = Kind::Val;
  l.session = std::move(s);
  l.from = from;
  l.to = to;
  l.exch = std::move(u);
  return l;
}

GlobalLabel GlobalLabel::make_sel(std::string s, Role from, Role to, std::string lab) {
  GlobalLabel l;
  l.kind = Kind::Sel;
  l.session = std::move(s);
  l.from = from;
  l.to = to;
  l.label = std::move(lab);
  return l;
}

std::string print(const GlobalLabel& l) {
  std::string out = l.session + ":" + std::to_string(l.from) + "->" + std::to_string(l.to) + ":";
  if (l.kind == GlobalLabel::Kind::Val) {
    out += "<" + print(l.exch) + ">";
  } else {
    out += l.label;
  }
  return out;
}

bool equal(const GlobalLabel& a, const GlobalLabel& b) {
  if (a.kind != b.kind || a.session != b.session || a.from != b.from || a.to != b.to)
    return false;
  if (a.kind == GlobalLabel::Kind::Val) return equal(a.exch, b.exch);
  return a.label == b.label;
}

bool mentions_role(const GlobalLabel& l, Role p) { return l.from == p || l.to == p; }

// ---------------------------------------------------------------------------
// Session environment reduction
// ---------------------------------------------------------------------------

std::vector<std::pair<GlobalLabel, SessionEnv>> delta_labeled_step(const SessionEnv& d) {
  std::vector<std::pair<GlobalLabel, SessionEnv>> out;
  for (const auto& [cp, tp_raw] : d.entries) {
    if (cp.kind != Channel::Kind::Endpoint) continue;
    LocalTypePtr tp = unfold(tp_raw);
    const Endpoint& ep = cp.endpoint;
    if (tp->kind == LocalType::Kind::Send || tp->kind == LocalType::Kind::Select) {
      Channel cq = Channel::make_endpoint({ep.session, tp->peer});
      auto tq_raw = d.lookup(cq);
      if (!tq_raw) continue;
      LocalTypePtr tq = unfold(*tq_raw);
      if (tp->kind == LocalType::Kind::Send) {
        if (tq->kind != LocalType::Kind::Recv || tq->peer != ep.role) continue;
        if (!equal(tp->exch, tq->exch)) continue;
        SessionEnv next = d;
        next.entries[cp] = tp->body;
        next.entries[cq] = tq->body;
        out.emplace_back(GlobalLabel::make_val(ep.session, ep.role, tp->peer, tp->exch),
                         std::move(next));
      } else {
        if (tq->kind != LocalType::Kind::Branch || tq->peer != ep.role) continue;
        // I subseteq J
        bool subset = true;
        for (const auto& [l, cont] : tp->arms) {
          bool found = false;
          for (const auto& [l2, cont2] : tq->arms)
            if (l2 == l) { found = true; break; }
          if (!found) { subset = false; break; }
        }
        if (!subset) continue;
        for (const auto& [l, cont] : tp->arms) {
          LocalTypePtr cont_q;
          for (const auto& [l2, cont2] : tq->arms)
            if (l2 == l) cont_q = cont2;
          SessionEnv next = d;
          next.entries[cp] = cont;
          next.entries[cq] = cont_q;
          out.emplace_back(GlobalLabel::make_sel(ep.session, ep.role, tp->peer, l),
                           std::move(next));
        }
      }
    }
  }
  return out;
}

std::vector<SessionEnv> delta_step(const SessionEnv& d) {
  std::vector<SessionEnv> out;
  std::set<std::string> seen;
  for (auto& [l, next] : delta_labeled_step(d)) {
    if (seen.insert(env_key(next)).second) out.push_back(std::move(next));
  }
  return out;
}

std::vector<SessionEnv> delta_reachable(const SessionEnv& d) {
  std::vector<SessionEnv> out;
  std::set<std::string> seen;
  std::deque<SessionEnv> work;
  work.push_back(d);
  seen.insert(env_key(d));
  while (!work.empty()) {
    SessionEnv cur = std::move(work.front());
    work.pop_front();
    out.push_back(cur);
    for (auto& next : delta_step(cur)) {
      if (seen.insert(env_key(next)).second) work.push_back(std::move(next));
    }
  }
  return out;
}

bool delta_converges(const SessionEnv& d1, const SessionEnv& d2) {
  std::set<std::string> keys1;
  for (const auto& d : delta_reachable(d1)) keys1.insert(env_key(d));
  for (const auto& d : delta_reachable(d2))
    if (keys1.count(env_key(d))) return true;
  return false;
}

}  // namespace mpst
