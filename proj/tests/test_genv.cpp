#include <doctest.h>

#include <chrono>
#include <set>

#include "generators.hpp"
#include "mpst/genv.hpp"
#include "mpst/typing.hpp"

using namespace mpst;

namespace {

GlobalEnv E1() {
  GlobalEnv e;
  e.sessions["sa"] = parse_global_type("1->3:<S>.2->3:<S>.end");
  return e;
}

GlobalEnv E2() {
  GlobalEnv e;
  e.sessions["sa"] = parse_global_type("2->3:<S>.1->3:<S>.end");
  return e;
}

SharedEnv gov_gamma() {
  SharedEnv g;
  g.ids["a"] = Sort::make_global(parse_global_type("1->3:<S>.2->3:<S>.end"));
  g.ids["b"] = Sort::make_global(parse_global_type("1->2:<S>.end"));
  g.ids["v"] = Sort::make_atom("S");
  g.ids["w"] = Sort::make_atom("S");
  return g;
}

SessionEnv delta0() { return parse_session_env("{ sa[1]: 3!<S>.end; sa[2]: 3!<S>.end; }"); }

bool has_glabel(const std::vector<std::pair<GlobalLabel, GlobalEnv>>& steps,
                const std::string& text) {
  for (const auto& [l, e] : steps)
    if (print(l) == text) return true;
  return false;
}

}  // namespace

TEST_CASE("projection sets of the governed-example witnesses") {
  auto p1 = projset(E1());
  REQUIRE(p1);
  CHECK(env_key(*p1) ==
        env_key(parse_session_env(
            "{ sa[1]: 3!<S>.end; sa[2]: 3!<S>.end; sa[3]: 1?(S).2?(S).end; }")));
  CHECK(projset(GlobalEnv{})->entries.empty());

  auto p2 = projset(E2());
  REQUIRE(p2);
  CHECK(equal(*p2->lookup(Channel::make_endpoint({"sa", 1})),
              *p1->lookup(Channel::make_endpoint({"sa", 1}))));
  CHECK(equal(*p2->lookup(Channel::make_endpoint({"sa", 2})),
              *p1->lookup(Channel::make_endpoint({"sa", 2}))));
  CHECK(print(*p2->lookup(Channel::make_endpoint({"sa", 3}))) == "2?(S).1?(S).end");
}

TEST_CASE("global environment reduction with permutations") {
  GlobalEnv e;
  e.sessions["s"] =
      parse_global_type("1->2:<U1>.3->4:{l1: end, l2: 3->4:<U2>.end}");
  auto steps = genv_step(e);
  CHECK(has_glabel(steps, "s:1->2:<U1>"));
  CHECK(has_glabel(steps, "s:3->4:l1"));  // permuted under the 1->2 prefix
  CHECK(has_glabel(steps, "s:3->4:l2"));
  for (const auto& [l, next] : steps) {
    if (print(l) == "s:3->4:l1")
      CHECK(print(*next.lookup("s")) == "1->2:<U1>.end");
  }

  GlobalEnv done;
  done.sessions["s"] = parse_global_type("end");
  CHECK(genv_step(done).empty());

  // E1 does not offer 2->3 first; E2 does
  CHECK(!has_glabel(genv_step(E1()), "sa:2->3:<S>"));
  CHECK(has_glabel(genv_step(E2()), "sa:2->3:<S>"));
}

TEST_CASE("reachable sets are finite") {
  GlobalEnv done;
  done.sessions["s"] = parse_global_type("end");
  CHECK(genv_reachable(done).size() == 1);

  GlobalEnv one;
  one.sessions["s"] = parse_global_type("1->2:<U>.end");
  CHECK(genv_reachable(one).size() == 2);

  GlobalEnv intro = E1();
  intro.sessions["sb"] = parse_global_type("1->2:<S>.end");
  auto reach = genv_reachable(intro);
  CHECK(reach.size() == 6);  // 3 stages of sa x 2 stages of sb

  GlobalEnv rec;
  rec.sessions["s"] = parse_global_type("rec t. 1->2:<U>.t");
  CHECK(genv_reachable(rec).size() == 1);  // the unfolding loops back
  CHECK_THROWS_AS(genv_reachable(rec, 0), UnfoldBoundExceeded);

  // the intro pair of protocols closes quickly
  GlobalEnv intro2 = E1();
  intro2.sessions["sb"] = parse_global_type("1->2:<S>.end");
  auto t0 = std::chrono::steady_clock::now();
  auto r = genv_reachable(intro2);
  double ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  CHECK(!r.empty());
  CHECK(ms < 1.0);
}

TEST_CASE("environment transitions of the bisimulation example") {
  SharedEnv g = gov_gamma();
  auto acc = ActionLabel::make_accept("a", {1}, "sa");
  auto next = env_step(g, SessionEnv{}, acc);
  REQUIRE(next.size() == 1);
  CHECK(env_key(next[0].second) == env_key(parse_session_env("{ sa[1]: 3!<S>.end; }")));

  // outputs are blocked when the destination endpoint is present
  SessionEnv d = delta0();
  d.insert(Channel::make_endpoint({"sa", 3}), parse_local_type("1?(S).2?(S).end"));
  auto out = ActionLabel::make_out("sa", 1, 3, Value::make_name("v"));
  CHECK(env_step(g, d, out).empty());
  CHECK(!env_step(g, delta0(), out).empty());

  // tau is always enabled, at least as the identity
  auto taus = env_step(g, d, ActionLabel::make_tau());
  bool identity = false;
  for (auto& [g2, d2] : taus)
    if (env_key(d2) == env_key(d)) identity = true;
  CHECK(identity);
}

TEST_CASE("delegation transitions of the environment LTS") {
  SharedEnv g;
  g.ids["v"] = Sort::make_atom("U");

  // free session output: the delegated endpoint leaves the environment
  SessionEnv d1 = parse_session_env("{ s[1]: 2!<1?(U).end>.end; t[2]: 1?(U).end; }");
  auto send = ActionLabel::make_out("s", 1, 2, Value::make_endpoint({"t", 2}));
  auto r1 = env_step(g, d1, send);
  REQUIRE(r1.size() == 1);
  CHECK(env_key(r1[0].second) == env_key(parse_session_env("{ s[1]: end; }")));

  // bound session output: the opened session's remaining endpoints enter,
  // with types resolved from the sessions table
  EnvStepOptions opts;
  opts.session_types["t"] = parse_global_type("1->2:<U>.end");
  SessionEnv d2 = parse_session_env("{ s[1]: 2!<2!<U>.end>.end; }");
  auto bout = ActionLabel::make_bout_sess("s", 1, 2, {"t", 1});
  auto r2 = env_step(g, d2, bout, opts);
  REQUIRE(r2.size() == 1);
  CHECK(env_key(r2[0].second) ==
        env_key(parse_session_env("{ s[1]: end; t[2]: 1?(U).end; }")));
  // without the table the transition is rejected
  CHECK(env_step(g, d2, bout).empty());

  // session input: the received endpoint joins the environment
  SessionEnv d3 = parse_session_env("{ s[1]: 2?(1?(U).end).end; }");
  auto recv = ActionLabel::make_in("s", 1, 2, Value::make_endpoint({"t", 2}));
  auto r3 = env_step(g, d3, recv);
  REQUIRE(r3.size() == 1);
  CHECK(env_key(r3[0].second) ==
        env_key(parse_session_env("{ s[1]: end; t[2]: 1?(U).end; }")));
}

TEST_CASE("labelled session environment reduction refines delta_step") {
  SessionEnv d = parse_session_env("{ s[1]: 2!<U>.end; s[2]: 1?(U).end; }");
  auto steps = delta_labeled_step(d);
  REQUIRE(steps.size() == 1);
  CHECK(print(steps[0].first) == "s:1->2:<U>");

  CHECK(delta_labeled_step(SessionEnv{}).empty());

  testgen::Rng rng(71);
  for (int i = 0; i < 200; ++i) {
    SessionEnv env = testgen::gen_session_env(rng);
    std::set<std::string> unlabeled;
    for (const auto& n : delta_step(env)) unlabeled.insert(env_key(n));
    std::set<std::string> labeled;
    for (const auto& [l, n] : delta_labeled_step(env)) labeled.insert(env_key(n));
    CHECK(unlabeled == labeled);
  }
}

TEST_CASE("configuration transitions need the witness to offer the label") {
  // Example: (s: 1->2:<U>.1->2:<U>.end, v:U, s[1]: 2!<U>.end) can emit the
  // second output only after Inv consumes the first interaction.
  GlobalEnv e;
  e.sessions["s"] = parse_global_type("1->2:<U>.1->2:<U>.end");
  SharedEnv g;
  g.ids["v"] = Sort::make_atom("U");
  SessionEnv d = parse_session_env("{ s[1]: 2!<U>.end; }");
  EnvConfig c{e, g, d};
  REQUIRE(is_env_config(c));

  auto out = ActionLabel::make_out("s", 1, 2, Value::make_name("v"));
  auto next = config_step(c, out);
  REQUIRE(next.size() == 1);
  CHECK(print(*next[0].e.lookup("s")) == "end");
  CHECK(env_key(next[0].delta) == env_key(parse_session_env("{ s[1]: end; }")));

  // tau with unchanged environments is always among the successors
  auto taus = config_step(c, ActionLabel::make_tau());
  bool identity = false;
  for (const auto& cc : taus)
    if (env_key(cc.e) == env_key(c.e) && env_key(cc.delta) == env_key(c.delta))
      identity = true;
  CHECK(identity);
}

TEST_CASE("the witnesses E1 and E2 govern the early output differently") {
  SharedEnv g = gov_gamma();
  auto out23 = ActionLabel::make_out("sa", 2, 3, Value::make_name("v"));
  CHECK(config_step({E1(), g, delta0()}, out23).empty());
  CHECK(!config_step({E2(), g, delta0()}, out23).empty());
  // each witness enables exactly its first interaction from Delta0
  auto out13 = ActionLabel::make_out("sa", 1, 3, Value::make_name("v"));
  CHECK(!config_step({E1(), g, delta0()}, out13).empty());
  CHECK(config_step({E2(), g, delta0()}, out13).empty());
  // after the governed 2->3 output, E2 enables the remaining 1->3 one
  auto after = config_step({E2(), g, delta0()}, out23);
  REQUIRE(!after.empty());
  CHECK(!config_step(after[0], out13).empty());
}

TEST_CASE("environment configurations") {
  SharedEnv g = gov_gamma();
  CHECK(is_env_config({GlobalEnv{}, g, SessionEnv{}}));
  CHECK(is_env_config({E1(), g, delta0()}));
  CHECK(is_env_config({E2(), g, delta0()}));

  SessionEnv wrong = parse_session_env("{ sa[1]: 2!<S>.end; }");
  CHECK(!is_env_config({E1(), g, wrong}));
}

TEST_CASE("witness ordering is syntactic suffix inclusion") {
  CHECK(type_leq(parse_local_type("1?(W).end"), parse_local_type("3!<U>.1?(W).end")));
  CHECK(!type_leq(parse_local_type("3!<U>.1?(W).end"), parse_local_type("1?(W).end")));
  CHECK(type_leq(parse_local_type("end"), parse_local_type("2(+){l1: end, l2: 1!<U>.end}")));
}

TEST_CASE("the join of two witnesses picks the larger binding per session") {
  GlobalEnv e1, e2;
  e1.sessions["s1"] = parse_global_type("1->2:<U1>.3->4:<U2>.1->2:<U3>.end");
  e1.sessions["s2"] = parse_global_type("1->2:<W2>.end");
  e2.sessions["s1"] = parse_global_type("1->2:<U3>.end");
  e2.sessions["s2"] = parse_global_type("3->4:<W1>.1->2:<W2>.end");
  auto join = genv_join(e1, e2);
  REQUIRE(join);
  CHECK(print(*join->lookup("s1")) == "1->2:<U1>.3->4:<U2>.1->2:<U3>.end");
  CHECK(print(*join->lookup("s2")) == "3->4:<W1>.1->2:<W2>.end");

  auto same = genv_join(e1, e1);
  REQUIRE(same);
  CHECK(equal(*same, e1));

  // incomparable bindings have no join
  GlobalEnv x, y;
  x.sessions["s"] = parse_global_type("1->2:<U>.end");
  y.sessions["s"] = parse_global_type("1->2:<W>.end");
  CHECK(!genv_join(x, y));
}

TEST_CASE("governed barbs follow the witness ordering") {
  SharedEnv g = gov_gamma();
  auto b1 = governed_barbs({E1(), g, delta0()});
  std::set<std::string> names1;
  for (const auto& b : b1) names1.insert(print(b));
  CHECK(names1.count("sa[1][3]"));
  CHECK(!names1.count("sa[2][3]"));
  CHECK(names1.count("a"));  // shared names of Gamma are always observable

  // Under E2 the 2->3 output comes first; the 1->3 offer only opens after it,
  // and by then the pending sa[2] obligation is no longer covered. Only the
  // sa[2][3] barb is governed.
  auto b2 = governed_barbs({E2(), g, delta0()});
  std::set<std::string> names2;
  for (const auto& b : b2) names2.insert(print(b));
  CHECK(!names2.count("sa[1][3]"));
  CHECK(names2.count("sa[2][3]"));

  auto b0 = governed_barbs({GlobalEnv{}, g, SessionEnv{}});
  std::set<std::string> names0;
  for (const auto& b : b0) names0.insert(print(b));
  CHECK(names0 == std::set<std::string>{"a", "b"});
}

TEST_CASE("weakening and strengthening of configurations") {
  SharedEnv g = gov_gamma();
  EnvConfig c{E1(), g, delta0()};
  REQUIRE(is_env_config(c));
  // weakening: a fresh binding preserves well-formedness
  EnvConfig weak{c.e.extended("fresh", parse_global_type("1->2:<U>.end")), g, c.delta};
  CHECK(is_env_config(weak));
  // strengthening: dropping a binding whose session is absent from delta
  CHECK(is_env_config({E1(), g, c.delta}));
}

TEST_CASE("projset shrinks pointwise along genv steps") {
  testgen::Rng rng(83);
  int checked = 0;
  for (int i = 0; i < 250; ++i) {
    GlobalEnv e;
    e.sessions["s"] = testgen::gen_wf_global(rng, 2 + rng.upto(7));
    auto before = projset(e);
    if (!before) continue;
    for (const auto& [lam, e2] : genv_step(e)) {
      if (lam.kind != GlobalLabel::Kind::Val) continue;
      auto after = projset(e2);
      REQUIRE(after);
      Channel cp = Channel::make_endpoint({lam.session, lam.from});
      Channel cq = Channel::make_endpoint({lam.session, lam.to});
      LocalTypePtr tp = unfold(*before->lookup(cp));
      LocalTypePtr tq = unfold(*before->lookup(cq));
      REQUIRE(tp->kind == LocalType::Kind::Send);
      REQUIRE(tq->kind == LocalType::Kind::Recv);
      CHECK(tp->peer == lam.to);
      CHECK(tq->peer == lam.from);
      CHECK(equal(tp->exch, lam.exch));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("configuration successors stay well-formed and project to env steps") {
  SharedEnv g = gov_gamma();
  EnvConfig c{E1(), g, delta0()};
  std::vector<ActionLabel> labels = {
      ActionLabel::make_out("sa", 1, 3, Value::make_name("v")),
      ActionLabel::make_tau(),
      ActionLabel::make_accept("b", {1}, "sb"),
  };
  for (const auto& l : labels) {
    for (const auto& next : config_step(c, l)) {
      CHECK(is_env_config(next));
      // the (Gamma, Delta) part is an env_step successor (Lemma configuration_transition 1)
      bool found = false;
      for (auto& [g2, d2] : env_step(c.gamma, c.delta, l)) {
        if (env_key(d2) == env_key(next.delta)) found = true;
      }
      CHECK(found);
    }
  }
}
