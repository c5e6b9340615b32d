#include <doctest.h>

#include <set>

#include "generators.hpp"
#include "mpst/lts.hpp"

using namespace mpst;

namespace {

StepOptions small_universe() {
  StepOptions o;
  o.universe = {Value::make_name("v"), Value::make_name("w"), Value::make_bool(true),
                Value::make_bool(false)};
  return o;
}

const char* kP1 = "a[1](x). b[1](y). x[3]!<v>. y[2]!<w>. 0";
const char* kP2 = "a[2](x). b~[2](y). (y[1]?(z). 0 | x[3]!<v>. 0)";
const char* kP3 = "a~[3](x). x[1]?(z). x[2]?(y). 0";
const char* kQ1 = "(new sb)(sa[1][3]!<v>. sb[1][2]!<w>. 0 | sb[2][1]?(x). 0 | sa[2][3]!<v>. 0)";
const char* kQ2 = "(new sb)(sa[1][3]!<v>. sb[1][2]!<w>. 0 | sb[2][1]?(x). sa[2][3]!<v>. 0)";

bool has_label(const std::vector<StepResult>& steps, const std::string& text) {
  for (const auto& s : steps)
    if (print(s.label) == text) return true;
  return false;
}

}  // namespace

TEST_CASE("complete role sets") {
  CHECK(!complete_role_set({1, 3, 4}, 4));
  CHECK(complete_role_set({1, 2, 3, 4}, 4));
  CHECK(!complete_role_set({1, 2, 3, 4}, 5));
  CHECK(complete_role_set({1}, 1));
  CHECK(!complete_role_set({}, 0));
}

TEST_CASE("dual labels") {
  auto out = ActionLabel::make_out("s", 1, 2, Value::make_name("v"));
  auto in = ActionLabel::make_in("s", 2, 1, Value::make_name("v"));
  CHECK(dual_labels(out, in));
  CHECK(dual_labels(in, out));
  CHECK(!dual_labels(ActionLabel::make_tau(), ActionLabel::make_tau()));
  auto sel = ActionLabel::make_sel("s", 1, 2, "l");
  auto bra = ActionLabel::make_bra("s", 2, 1, "l");
  CHECK(dual_labels(sel, bra));
  CHECK(!dual_labels(sel, ActionLabel::make_bra("s", 1, 2, "l")));
  auto bout = ActionLabel::make_bout_name("s", 1, 2, "a");
  CHECK(dual_labels(bout, ActionLabel::make_in("s", 2, 1, Value::make_name("a"))));
}

TEST_CASE("accept prefixes emit accept labels with the fresh session") {
  auto steps = step(parse_process(kP1), small_universe());
  REQUIRE(!steps.empty());
  bool found = false;
  for (const auto& s : steps) {
    if (s.label.kind != ActionLabel::Kind::Accept) continue;
    CHECK(s.label.shared == "a");
    CHECK(s.label.roles == RoleSet{1});
    // the continuation uses the fresh endpoint at role 1
    ProcessPtr expect = parse_process(
        ("b[1](y). " + s.label.session + "[1][3]!<v>. y[2]!<w>. 0").c_str());
    CHECK(canonical(s.target) == canonical(expect));
    found = true;
  }
  CHECK(found);
}

TEST_CASE("inaction has no transitions") {
  CHECK(step(parse_process("0"), small_universe()).empty());
  CHECK(reduce(parse_process("0"), small_universe()).empty());
}

TEST_CASE("complete sessions synchronise into a hidden session") {
  std::string text = std::string(kP1) + " | " + kP2 + " | " + kP3;
  auto steps = step(parse_process(text), small_universe());
  bool found_tau_link = false;
  for (const auto& s : steps) {
    if (!s.label.is_tau()) continue;
    ProcessPtr nf = normal_form(s.target);
    if (nf->kind == Process::Kind::Hide) found_tau_link = true;
  }
  CHECK(found_tau_link);

  // partial merges stay visible: accepts merge, request-side merges that are
  // not complete keep a request label
  CHECK(has_label(steps, "a<{1,2}>(#s1)"));
  CHECK(has_label(steps, "~a<{1,3}>(#s1)"));
  CHECK(has_label(steps, "~a<{2,3}>(#s1)"));
  CHECK(!has_label(steps, "~a<{1,2,3}>(#s1)"));  // complete: only the tau fires
}

TEST_CASE("value communication and conditionals reduce") {
  auto r1 = reduce(parse_process("s[1][2]!<v>. 0 | s[2][1]?(x). if x == v then 0 else t[1][2]!<w>. 0"),
                   small_universe());
  REQUIRE(r1.size() == 1);
  // the received value flowed into the conditional
  auto r1b = reduce(r1[0], small_universe());
  REQUIRE(r1b.size() == 1);
  CHECK(canonical(r1b[0]) == "0");

  auto comm = reduce(parse_process("s[1][2]!<v>. 0 | s[2][1]?(x). s[2][1]?(y). 0"),
                     small_universe());
  REQUIRE(comm.size() == 1);
  CHECK(canonical(comm[0]) == canonical(parse_process("s[2][1]?(y). 0")));

  auto ift = reduce(parse_process("if true then s[1][2]!<v>. 0 else 0"), small_universe());
  REQUIRE(ift.size() == 1);
  CHECK(canonical(ift[0]) == canonical(parse_process("s[1][2]!<v>. 0")));

  auto iff = reduce(parse_process("if v == w then s[1][2]!<v>. 0 else 0"), small_universe());
  REQUIRE(iff.size() == 1);
  CHECK(canonical(iff[0]) == "0");
}

TEST_CASE("label selection reduces to the chosen arm") {
  auto r = reduce(parse_process("s[1][2](+)l2. 0 | s[2][1]&{l1: s[2][1]?(x). 0, l2: 0}"),
                  small_universe());
  REQUIRE(r.size() == 1);
  CHECK(canonical(r[0]) == "0");
}

TEST_CASE("explore the trivial and the running examples") {
  auto g0 = explore(parse_process("0"), 100, small_universe());
  CHECK(g0.state_count() == 1);
  CHECK(g0.transitions.empty());
  CHECK(!g0.truncated);

  auto g1 = explore(parse_process(kQ1), 1000, small_universe());
  CHECK(!g1.truncated);
  bool q1_early_out = false;
  for (const auto& t : g1.transitions) {
    if (t.from == g1.initial && print(t.label) == "sa!<2,3,v>") q1_early_out = true;
  }
  CHECK(q1_early_out);

  auto g2 = explore(parse_process(kQ2), 1000, small_universe());
  for (const auto& t : g2.transitions) {
    if (t.from == g2.initial) CHECK(print(t.label) != "sa!<2,3,v>");
  }
}

TEST_CASE("explore is deterministic") {
  std::string text = std::string(kP1) + " | " + kP2;
  auto a = explore(parse_process(text), 500, small_universe());
  auto b = explore(parse_process(text), 500, small_universe());
  REQUIRE(a.states == b.states);
  REQUIRE(a.transitions.size() == b.transitions.size());
  for (size_t i = 0; i < a.transitions.size(); ++i) {
    CHECK(a.transitions[i].from == b.transitions[i].from);
    CHECK(a.transitions[i].to == b.transitions[i].to);
    CHECK(print(a.transitions[i].label) == print(b.transitions[i].label));
  }
}

TEST_CASE("scope opening produces bound outputs and blocks subjects") {
  // extruding a restricted session endpoint
  auto steps = step(parse_process("(new t)(s[1][2]!<t[1]>. 0 | t[2][1]?(x). 0)"),
                    small_universe());
  bool bout = false;
  for (const auto& s : steps) {
    if (s.label.kind == ActionLabel::Kind::BOutSess) {
      bout = true;
      CHECK(s.label.session == "s");
      // the restriction is gone after opening
      CHECK(normal_form(s.target)->kind != Process::Kind::Hide);
    }
    // communication on the hidden session itself must not be visible
    if (s.label.kind == ActionLabel::Kind::Out) CHECK(s.label.session != "t");
  }
  CHECK(bout);

  // restricted shared names block initiation labels
  auto hidden = step(parse_process("(new a)(a[1](x). 0)"), small_universe());
  CHECK(hidden.empty());
}

TEST_CASE("bound output synchronisation restores the restriction") {
  auto steps = step(parse_process("(new t)(s[1][2]!<t[1]>. 0 | t[2][1]?(y). 0)"
                                  " | s[2][1]?(x). x[2]!<v>. 0"),
                    small_universe());
  bool tau_found = false;
  for (const auto& s : steps) {
    if (!s.label.is_tau()) continue;
    tau_found = true;
    ProcessPtr nf = normal_form(s.target);
    REQUIRE(nf->kind == Process::Kind::Hide);  // scope re-established
  }
  CHECK(tau_found);
}

TEST_CASE("barbs") {
  SharedEnv g;
  auto b1 = barbs(g, parse_process("s[1][2]!<v>. 0"), SessionEnv{});
  REQUIRE(b1.size() == 1);
  CHECK(print(b1[0]) == "s[1][2]");

  CHECK(barbs(g, parse_process("0"), SessionEnv{}).empty());

  auto d = parse_session_env("{ s[2]: 1?(U).end; }");
  CHECK(barbs(g, parse_process("s[1][2]!<v>. 0"), d).empty());

  auto b2 = barbs(g, parse_process("a~[3](x). 0 | (new b)(b~[2](y). 0)"), SessionEnv{});
  REQUIRE(b2.size() == 1);
  CHECK(b2[0].is_request);
  CHECK(b2[0].subject == "a");
}

TEST_CASE("recursion unfolds lazily and the bound flags truncation") {
  StepOptions o = small_universe();
  auto steps = step(parse_process("rec X. s[1][2]!<v>. X"), o);
  REQUIRE(steps.size() == 1);
  CHECK(print(steps[0].label) == "s!<1,2,v>");
  CHECK(canonical(steps[0].target) == canonical(parse_process("rec X. s[1][2]!<v>. X")));

  bool trunc = false;
  o.unfold_bound = 3;
  auto diverging = step(parse_process("rec X. (X | s[1][2]!<v>. 0)"), o, &trunc);
  CHECK(trunc);
}

TEST_CASE("the state bound truncates exploration") {
  auto g = explore(parse_process(kQ1), 2, small_universe());
  CHECK(g.truncated);
  CHECK(g.state_count() <= 2);
}

TEST_CASE("graph JSON round-trips") {
  auto g = explore(parse_process(kQ1), 1000, small_universe());
  auto g2 = graph_from_json(graph_to_json(g));
  CHECK(g.states == g2.states);
  CHECK(g.initial == g2.initial);
  CHECK(g.truncated == g2.truncated);
  REQUIRE(g.transitions.size() == g2.transitions.size());
  for (size_t i = 0; i < g.transitions.size(); ++i) {
    CHECK(g.transitions[i].from == g2.transitions[i].from);
    CHECK(g.transitions[i].to == g2.transitions[i].to);
    CHECK(print(g.transitions[i].label) == print(g2.transitions[i].label));
  }
}

TEST_CASE("graphs of generated processes round-trip through JSON") {
  testgen::Rng rng(53);
  StepOptions o = small_universe();
  int done = 0;
  for (int i = 0; i < 60 && done < 25; ++i) {
    ProcessPtr p = testgen::gen_process(rng, 2 + rng.upto(8), {});
    if (!is_closed(p)) continue;
    auto g = explore(p, 300, o);
    if (g.truncated) continue;
    auto g2 = graph_from_json(graph_to_json(g));
    REQUIRE(g.states == g2.states);
    REQUIRE(g.initial == g2.initial);
    REQUIRE(g.transitions.size() == g2.transitions.size());
    for (size_t k = 0; k < g.transitions.size(); ++k) {
      REQUIRE(print(g.transitions[k].label) == print(g2.transitions[k].label));
      REQUIRE(g.transitions[k].from == g2.transitions[k].from);
      REQUIRE(g.transitions[k].to == g2.transitions[k].to);
    }
    ++done;
  }
  CHECK(done >= 25);
}

TEST_CASE("reduction agrees with the tau-projection of step") {
  testgen::Rng rng(57);
  StepOptions o = small_universe();
  int compared = 0;
  for (int i = 0; i < 150; ++i) {
    ProcessPtr p = testgen::gen_process(rng, 2 + rng.upto(10), {});
    if (!is_closed(p)) continue;
    std::set<std::string> via_reduce;
    for (const auto& r : reduce(p, o)) via_reduce.insert(canonical(r));
    std::set<std::string> via_step;
    for (const auto& s : step(p, o)) {
      if (s.label.is_tau()) via_step.insert(canonical(s.target));
    }
    REQUIRE_MESSAGE(via_reduce == via_step, print(p));
    ++compared;
  }
  CHECK(compared > 60);
}

TEST_CASE("explore restricted to tau edges matches the reduction graph") {
  testgen::Rng rng(61);
  StepOptions o = small_universe();
  for (int i = 0; i < 25; ++i) {
    ProcessPtr p = testgen::gen_process(rng, 2 + rng.upto(8), {});
    if (!is_closed(p)) continue;
    // reachability via reduce
    std::set<std::string> reach;
    std::vector<ProcessPtr> work{normal_form(p)};
    reach.insert(print(work[0]));
    while (!work.empty() && reach.size() < 200) {
      ProcessPtr cur = work.back();
      work.pop_back();
      for (const auto& r : reduce(cur, o)) {
        if (reach.insert(print(r)).second) work.push_back(r);
      }
    }
    if (reach.size() >= 200) continue;
    // reachability via tau edges of explore
    auto g = explore(p, 5000, o);
    std::set<int> seen{g.initial};
    std::vector<int> stack{g.initial};
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      for (const auto& t : g.transitions) {
        if (t.from != cur || !t.label.is_tau()) continue;
        if (seen.insert(t.to).second) stack.push_back(t.to);
      }
    }
    std::set<std::string> tau_reach;
    for (int s : seen) tau_reach.insert(g.states[static_cast<size_t>(s)]);
    CHECK(tau_reach == reach);
  }
}
