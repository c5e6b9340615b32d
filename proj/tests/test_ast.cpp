#include <doctest.h>

#include <deque>
#include <functional>
#include <set>

#include "generators.hpp"
#include "mpst/ast.hpp"

using namespace mpst;

namespace {

ProcessPtr P(const std::string& text) { return parse_process(text); }

// Single-step structural-congruence rewrites (the rules normal_form claims
// to decide, recursion unfolding excluded). Used as the independent oracle.
std::vector<ProcessPtr> cong_neighbors(const ProcessPtr& p) {
  using K = Process::Kind;
  std::vector<ProcessPtr> out;

  std::function<void(const ProcessPtr&, const std::function<ProcessPtr(ProcessPtr)>&)> walk =
      [&](const ProcessPtr& node, const std::function<ProcessPtr(ProcessPtr)>& rebuild) {
        // rule applications at this node
        if (node->kind == K::Par) {
          out.push_back(rebuild(Process::make_par(node->right, node->left)));  // comm
          if (node->left->kind == K::Par) {                                    // assoc
            out.push_back(rebuild(Process::make_par(
                node->left->left, Process::make_par(node->left->right, node->right))));
          }
          if (node->right->kind == K::Par) {
            out.push_back(rebuild(Process::make_par(
                Process::make_par(node->left, node->right->left), node->right->right)));
          }
          if (node->right->kind == K::Inact) out.push_back(rebuild(node->left));  // unit
          if (node->left->kind == K::Inact) out.push_back(rebuild(node->right));
          // scope extrusion (right-to-left): (new n)A | B == (new n)(A|B)
          if (node->left->kind == K::Hide &&
              !free_names(node->right).count(node->left->name)) {
            out.push_back(rebuild(Process::make_hide(
                node->left->name, Process::make_par(node->left->body, node->right))));
          }
          if (node->right->kind == K::Hide &&
              !free_names(node->left).count(node->right->name)) {
            out.push_back(rebuild(Process::make_hide(
                node->right->name, Process::make_par(node->left, node->right->body))));
          }
        }
        out.push_back(rebuild(Process::make_par(node, Process::make_inact())));  // add unit
        if (node->kind == K::Hide) {
          if (node->body->kind == K::Hide) {  // restriction swap
            out.push_back(rebuild(Process::make_hide(
                node->body->name, Process::make_hide(node->name, node->body->body))));
          }
          if (node->body->kind == K::Inact) out.push_back(rebuild(Process::make_inact()));
          if (node->body->kind == K::Par &&
              !free_names(node->body->right).count(node->name)) {
            // extrusion left-to-right
            out.push_back(rebuild(Process::make_par(
                Process::make_hide(node->name, node->body->left), node->body->right)));
          }
        }
        // descend
        switch (node->kind) {
          case K::Par:
            walk(node->left, [&, node](ProcessPtr q) {
              return rebuild(Process::make_par(q, node->right));
            });
            walk(node->right, [&, node](ProcessPtr q) {
              return rebuild(Process::make_par(node->left, q));
            });
            break;
          case K::Hide:
            walk(node->body, [&, node](ProcessPtr q) {
              return rebuild(Process::make_hide(node->name, q));
            });
            break;
          default:
            break;
        }
      };
  walk(p, [](ProcessPtr q) { return q; });
  return out;
}

}  // namespace

TEST_CASE("parsing the client process of the resource usecase") {
  ProcessPtr p = P("a~[3](x). x[1]?(z). x[2]?(y). 0");
  REQUIRE(p->kind == Process::Kind::Request);
  CHECK(p->shared_id == "a");
  CHECK(p->role == 3);
  CHECK(p->binder == "x");
  const auto& r1 = p->body;
  REQUIRE(r1->kind == Process::Kind::Recv);
  CHECK(r1->channel.kind == Channel::Kind::Var);
  CHECK(r1->channel.var == "x");
  CHECK(r1->role == 1);
  CHECK(r1->binder == "z");
  const auto& r2 = r1->body;
  REQUIRE(r2->kind == Process::Kind::Recv);
  CHECK(r2->role == 2);
  CHECK(r2->body->kind == Process::Kind::Inact);
}

TEST_CASE("parsing inaction and parallel units") {
  CHECK(P("0")->kind == Process::Kind::Inact);
  auto lhs = canonical(P("(s[1][2]!<v>. 0 | s[2][1]?(x). 0) | 0"));
  auto rhs = canonical(P("s[1][2]!<v>. 0 | s[2][1]?(x). 0"));
  CHECK(lhs == rhs);
}

TEST_CASE("parse errors carry position and reject duplicate branch labels") {
  CHECK_THROWS_AS(P("a~[3]x). 0"), ParseError);
  CHECK_THROWS_AS(P("s[1][2]&{l: 0, l: 0}"), ParseError);
  CHECK_THROWS_AS(P("if true then 0"), ParseError);
}

TEST_CASE("substitution replaces channel variables by endpoints") {
  ProcessPtr p = parse_process("x[3]!<v>. 0");
  ProcessPtr q = substitute(p, "x", Value::make_endpoint({"s", 1}));
  REQUIRE(q->kind == Process::Kind::Send);
  CHECK(q->channel.kind == Channel::Kind::Endpoint);
  CHECK(q->channel.endpoint == Endpoint{"s", 1});
  CHECK(print(q) == "s[1][3]!<v>. 0");

  CHECK(equal(substitute(Process::make_inact(), "x", Value::make_endpoint({"s", 1})),
              Process::make_inact()));

  ProcessPtr rec = P("rec X. X");
  CHECK(equal(substitute(rec, "x", Value::make_name("a")), rec));
}

TEST_CASE("free names of the usecase processes") {
  ProcessPtr p1 = P("a[1](x). b[1](y). x[3]!<v>. y[2]!<w>. 0");
  auto fn = free_names(p1);
  CHECK(fn.count("a"));
  CHECK(fn.count("b"));
  // atoms are names carrying declared sorts
  std::set<std::string> allowed = {"a", "b", "v", "w"};
  for (const auto& n : fn) CHECK(allowed.count(n));

  CHECK(free_names(Process::make_inact()).empty());

  ProcessPtr hidden = P("(new s) s[1][2]!<v>. 0");
  auto fn2 = free_names(hidden);
  CHECK(!fn2.count("s"));
  CHECK(fn2 == std::set<std::string>{"v"});
}

TEST_CASE("free variables and closedness") {
  CHECK(free_vars(P("x[3]!<v>. 0")) == std::set<std::string>{"x"});
  CHECK(is_closed(P("a[1](x). x[3]!<v>. 0")));
  CHECK(!is_closed(P("X")));
  CHECK(is_closed(P("rec X. a[1](x). X")));
}

TEST_CASE("normal form: unit, commutativity, restriction swap") {
  ProcessPtr p = P("s[1][2]!<v>. 0");
  CHECK(canonical(Process::make_par(p, Process::make_inact())) == canonical(p));
  CHECK(canonical(Process::make_par(Process::make_inact(), p)) == canonical(p));

  ProcessPtr a = P("(new m)(new n)(m[1][2]!<v>. 0 | n[2][1]?(x). 0)");
  ProcessPtr b = P("(new n)(new m)(m[1][2]!<v>. 0 | n[2][1]?(x). 0)");
  CHECK(canonical(a) == canonical(b));
}

TEST_CASE("normal form hoists restrictions and drops dead ones") {
  ProcessPtr p = P("s[1][2]!<v>. 0 | (new n) n[1][2]!<w>. 0");
  ProcessPtr nf = normal_form(p);
  CHECK(nf->kind == Process::Kind::Hide);
  CHECK(canonical(P("(new n) 0")) == "0");
  // a dead restriction inside a parallel composition is collected too
  CHECK(canonical(P("(new n) 0 | s[1][2]!<v>. 0")) == canonical(P("s[1][2]!<v>. 0")));
}

TEST_CASE("alpha-canonicalisation ignores bound names") {
  CHECK(canonical(P("a[1](x). x[2]!<v>. 0")) == canonical(P("a[1](y). y[2]!<v>. 0")));
  CHECK(canonical(P("(new s)(s[1][2]!<v>. 0)")) == canonical(P("(new t)(t[1][2]!<v>. 0)")));
  CHECK(canonical(P("rec X. a[1](x). X")) == canonical(P("rec Y. a[1](z). Y")));
}

TEST_CASE("normal form is idempotent and round-trips through the parser") {
  testgen::Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    ProcessPtr p = testgen::gen_process(rng, 2 + rng.upto(10), {});
    ProcessPtr nf = normal_form(p);
    CHECK(equal(nf, normal_form(nf)));
    CHECK(equal(parse_process(print(nf)), nf));
    CHECK(equal(parse_process(print(p)), p));
  }
}

TEST_CASE("substitution lemma on free variables") {
  testgen::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    testgen::ProcGenCtx ctx;
    ctx.val_vars.push_back("u0");
    ProcessPtr p = testgen::gen_process(rng, 2 + rng.upto(8), ctx);
    Value v = rng.coin() ? Value::make_name("v") : Value::make_endpoint({"s", 1});
    auto before = free_vars(p);
    auto after = free_vars(substitute(p, "u0", v));
    before.erase("u0");
    CHECK(after == before);
  }
}

TEST_CASE("structural congruence closure agrees with normal forms") {
  testgen::Rng rng(23);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    ProcessPtr p = testgen::gen_process(rng, 2 + rng.upto(9), {});
    // soundness: every ≡-rewrite preserves the normal form
    std::set<std::string> visited;
    std::deque<std::pair<ProcessPtr, int>> work;
    work.push_back({p, 0});
    visited.insert(print(p));
    std::string nf = canonical(p);
    while (!work.empty()) {
      auto [cur, depth] = work.front();
      work.pop_front();
      REQUIRE(canonical(cur) == nf);
      ++checked;
      if (depth >= 3 || visited.size() > 400) continue;
      for (const auto& q : cong_neighbors(cur)) {
        if (visited.insert(print(q)).second) work.push_back({q, depth + 1});
      }
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("equal normal forms are congruence-derivable for shuffled terms") {
  testgen::Rng rng(31);
  for (int i = 0; i < 40; ++i) {
    // build P | Q vs Q | P and associativity variants; both directions hold
    ProcessPtr a = testgen::gen_process(rng, 2 + rng.upto(5), {});
    ProcessPtr b = testgen::gen_process(rng, 2 + rng.upto(5), {});
    ProcessPtr c = testgen::gen_process(rng, 2 + rng.upto(5), {});
    ProcessPtr lhs = Process::make_par(Process::make_par(a, b), c);
    ProcessPtr rhs = Process::make_par(c, Process::make_par(b, a));
    REQUIRE(canonical(lhs) == canonical(rhs));
    // and the oracle can reach a witness with the same normal form
    std::set<std::string> visited{print(lhs)};
    std::deque<std::pair<ProcessPtr, int>> work{{lhs, 0}};
    bool found = false;
    while (!work.empty() && !found) {
      auto [cur, depth] = work.front();
      work.pop_front();
      if (equal(normal_form(cur), normal_form(rhs)) && print(cur) == print(rhs)) found = true;
      if (depth >= 4 || visited.size() > 3000) continue;
      for (const auto& q : cong_neighbors(cur)) {
        if (visited.insert(print(q)).second) work.push_back({q, depth + 1});
      }
    }
    CHECK(found);
  }
}
