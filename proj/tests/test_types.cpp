#include <doctest.h>

#include <functional>

#include "generators.hpp"
#include "mpst/types.hpp"

using namespace mpst;

namespace {
GlobalTypePtr G(const std::string& s) { return parse_global_type(s); }
LocalTypePtr T(const std::string& s) { return parse_local_type(s); }
}  // namespace

TEST_CASE("type parsing round-trips") {
  for (const char* s : {"1->3:<U>.2->3:<U>.end", "1->2:{l1: end, l2: 1->2:<bool>.end}",
                        "rec t. 1->2:<U>.t", "1->2:<<1->2:<bool>.end>>.end"}) {
    CHECK(print(G(s)) == print(parse_global_type(print(G(s)))));
  }
  for (const char* s : {"3!<U>.end", "1?(U).2?(U).end", "2(+){l1: end, l2: 3!<W>.end}",
                        "1&{l1: end}", "rec t. 2!<U>.t", "2!<1?(U).end>.end"}) {
    CHECK(print(T(s)) == print(parse_local_type(print(T(s)))));
  }
}

TEST_CASE("roles of global and local types") {
  CHECK(roles_global(G("1->3:<U>.2->3:<U>.end")) == RoleSet{1, 2, 3});
  CHECK(roles_global(G("end")).empty());
  CHECK(roles_local(T("3!<U>.end")) == RoleSet{3});
  CHECK(roles_local(T("rec t. 1!<U>.t")) == RoleSet{1});
}

TEST_CASE("global projection of the running example") {
  GlobalTypePtr ga = G("1->3:<U>.2->3:<U>.end");
  auto t1 = project_global(ga, 1);
  REQUIRE(t1);
  CHECK(print(*t1) == "3!<U>.end");
  auto t3 = project_global(ga, 3);
  REQUIRE(t3);
  CHECK(print(*t3) == "1?(U).2?(U).end");
  auto te = project_global(G("end"), 5);
  REQUIRE(te);
  CHECK(print(*te) == "end");
}

TEST_CASE("projection of recursion returns end on bare type variables") {
  // role 3 does not occur: body projects to the bare variable
  auto t = project_global(G("rec t. 1->2:<U>.t"), 3);
  REQUIRE(t);
  CHECK(print(*t) == "end");
  auto t1 = project_global(G("rec t. 1->2:<U>.t"), 1);
  REQUIRE(t1);
  CHECK(print(*t1) == "rec t. 2!<U>.t");
}

TEST_CASE("projection set of the governed-example witness") {
  auto ps = projection_set("sa", G("1->3:<S>.2->3:<S>.end"));
  REQUIRE(ps);
  REQUIRE(ps->size() == 3);
  CHECK(print(ps->at(Endpoint{"sa", 1})) == "3!<S>.end");
  CHECK(print(ps->at(Endpoint{"sa", 2})) == "3!<S>.end");
  CHECK(print(ps->at(Endpoint{"sa", 3})) == "1?(S).2?(S).end");

  CHECK(projection_set("s", G("end"))->empty());

  auto p2 = projection_set("s", G("1->2:<bool>.end"));
  REQUIRE(p2);
  CHECK(print(p2->at(Endpoint{"s", 1})) == "2!<bool>.end");
  CHECK(print(p2->at(Endpoint{"s", 2})) == "1?(bool).end");
}

TEST_CASE("projection undefined on disagreeing outsider branches") {
  std::string why;
  auto t = project_global(G("1->2:{l1: 1->3:<U>.end, l2: end}"), 3, &why);
  CHECK(!t);
  CHECK(!why.empty());
}

TEST_CASE("local projection base and otherwise clauses") {
  auto b = project_local(T("3!<U>.end"), 3);
  REQUIRE(b);
  CHECK(print(*b) == "!<U>.end");
  auto b2 = project_local(T("3!<U>.end"), 2);
  REQUIRE(b2);
  CHECK(print(*b2) == "end");
}

TEST_CASE("local projection agreement clause, exhaustively for small types") {
  // select/branch toward q: an outsider r must see agreeing projections.
  // Brute-force all local types of depth <= 3 over one label set and check
  // that project_local is defined exactly when all arms agree.
  std::vector<LocalTypePtr> small;
  std::function<void(int, std::function<void(LocalTypePtr)>)> gen =
      [&](int depth, std::function<void(LocalTypePtr)> k) {
        k(LocalType::make_end());
        if (depth == 0) return;
        gen(depth - 1, [&](LocalTypePtr t) {
          k(LocalType::make_send(2, Exchange::make_sort(Sort::make_atom("U")), t));
          k(LocalType::make_send(3, Exchange::make_sort(Sort::make_atom("U")), t));
        });
      };
  gen(2, [&](LocalTypePtr t) { small.push_back(t); });
  int defined = 0, undefined = 0;
  for (const auto& t1 : small) {
    for (const auto& t2 : small) {
      auto sel = LocalType::make_select(1, {{"l1", t1}, {"l2", t2}});
      auto pr = project_local(sel, 2);  // r = 2, not the peer (1)
      auto p1 = project_local(t1, 2);
      auto p2 = project_local(t2, 2);
      REQUIRE(p1);
      REQUIRE(p2);
      if (equal(*p1, *p2)) {
        REQUIRE(pr);
        CHECK(equal(*pr, *p1));
        ++defined;
      } else {
        CHECK(!pr);
        ++undefined;
      }
    }
  }
  CHECK(defined > 0);
  CHECK(undefined > 0);
}

TEST_CASE("duality clauses and involution") {
  CHECK(print(dual(BinaryType::make_end())) == "end");
  auto b = project_local(T("2!<U>.end"), 2);
  REQUIRE(b);
  CHECK(print(dual(*b)) == "?(U).end");

  // involution, exhaustively on binary types of size <= 8
  std::vector<BinaryTypePtr> all;
  std::function<void(int, std::function<void(BinaryTypePtr)>)> gen =
      [&](int size, std::function<void(BinaryTypePtr)> k) {
        k(BinaryType::make_end());
        if (size <= 1) return;
        gen(size - 1, [&](BinaryTypePtr b2) {
          k(BinaryType::make_out(Exchange::make_sort(Sort::make_atom("U")), b2));
          k(BinaryType::make_in(Exchange::make_sort(Sort::make_bool()), b2));
          k(BinaryType::make_select({{"l1", b2}}));
          k(BinaryType::make_branch({{"l1", b2}, {"l2", BinaryType::make_end()}}));
          k(BinaryType::make_rec("t", b2));
        });
      };
  gen(4, [&](BinaryTypePtr b2) {
    if (type_size(b2) <= 8) all.push_back(b2);
  });
  CHECK(all.size() > 100);
  for (const auto& x : all) {
    CHECK(equal(dual(dual(x)), x));
    CHECK(type_size(dual(x)) == type_size(x));
  }
}

TEST_CASE("coherence of the introduction protocol") {
  EndpointTypeMap d;
  d[Endpoint{"s", 1}] = T("2!<bool>.end");
  d[Endpoint{"s", 2}] = T("1?(bool).end");
  CHECK(coherent(d));
  CHECK(coherent(EndpointTypeMap{}));

  EndpointTypeMap partial;
  partial[Endpoint{"s", 1}] = T("2!<bool>.end");
  CHECK(coherent(partial));        // pairwise duality holds vacuously
  CHECK(!fully_coherent(partial)); // role 2 missing
}

TEST_CASE("unfolding") {
  auto t = T("rec t. 1!<U>.t");
  CHECK(print(unfold(t)) == "1!<U>.rec t. 1!<U>.t");
  CHECK(print(unfold(T("end"))) == "end");
  CHECK(equal(unfold(unfold(t)), unfold(t)));  // idempotent on non-rec heads

  auto g = G("rec t. 1->2:<U>.t");
  CHECK(print(unfold(g)) == "1->2:<U>.rec t. 1->2:<U>.t");
}

TEST_CASE("well-formedness checks") {
  CHECK(!well_formed(G("1->3:<U>.2->3:<U>.end")));
  CHECK(well_formed(G("1->3:<U>.end")));             // role 2 missing
  CHECK(well_formed(GlobalType::make_msg(1, 1, Exchange::make_sort(Sort::make_bool()),
                                         GlobalType::make_end())));  // p = q
  CHECK(well_formed(G("rec t. t")));                 // unguarded
}

TEST_CASE("projection duality identity on random well-formed global types") {
  testgen::Rng rng(101);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    GlobalTypePtr g = testgen::gen_wf_global(rng, 2 + rng.upto(9));
    RoleSet roles = roles_global(g);
    for (Role p : roles) {
      for (Role q : roles) {
        if (p == q) continue;
        auto tp = project_global(g, p);
        auto tq = project_global(g, q);
        if (!tp || !tq) continue;
        auto bpq = project_local(*tp, q);
        auto bqp = project_local(*tq, p);
        if (!bpq || !bqp) continue;
        CHECK(equal(*bpq, dual(*bqp)));
        ++checked;
      }
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("projection sets are fully coherent whenever defined") {
  testgen::Rng rng(103);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    GlobalTypePtr g = testgen::gen_wf_global(rng, 2 + rng.upto(8));
    auto ps = projection_set("s", g);
    if (!ps) continue;
    CHECK(fully_coherent(*ps));
    ++checked;
  }
  CHECK(checked > 100);
}
