#include <benchmark/benchmark.h>

#include "mpst/bisim.hpp"
#include "mpst/genv.hpp"
#include "mpst/lts.hpp"
#include "mpst/typing.hpp"

using namespace mpst;

namespace {

SharedEnv running_gamma() {
  SharedEnv g;
  g.ids["a"] = Sort::make_global(parse_global_type("1->3:<U>.2->3:<U>.end"));
  g.ids["b"] = Sort::make_global(parse_global_type("1->2:<U>.end"));
  g.ids["v"] = Sort::make_atom("U");
  g.ids["w"] = Sort::make_atom("U");
  return g;
}

AnalysisOptions default_opts() {
  AnalysisOptions opts;
  opts.universe = {Value::make_bool(true), Value::make_bool(false), Value::make_name("v")};
  return opts;
}

const char* kQ1 =
    "(new sb)(sa[1][3]!<v>. sb[1][2]!<w>. 0 | sb[2][1]?(x). 0 | sa[2][3]!<v>. 0)";
const char* kQ2 = "(new sb)(sa[1][3]!<v>. sb[1][2]!<w>. 0 | sb[2][1]?(x). sa[2][3]!<v>. 0)";

void BM_NormalForm(benchmark::State& state) {
  ProcessPtr p = parse_process(kQ1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(normal_form(p));
  }
}
BENCHMARK(BM_NormalForm);

void BM_Infer(benchmark::State& state) {
  SharedEnv g = running_gamma();
  ProcessPtr p = parse_process("a[1](x). b[1](y). x[3]!<v>. y[2]!<w>. 0");
  for (auto _ : state) {
    benchmark::DoNotOptimize(infer(g, p));
  }
}
BENCHMARK(BM_Infer);

void BM_ExploreUntyped(benchmark::State& state) {
  ProcessPtr p = parse_process(kQ1);
  auto opts = default_opts();
  for (auto _ : state) {
    benchmark::DoNotOptimize(explore(p, 10000, opts.step_options()));
  }
}
BENCHMARK(BM_ExploreUntyped);

void BM_GenvReachable(benchmark::State& state) {
  GlobalEnv e;
  e.sessions["sa"] = parse_global_type("1->3:<U>.2->3:<U>.end");
  e.sessions["sb"] = parse_global_type("1->2:<U>.end");
  for (auto _ : state) {
    benchmark::DoNotOptimize(genv_reachable(e));
  }
}
BENCHMARK(BM_GenvReachable);

void BM_BisimStandard(benchmark::State& state) {
  SharedEnv g = running_gamma();
  ProcessPtr q1 = parse_process(kQ1);
  ProcessPtr q2 = parse_process(kQ2);
  SessionEnv d0 = parse_session_env("{ sa[1]: 3!<U>.end; sa[2]: 3!<U>.end; }");
  auto opts = default_opts();
  for (auto _ : state) {
    benchmark::DoNotOptimize(bisim_standard(g, q1, d0, q2, d0, opts));
  }
}
BENCHMARK(BM_BisimStandard);

}  // namespace

BENCHMARK_MAIN();
