#include "doctest.h"
#include "relhoare/finsys.hpp"

using namespace relhoare;
using namespace relhoare::finsys;

TEST_CASE("exact_eventually_set") {
  CHECK(exact_eventually_set(FinSys(2, {{0, 1}}), 0b10) == 0b11);
  CHECK(exact_eventually_set(FinSys(2, {{0, 0}}), 0b10) == 0b10);
  // product states (0,0)=0, (0,1)=1, (1,0)=2, (1,1)=3
  const auto prod = product_graph(FinSys(2, {{0, 1}}));
  CHECK(prod.edges() == std::set<std::pair<State, State>>{{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  CHECK(exact_eventually_set(prod, 0b0010) == 0b0010);
}

TEST_CASE("exact_eventually_n_set") {
  const FinSys g(2, {{0, 1}});
  CHECK(exact_eventually_n_set(g, 1, 0b10) == 0b01);
  CHECK(exact_eventually_n_set(g, 0, 0b10) == 0b10);
  const FinSys nd(4, {{0, 1}, {0, 2}, {2, 3}});
  for (kernel::Steps n = 0; n <= 8; ++n) CHECK_FALSE(has(exact_eventually_n_set(nd, n, 0b1010), 0));
  CHECK(has(exact_eventually_set(nd, 0b1010), 0));
}

TEST_CASE("backward iteration agrees with the recursive kernel definition") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto g = random_system(seed, 5, 3);
    auto sys = as_oracle(g);
    for (StateSet q = 0; q < 32; q += 3)
      for (kernel::Steps n = 0; n <= 4; ++n) {
        const auto e = exact_eventually_n_set(g, n, q);
        for (State s = 0; s < 5; ++s) CHECK(kernel::eventually_n_holds(*sys, s, n, member(q)) == has(e, s));
      }
  }
}

TEST_CASE("exact_eventually_set is monotone") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto g = random_system(seed, 4, 2);
    for (StateSet q = 0; q < 16; ++q)
      for (StateSet r = q; r < 16; r = (r + 1) | q) CHECK((exact_eventually_set(g, q) & ~exact_eventually_set(g, r)) == 0);
  }
}

TEST_CASE("random_system") {
  CHECK(to_string(random_system(0, 4, 2)) == to_string(random_system(0, 4, 2)));
  bool differ = false;
  for (std::uint64_t s = 0; s < 100; ++s) differ = differ || to_string(random_system(s, 4, 2)) != to_string(random_system(s + 1, 4, 2));
  CHECK(differ);
  for (std::uint64_t k = 0; k < 5; ++k) {
    const auto g = random_system(k, 1, 0);
    CHECK(g.n_states() == 1);
    CHECK(g.edges().empty());
  }
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto g = random_system(s, 6, 3);
    for (State x = 0; x < 6; ++x) {
      CHECK(g.successors(x).size() <= 3);
      CHECK(std::is_sorted(g.successors(x).begin(), g.successors(x).end()));
    }
  }
  CHECK_THROWS_AS(random_system(0, 7, 2), Error);
  CHECK_THROWS_AS(FinSys(2, {{0, 2}}), Error);
}

TEST_CASE("exhaustive containment on three states") {
  const auto r = exhaustive_lemma1();
  CHECK(r.cases == 512 * 8 * 4);
  CHECK(r.violations == 0);
}

TEST_CASE("soundness suite: small run exercises every rule family") {
  const auto r = run_soundness_suite(7, 400);
  CHECK(r.trials == 400);
  for (const auto& v : r.violations) MESSAGE(v.rule << " " << v.system << " " << v.inputs);
  CHECK(r.passed());
  for (const auto& name : r.rules_tested) {
    INFO(name);
    CHECK(r.premises_held.at(name) > 0);
  }
}

TEST_CASE("soundness suite: single trial") {
  const auto r = run_soundness_suite(123, 1);
  CHECK(r.trials == 1);
  CHECK(r.passed());
}

TEST_CASE("soundness suite catches a broken COMP") {
  SuiteOptions opt;
  opt.broken_comp = true;
  const auto r = run_soundness_suite(42, 500, opt);
  bool comp = false;
  for (const auto& v : r.violations) comp = comp || v.rule == "COMP";
  CHECK(comp);
}
