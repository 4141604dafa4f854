#include <set>

#include "doctest.h"
#include "relhoare/finsys.hpp"

using namespace relhoare;
using namespace relhoare::kernel;
using finsys::FinSys;
using finsys::member;
using St = finsys::State;

namespace {

FinSys single_edge() { return FinSys(2, {{0, 1}}); }
FinSys branching() { return FinSys(4, {{0, 1}, {0, 2}, {2, 3}}); }

Precondition<St> pre_of(std::vector<St> xs) {
  std::set<St> keep(xs.begin(), xs.end());
  return {xs, {[keep](const St& s) { return keep.count(s) > 0; }, "P"}};
}

PairPrecondition<St> pair_pre(std::vector<StatePair<St>> xs) {
  std::set<StatePair<St>> keep(xs.begin(), xs.end());
  return {xs, {[keep](const St& a, const St& b) { return keep.count({a, b}) > 0; }, "Pxx", std::nullopt}, std::nullopt};
}

PairProperty<St> pair_in(std::set<StatePair<St>> q) {
  return {[q](const St& a, const St& b) { return q.count({a, b}) > 0; }, "Qxx", std::nullopt};
}

StepFn<St> c(Steps n) { return StepFn<St>::constant(n); }
Frame<St> any() { return any_change<St>(); }

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io_error;
}

}  // namespace

TEST_CASE("eventually_n_holds on a single edge") {
  auto sys = finsys::as_oracle(single_edge());
  CHECK(eventually_n_holds(*sys, St{0}, 1, member(0b10)));
  CHECK(eventually_n_holds(*sys, St{0}, 0, member(0b01)));
  CHECK_FALSE(eventually_n_holds(*sys, St{0}, 2, member(0b10)));
}

TEST_CASE("eventually_holds: self-loop, budget and the product pitfall path") {
  auto loop = finsys::as_oracle(FinSys(2, {{0, 0}}));
  CHECK(eventually_holds(*loop, St{0}, member(0b10), 10).outcome == Outcome::refuted);

  auto chain = finsys::as_oracle(FinSys(4, {{0, 1}, {1, 2}, {2, 3}}));
  CHECK(eventually_holds(*chain, St{0}, member(0b1000), 1).outcome == Outcome::unknown);
  auto ok = eventually_holds(*chain, St{0}, member(0b1000), 10);
  CHECK(ok.outcome == Outcome::proven);
  CHECK(ok.hits == std::vector<St>{3});

  // product states index a*2+b: (0,0)=0, (0,1)=1, (1,0)=2, (1,1)=3
  const auto prod = finsys::product_graph(single_edge());
  auto psys = finsys::as_oracle(prod);
  auto r = eventually_holds(*psys, St{0}, member(0b0010), 10);
  REQUIRE(r.outcome == Outcome::refuted);
  REQUIRE(r.witness);
  std::vector<St> path{0};
  St cur = 0;
  for (auto ch : r.witness->choices) path.push_back(cur = psys->successors(cur)[ch]);
  CHECK(path == std::vector<St>{0, 2, 3});
  CHECK(replay(*psys, St{0}, r.witness->choices) == 3);
}

TEST_CASE("check_ensures reports an empty precondition") {
  auto sys = finsys::as_oracle(single_edge());
  auto v = check_ensures(sys, pre_of({}), member(0b10), any(), 8);
  CHECK(v.proven());
  REQUIRE(v.report.warnings.size() == 1);
  CHECK(v.report.warnings[0].find("EmptyPrecondition") == 0);
}

TEST_CASE("check_ensures rejects instances outside the predicate") {
  auto sys = finsys::as_oracle(single_edge());
  Precondition<St> bad{{0, 1}, member(0b01)};
  CHECK(code_of([&] { check_ensures(sys, bad, member(0b10), any(), 8); }) == ErrorCode::precondition_violated);
}

TEST_CASE("ensures_n on a branching system: no constant step count, Auto unresolvable") {
  const auto g = branching();
  auto sys = finsys::as_oracle(g);
  const finsys::StateSet q = 0b1010;
  CHECK(check_ensures(sys, pre_of({0}), member(q), any(), 8).proven());
  for (Steps n = 0; n <= 8; ++n) {
    auto v = check_ensures_n(sys, pre_of({0}), c(n), member(q), any());
    CHECK(v.outcome == Outcome::refuted);
    CHECK_FALSE(finsys::has(finsys::exact_eventually_n_set(g, n, q), 0));
    REQUIRE(v.counterexample);
    CHECK(replay(*sys, St{0}, v.counterexample->choices[0]) == v.counterexample->final_states[0]);
  }
  CHECK(code_of([&] { check_ensures_n(sys, pre_of({0}), StepFn<St>::automatic(), member(q), any()); }) ==
        ErrorCode::step_fn_unresolvable);
}

TEST_CASE("check_ensures_n with Auto records the resolved step count") {
  auto sys = finsys::as_oracle(FinSys(4, {{0, 1}, {1, 2}, {2, 3}}));
  auto v = check_ensures_n(sys, pre_of({0, 1}), StepFn<St>::automatic(), member(0b1000), any());
  REQUIRE(v.proven());
  CHECK(v.report.steps0 == std::vector<Steps>{3, 2});
  CHECK(v.judgment->unary().steps.text() == "auto");
}

TEST_CASE("check_ensures2: nesting proves the product-relation example") {
  const auto g = single_edge();
  auto sys = finsys::as_oracle(g);
  auto v = check_ensures2(sys, pair_pre({{0, 0}}), c(0), c(1), pair_in({{0, 1}}), any_pair_change<St>());
  CHECK(v.proven());
  CHECK(finsys::oracle_ensures2(g, {{0, 0}}, c(0), c(1), pair_in({{0, 1}}), any_pair_change<St>()));
  // the naive interleaving product loses it
  CHECK_FALSE(finsys::has(finsys::exact_eventually_set(finsys::product_graph(g), 0b0010), 0));
}

TEST_CASE("check_ensures2: refutation and asymmetric enumeration") {
  auto sys = finsys::as_oracle(single_edge());
  auto v = check_ensures2(sys, pair_pre({{0, 0}}), c(1), c(1), pair_in({{0, 1}}), any_pair_change<St>());
  CHECK(v.refuted());
  REQUIRE(v.counterexample);
  CHECK(v.counterexample->initial == std::vector<St>{0, 0});

  auto pre = pair_pre({{0, 1}});
  pre.domains = std::make_pair(std::vector<St>{0}, std::vector<St>{0});
  CHECK(code_of([&] { check_ensures2(sys, pre, c(0), c(0), pair_in({{0, 1}}), any_pair_change<St>()); }) ==
        ErrorCode::asymmetric_enumeration);
}

TEST_CASE("check_hybrid side conditions") {
  auto sys = finsys::as_oracle(single_edge());
  const auto fx = product(any(), any());
  UnaryComponents<St> unary{pre_of({0}), member(0b10), any(), c(1)};
  auto ok = check_hybrid(sys, pair_pre({{0, 0}}), c(1), c(1), pair_in({{1, 1}}), fx, unary, {0, 1});
  CHECK(ok.proven());
  CHECK(ok.judgment->form == Form::hybrid);

  UnaryComponents<St> orphan{pre_of({0, 1}), member(0b10), any(), c(1)};
  auto r1 = check_hybrid(sys, pair_pre({{0, 0}}), c(1), c(1), pair_in({{1, 1}}), fx, orphan, {0, 1});
  REQUIRE(r1.refuted());
  CHECK(r1.counterexample->initial == std::vector<St>{1});
  CHECK(r1.counterexample->reason.find("(i)") == 0);

  // (1,0) satisfies the relational post but 0 is outside the unary post
  auto r2 = check_hybrid(sys, pair_pre({{0, 0}}), c(1), c(1), pair_in({{1, 1}, {1, 0}}), fx, unary, {0, 1});
  REQUIRE(r2.refuted());
  CHECK(r2.counterexample->final_states == std::vector<St>{1, 0});

  CHECK(code_of([&] {
          check_hybrid(sys, pair_pre({{0, 0}}), c(1), c(1), pair_in({{1, 1}}), any_pair_change<St>(), unary, {0, 1});
        }) == ErrorCode::factorization_witness_missing);
  CHECK(check_hybrid(sys, pair_pre({{0, 0}}), c(1), c(1), pair_in({{1, 1}}), any_pair_change<St>(), unary, {0, 1},
                     std::optional<Frame<St>>(any()))
            .proven());
}

TEST_CASE("check_eventually_n_at_pc on a labelled chain") {
  // pc labels: state i sits at address 4*i; 2 is stuck
  auto sys = finsys::as_oracle(FinSys(3, {{0, 1}, {1, 2}}));
  auto pc = [](const St& s) -> std::uint64_t { return 4 * s; };
  CHECK(check_eventually_n_at_pc<St>(sys, pre_of({0}), pc, 0, 8, 2).proven());
  CHECK(check_eventually_n_at_pc<St>(sys, pre_of({0}), pc, 0, 8, 1).refuted());
  CHECK(check_eventually_n_at_pc<St>(sys, pre_of({0}), pc, 0, 4, 1).refuted());  // not stuck at 1
  auto loop = finsys::as_oracle(FinSys(2, {{0, 1}, {1, 0}}));
  for (Steps n = 0; n < 4; ++n) CHECK(check_eventually_n_at_pc<St>(loop, pre_of({0}), pc, 0, 4, n).refuted());
  CHECK(code_of([&] { check_eventually_n_at_pc<St>(sys, pre_of({1}), pc, 0, 8, 1); }) ==
        ErrorCode::precondition_violated);
}

TEST_CASE("CONJ") {
  auto sys = finsys::as_oracle(FinSys(3, {{0, 1}, {1, 2}}));
  auto a = check_ensures_n(sys, pre_of({0}), c(1), member(0b011), any());
  auto b = check_ensures_n(sys, pre_of({0}), c(1), member(0b110), any());
  REQUIRE(a.proven());
  REQUIRE(b.proven());
  auto j = apply_rule<St>(Rule::conj, {a.judgment, b.judgment});
  CHECK(j->form == Form::ensures_n);
  CHECK(j->unary().post(1));
  CHECK_FALSE(j->unary().post(0));
  CHECK_FALSE(j->unary().post(2));
  CHECK(replay(*j));

  auto late = check_ensures_n(sys, pre_of({0}), c(2), member(0b100), any());
  REQUIRE(late.proven());
  CHECK(code_of([&] { apply_rule<St>(Rule::conj, {a.judgment, late.judgment}); }) ==
        ErrorCode::side_condition_failed);

  auto e1 = check_ensures(sys, pre_of({0}), member(0b010), any(), 8);
  auto e2 = check_ensures(sys, pre_of({0}), member(0b100), any(), 8);
  REQUIRE(e1.proven());
  REQUIRE(e2.proven());
  // step-free conjunction would claim states in {1} & {2}
  CHECK(check_ensures(sys, pre_of({0}), member(0b000), any(), 8).refuted());
  CHECK(code_of([&] { apply_rule<St>(Rule::conj, {e1.judgment, e2.judgment}); }) == ErrorCode::schema_mismatch);
}

TEST_CASE("COMM swaps components and preserves the verdict") {
  const auto g = FinSys(3, {{0, 1}, {1, 2}});
  auto sys = finsys::as_oracle(g);
  auto v = check_ensures2(sys, pair_pre({{0, 1}}), c(2), c(1), pair_in({{2, 2}}), any_pair_change<St>());
  REQUIRE(v.proven());
  auto j = apply_rule<St>(Rule::comm, {v.judgment});
  const auto& r = j->relational();
  CHECK(r.pre.instances == std::vector<StatePair<St>>{{1, 0}});
  CHECK(r.steps0.constant_value() == 1);
  CHECK(r.steps1.constant_value() == 2);
  auto again = check_ensures2(sys, r.pre, r.steps0, r.steps1, r.post, r.frame);
  CHECK(again.proven());
  CHECK(replay(*j));
}

TEST_CASE("COMP adds step counts") {
  auto sys = finsys::as_oracle(FinSys(3, {{0, 1}, {1, 2}}));
  auto a = check_ensures2(sys, pair_pre({{0, 0}}), c(1), c(0), pair_in({{1, 0}}), any_pair_change<St>());
  auto b = check_ensures2(sys, pair_pre({{1, 0}}), c(1), c(2), pair_in({{2, 2}}), any_pair_change<St>());
  REQUIRE(a.proven());
  REQUIRE(b.proven());
  auto j = apply_rule<St>(Rule::comp, {a.judgment, b.judgment});
  CHECK(j->relational().steps0.constant_value() == 2);
  CHECK(j->relational().steps1.constant_value() == 2);
  const auto& r = j->relational();
  CHECK(check_ensures2(sys, r.pre, r.steps0, r.steps1, r.post, r.frame).proven());
}

TEST_CASE("FRAME_COMP composes frames F0 x F2") {
  auto sys = finsys::as_oracle(FinSys(3, {{0, 1}, {1, 2}}));
  Frame<St> up{[](const St& a, const St& b) { return b >= a; }, "up", std::nullopt};
  Frame<St> same{[](const St& a, const St& b) { return a == b; }, "same", std::nullopt};
  auto a = check_ensures2(sys, pair_pre({{0, 2}}), c(1), c(0), pair_in({{1, 2}}), product(up, same));
  auto b = check_ensures2(sys, pair_pre({{2, 1}}), c(0), c(1), pair_in({{2, 2}}), product(same, up));
  REQUIRE(a.proven());
  REQUIRE(b.proven());
  auto j = apply_rule<St>(Rule::frame_comp, {a.judgment, b.judgment});
  const auto& r = j->relational();
  CHECK(r.frame.description == "(up) x (up)");
  CHECK(r.pre.predicate(0, 1));
  CHECK(r.post(1, 2));
  CHECK(check_ensures2(sys, r.pre, r.steps0, r.steps1, r.post, r.frame).proven());
  CHECK(replay(*j));
}

TEST_CASE("PRE/POST/FRAME side conditions") {
  auto sys = finsys::as_oracle(FinSys(3, {{0, 1}, {1, 2}}));
  auto v = check_ensures(sys, pre_of({0}), member(0b010), any(), 8);
  REQUIRE(v.proven());
  RuleInputs<St> in;
  in.pre = pre_of({0, 1});
  CHECK(code_of([&] { apply_rule<St>(Rule::pre, {v.judgment}, in); }) == ErrorCode::side_condition_failed);
  RuleInputs<St> post;
  post.post = member(0b001);
  CHECK(code_of([&] { apply_rule<St>(Rule::post, {v.judgment}, post); }) == ErrorCode::side_condition_failed);
  post.post = member(0b011);
  auto weaker = apply_rule<St>(Rule::post, {v.judgment}, post);
  CHECK(weaker->evidence.side_conditions.size() >= 1);
  CHECK(replay(*weaker));
}

TEST_CASE("conversions") {
  auto det = finsys::as_oracle(FinSys(4, {{0, 1}, {1, 2}, {2, 3}}));
  auto e = check_ensures(det, pre_of({0, 1}), member(0b1100), any(), 8);
  REQUIRE(e.proven());
  auto n = convert<St>(Conversion::thm2, {e.judgment});
  CHECK(n->form == Form::ensures_n);
  CHECK(n->unary().steps(0) == 2);
  CHECK(n->unary().steps(1) == 1);
  const auto& u = n->unary();
  CHECK(check_ensures_n(det, u.pre, u.steps, u.post, u.frame).proven());

  auto back = convert<St>(Conversion::thm1, {n});
  CHECK(back->form == Form::ensures);
  CHECK(check_ensures(det, back->unary().pre, back->unary().post, back->unary().frame, 16).proven());

  auto nd = finsys::as_oracle(branching());
  auto ev = check_ensures(nd, pre_of({0}), member(0b1010), any(), 8);
  REQUIRE(ev.proven());
  CHECK(code_of([&] { convert<St>(Conversion::thm2, {ev.judgment}); }) == ErrorCode::not_deterministic);

  auto a = check_ensures_n(det, pre_of({0}), c(1), member(0b0010), any());
  auto b = check_ensures_n(det, pre_of({1, 2}), c(1), member(0b1100), any());
  REQUIRE(a.proven());
  REQUIRE(b.proven());
  auto rel = convert<St>(Conversion::thm3, {a.judgment, b.judgment});
  CHECK(rel->relational().pre.instances == std::vector<StatePair<St>>{{0, 1}, {0, 2}});
  const auto& r = rel->relational();
  CHECK(check_ensures2(det, r.pre, r.steps0, r.steps1, r.post, r.frame).proven());

  CHECK(code_of([&] { convert<St>(Conversion::promote, {e.judgment}); }) == ErrorCode::missing_promotion_evidence);
  CHECK(code_of([&] { convert<St>(Conversion::promote, {e.judgment, nullptr}); }) ==
        ErrorCode::missing_promotion_evidence);
  CHECK(code_of([&] { convert<St>(Conversion::promote, {e.judgment, n}); }) == ErrorCode::missing_promotion_evidence);
}

TEST_CASE("promotion on a labelled chain") {
  auto sys = finsys::as_oracle(FinSys(3, {{0, 1}, {1, 2}}));
  auto pc = [](const St& s) -> std::uint64_t { return 4 * s; };
  auto e = check_ensures(sys, pre_of({0}), member(0b100), any(), 8);
  auto at = check_eventually_n_at_pc<St>(sys, pre_of({0}), pc, 0, 8, 2);
  REQUIRE(e.proven());
  REQUIRE(at.proven());
  auto j = convert<St>(Conversion::promote, {e.judgment, at.judgment});
  CHECK(j->unary().steps.constant_value() == 2);
  const auto& u = j->unary();
  CHECK(check_ensures_n(sys, u.pre, u.steps, u.post, u.frame).proven());
  CHECK(replay(*j));
  CHECK(describe_evidence(*j).find("PROMOTE") != std::string::npos);
}
