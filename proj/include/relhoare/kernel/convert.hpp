#pragma once

#include <memory>
#include <string>
#include <vector>

#include "relhoare/kernel/rules.hpp"

namespace relhoare::kernel {

enum class Conversion { thm1, thm2, thm3, thm4, thm5, promote };

inline const char* to_string(Conversion c) {
  switch (c) {
    case Conversion::thm1: return "THM1";
    case Conversion::thm2: return "THM2";
    case Conversion::thm3: return "THM3";
    case Conversion::thm4: return "THM4";
    case Conversion::thm5: return "THM5";
    case Conversion::promote: return "PROMOTE";
  }
  return "?";
}

namespace detail {

/// ensures_n -> ensures.
template <class S>
JudgmentPtr<S> conv_thm1(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "THM1";
  expect_premises(r, ps, 1);
  expect_form(r, *ps[0], {Form::ensures_n});
  const auto& c = ps[0]->unary();
  auto out = derived<S>(r, Form::ensures, ps[0]->system, ps, {}, in);
  out->components = UnaryComponents<S>{c.pre, c.post, c.frame, StepFn<S>::constant(0)};
  return out;
}

/// ensures -> ensures_n on a deterministic region. The certificate covers
/// every state visited before the first hit; the step function is the
/// first-hit depth per instance.
template <class S>
JudgmentPtr<S> conv_thm2(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "THM2";
  expect_premises(r, ps, 1);
  expect_form(r, *ps[0], {Form::ensures});
  const auto& sys = *ps[0]->system;
  const auto& c = ps[0]->unary();
  std::size_t visited = 0;
  std::vector<std::pair<S, Steps>> table;
  for (const auto& s : c.pre.instances) {
    S cur = s;
    Steps depth = 0;
    for (;;) {
      ++visited;
      if (c.post(cur) && c.frame(s, cur)) break;
      auto succ = sys.successors(cur);
      if (succ.size() > 1)
        throw Error(ErrorCode::not_deterministic,
                    "THM2: a reachable state has " + std::to_string(succ.size()) + " successors");
      if (succ.empty() || depth >= in.budget)
        side_failed<S>(r, "premise could not be re-established along the deterministic run");
      cur = succ[0];
      ++depth;
    }
    table.emplace_back(s, depth);
  }
  auto out = derived<S>(r, Form::ensures_n, ps[0]->system, ps,
                        {{"determinism certificate", "simulation to first hit", visited, true}}, in);
  out->components = UnaryComponents<S>{c.pre, c.post, c.frame, StepFn<S>::table(std::move(table), "first-hit")};
  return out;
}

/// Two ensures_n -> ensures2 over the products.
template <class S>
JudgmentPtr<S> conv_thm3(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "THM3";
  expect_premises(r, ps, 2);
  expect_form(r, *ps[0], {Form::ensures_n});
  expect_form(r, *ps[1], {Form::ensures_n});
  const auto& a = ps[0]->unary();
  const auto& b = ps[1]->unary();
  PairPrecondition<S> pre;
  for (const auto& x : a.pre.instances)
    for (const auto& y : b.pre.instances) pre.instances.emplace_back(x, y);
  pre.predicate = product(a.pre.predicate, b.pre.predicate);
  pre.domains = std::make_pair(a.pre.instances, b.pre.instances);
  auto out = derived<S>(r, Form::ensures2, ps[0]->system, ps, {}, in);
  out->components =
      RelationalComponents<S>{pre, product(a.post, b.post), product(a.frame, b.frame), a.steps, b.steps};
  return out;
}

/// hybrid -> ensures_n of the second program.
template <class S>
JudgmentPtr<S> conv_thm4(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "THM4";
  expect_premises(r, ps, 1);
  expect_form(r, *ps[0], {Form::hybrid});
  const auto& h = ps[0]->hybrid();
  auto out = derived<S>(r, Form::ensures_n, ps[0]->system, ps, {}, in);
  out->components = UnaryComponents<S>{h.unary.pre, h.unary.post, h.unary.frame, h.rel.steps1};
  return out;
}

/// Correctness of the first program plus a relational triple give a hybrid
/// triple for the second; `in.target` supplies its unary P, Q, F.
template <class S>
JudgmentPtr<S> conv_thm5(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "THM5";
  expect_premises(r, ps, 2);
  expect_form(r, *ps[0], {Form::ensures_n});
  expect_form(r, *ps[1], {Form::ensures2});
  if (!in.target) schema<S>(r, "needs the unary triple of the second program");
  const auto& corr = ps[0]->unary();
  const auto& rel = ps[1]->relational();
  std::vector<SideCondition> sides;

  RelationalComponents<S> out_rel;
  out_rel.steps0 = rel.steps0;
  out_rel.steps1 = rel.steps1;
  const auto cp = corr.pre;
  const auto rp = rel.pre.predicate;
  out_rel.pre.predicate = {[rp, cp](const S& a, const S& b) { return rp(a, b) && cp.predicate(a); },
                           "(" + rp.description + ") & first in " + cp.predicate.description, std::nullopt};
  std::size_t agree = 0;
  for (const auto& p : rel.pre.instances) {
    if (!covered(corr.pre, p.first)) continue;
    if (corr.steps(p.first) != rel.steps0(p.first))
      side_failed<S>(r, "correctness and relational step functions differ on a first-program state");
    ++agree;
    out_rel.pre.instances.push_back(p);
  }
  sides.push_back({"first step functions agree", "enumeration of pairs", agree, true});
  const auto cq = corr.post;
  const auto rq = rel.post;
  out_rel.post = {[rq, cq](const S& a, const S& b) { return rq(a, b) && cq(a); },
                  "(" + rq.description + ") & first in " + cq.description, std::nullopt};
  const auto cf = corr.frame;
  const auto rf = rel.frame;
  out_rel.frame = {[rf, cf](const StatePair<S>& b, const StatePair<S>& a) { return rf(b, a) && cf(b.first, a.first); },
                   "(" + rf.description + ") & first in " + cf.description, std::nullopt};
  Frame<S> witness = cf;
  if (rf.factors) {
    witness = conjoin(rf.factors->first, cf);
    out_rel.frame.factors = std::make_pair(witness, rf.factors->second);
  }
  if (auto bad = hybrid_side_conditions(*ps[0]->system, out_rel, *in.target, witness, in.universe, sides))
    side_failed<S>(r, bad->counterexample->reason);
  auto out = derived<S>(r, Form::hybrid, ps[0]->system, ps, std::move(sides), in);
  out->components = HybridComponents<S>{out_rel, *in.target, witness};
  return out;
}

/// ensures + eventually_n_at_pc -> ensures_n with the at-pc step function. The first
/// premise's postcondition must only be met at the exit pc.
template <class S>
JudgmentPtr<S> conv_promote(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "PROMOTE";
  if (ps.size() == 2 && !ps[1]) throw Error(ErrorCode::missing_promotion_evidence, "PROMOTE: no at-pc judgment");
  if (ps.size() < 2) throw Error(ErrorCode::missing_promotion_evidence, "PROMOTE: no at-pc judgment");
  expect_premises(r, ps, 2);
  expect_form(r, *ps[0], {Form::ensures});
  if (ps[1]->form != Form::eventually_n_at_pc)
    throw Error(ErrorCode::missing_promotion_evidence, "PROMOTE: second premise is not an at-pc judgment");
  const auto& c = ps[0]->unary();
  const auto& at = ps[1]->at_pc();
  std::size_t cases = 0;
  for (const auto& s : c.pre.instances) {
    if (!covered(at.pre, s)) side_failed<S>(r, "an instance is not covered by the at-pc judgment");
    for (const auto& t : unary_reached(*ps[0], s, in.budget, r)) {
      ++cases;
      if (at.pc_of(t) != at.exit) side_failed<S>(r, "postcondition met away from the exit pc");
    }
  }
  const auto pc_of = at.pc_of;
  const auto entry = at.entry;
  const auto exit = at.exit;
  Precondition<S> pre{c.pre.instances,
                      conjoin(c.pre.predicate, Property<S>{[pc_of, entry](const S& s) { return pc_of(s) == entry; },
                                                           "pc = " + std::to_string(entry)})};
  Property<S> post = conjoin(c.post, Property<S>{[pc_of, exit](const S& s) { return pc_of(s) == exit; },
                                                 "pc = " + std::to_string(exit)});
  auto out = derived<S>(
      r, Form::ensures_n, ps[0]->system, ps,
      {{"at-pc coverage", "enumeration of instances", c.pre.instances.size(), true},
       {"hits at exit pc", "reached states", cases, true}},
      in);
  out->components = UnaryComponents<S>{pre, post, c.frame, at.steps};
  return out;
}

}  // namespace detail

template <class S>
JudgmentPtr<S> convert(Conversion conv, const std::vector<JudgmentPtr<S>>& premises, const RuleInputs<S>& in = {}) {
  switch (conv) {
    case Conversion::thm1: return detail::conv_thm1(premises, in);
    case Conversion::thm2: return detail::conv_thm2(premises, in);
    case Conversion::thm3: return detail::conv_thm3(premises, in);
    case Conversion::thm4: return detail::conv_thm4(premises, in);
    case Conversion::thm5: return detail::conv_thm5(premises, in);
    case Conversion::promote: return detail::conv_promote(premises, in);
  }
  throw Error(ErrorCode::schema_mismatch, "unknown conversion");
}

/// Re-applies the recorded rule or conversion to the recorded premises and
/// inputs; true iff the conclusion renders identically. Checked judgments
/// replay trivially.
template <class S>
bool replay(const Judgment<S>& j) {
  if (!j.derived()) return true;
  const auto& in = j.evidence.inputs ? *j.evidence.inputs : RuleInputs<S>{};
  JudgmentPtr<S> again;
  for (int i = 0; i <= static_cast<int>(Rule::restrict) && !again; ++i)
    if (j.evidence.rule == to_string(static_cast<Rule>(i)))
      again = apply_rule(static_cast<Rule>(i), j.evidence.premises, in);
  for (int i = 0; i <= static_cast<int>(Conversion::promote) && !again; ++i)
    if (j.evidence.rule == to_string(static_cast<Conversion>(i)))
      again = convert(static_cast<Conversion>(i), j.evidence.premises, in);
  if (!again) return false;
  for (const auto& p : j.evidence.premises)
    if (!replay(*p)) return false;
  return describe(*again) == describe(j);
}

}  // namespace relhoare::kernel
