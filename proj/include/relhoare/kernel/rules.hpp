#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relhoare/kernel/check.hpp"

namespace relhoare::kernel {

enum class Rule { pre, post, frame, seq, branch, loop, conj, comm, comp, frame_comp, conj2, pre2, post2, frame2, restrict };

inline const char* to_string(Rule r) {
  switch (r) {
    case Rule::pre: return "PRE";
    case Rule::post: return "POST";
    case Rule::frame: return "FRAME";
    case Rule::seq: return "SEQ";
    case Rule::branch: return "BRANCH";
    case Rule::loop: return "LOOP";
    case Rule::conj: return "CONJ";
    case Rule::comm: return "COMM";
    case Rule::comp: return "COMP";
    case Rule::frame_comp: return "FRAME_COMP";
    case Rule::conj2: return "CONJ2";
    case Rule::pre2: return "PRE2";
    case Rule::post2: return "POST2";
    case Rule::frame2: return "FRAME2";
    case Rule::restrict: return "RESTRICT";
  }
  return "?";
}

/// Rule- and conversion-specific data. Each rule reads only the fields it
/// needs; `universe`/`pair_universe` widen the domains over which side
/// conditions are discharged.
template <class S>
struct RuleInputs {
  std::optional<Precondition<S>> pre;
  std::optional<PairPrecondition<S>> pair_pre;
  std::optional<Property<S>> post;
  std::optional<PairProperty<S>> pair_post;
  std::optional<Frame<S>> frame;
  std::optional<PairFrame<S>> pair_frame;
  std::optional<Property<S>> condition;
  std::vector<Property<S>> invariants;
  std::optional<PairProperty<S>> restriction;
  std::vector<S> universe;
  std::vector<StatePair<S>> pair_universe;
  /// Builds maychange(L) so that frames of intensional premises compose
  /// exactly (union of label sets) instead of existentially.
  std::function<Frame<S>(const std::set<std::string>&)> maychange;
  /// Unary triple of the second program (transfer of correctness).
  std::optional<UnaryComponents<S>> target;
  Steps budget = default_budget;
};

namespace detail {

template <class S>
[[noreturn]] void schema(const std::string& rule, const std::string& what) {
  throw Error(ErrorCode::schema_mismatch, rule + ": " + what);
}

template <class S>
[[noreturn]] void side_failed(const std::string& rule, const std::string& what) {
  throw Error(ErrorCode::side_condition_failed, rule + ": " + what);
}

template <class S>
void expect_premises(const std::string& rule, const std::vector<JudgmentPtr<S>>& ps, std::size_t n) {
  if (ps.size() != n) schema<S>(rule, "expects " + std::to_string(n) + " premises, got " + std::to_string(ps.size()));
  for (const auto& p : ps)
    if (!p) schema<S>(rule, "null premise");
}

template <class S>
void expect_form(const std::string& rule, const Judgment<S>& j, std::initializer_list<Form> allowed) {
  for (Form f : allowed)
    if (j.form == f) return;
  schema<S>(rule, std::string("premise of form ") + to_string(j.form) + " does not match the rule");
}

template <class S>
std::shared_ptr<Judgment<S>> derived(const std::string& rule, Form form, SystemPtr<S> sys,
                                     std::vector<JudgmentPtr<S>> premises, std::vector<SideCondition> sides,
                                     const RuleInputs<S>& inputs) {
  auto j = std::make_shared<Judgment<S>>();
  j->form = form;
  j->system = std::move(sys);
  j->evidence.kind = Evidence<S>::Kind::derived;
  j->evidence.rule = rule;
  j->evidence.premises = std::move(premises);
  j->evidence.side_conditions = std::move(sides);
  j->evidence.inputs = std::make_shared<const RuleInputs<S>>(inputs);
  return j;
}

/// States where a unary premise claims its postcondition: first hits of
/// post and frame for ensures, states exactly f(s) steps away for ensures_n.
template <class S>
std::vector<S> unary_reached(const Judgment<S>& j, const S& s, Steps budget, const std::string& rule) {
  const auto& c = j.unary();
  if (j.form == Form::ensures_n) return reach_exactly(*j.system, s, c.steps(s));
  auto r = eventually_holds(*j.system, s, post_and_frame(c.post, c.frame, s), budget);
  if (r.outcome != Outcome::proven) side_failed<S>(rule, "could not re-establish the premise's reached states within budget");
  return r.hits;
}

template <class S>
bool covered(const Precondition<S>& pre, const S& s) {
  return contains(pre.instances, s) && pre.predicate(s);
}

template <class S>
bool covered(const PairPrecondition<S>& pre, const StatePair<S>& p) {
  return contains(pre.instances, p) && pre.predicate(p);
}

/// Composite of two unary frames: exact union when both are intensional and
/// a maychange builder is available, otherwise an existential over the
/// intermediate states the first premise reaches from each initial state.
template <class S>
Frame<S> compose_frames(const Frame<S>& f, const Frame<S>& g, const RuleInputs<S>& in,
                        std::function<std::vector<S>(const S&)> mids, std::string& method) {
  if (f.maychange && g.maychange && in.maychange) {
    std::set<std::string> u = *f.maychange;
    u.insert(g.maychange->begin(), g.maychange->end());
    method = "intensional union";
    auto out = in.maychange(u);
    out.maychange = u;
    return out;
  }
  method = "existential over reached intermediate states";
  const auto universe = std::make_shared<const std::vector<S>>(in.universe);
  return {[f, g, mids, universe](const S& s, const S& u) {
            for (const auto& t : mids(s))
              if (f(s, t) && g(t, u)) return true;
            for (const auto& t : *universe)
              if (f(s, t) && g(t, u)) return true;
            return false;
          },
          "(" + f.description + ") ; (" + g.description + ")", std::nullopt};
}

/// Steps of a sequential composite, as a constant when possible and as a
/// table over the initial states otherwise.
template <class S>
StepFn<S> sum_steps(const StepFn<S>& first, const StepFn<S>& second, const std::vector<S>& inits,
                    const std::function<std::vector<S>(const S&)>& mids, const std::string& rule) {
  if (first.constant_value() && second.constant_value())
    return StepFn<S>::constant(*first.constant_value() + *second.constant_value());
  std::vector<std::pair<S, Steps>> table;
  for (const auto& s : inits) {
    bool seen = false;
    for (const auto& e : table) seen = seen || e.first == s;
    if (seen) continue;
    std::optional<Steps> rest;
    for (const auto& t : mids(s)) {
      const Steps m = second(t);
      if (rest && *rest != m) side_failed<S>(rule, "second step function is not constant across intermediate states");
      rest = m;
    }
    table.emplace_back(s, first(s) + rest.value_or(0));
  }
  return StepFn<S>::table(std::move(table), "(" + first.text() + ") + (" + second.text() + ")");
}

template <class S>
bool same_description(const Property<S>& a, const Property<S>& b) {
  return a.description == b.description;
}

// ---- unary rules ----

template <class S>
JudgmentPtr<S> rule_pre(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "PRE";
  expect_premises(r, ps, 1);
  const auto& j = *ps[0];
  expect_form(r, j, {Form::ensures, Form::ensures_n});
  if (!in.pre) schema<S>(r, "missing the new precondition");
  require_instances(*in.pre);
  const auto& c = j.unary();
  for (const auto& s : in.pre->instances)
    if (!covered(c.pre, s)) side_failed<S>(r, "new precondition is not contained in " + c.pre.predicate.description);
  auto out = derived<S>(r, j.form, j.system, ps,
                        {{"P' subset P", "enumeration of the new instances", in.pre->instances.size(), true}}, in);
  out->components = UnaryComponents<S>{*in.pre, c.post, c.frame, c.steps};
  return out;
}

template <class S>
JudgmentPtr<S> rule_post(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "POST";
  expect_premises(r, ps, 1);
  const auto& j = *ps[0];
  expect_form(r, j, {Form::ensures, Form::ensures_n});
  if (!in.post) schema<S>(r, "missing the new postcondition");
  const auto& c = j.unary();
  std::size_t cases = 0;
  for (const auto& s : c.pre.instances)
    for (const auto& t : unary_reached(j, s, in.budget, r)) {
      ++cases;
      if (c.post(t) && c.frame(s, t) && !(*in.post)(t))
        side_failed<S>(r, "a reached state satisfies " + c.post.description + " but not " + in.post->description);
    }
  for (const auto& t : in.universe) {
    ++cases;
    if (c.post(t) && !(*in.post)(t)) side_failed<S>(r, "universe state in Q but not in Q'");
  }
  auto out = derived<S>(r, j.form, j.system, ps, {{"Q subset Q'", "reached states and universe", cases, true}}, in);
  out->components = UnaryComponents<S>{c.pre, *in.post, c.frame, c.steps};
  return out;
}

/// Frame weakening F subset F'. (The sound direction: the conclusion may only
/// allow more change than the premise.)
template <class S>
JudgmentPtr<S> rule_frame(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "FRAME";
  expect_premises(r, ps, 1);
  const auto& j = *ps[0];
  expect_form(r, j, {Form::ensures, Form::ensures_n});
  if (!in.frame) schema<S>(r, "missing the new frame");
  const auto& c = j.unary();
  SideCondition sc{"F subset F'", "", 0, true};
  if (c.frame.maychange && in.frame->maychange) {
    for (const auto& l : *c.frame.maychange)
      if (!in.frame->maychange->count(l)) side_failed<S>(r, "label " + l + " may change in F but not in F'");
    sc.method = "intensional label sets";
    sc.cases = c.frame.maychange->size();
  } else {
    sc.method = "reached states and universe";
    for (const auto& s : c.pre.instances) {
      for (const auto& t : unary_reached(j, s, in.budget, r)) {
        ++sc.cases;
        if (c.frame(s, t) && !(*in.frame)(s, t)) side_failed<S>(r, "a reached state is related by F but not by F'");
      }
      for (const auto& t : in.universe) {
        ++sc.cases;
        if (c.frame(s, t) && !(*in.frame)(s, t)) side_failed<S>(r, "a universe state is related by F but not by F'");
      }
    }
  }
  auto out = derived<S>(r, j.form, j.system, ps, {sc}, in);
  out->components = UnaryComponents<S>{c.pre, c.post, *in.frame, c.steps};
  return out;
}

template <class S>
JudgmentPtr<S> rule_seq(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "SEQ";
  expect_premises(r, ps, 2);
  const auto& a = *ps[0];
  const auto& b = *ps[1];
  expect_form(r, a, {Form::ensures, Form::ensures_n});
  if (b.form != a.form) schema<S>(r, "premises must have the same form");
  const auto& ca = a.unary();
  const auto& cb = b.unary();
  std::size_t cases = 0;
  for (const auto& s : ca.pre.instances)
    for (const auto& t : unary_reached(a, s, in.budget, r)) {
      ++cases;
      if (!covered(cb.pre, t))
        side_failed<S>(r, "an intermediate state is not among the second premise's instances");
    }
  const auto sys = a.system;
  const auto first = ps[0];
  const auto budget = in.budget;
  std::function<std::vector<S>(const S&)> mids = [first, budget, r](const S& s) {
    return unary_reached(*first, s, budget, r);
  };
  std::string method;
  Frame<S> frame = compose_frames(ca.frame, cb.frame, in, mids, method);
  StepFn<S> steps = StepFn<S>::constant(0);
  if (a.form == Form::ensures_n) steps = sum_steps(ca.steps, cb.steps, ca.pre.instances, mids, r);
  auto out = derived<S>(
      r, a.form, sys, ps,
      {{"intermediate coverage", "reached intermediate states", cases, true}, {"frame composition", method, 0, true}},
      in);
  out->components = UnaryComponents<S>{ca.pre, cb.post, frame, steps};
  return out;
}

template <class S>
JudgmentPtr<S> rule_branch(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "BRANCH";
  expect_premises(r, ps, 2);
  expect_form(r, *ps[0], {Form::ensures});
  expect_form(r, *ps[1], {Form::ensures});
  if (!in.pre || !in.condition) schema<S>(r, "needs the combined precondition and the branch condition");
  require_instances(*in.pre);
  const auto& c1 = ps[0]->unary();
  const auto& c2 = ps[1]->unary();
  for (const auto& s : in.pre->instances) {
    const auto& which = (*in.condition)(s) ? c1 : c2;
    if (!covered(which.pre, s)) side_failed<S>(r, "an instance is not covered by the premise for its branch");
  }
  Property<S> post = same_description(c1.post, c2.post) ? c1.post : disjoin(c1.post, c2.post);
  Frame<S> frame = c1.frame.description == c2.frame.description ? c1.frame : disjoin(c1.frame, c2.frame);
  auto out = derived<S>(r, Form::ensures, ps[0]->system, ps,
                        {{"branch coverage", "enumeration of instances", in.pre->instances.size(), true}}, in);
  out->components = UnaryComponents<S>{*in.pre, post, frame, StepFn<S>::constant(0)};
  return out;
}

/// LOOP as a chain: P -> I(0), I(i) -> I(i+1) for i < k, I(k) -> Q. Premises
/// are given in that order; `invariants` holds I(0..k).
template <class S>
JudgmentPtr<S> rule_loop(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "LOOP";
  if (in.invariants.empty()) schema<S>(r, "needs the invariant family");
  const std::size_t k = in.invariants.size() - 1;
  expect_premises(r, ps, k + 2);
  for (const auto& p : ps) expect_form(r, *p, {Form::ensures});
  std::size_t cases = 0;
  for (std::size_t i = 1; i < ps.size(); ++i) {
    const auto& inv = in.invariants[i - 1];
    for (const auto& s : ps[i]->unary().pre.instances) {
      ++cases;
      if (!inv(s)) side_failed<S>(r, "premise " + std::to_string(i) + " starts outside " + inv.description);
    }
  }
  JudgmentPtr<S> acc = ps[0];
  RuleInputs<S> seq_in;
  seq_in.maychange = in.maychange;
  seq_in.universe = in.universe;
  seq_in.budget = in.budget;
  for (std::size_t i = 1; i < ps.size(); ++i) acc = rule_seq<S>({acc, ps[i]}, seq_in);
  const auto& chain = acc->unary();
  Frame<S> frame = chain.frame;
  bool same_frame = true;
  for (const auto& p : ps) same_frame = same_frame && p->unary().frame.maychange &&
                                        p->unary().frame.maychange == ps[0]->unary().frame.maychange;
  if (same_frame) frame = ps[0]->unary().frame;
  std::vector<SideCondition> sides{{"invariant entry", "enumeration of premise instances", cases, true}};
  for (const auto& sc : acc->evidence.side_conditions) sides.push_back(sc);
  auto out = derived<S>(r, Form::ensures, ps[0]->system, ps, std::move(sides), in);
  out->components = UnaryComponents<S>{ps[0]->unary().pre, ps.back()->unary().post, frame, StepFn<S>::constant(0)};
  return out;
}

template <class S>
JudgmentPtr<S> rule_conj(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "CONJ";
  expect_premises(r, ps, 2);
  for (const auto& p : ps)
    if (p->form != Form::ensures_n)
      schema<S>(r, "conjunction needs exact-step premises; it is unsound for step-free ensures");
  const auto& a = ps[0]->unary();
  const auto& b = ps[1]->unary();
  std::vector<S> common;
  for (const auto& s : a.pre.instances) {
    if (!covered(b.pre, s)) continue;
    if (a.steps(s) != b.steps(s))
      side_failed<S>(r, "step functions differ on a common instance (" + std::to_string(a.steps(s)) + " vs " +
                            std::to_string(b.steps(s)) + ")");
    common.push_back(s);
  }
  Precondition<S> pre{common, conjoin(a.pre.predicate, b.pre.predicate)};
  auto out = derived<S>(r, Form::ensures_n, ps[0]->system, ps,
                        {{"equal steps on common instances", "enumeration", common.size(), true}}, in);
  out->components = UnaryComponents<S>{pre, conjoin(a.post, b.post), conjoin(a.frame, b.frame), a.steps};
  return out;
}

// ---- relational rules ----

template <class S>
JudgmentPtr<S> rule_comm(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "COMM";
  expect_premises(r, ps, 1);
  expect_form(r, *ps[0], {Form::ensures2});
  const auto& c = ps[0]->relational();
  PairPrecondition<S> pre;
  for (const auto& [a, b] : c.pre.instances) pre.instances.emplace_back(b, a);
  pre.predicate = swapped(c.pre.predicate);
  if (c.pre.domains) pre.domains = std::make_pair(c.pre.domains->second, c.pre.domains->first);
  auto out = derived<S>(r, Form::ensures2, ps[0]->system, ps, {}, in);
  out->components = RelationalComponents<S>{pre, swapped(c.post), swapped(c.frame), c.steps1, c.steps0};
  return out;
}

template <class S>
std::vector<StatePair<S>> pair_reached(const Judgment<S>& j, const StatePair<S>& p) {
  const auto& c = j.relational();
  std::vector<StatePair<S>> out;
  for (const auto& a : reach_exactly(*j.system, p.first, c.steps0(p.first)))
    for (const auto& b : reach_exactly(*j.system, p.second, c.steps1(p.second))) out.emplace_back(a, b);
  return out;
}

/// Composite of two pair frames, component-wise exact when both are products
/// of intensional frames, otherwise existential over reached middle pairs.
template <class S>
PairFrame<S> compose_pair_frames(const PairFrame<S>& f, const PairFrame<S>& g, const RuleInputs<S>& in,
                                 std::function<std::vector<StatePair<S>>(const StatePair<S>&)> mids,
                                 std::string& method) {
  if (f.factors && g.factors && in.maychange && f.factors->first.maychange && f.factors->second.maychange &&
      g.factors->first.maychange && g.factors->second.maychange) {
    std::string m;
    auto left = compose_frames<S>(f.factors->first, g.factors->first, in, {}, m);
    auto right = compose_frames<S>(f.factors->second, g.factors->second, in, {}, m);
    method = "intensional union per component";
    return product(left, right);
  }
  method = "existential over reached middle pairs";
  const auto universe = std::make_shared<const std::vector<StatePair<S>>>(in.pair_universe);
  return {[f, g, mids, universe](const StatePair<S>& s, const StatePair<S>& u) {
            for (const auto& t : mids(s))
              if (f(s, t) && g(t, u)) return true;
            for (const auto& t : *universe)
              if (f(s, t) && g(t, u)) return true;
            return false;
          },
          "(" + f.description + ") ; (" + g.description + ")", std::nullopt};
}

template <class S>
JudgmentPtr<S> rule_comp(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "COMP";
  expect_premises(r, ps, 2);
  expect_form(r, *ps[0], {Form::ensures2});
  expect_form(r, *ps[1], {Form::ensures2});
  const auto first = ps[0];
  const auto& ca = ps[0]->relational();
  const auto& cb = ps[1]->relational();
  std::size_t cases = 0;
  for (const auto& p : ca.pre.instances)
    for (const auto& m : pair_reached(*first, p)) {
      ++cases;
      if (!covered(cb.pre, m)) side_failed<S>(r, "an intermediate pair is not among the second premise's instances");
    }
  std::function<std::vector<StatePair<S>>(const StatePair<S>&)> mids = [first](const StatePair<S>& p) {
    return pair_reached(*first, p);
  };
  const auto sys = first->system;
  std::vector<S> firsts, seconds;
  for (const auto& [a, b] : ca.pre.instances) {
    insert_unique(firsts, a);
    insert_unique(seconds, b);
  }
  std::function<std::vector<S>(const S&)> mid0 = [sys, ca](const S& s) {
    return reach_exactly(*sys, s, ca.steps0(s));
  };
  std::function<std::vector<S>(const S&)> mid1 = [sys, ca](const S& s) {
    return reach_exactly(*sys, s, ca.steps1(s));
  };
  auto steps0 = sum_steps(ca.steps0, cb.steps0, firsts, mid0, r);
  auto steps1 = sum_steps(ca.steps1, cb.steps1, seconds, mid1, r);
  std::string method;
  auto frame = compose_pair_frames(ca.frame, cb.frame, in, mids, method);
  auto out = derived<S>(
      r, Form::ensures2, sys, ps,
      {{"intermediate coverage", "reached intermediate pairs", cases, true}, {"frame composition", method, 0, true}},
      in);
  out->components = RelationalComponents<S>{ca.pre, cb.post, frame, steps0, steps1};
  return out;
}

template <class S>
bool frames_equal(const Frame<S>& a, const Frame<S>& b, const std::vector<S>& universe, std::size_t& cases,
                  std::string& method) {
  if (a.maychange && b.maychange) {
    method = "intensional label sets";
    cases = a.maychange->size();
    return *a.maychange == *b.maychange;
  }
  if (universe.empty()) {
    method = "description";
    return a.description == b.description;
  }
  method = "universe";
  for (const auto& s : universe)
    for (const auto& t : universe) {
      ++cases;
      if (a(s, t) != b(s, t)) return false;
    }
  return true;
}

/// Transitive composition: (f0,f1,P,Q,F0xF1) and (f1,f2,P',Q',F1xF2) give
/// (f0,f2,P;P',Q;Q',F0xF2).
template <class S>
JudgmentPtr<S> rule_frame_comp(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "FRAME_COMP";
  expect_premises(r, ps, 2);
  expect_form(r, *ps[0], {Form::ensures2});
  expect_form(r, *ps[1], {Form::ensures2});
  const auto& ca = ps[0]->relational();
  const auto& cb = ps[1]->relational();
  if (!ca.frame.factors || !cb.frame.factors) schema<S>(r, "both frames must be products");
  std::vector<SideCondition> sides;

  std::vector<S> middle;
  for (const auto& [a, b] : ca.pre.instances)
    for (const auto& [b2, c] : cb.pre.instances)
      if (b == b2) insert_unique(middle, b);
  for (const auto& b : middle)
    if (ca.steps1(b) != cb.steps0(b)) side_failed<S>(r, "middle step functions disagree on a middle instance");
  sides.push_back({"middle steps agree", "enumeration of middle instances", middle.size(), true});

  std::size_t cases = 0;
  std::string method;
  if (!frames_equal(ca.frame.factors->second, cb.frame.factors->first, in.universe, cases, method))
    side_failed<S>(r, "middle frame factors differ");
  sides.push_back({"middle frames equal", method, cases, true});

  PairPrecondition<S> pre;
  for (const auto& [a, b] : ca.pre.instances)
    for (const auto& [b2, c] : cb.pre.instances)
      if (b == b2) insert_unique(pre.instances, StatePair<S>{a, c});
  const auto mid_shared = std::make_shared<const std::vector<S>>(middle);
  const auto pa = ca.pre.predicate;
  const auto pb = cb.pre.predicate;
  pre.predicate = {[mid_shared, pa, pb](const S& a, const S& c) {
                     for (const auto& b : *mid_shared)
                       if (pa(a, b) && pb(b, c)) return true;
                     return false;
                   },
                   "(" + pa.description + ") ; (" + pb.description + ")", std::nullopt};

  std::vector<S> reached_mid = in.universe;
  for (const auto& b : middle)
    for (const auto& t : reach_exactly(*ps[0]->system, b, ca.steps1(b))) insert_unique(reached_mid, t);
  const auto reached_shared = std::make_shared<const std::vector<S>>(reached_mid);
  const auto qa = ca.post;
  const auto qb = cb.post;
  PairProperty<S> post{[reached_shared, qa, qb](const S& a, const S& c) {
                         for (const auto& b : *reached_shared)
                           if (qa(a, b) && qb(b, c)) return true;
                         return false;
                       },
                       "(" + qa.description + ") ; (" + qb.description + ")", std::nullopt};
  sides.push_back({"middle witnesses", "reached middle states", reached_mid.size(), true});

  auto out = derived<S>(r, Form::ensures2, ps[0]->system, ps, std::move(sides), in);
  out->components = RelationalComponents<S>{pre, post, product(ca.frame.factors->first, cb.frame.factors->second),
                                            ca.steps0, cb.steps1};
  return out;
}

template <class S>
JudgmentPtr<S> rule_conj2(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "CONJ2";
  expect_premises(r, ps, 2);
  expect_form(r, *ps[0], {Form::ensures2});
  expect_form(r, *ps[1], {Form::ensures2});
  const auto& a = ps[0]->relational();
  const auto& b = ps[1]->relational();
  PairPrecondition<S> pre;
  pre.predicate = conjoin(a.pre.predicate, b.pre.predicate);
  for (const auto& p : a.pre.instances) {
    if (!covered(b.pre, p)) continue;
    if (a.steps0(p.first) != b.steps0(p.first) || a.steps1(p.second) != b.steps1(p.second))
      side_failed<S>(r, "step functions differ on a common instance");
    pre.instances.push_back(p);
  }
  PairFrame<S> frame = a.frame;
  if (a.frame.description != b.frame.description) {
    const auto fa = a.frame;
    const auto fb = b.frame;
    frame = {[fa, fb](const StatePair<S>& x, const StatePair<S>& y) { return fa(x, y) && fb(x, y); },
             "(" + fa.description + ") & (" + fb.description + ")", std::nullopt};
  }
  auto out = derived<S>(r, Form::ensures2, ps[0]->system, ps,
                        {{"equal steps on common instances", "enumeration", pre.instances.size(), true}}, in);
  out->components = RelationalComponents<S>{pre, conjoin(a.post, b.post), frame, a.steps0, a.steps1};
  return out;
}

template <class S>
JudgmentPtr<S> rule_pre2(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "PRE2";
  expect_premises(r, ps, 1);
  expect_form(r, *ps[0], {Form::ensures2});
  if (!in.pair_pre) schema<S>(r, "missing the new precondition");
  require_instances(*in.pair_pre);
  const auto& c = ps[0]->relational();
  for (const auto& p : in.pair_pre->instances)
    if (!covered(c.pre, p)) side_failed<S>(r, "new precondition is not contained in " + c.pre.predicate.description);
  auto out = derived<S>(r, Form::ensures2, ps[0]->system, ps,
                        {{"P' subset P", "enumeration of the new pairs", in.pair_pre->instances.size(), true}}, in);
  out->components = RelationalComponents<S>{*in.pair_pre, c.post, c.frame, c.steps0, c.steps1};
  return out;
}

template <class S>
JudgmentPtr<S> rule_post2(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "POST2";
  expect_premises(r, ps, 1);
  expect_form(r, *ps[0], {Form::ensures2});
  if (!in.pair_post) schema<S>(r, "missing the new postcondition");
  const auto& c = ps[0]->relational();
  std::size_t cases = 0;
  for (const auto& p : c.pre.instances)
    for (const auto& f : pair_reached(*ps[0], p)) {
      ++cases;
      if (c.post(f) && c.frame(p, f) && !(*in.pair_post)(f))
        side_failed<S>(r, "a reached pair satisfies " + c.post.description + " but not " + in.pair_post->description);
    }
  for (const auto& f : in.pair_universe) {
    ++cases;
    if (c.post(f) && !(*in.pair_post)(f)) side_failed<S>(r, "a universe pair is in Q but not in Q'");
  }
  auto out = derived<S>(r, Form::ensures2, ps[0]->system, ps,
                        {{"Q subset Q'", "reached pairs and universe", cases, true}}, in);
  out->components = RelationalComponents<S>{c.pre, *in.pair_post, c.frame, c.steps0, c.steps1};
  return out;
}

template <class S>
JudgmentPtr<S> rule_frame2(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "FRAME2";
  expect_premises(r, ps, 1);
  expect_form(r, *ps[0], {Form::ensures2});
  if (!in.pair_frame) schema<S>(r, "missing the new frame");
  const auto& c = ps[0]->relational();
  SideCondition sc{"F subset F'", "reached pairs", 0, true};
  const auto& f = c.frame;
  const auto& g = *in.pair_frame;
  if (f.factors && g.factors && f.factors->first.maychange && f.factors->second.maychange &&
      g.factors->first.maychange && g.factors->second.maychange) {
    auto subset = [](const std::set<std::string>& x, const std::set<std::string>& y) {
      for (const auto& l : x)
        if (!y.count(l)) return false;
      return true;
    };
    if (!subset(*f.factors->first.maychange, *g.factors->first.maychange) ||
        !subset(*f.factors->second.maychange, *g.factors->second.maychange))
      side_failed<S>(r, "a label may change in F but not in F'");
    sc.method = "intensional label sets";
  } else {
    for (const auto& p : c.pre.instances)
      for (const auto& fin : pair_reached(*ps[0], p)) {
        ++sc.cases;
        if (f(p, fin) && !g(p, fin)) side_failed<S>(r, "a reached quadruple is related by F but not by F'");
      }
  }
  auto out = derived<S>(r, Form::ensures2, ps[0]->system, ps, {sc}, in);
  out->components = RelationalComponents<S>{c.pre, c.post, g, c.steps0, c.steps1};
  return out;
}

/// Restriction: a pair relation invariant across the frame strengthens both
/// pre- and postcondition.
template <class S>
JudgmentPtr<S> rule_restrict(const std::vector<JudgmentPtr<S>>& ps, const RuleInputs<S>& in) {
  const std::string r = "RESTRICT";
  expect_premises(r, ps, 1);
  expect_form(r, *ps[0], {Form::ensures2});
  if (!in.restriction) schema<S>(r, "missing the restriction");
  const auto& c = ps[0]->relational();
  const auto& f = *in.restriction;
  std::size_t cases = 0;
  auto check = [&](const StatePair<S>& b, const StatePair<S>& a) {
    ++cases;
    if (c.frame(b, a) && f(b) != f(a)) side_failed<S>(r, "restriction is not invariant across the frame");
  };
  for (const auto& p : c.pre.instances)
    for (const auto& fin : pair_reached(*ps[0], p)) check(p, fin);
  for (const auto& b : in.pair_universe)
    for (const auto& a : in.pair_universe) check(b, a);
  PairPrecondition<S> pre;
  pre.predicate = conjoin(c.pre.predicate, f);
  pre.domains = c.pre.domains;
  for (const auto& p : c.pre.instances)
    if (f(p)) pre.instances.push_back(p);
  auto out = derived<S>(r, Form::ensures2, ps[0]->system, ps,
                        {{"restriction invariant under F", "reached quadruples and universe", cases, true}}, in);
  out->components = RelationalComponents<S>{pre, conjoin(c.post, f), c.frame, c.steps0, c.steps1};
  return out;
}

}  // namespace detail

/// Applies a proof rule; side conditions are discharged by enumeration and
/// recorded in the derived judgment's evidence.
template <class S>
JudgmentPtr<S> apply_rule(Rule rule, const std::vector<JudgmentPtr<S>>& premises, const RuleInputs<S>& in = {}) {
  switch (rule) {
    case Rule::pre: return detail::rule_pre(premises, in);
    case Rule::post: return detail::rule_post(premises, in);
    case Rule::frame: return detail::rule_frame(premises, in);
    case Rule::seq: return detail::rule_seq(premises, in);
    case Rule::branch: return detail::rule_branch(premises, in);
    case Rule::loop: return detail::rule_loop(premises, in);
    case Rule::conj: return detail::rule_conj(premises, in);
    case Rule::comm: return detail::rule_comm(premises, in);
    case Rule::comp: return detail::rule_comp(premises, in);
    case Rule::frame_comp: return detail::rule_frame_comp(premises, in);
    case Rule::conj2: return detail::rule_conj2(premises, in);
    case Rule::pre2: return detail::rule_pre2(premises, in);
    case Rule::post2: return detail::rule_post2(premises, in);
    case Rule::frame2: return detail::rule_frame2(premises, in);
    case Rule::restrict: return detail::rule_restrict(premises, in);
  }
  throw Error(ErrorCode::schema_mismatch, "unknown rule");
}

}  // namespace relhoare::kernel
