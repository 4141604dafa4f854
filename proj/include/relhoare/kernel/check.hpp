#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relhoare/kernel/explore.hpp"
#include "relhoare/kernel/judgment.hpp"

namespace relhoare::kernel {

inline constexpr Steps default_budget = 4096;

namespace detail {

template <class S>
void require_instances(const Precondition<S>& pre) {
  for (std::size_t i = 0; i < pre.instances.size(); ++i)
    if (!pre.predicate(pre.instances[i]))
      throw Error(ErrorCode::precondition_violated,
                  "instance " + std::to_string(i) + " does not satisfy " + pre.predicate.description);
}

template <class S>
void require_instances(const PairPrecondition<S>& pre) {
  for (std::size_t i = 0; i < pre.instances.size(); ++i) {
    const auto& [a, b] = pre.instances[i];
    if (!pre.predicate(a, b))
      throw Error(ErrorCode::precondition_violated,
                  "pair " + std::to_string(i) + " does not satisfy " + pre.predicate.description);
    if (pre.domains && (!contains(pre.domains->first, a) || !contains(pre.domains->second, b)))
      throw Error(ErrorCode::asymmetric_enumeration,
                  "pair " + std::to_string(i) + " draws a component from outside the declared domains");
  }
}

/// Replaces an automatic step function by a table over `inits`.
template <class S>
StepFn<S> resolve(const StepOracle<S>& sys, const StepFn<S>& f, const std::vector<S>& inits,
                  const AutoTarget<S>& fallback, Steps budget) {
  if (!f.is_auto()) return f;
  const AutoTarget<S>& target = f.auto_target() ? *f.auto_target() : fallback;
  std::vector<std::pair<S, Steps>> table;
  for (const auto& s : inits) {
    bool seen = false;
    for (const auto& e : table)
      if (e.first == s) seen = true;
    if (!seen) table.emplace_back(s, resolve_first_hit(sys, s, target, budget));
  }
  return StepFn<S>::table(std::move(table), "auto");
}

template <class S>
Counterexample<S> unary_counterexample(const S& init, const PathFailure<S>& f) {
  Counterexample<S> cx;
  cx.initial = {init};
  cx.choices = {f.choices};
  cx.step = f.depth;
  cx.final_states = {f.state};
  cx.reason = f.reason;
  return cx;
}

template <class S>
Property<S> post_and_frame(const Property<S>& q, const Frame<S>& f, const S& init) {
  return {[q, f, init](const S& s) { return q(s) && f(init, s); }, q.description};
}

template <class S>
std::shared_ptr<Judgment<S>> checked(Form form, SystemPtr<S> sys, std::string by, Report<S> report) {
  auto j = std::make_shared<Judgment<S>>();
  j->form = form;
  j->system = std::move(sys);
  j->evidence.kind = Evidence<S>::Kind::checked;
  j->evidence.rule = std::move(by);
  j->evidence.report = std::move(report);
  return j;
}

/// Final pairs of one relational instance, with the states reached by each
/// program.
template <class S>
struct RelationalReach {
  StatePair<S> initial;
  std::vector<S> finals0;
  std::vector<S> finals1;
};

/// Nested exact-step check of one pair. Returns the failure, if any.
template <class S>
std::optional<Counterexample<S>> check_pair(const StepOracle<S>& sys, const StatePair<S>& init, Steps n0, Steps n1,
                                            const PairProperty<S>& q, const PairFrame<S>& fx) {
  const auto& [s0, s1] = init;
  std::optional<PathFailure<S>> inner_failure;
  auto outer = eventually_n_failure(sys, s0, n0, [&](const S& s0_final) -> std::optional<std::string> {
    auto leaf = [&](const S& s1_final) -> std::optional<std::string> {
      if (!q(s0_final, s1_final)) return "final pair violates " + q.description;
      if (!fx(init, {s0_final, s1_final})) return "final pair violates frame " + fx.description;
      return std::nullopt;
    };
    inner_failure = eventually_n_failure(sys, s1, n1, leaf);
    if (inner_failure) return inner_failure->reason;
    return std::nullopt;
  });
  if (!outer) return std::nullopt;
  Counterexample<S> cx;
  cx.initial = {s0, s1};
  cx.step = outer->depth;
  if (inner_failure) {
    cx.choices = {outer->choices, inner_failure->choices};
    cx.final_states = {outer->state, inner_failure->state};
    cx.reason = inner_failure->reason;
  } else {
    cx.choices = {outer->choices, {}};
    cx.final_states = {outer->state};
    cx.reason = "first program: " + outer->reason;
  }
  return cx;
}

}  // namespace detail

/// Ensures over the enumerated instances: every path from every instance
/// eventually meets q together with the frame.
template <class S>
Verdict<S> check_ensures(SystemPtr<S> sys, const Precondition<S>& pre, const Property<S>& q, const Frame<S>& f,
                         Steps budget = default_budget) {
  detail::require_instances(pre);
  Verdict<S> v;
  v.report.instances = pre.instances.size();
  if (pre.instances.empty()) v.report.warnings.push_back("EmptyPrecondition: no instances, proof is vacuous");
  for (const auto& s : pre.instances) {
    auto r = eventually_holds(*sys, s, detail::post_and_frame(q, f, s), budget);
    if (r.outcome == Outcome::proven) continue;
    v.outcome = r.outcome;
    if (r.outcome == Outcome::unknown) v.budget_exhausted = budget;
    if (r.witness) v.counterexample = detail::unary_counterexample(s, *r.witness);
    return v;
  }
  auto j = detail::checked<S>(Form::ensures, sys, "check_ensures", v.report);
  j->components = UnaryComponents<S>{pre, q, f, StepFn<S>::constant(0)};
  v.judgment = j;
  return v;
}

/// Exact-step ensures. Automatic steps are resolved to the first step at
/// which q and the frame hold (or the StepFn's own target).
template <class S>
Verdict<S> check_ensures_n(SystemPtr<S> sys, const Precondition<S>& pre, const StepFn<S>& fsteps, const Property<S>& q,
                           const Frame<S>& f, Steps resolve_budget = default_budget) {
  detail::require_instances(pre);
  const AutoTarget<S> target = [q, f](const S& init, const S& cur) { return q(cur) && f(init, cur); };
  const StepFn<S> steps = detail::resolve(*sys, fsteps, pre.instances, target, resolve_budget);
  Verdict<S> v;
  v.report.instances = pre.instances.size();
  if (pre.instances.empty()) v.report.warnings.push_back("EmptyPrecondition: no instances, proof is vacuous");
  for (const auto& s : pre.instances) {
    const Steps n = steps(s);
    v.report.steps0.push_back(n);
    const auto leaf = [&](const S& t) -> std::optional<std::string> {
      if (!q(t)) return "violates " + q.description;
      if (!f(s, t)) return "violates frame " + f.description;
      return std::nullopt;
    };
    if (auto failure = eventually_n_failure(*sys, s, n, leaf)) {
      v.outcome = Outcome::refuted;
      v.counterexample = detail::unary_counterexample(s, *failure);
      return v;
    }
  }
  auto j = detail::checked<S>(Form::ensures_n, sys, "check_ensures_n", v.report);
  j->components = UnaryComponents<S>{pre, q, f, steps};
  v.judgment = j;
  return v;
}

/// Relational ensures by nested exact-step evaluation. Automatic step
/// functions default to "run until stuck".
template <class S>
Verdict<S> check_ensures2(SystemPtr<S> sys, const PairPrecondition<S>& pre, const StepFn<S>& f0, const StepFn<S>& f1,
                          const PairProperty<S>& q, const PairFrame<S>& fx, Steps resolve_budget = default_budget) {
  detail::require_instances(pre);
  std::vector<S> firsts, seconds;
  for (const auto& [a, b] : pre.instances) {
    insert_unique(firsts, a);
    insert_unique(seconds, b);
  }
  const StepFn<S> steps0 = detail::resolve(*sys, f0, firsts, stuck_target(sys), resolve_budget);
  const StepFn<S> steps1 = detail::resolve(*sys, f1, seconds, stuck_target(sys), resolve_budget);
  Verdict<S> v;
  v.report.instances = pre.instances.size();
  if (pre.instances.empty()) v.report.warnings.push_back("EmptyPrecondition: no instances, proof is vacuous");
  for (const auto& p : pre.instances) {
    const Steps n0 = steps0(p.first);
    const Steps n1 = steps1(p.second);
    v.report.steps0.push_back(n0);
    v.report.steps1.push_back(n1);
    if (auto cx = detail::check_pair(*sys, p, n0, n1, q, fx)) {
      v.outcome = Outcome::refuted;
      v.counterexample = std::move(cx);
      return v;
    }
  }
  auto j = detail::checked<S>(Form::ensures2, sys, "check_ensures2", v.report);
  j->components = RelationalComponents<S>{pre, q, fx, steps0, steps1};
  v.judgment = j;
  return v;
}

namespace detail {

template <class S>
std::vector<RelationalReach<S>> relational_reach(const StepOracle<S>& sys, const RelationalComponents<S>& c) {
  std::vector<RelationalReach<S>> out;
  for (const auto& p : c.pre.instances)
    out.push_back({p, reach_exactly(sys, p.first, c.steps0(p.first)), reach_exactly(sys, p.second, c.steps1(p.second))});
  return out;
}

template <class S>
Verdict<S> refute(std::string reason, std::vector<S> initial, std::vector<S> finals = {}) {
  Verdict<S> v;
  v.outcome = Outcome::refuted;
  Counterexample<S> cx;
  cx.initial = std::move(initial);
  cx.final_states = std::move(finals);
  cx.reason = std::move(reason);
  v.counterexample = std::move(cx);
  return v;
}

/// Side conditions (i)-(iii) tying a proven relational triple to a unary one.
/// Returns a refutation on the first violated clause.
template <class S>
std::optional<Verdict<S>> hybrid_side_conditions(const StepOracle<S>& sys, const RelationalComponents<S>& rel,
                                                 const UnaryComponents<S>& unary, const Frame<S>& witness,
                                                 const std::vector<S>& domain, std::vector<SideCondition>& log) {
  // (i) every unary instance has a partner
  for (const auto& s1 : unary.pre.instances) {
    bool found = false;
    for (const auto& [a, b] : rel.pre.instances)
      if (b == s1) {
        found = true;
        break;
      }
    if (!found) return refute<S>("(i) unary instance has no partner in the relational precondition", {s1});
  }
  log.push_back({"(i) partner existence", "enumeration of unary instances", unary.pre.instances.size(), true});

  const auto reach = relational_reach(sys, rel);
  // (ii) postcondition pairs project into the unary postcondition
  std::size_t cases = 0;
  for (const auto& r : reach)
    for (const auto& a : r.finals0)
      for (const auto& b : r.finals1) {
        if (!rel.post(a, b)) continue;
        ++cases;
        if (!unary.post(b)) return refute<S>("(ii) relational post pair outside the unary postcondition", {}, {a, b});
      }
  for (const auto& a : domain)
    for (const auto& b : domain) {
      if (!rel.post(a, b)) continue;
      ++cases;
      if (!unary.post(b)) return refute<S>("(ii) relational post pair outside the unary postcondition", {}, {a, b});
    }
  log.push_back({"(ii) post projection", "reached final pairs and side domain", cases, true});

  // (iii) F x  <=>  F' x F, over instance/final quadruples
  std::vector<StatePair<S>> befores = rel.pre.instances;
  std::vector<StatePair<S>> afters;
  for (const auto& r : reach)
    for (const auto& a : r.finals0)
      for (const auto& b : r.finals1) insert_unique(afters, StatePair<S>{a, b});
  constexpr std::size_t cross_cap = 1u << 16;
  const bool cross = befores.size() * afters.size() <= cross_cap;
  cases = 0;
  auto check_quad = [&](const StatePair<S>& before, const StatePair<S>& after) -> bool {
    ++cases;
    const bool lhs = rel.frame(before, after);
    const bool rhs = witness(before.first, after.first) && unary.frame(before.second, after.second);
    return lhs == rhs;
  };
  if (cross) {
    for (const auto& b : befores)
      for (const auto& a : afters)
        if (!check_quad(b, a))
          return refute<S>("(iii) frame does not factor through the witness", {b.first, b.second}, {a.first, a.second});
  } else {
    for (const auto& r : reach)
      for (const auto& a : r.finals0)
        for (const auto& b : r.finals1)
          if (!check_quad(r.initial, {a, b}))
            return refute<S>("(iii) frame does not factor through the witness", {r.initial.first, r.initial.second},
                             {a, b});
  }
  log.push_back({"(iii) frame factorization",
                 cross ? "all instance x reached-final quadruples" : "reached quadruples", cases, true});
  return std::nullopt;
}

}  // namespace detail

/// Hybrid triple: relational check plus clauses (i)-(iii). The factorization
/// witness F' defaults to the left factor of a product frame.
template <class S>
Verdict<S> check_hybrid(SystemPtr<S> sys, const PairPrecondition<S>& pre, const StepFn<S>& f0, const StepFn<S>& f1,
                        const PairProperty<S>& q, const PairFrame<S>& fx, const UnaryComponents<S>& unary,
                        const std::vector<S>& domain = {}, std::optional<Frame<S>> witness = std::nullopt,
                        Steps resolve_budget = default_budget) {
  if (!witness) {
    if (!fx.factors)
      throw Error(ErrorCode::factorization_witness_missing,
                  "frame " + fx.description + " is not a product and no witness was supplied");
    witness = fx.factors->first;
  }
  auto v = check_ensures2(sys, pre, f0, f1, q, fx, resolve_budget);
  if (!v.proven()) return v;
  const auto& rel = v.judgment->relational();
  std::vector<SideCondition> log;
  if (auto bad = detail::hybrid_side_conditions(*sys, rel, unary, *witness, domain, log)) {
    bad->report = v.report;
    return *bad;
  }
  auto j = detail::checked<S>(Form::hybrid, sys, "check_hybrid", v.report);
  j->components = HybridComponents<S>{rel, unary, *witness};
  j->evidence.side_conditions = std::move(log);
  v.judgment = j;
  return v;
}

/// Sufficient condition for "eventually n at pc": on every branch the pc
/// differs from `exit` and the state can step before step n, and at step n
/// the pc equals `exit` and the state is stuck.
/// The step count may vary per instance; an automatic one resolves to the
/// first visit of `exit`.
template <class S>
Verdict<S> check_eventually_n_at_pc(SystemPtr<S> sys, const Precondition<S>& pre,
                                    std::function<std::uint64_t(const S&)> pc_of, std::uint64_t entry,
                                    std::uint64_t exit, const StepFn<S>& fsteps,
                                    Steps resolve_budget = default_budget) {
  detail::require_instances(pre);
  for (const auto& s : pre.instances)
    if (pc_of(s) != entry) throw Error(ErrorCode::precondition_violated, "instance does not start at the entry pc");
  Verdict<S> v;
  v.report.instances = pre.instances.size();
  if (pre.instances.empty()) v.report.warnings.push_back("EmptyPrecondition: no instances, proof is vacuous");

  struct Walker {
    const StepOracle<S>& sys;
    const std::function<std::uint64_t(const S&)>& pc_of;
    std::uint64_t exit;
    Steps n;
    std::vector<std::size_t> path;
    std::optional<PathFailure<S>> failure;

    bool walk(const S& s) {
      const Steps depth = path.size();
      const bool at_exit = pc_of(s) == exit;
      const auto succ = sys.successors(s);
      if (depth == n) {
        if (!at_exit) return fail(s, "not at the exit pc after " + std::to_string(n) + " steps");
        if (!succ.empty()) return fail(s, "exit pc reached but the state is not terminated");
        return true;
      }
      if (at_exit) return fail(s, "exit pc reached after " + std::to_string(depth) + " steps");
      if (succ.empty()) return fail(s, "stuck after " + std::to_string(depth) + " steps before the exit pc");
      for (std::size_t i = 0; i < succ.size(); ++i) {
        path.push_back(i);
        if (!walk(succ[i])) return false;
        path.pop_back();
      }
      return true;
    }

    bool fail(const S& s, std::string why) {
      failure = PathFailure<S>{path, path.size(), s, std::move(why)};
      return false;
    }
  };

  const AutoTarget<S> target = [pc_of, exit](const S&, const S& cur) { return pc_of(cur) == exit; };
  const StepFn<S> steps = detail::resolve(*sys, fsteps, pre.instances, target, resolve_budget);
  for (const auto& s : pre.instances) {
    const Steps n = steps(s);
    v.report.steps0.push_back(n);
    Walker w{*sys, pc_of, exit, n, {}, std::nullopt};
    if (!w.walk(s)) {
      v.outcome = Outcome::refuted;
      v.counterexample = detail::unary_counterexample(s, *w.failure);
      return v;
    }
  }
  auto j = detail::checked<S>(Form::eventually_n_at_pc, sys, "check_eventually_n_at_pc", v.report);
  j->components = AtPcComponents<S>{pre, std::move(pc_of), entry, exit, steps};
  v.judgment = j;
  return v;
}

template <class S>
Verdict<S> check_eventually_n_at_pc(SystemPtr<S> sys, const Precondition<S>& pre,
                                    std::function<std::uint64_t(const S&)> pc_of, std::uint64_t entry,
                                    std::uint64_t exit, Steps n) {
  return check_eventually_n_at_pc(std::move(sys), pre, std::move(pc_of), entry, exit, StepFn<S>::constant(n));
}

}  // namespace relhoare::kernel
