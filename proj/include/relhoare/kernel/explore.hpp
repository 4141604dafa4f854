#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relhoare/kernel/types.hpp"

namespace relhoare::kernel {

/// A path through the system that violates an eventually requirement.
template <class S>
struct PathFailure {
  std::vector<std::size_t> choices;
  std::size_t depth = 0;
  S state;
  std::string reason;
};

namespace detail {

template <class S, class Leaf>
bool walk_exact(const StepOracle<S>& sys, const S& s, Steps remaining, Leaf& leaf, std::vector<std::size_t>& path,
                std::optional<PathFailure<S>>& failure) {
  if (remaining == 0) {
    if (auto why = leaf(s)) {
      failure = PathFailure<S>{path, path.size(), s, *why};
      return false;
    }
    return true;
  }
  const auto succ = sys.successors(s);
  if (succ.empty()) {
    failure = PathFailure<S>{path, path.size(), s,
                             "stuck after " + std::to_string(path.size()) + " steps, " + std::to_string(remaining) +
                                 " short of the required count"};
    return false;
  }
  for (std::size_t i = 0; i < succ.size(); ++i) {
    path.push_back(i);
    if (!walk_exact(sys, succ[i], remaining - 1, leaf, path, failure)) return false;
    path.pop_back();
  }
  return true;
}

}  // namespace detail

/// First violation of "every state n steps away passes `leaf`, and every state
/// fewer than n steps away has a successor". `leaf` returns nullopt on success
/// or a reason string. Branches are explored in successor order.
template <class S, class Leaf>
std::optional<PathFailure<S>> eventually_n_failure(const StepOracle<S>& sys, const S& s, Steps n, Leaf&& leaf) {
  std::vector<std::size_t> path;
  std::optional<PathFailure<S>> failure;
  detail::walk_exact(sys, s, n, leaf, path, failure);
  return failure;
}

template <class S>
bool eventually_n_holds(const StepOracle<S>& sys, const S& s, Steps n, const Property<S>& q) {
  if (n == 0) return q(s);
  const auto succ = sys.successors(s);
  if (succ.empty()) return false;
  for (const auto& t : succ)
    if (!eventually_n_holds(sys, t, n - 1, q)) return false;
  return true;
}

/// Distinct states reachable in exactly n steps (stuck branches contribute
/// nothing).
template <class S>
std::vector<S> reach_exactly(const StepOracle<S>& sys, const S& s, Steps n) {
  std::vector<S> frontier{s};
  for (Steps k = 0; k < n && !frontier.empty(); ++k) {
    std::vector<S> next;
    for (const auto& t : frontier)
      for (const auto& u : sys.successors(t)) insert_unique(next, u);
    frontier = std::move(next);
  }
  return frontier;
}

template <class S>
struct EventuallyResult {
  Outcome outcome = Outcome::proven;
  std::optional<PathFailure<S>> witness;
  /// First-hit states, one per explored path prefix that reached the target.
  std::vector<S> hits;
};

namespace detail {

template <class S>
Outcome walk_eventually(const StepOracle<S>& sys, const S& s, const Property<S>& q, Steps budget,
                        std::vector<S>& ancestors, std::vector<std::size_t>& path, EventuallyResult<S>& out) {
  if (q(s)) {
    insert_unique(out.hits, s);
    return Outcome::proven;
  }
  const auto succ = sys.successors(s);
  if (succ.empty()) {
    out.witness = PathFailure<S>{path, path.size(), s, "stuck outside the postcondition"};
    return Outcome::refuted;
  }
  for (const auto& a : ancestors) {
    if (sys.state_eq(a, s)) {
      out.witness = PathFailure<S>{path, path.size(), s, "revisits a state without meeting the postcondition"};
      return Outcome::refuted;
    }
  }
  if (path.size() >= budget) {
    if (!out.witness) out.witness = PathFailure<S>{path, path.size(), s, "budget exhausted"};
    return Outcome::unknown;
  }
  Outcome result = Outcome::proven;
  std::optional<PathFailure<S>> unknown_witness;
  ancestors.push_back(s);
  for (std::size_t i = 0; i < succ.size(); ++i) {
    path.push_back(i);
    const auto r = walk_eventually(sys, succ[i], q, budget, ancestors, path, out);
    path.pop_back();
    if (r == Outcome::refuted) {
      ancestors.pop_back();
      return r;
    }
    if (r == Outcome::unknown && result == Outcome::proven) {
      result = Outcome::unknown;
      unknown_witness = out.witness;
    }
  }
  ancestors.pop_back();
  if (result == Outcome::unknown) out.witness = unknown_witness;
  return result;
}

}  // namespace detail

/// Three-valued "every path reaches q". Refuted on a stuck state outside q or
/// on a q-avoiding cycle along the current path; Unknown when some q-avoiding
/// path outlives the budget. Exact on finite systems once budget >= |states|.
template <class S>
EventuallyResult<S> eventually_holds(const StepOracle<S>& sys, const S& s, const Property<S>& q, Steps budget) {
  EventuallyResult<S> out;
  std::vector<S> ancestors;
  std::vector<std::size_t> path;
  out.outcome = detail::walk_eventually(sys, s, q, budget, ancestors, path, out);
  if (out.outcome != Outcome::proven) out.hits.clear();
  if (out.outcome == Outcome::proven) out.witness.reset();
  return out;
}

/// Step at which every branch first meets `target`; throws StepFnUnresolvable
/// when branches disagree, a branch gets stuck first, or the budget runs out.
template <class S>
Steps resolve_first_hit(const StepOracle<S>& sys, const S& init, const AutoTarget<S>& target, Steps budget) {
  std::vector<S> frontier{init};
  for (Steps depth = 0;; ++depth) {
    std::size_t hits = 0;
    for (const auto& s : frontier)
      if (target(init, s)) ++hits;
    if (hits == frontier.size()) return depth;
    if (hits > 0)
      throw Error(ErrorCode::step_fn_unresolvable,
                  "branches disagree: some meet the target after " + std::to_string(depth) + " steps, others later");
    if (depth >= budget)
      throw Error(ErrorCode::step_fn_unresolvable, "target not met within " + std::to_string(budget) + " steps");
    std::vector<S> next;
    for (const auto& s : frontier) {
      auto succ = sys.successors(s);
      if (succ.empty())
        throw Error(ErrorCode::step_fn_unresolvable,
                    "a branch gets stuck after " + std::to_string(depth) + " steps before meeting the target");
      for (auto& t : succ) insert_unique(next, std::move(t));
    }
    frontier = std::move(next);
  }
}

template <class S>
AutoTarget<S> stuck_target(SystemPtr<S> sys) {
  return [sys](const S&, const S& cur) { return sys->successors(cur).empty(); };
}

/// Follows recorded branch choices from `init`.
template <class S>
S replay(const StepOracle<S>& sys, const S& init, const std::vector<std::size_t>& choices) {
  S cur = init;
  for (std::size_t k = 0; k < choices.size(); ++k) {
    auto succ = sys.successors(cur);
    if (choices[k] >= succ.size())
      throw Error(ErrorCode::precondition_violated,
                  "replay choice " + std::to_string(choices[k]) + " unavailable at step " + std::to_string(k));
    cur = succ[choices[k]];
  }
  return cur;
}

}  // namespace relhoare::kernel
