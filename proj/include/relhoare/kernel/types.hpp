#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "relhoare/error.hpp"

namespace relhoare::kernel {

using Steps = std::uint64_t;

template <class S>
using StatePair = std::pair<S, S>;

/// Successor function of a finitely branching transition system. An empty
/// successor list marks a stuck state.
template <class S>
struct StepOracle {
  std::function<std::vector<S>(const S&)> successors;
  std::function<bool(const S&, const S&)> state_eq = [](const S& a, const S& b) { return a == b; };
};

template <class S>
using SystemPtr = std::shared_ptr<const StepOracle<S>>;

template <class S>
SystemPtr<S> make_system(std::function<std::vector<S>(const S&)> successors) {
  auto sys = std::make_shared<StepOracle<S>>();
  sys->successors = std::move(successors);
  return sys;
}

template <class S>
struct Property {
  std::function<bool(const S&)> holds;
  std::string description;

  bool operator()(const S& s) const { return holds(s); }
};

template <class S>
Property<S> always_true(std::string description = "true") {
  return {[](const S&) { return true; }, std::move(description)};
}

template <class S>
Property<S> conjoin(const Property<S>& a, const Property<S>& b) {
  return {[a, b](const S& s) { return a(s) && b(s); }, "(" + a.description + ") & (" + b.description + ")"};
}

template <class S>
Property<S> disjoin(const Property<S>& a, const Property<S>& b) {
  return {[a, b](const S& s) { return a(s) || b(s); }, "(" + a.description + ") | (" + b.description + ")"};
}

template <class S>
Property<S> negate(const Property<S>& a) {
  return {[a](const S& s) { return !a(s); }, "!(" + a.description + ")"};
}

/// Property over pairs of states. `factors` is set when the property was
/// built as a product left × right.
template <class S>
struct PairProperty {
  std::function<bool(const S&, const S&)> holds;
  std::string description;
  std::optional<std::pair<Property<S>, Property<S>>> factors;

  bool operator()(const S& a, const S& b) const { return holds(a, b); }
  bool operator()(const StatePair<S>& p) const { return holds(p.first, p.second); }
};

template <class S>
PairProperty<S> product(const Property<S>& left, const Property<S>& right) {
  return {[left, right](const S& a, const S& b) { return left(a) && right(b); },
          "(" + left.description + ") x (" + right.description + ")",
          std::make_pair(left, right)};
}

template <class S>
PairProperty<S> swapped(const PairProperty<S>& p) {
  PairProperty<S> out{[p](const S& a, const S& b) { return p(b, a); }, "swap(" + p.description + ")", std::nullopt};
  if (p.factors) out.factors = std::make_pair(p.factors->second, p.factors->first);
  return out;
}

template <class S>
PairProperty<S> conjoin(const PairProperty<S>& a, const PairProperty<S>& b) {
  return {[a, b](const S& x, const S& y) { return a(x, y) && b(x, y); },
          "(" + a.description + ") & (" + b.description + ")",
          std::nullopt};
}

/// Relation between a state before and after execution. `maychange` is the
/// intensional form when the frame was built from a label set: related(s, s')
/// iff s and s' agree on every label outside the set.
template <class S>
struct Frame {
  std::function<bool(const S&, const S&)> related;
  std::string description;
  std::optional<std::set<std::string>> maychange;

  bool operator()(const S& before, const S& after) const { return related(before, after); }
};

template <class S>
Frame<S> any_change(std::string description = "any") {
  return {[](const S&, const S&) { return true; }, std::move(description), std::nullopt};
}

template <class S>
Frame<S> conjoin(const Frame<S>& a, const Frame<S>& b) {
  Frame<S> out{[a, b](const S& x, const S& y) { return a(x, y) && b(x, y); },
               "(" + a.description + ") & (" + b.description + ")",
               std::nullopt};
  if (a.maychange && b.maychange) {
    std::set<std::string> both;
    for (const auto& l : *a.maychange)
      if (b.maychange->count(l)) both.insert(l);
    out.maychange = both;
  }
  return out;
}

template <class S>
Frame<S> disjoin(const Frame<S>& a, const Frame<S>& b) {
  return {[a, b](const S& x, const S& y) { return a(x, y) || b(x, y); },
          "(" + a.description + ") | (" + b.description + ")",
          std::nullopt};
}

/// Frame over pairs: related((s0, s1), (s0', s1')). `factors` is set when
/// the frame was built as a product F0 × F1.
template <class S>
struct PairFrame {
  std::function<bool(const StatePair<S>&, const StatePair<S>&)> related;
  std::string description;
  std::optional<std::pair<Frame<S>, Frame<S>>> factors;

  bool operator()(const StatePair<S>& before, const StatePair<S>& after) const { return related(before, after); }
};

template <class S>
PairFrame<S> product(const Frame<S>& left, const Frame<S>& right) {
  return {[left, right](const StatePair<S>& b, const StatePair<S>& a) {
            return left(b.first, a.first) && right(b.second, a.second);
          },
          "(" + left.description + ") x (" + right.description + ")",
          std::make_pair(left, right)};
}

template <class S>
PairFrame<S> swapped(const PairFrame<S>& f) {
  PairFrame<S> out{[f](const StatePair<S>& b, const StatePair<S>& a) {
                     return f({b.second, b.first}, {a.second, a.first});
                   },
                   "swap(" + f.description + ")",
                   std::nullopt};
  if (f.factors) out.factors = std::make_pair(f.factors->second, f.factors->first);
  return out;
}

template <class S>
PairFrame<S> any_pair_change(std::string description = "any") {
  return {[](const StatePair<S>&, const StatePair<S>&) { return true; }, std::move(description), std::nullopt};
}

/// Target used to resolve an automatic step function: (initial, current).
template <class S>
using AutoTarget = std::function<bool(const S&, const S&)>;

/// Number of steps as a function of the initial state.
template <class S>
class StepFn {
 public:
  enum class Kind { constant, function, automatic };

  static StepFn constant(Steps n) {
    StepFn f;
    f.kind_ = Kind::constant;
    f.value_ = n;
    f.text_ = std::to_string(n);
    return f;
  }

  static StepFn function(std::function<Steps(const S&)> fn, std::string text) {
    StepFn f;
    f.kind_ = Kind::function;
    f.fn_ = std::move(fn);
    f.text_ = std::move(text);
    return f;
  }

  /// Resolved before checking by simulation. Without a target the checker
  /// supplies its own (postcondition and frame for unary checks, stuckness for
  /// the components of relational checks).
  static StepFn automatic(std::optional<AutoTarget<S>> target = std::nullopt) {
    StepFn f;
    f.kind_ = Kind::automatic;
    f.target_ = std::move(target);
    f.text_ = "auto";
    return f;
  }

  /// Tabulated step counts; evaluating outside the table is an error.
  static StepFn table(std::vector<std::pair<S, Steps>> entries, std::string text) {
    auto shared = std::make_shared<const std::vector<std::pair<S, Steps>>>(std::move(entries));
    return function(
        [shared](const S& s) -> Steps {
          for (const auto& [key, n] : *shared)
            if (key == s) return n;
          throw Error(ErrorCode::step_fn_unresolvable, "state outside the tabulated step function");
        },
        std::move(text));
  }

  Kind kind() const { return kind_; }
  bool is_auto() const { return kind_ == Kind::automatic; }
  std::optional<Steps> constant_value() const {
    if (kind_ == Kind::constant) return value_;
    return std::nullopt;
  }
  const std::optional<AutoTarget<S>>& auto_target() const { return target_; }
  const std::string& text() const { return text_; }

  Steps operator()(const S& s) const {
    switch (kind_) {
      case Kind::constant: return value_;
      case Kind::function: return fn_(s);
      case Kind::automatic: break;
    }
    throw Error(ErrorCode::step_fn_unresolvable, "automatic step function evaluated before resolution");
  }

 private:
  Kind kind_ = Kind::constant;
  Steps value_ = 0;
  std::function<Steps(const S&)> fn_;
  std::optional<AutoTarget<S>> target_;
  std::string text_ = "0";
};

/// Enumerated precondition: the instances the checkers iterate over, plus the
/// predicate they are expected to satisfy.
template <class S>
struct Precondition {
  std::vector<S> instances;
  Property<S> predicate;
};

template <class S>
Precondition<S> enumerate(std::vector<S> instances, Property<S> predicate) {
  return {std::move(instances), std::move(predicate)};
}

template <class S>
struct PairPrecondition {
  std::vector<StatePair<S>> instances;
  PairProperty<S> predicate;
  /// Declared component domains; when present every instance must draw its
  /// components from them.
  std::optional<std::pair<std::vector<S>, std::vector<S>>> domains;
};

enum class Outcome { proven, refuted, unknown };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::proven: return "Proven";
    case Outcome::refuted: return "Refuted";
    case Outcome::unknown: return "Unknown";
  }
  return "?";
}

/// Replayable witness: initial state(s), the successor index chosen at every
/// step of each program, and where things went wrong.
template <class S>
struct Counterexample {
  std::vector<S> initial;
  std::vector<std::vector<std::size_t>> choices;
  std::size_t step = 0;
  std::vector<S> final_states;
  std::string reason;
};

template <class S>
struct Report {
  std::size_t instances = 0;
  std::vector<std::string> warnings;
  std::vector<Steps> steps0;
  std::vector<Steps> steps1;
  std::vector<std::string> notes;
};

template <class S>
struct Judgment;

template <class S>
using JudgmentPtr = std::shared_ptr<const Judgment<S>>;

template <class S>
struct Verdict {
  Outcome outcome = Outcome::proven;
  std::optional<Counterexample<S>> counterexample;
  Steps budget_exhausted = 0;
  Report<S> report;
  /// Set exactly when the outcome is Proven.
  JudgmentPtr<S> judgment;

  bool proven() const { return outcome == Outcome::proven; }
  bool refuted() const { return outcome == Outcome::refuted; }
};

template <class S>
bool contains(const std::vector<S>& xs, const S& x) {
  for (const auto& y : xs)
    if (y == x) return true;
  return false;
}

template <class S>
void insert_unique(std::vector<S>& xs, const S& x) {
  if (!contains(xs, x)) xs.push_back(x);
}

}  // namespace relhoare::kernel
