#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "relhoare/kernel/types.hpp"

namespace relhoare::kernel {

enum class Form { ensures, ensures_n, ensures2, hybrid, eventually_n_at_pc };

inline const char* to_string(Form f) {
  switch (f) {
    case Form::ensures: return "ensures";
    case Form::ensures_n: return "ensures_n";
    case Form::ensures2: return "ensures2";
    case Form::hybrid: return "hybrid";
    case Form::eventually_n_at_pc: return "eventually_n_at_pc";
  }
  return "?";
}

/// P, Q, F (and f for ensures_n; ignored for ensures).
template <class S>
struct UnaryComponents {
  Precondition<S> pre;
  Property<S> post;
  Frame<S> frame;
  StepFn<S> steps = StepFn<S>::constant(0);
};

template <class S>
struct RelationalComponents {
  PairPrecondition<S> pre;
  PairProperty<S> post;
  PairFrame<S> frame;
  StepFn<S> steps0 = StepFn<S>::constant(0);
  StepFn<S> steps1 = StepFn<S>::constant(0);
};

/// Relational part plus the unary triple it is tied to. `frame_witness` is
/// the F' with rel.frame = F' x unary.frame.
template <class S>
struct HybridComponents {
  RelationalComponents<S> rel;
  UnaryComponents<S> unary;
  Frame<S> frame_witness;
};

template <class S>
struct AtPcComponents {
  Precondition<S> pre;
  std::function<std::uint64_t(const S&)> pc_of;
  std::uint64_t entry = 0;
  std::uint64_t exit = 0;
  StepFn<S> steps = StepFn<S>::constant(0);
};

struct SideCondition {
  std::string name;
  std::string method;
  std::size_t cases = 0;
  bool discharged = true;
};

template <class S>
struct RuleInputs;

template <class S>
struct Evidence {
  enum class Kind { checked, derived };
  Kind kind = Kind::checked;
  /// Checker name for checked judgments; rule or conversion id for derived.
  std::string rule;
  std::vector<JudgmentPtr<S>> premises;
  std::vector<SideCondition> side_conditions;
  std::shared_ptr<const RuleInputs<S>> inputs;
  Report<S> report;
};

template <class S>
struct Judgment {
  Form form = Form::ensures;
  SystemPtr<S> system;
  std::variant<UnaryComponents<S>, RelationalComponents<S>, HybridComponents<S>, AtPcComponents<S>> components;
  Evidence<S> evidence;

  const UnaryComponents<S>& unary() const { return std::get<UnaryComponents<S>>(components); }
  const RelationalComponents<S>& relational() const { return std::get<RelationalComponents<S>>(components); }
  const HybridComponents<S>& hybrid() const { return std::get<HybridComponents<S>>(components); }
  const AtPcComponents<S>& at_pc() const { return std::get<AtPcComponents<S>>(components); }

  bool derived() const { return evidence.kind == Evidence<S>::Kind::derived; }
};

namespace detail {

template <class S>
void describe_unary(std::ostream& os, const UnaryComponents<S>& c, bool with_steps) {
  os << "  pre: " << c.pre.predicate.description << " [" << c.pre.instances.size() << " instances]\n";
  os << "  post: " << c.post.description << "\n";
  os << "  frame: " << c.frame.description << "\n";
  if (with_steps) os << "  steps: " << c.steps.text() << "\n";
}

template <class S>
void describe_relational(std::ostream& os, const RelationalComponents<S>& c) {
  os << "  pre: " << c.pre.predicate.description << " [" << c.pre.instances.size() << " pairs]\n";
  os << "  post: " << c.post.description << "\n";
  os << "  frame: " << c.frame.description << "\n";
  os << "  steps: " << c.steps0.text() << " / " << c.steps1.text() << "\n";
}

}  // namespace detail

/// Textual rendering of the conclusion (form and components). Evidence is
/// left out so that a replayed derivation renders identically.
template <class S>
std::string describe(const Judgment<S>& j) {
  std::ostringstream os;
  os << to_string(j.form) << "\n";
  switch (j.form) {
    case Form::ensures: detail::describe_unary(os, j.unary(), false); break;
    case Form::ensures_n: detail::describe_unary(os, j.unary(), true); break;
    case Form::ensures2: detail::describe_relational(os, j.relational()); break;
    case Form::hybrid:
      detail::describe_relational(os, j.hybrid().rel);
      os << " unary:\n";
      detail::describe_unary(os, j.hybrid().unary, false);
      os << "  frame witness: " << j.hybrid().frame_witness.description << "\n";
      break;
    case Form::eventually_n_at_pc: {
      const auto& c = j.at_pc();
      os << "  pre: " << c.pre.predicate.description << " [" << c.pre.instances.size() << " instances]\n";
      os << "  entry: " << c.entry << " exit: " << c.exit << " steps: " << c.steps.text() << "\n";
      break;
    }
  }
  return os.str();
}

/// Conclusion plus the derivation tree with every side condition.
template <class S>
std::string describe_evidence(const Judgment<S>& j, int indent = 0) {
  std::ostringstream os;
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  if (j.derived()) {
    os << pad << "derived by " << j.evidence.rule << "\n";
    for (const auto& sc : j.evidence.side_conditions)
      os << pad << "  side condition " << sc.name << ": " << (sc.discharged ? "discharged" : "FAILED") << " by "
         << sc.method << " (" << sc.cases << " cases)\n";
    for (const auto& p : j.evidence.premises) os << describe_evidence(*p, indent + 2);
  } else {
    os << pad << "checked by " << j.evidence.rule << " over " << j.evidence.report.instances << " instances\n";
  }
  return os.str();
}

}  // namespace relhoare::kernel
