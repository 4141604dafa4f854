#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relhoare/kernel.hpp"
#include "relhoare/machine.hpp"

namespace relhoare::equiv {

using machine::Label;
using machine::u64;
using St = machine::MachineState;

/// Relation between states of two programs. The kept-set forms compare label
/// values; `all_except(L)` is maychange(L) read as a relation.
struct EquivRel {
  enum class Form { keep, all_except, general };
  Form form = Form::keep;
  std::set<Label> labels;
  kernel::PairProperty<St> general;

  static EquivRel keep(std::set<Label> ls) { return {Form::keep, std::move(ls), {}}; }
  static EquivRel all() { return {Form::all_except, {}, {}}; }
  static EquivRel all_except(std::set<Label> ls) { return {Form::all_except, std::move(ls), {}}; }
  static EquivRel of(kernel::PairProperty<St> p) { return {Form::general, {}, std::move(p)}; }

  bool operator()(const St& a, const St& b) const;
  std::string description() const;
  kernel::PairProperty<St> as_property() const;
  EquivRel swapped() const;
};

/// Whether everything `inner` keeps is also kept by `outer`, decided on the
/// label sets; nullopt for general relations.
std::optional<bool> kept_within(const EquivRel& inner, const EquivRel& outer);

struct ProgramId {
  std::string name;
  std::vector<std::uint8_t> bytes;
  u64 base = 0;

  bool operator==(const ProgramId& o) const { return bytes == o.bytes && base == o.base; }
};

struct EquivJudgment {
  ProgramId program0, program1;
  EquivRel in, out;
  u64 entry0 = 0, exit0 = 0, entry1 = 0, exit1 = 0;
  /// The underlying relational judgment.
  kernel::JudgmentPtr<St> judgment;
};

struct EquivSide {
  ProgramId program;
  u64 entry = 0, exit = 0;
  kernel::Precondition<St> pre;
  kernel::Property<St> post;
  kernel::Frame<St> frame;
  /// Automatic steps resolve to the first arrival at `exit`.
  kernel::StepFn<St> steps = kernel::StepFn<St>::automatic();
};

struct EquivProblem {
  EquivSide side0, side1;
  EquivRel in, out;
  kernel::Steps budget = kernel::default_budget;
};

struct EquivResult {
  kernel::Verdict<St> verdict;
  std::optional<EquivJudgment> judgment;
};

/// Pairs of P0 x P1 related by `in`, each checked to reach Q0 x Q1 related by
/// `out` within F0 x F1. Instances must start at their entry anchors.
EquivResult check_equiv(const EquivProblem& p);
EquivProblem swapped(const EquivProblem& p);

/// e1 then e2 on the same two programs, meeting at e1's exit anchors.
/// AnchorMismatch, SideConditionFailed.
EquivJudgment compose_sequential(const EquivJudgment& e1, const EquivJudgment& e2);

/// Builds the middle-program state for a pair of outer states.
using MiddleWitness = std::function<std::optional<St>(const St&, const St&)>;

/// (C0 ~ C1) and (C1 ~ C2) give (C0 ~ C2). Every pair of `domain` (default:
/// all pairs of the outer instances related by the composed input relation)
/// must factor through `witness` into instances of both premises.
/// AnchorMismatch, FactorizationWitnessMissing, SideConditionFailed.
EquivJudgment compose_transitive(const EquivJudgment& e1, const EquivJudgment& e2, const MiddleWitness& witness,
                                 std::vector<kernel::StatePair<St>> domain = {});

struct Transfer {
  /// Set when the correctness judgment had to be promoted first.
  kernel::JudgmentPtr<St> at_pc, promoted;
  kernel::JudgmentPtr<St> hybrid;
  kernel::JudgmentPtr<St> result;
};

/// Correctness of the first program (ensures or ensures_n) carried across an
/// equivalence to `target`, the claimed triple of the second program.
/// PromotionFailed when a step-free premise cannot be promoted.
Transfer transfer_correctness(const kernel::JudgmentPtr<St>& correctness, const EquivJudgment& e,
                              const kernel::UnaryComponents<St>& target, kernel::Steps budget = kernel::default_budget);

}  // namespace relhoare::equiv
