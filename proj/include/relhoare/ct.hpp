#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "relhoare/expr.hpp"
#include "relhoare/kernel.hpp"
#include "relhoare/machine.hpp"

namespace relhoare::ct {

using machine::Event;
using machine::MachineState;
using St = MachineState;

/// A trace with branch addresses replaced by the taken bit.
struct SimpleEvent {
  Event::Kind kind = Event::Kind::load;
  machine::u64 addr = 0;
  machine::u64 size = 0;
  bool taken = false;

  bool operator==(const SimpleEvent&) const = default;
};

std::vector<SimpleEvent> project_trace(const std::vector<Event>& t);
/// "branch false", "load 10,4".
std::string to_string(const SimpleEvent& e);
/// "[branch false, load 10,4]".
std::string to_string(const std::vector<SimpleEvent>& t);
std::string to_string(const std::vector<Event>& t);

struct TemplateItem;

struct TraceTemplate {
  std::vector<TemplateItem> items;
};

struct EventItem {
  Event::Kind kind = Event::Kind::load;
  /// Load/store: address and size. Branch: source and destination.
  expr::ExprPtr a, b;
  /// Branch only; when present the destination is taken iff it holds and the
  /// event reads `a -> a+4` otherwise.
  expr::ExprPtr condition;
  int line = 0;
};

struct LetItem {
  std::string name;
  expr::ExprPtr value;
  int line = 0;
};

struct RepeatItem {
  std::string index;
  expr::ExprPtr bound;
  TraceTemplate body;
  int line = 0;
};

struct TemplateItem {
  std::variant<EventItem, LetItem, RepeatItem> v;
};

/// Lines as (line number, text). Grammar:
///   let NAME = EXPR
///   load EXPR, EXPR | store EXPR, EXPR
///   branch EXPR -> EXPR [if EXPR]
///   repeat NAME < EXPR:  ...  end
TraceTemplate parse_template(const std::vector<std::pair<int, std::string>>& lines);

/// Expands against an initial state. Only public labels may be read, and no
/// memory; anything else, and any unbound name, is a TemplateExpansionFailure.
/// `symbols` resolves @label.
std::vector<Event> expand(const TraceTemplate& t, const MachineState& init, const machine::Partition& part,
                          const std::function<std::optional<machine::u64>(const std::string&)>& symbols = {});

struct CtProblem {
  kernel::Precondition<St> pre;
  kernel::Property<St> post;
  kernel::Frame<St> frame;
  kernel::StepFn<St> steps = kernel::StepFn<St>::automatic();
  machine::Partition partition;
  kernel::Steps budget = kernel::default_budget;
};

/// Pairs of instances with equal public snapshots.
std::vector<kernel::StatePair<St>> public_pairs(const std::vector<St>& instances, const machine::Partition& part);

/// Relational constant-time check: equal-public pairs must end with equal
/// event traces (and both in Q, within F).
kernel::Verdict<St> check_ct_relational(const CtProblem& p);

/// Unary constant-time check: the final trace is the initial trace followed
/// by the witness expansion.
kernel::Verdict<St> check_ct_unary(const CtProblem& p, const TraceTemplate& witness,
                                   const std::function<std::optional<machine::u64>(const std::string&)>& symbols = {});

/// The unary result instantiated twice through the product conversion, then
/// re-checked by simulation as a relational constant-time judgment over the
/// equal-public pairs. Returns the derived judgment and the re-check.
struct Bridge {
  kernel::JudgmentPtr<St> derived;
  kernel::Verdict<St> recheck;
};
Bridge bridge(const kernel::JudgmentPtr<St>& unary_ct, const machine::Partition& part);

}  // namespace relhoare::ct
