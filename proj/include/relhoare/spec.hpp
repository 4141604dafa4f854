#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relhoare/ct.hpp"
#include "relhoare/equiv.hpp"
#include "relhoare/expr.hpp"
#include "relhoare/kernel.hpp"
#include "relhoare/masm.hpp"

namespace relhoare::spec {

using machine::u64;
using St = machine::MachineState;

enum class Kind { unary, unary_n, relational, ct_relational, ct_unary, equiv, promote };
const char* to_string(Kind k);

struct ProgramDecl {
  std::string file;
  u64 base = 0x1000;
  /// Anchor expressions over @labels; default to the base and the last word.
  expr::ExprPtr entry, exit;
  masm::Program program;
  int line = 0;
};

struct Param {
  std::string name;  // array elements are "kb[0]", "kb[1]", ...
  u64 lo = 0, hi = 0;
  int line = 0;
};

struct LabelItem {
  /// A single label, or the byte range mem[lo .. hi).
  std::optional<machine::Label> label;
  expr::ExprPtr lo, hi;
  int line = 0;
};

struct LabelList {
  /// keep = all / keep = all except ...
  bool all = false;
  std::vector<LabelItem> items;
  bool declared = false;
};

struct Constraint {
  expr::ExprPtr e;
  std::string text;
  int line = 0;
};

struct StepDecl {
  expr::ExprPtr e;  // null for auto
  std::string text = "auto";
  int line = 0;
};

struct CheckSpec {
  Kind kind = Kind::unary;
  std::string source;
  /// Directory program files resolve against.
  std::string dir = ".";
  std::array<std::optional<ProgramDecl>, 2> programs;
  std::vector<Param> params;
  /// [pre]/[post]/[frame] apply to both programs unless [pre1]/[post1]/[frame1]
  /// override them for the second.
  std::vector<Constraint> pre, post;
  std::optional<std::vector<Constraint>> pre1, post1;
  LabelList frame, frame1;
  StepDecl f0, f1;
  bool f1_declared = false;
  LabelList pub, priv;
  std::vector<std::pair<int, std::string>> witness;
  LabelList equiv_in, equiv_out;
};

/// Programs resolve relative to `dir`. SyntaxError, UnknownSection,
/// UndeclaredParam, and assembler errors.
CheckSpec parse_spec(const std::string& text, const std::string& dir = ".");
CheckSpec load_spec(const std::string& path);

/// Default 2^16, or RELHOARE_ENUM_CAP when set.
std::size_t default_cap();
/// Product of the parameter domain sizes (saturating).
std::size_t enumeration_size(const CheckSpec& s);

using Valuation = std::map<std::string, u64>;

struct Side {
  masm::Program program;
  equiv::ProgramId id;
  u64 base = 0, entry = 0, exit = 0;
  std::vector<St> instances;
  std::vector<Valuation> valuations;
  kernel::Precondition<St> pre;
  kernel::Property<St> post;
  kernel::Frame<St> frame;
  kernel::StepFn<St> steps = kernel::StepFn<St>::automatic();
  std::set<machine::Label> frame_labels;
};

struct Instance {
  Kind kind = Kind::unary;
  std::vector<Side> sides;
  machine::Partition partition;
  std::optional<ct::TraceTemplate> witness;
  equiv::EquivRel in = equiv::EquivRel::all(), out = equiv::EquivRel::all();
  std::function<std::optional<u64>(const std::string&)> symbols0;
};

/// Builds the enumerated instances. DomainTooLarge past `cap`.
Instance instantiate(const CheckSpec& s, std::size_t cap = default_cap());

/// A state as assignments relative to a loaded program: "pc=0x1000 x0=1
/// mem[0x14]=0x01 ...", listing only what differs from the program image.
std::string state_script(const St& s, const masm::Program& p, u64 base);
St parse_state_script(const std::string& text, const masm::Program& p, u64 base);

struct RunOptions {
  std::size_t cap = default_cap();
  kernel::Steps budget = kernel::default_budget;
};

struct RunResult {
  kernel::Outcome outcome = kernel::Outcome::unknown;
  /// First line is "VERDICT: Proven|Refuted|Unknown".
  std::string report;
  /// For constant-time specs that declare a witness: the other definition's
  /// verdict.
  std::optional<kernel::Outcome> other;
};

RunResult run(const CheckSpec& s, const RunOptions& o = {});

/// 0 Proven, 1 Refuted, 2 Unknown.
int exit_code(kernel::Outcome o);

}  // namespace relhoare::spec
