#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relhoare/machine.hpp"

namespace relhoare::expr {

using machine::u64;

/// Arithmetic wraps modulo 2^64; comparisons and connectives yield 0 or 1.
struct Node {
  enum class Kind {
    number,
    name,    // parameter, let binding or loop index
    index,   // array parameter element, name[args[0]]
    symbol,  // @label
    label,   // register, pc or flag read
    mem,     // mem1/mem4/mem8 read at args[0]
    call,    // builtin
    unary,
    binary,
  };
  Kind kind = Kind::number;
  u64 value = 0;
  /// Name, symbol, builtin or operator text.
  std::string text;
  machine::Label label;
  unsigned size = 0;
  std::vector<std::shared_ptr<const Node>> args;
  int line = 0;
};
using ExprPtr = std::shared_ptr<const Node>;

/// Throws SyntaxError with `line`.
ExprPtr parse(const std::string& text, int line = 0);
std::string to_string(const Node& e);

struct Env {
  /// Label and memory reads; absent means an expression that reads state is
  /// an error.
  const machine::MachineState* state = nullptr;
  std::function<std::optional<u64>(const std::string&)> lookup;
  std::function<std::optional<u64>(const std::string&)> symbol;
  /// Backs the nullary `aligned`.
  std::function<bool(const machine::MachineState&)> aligned;
  /// Address of the program's final word, for the nullary `terminated`.
  std::optional<u64> stopper;
};

/// Throws UndeclaredParam for unbound names, SyntaxError for unknown
/// builtins or state reads without a state.
u64 eval(const Node& e, const Env& env);

/// Static read set, for the frame-invariance check: labels read directly,
/// and whether memory is read at all (addresses are not resolved).
struct Reads {
  std::set<machine::Label> labels;
  bool memory = false;
  std::set<std::string> names;
};
void collect(const Node& e, Reads& out);
Reads reads(const Node& e);
/// True iff no label or memory byte read by `e` may change under maychange(L).
bool invariant_under(const Reads& r, const std::set<machine::Label>& changed);

}  // namespace relhoare::expr
