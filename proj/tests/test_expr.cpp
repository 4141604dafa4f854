#include <random>

#include "doctest.h"
#include "relhoare/expr.hpp"

using namespace relhoare;
using namespace relhoare::expr;
using machine::Label;
using machine::MachineState;

namespace {

u64 ev(const std::string& text, const MachineState* s = nullptr,
       std::function<std::optional<u64>(const std::string&)> lookup = {}) {
  Env env;
  env.state = s;
  env.lookup = std::move(lookup);
  return eval(*parse(text), env);
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io_error;
}

}  // namespace

TEST_CASE("arithmetic, precedence and wrapping") {
  CHECK(ev("1 + 2 * 3") == 7);
  CHECK(ev("(1 + 2) * 3") == 9);
  CHECK(ev("0 - 1") == ~u64{0});
  CHECK(ev("7 / 2") == 3);
  CHECK(ev("7 % 4") == 3);
  CHECK(ev("0x10 + 1") == 17);
  CHECK(ev("3 = 3 and not (1 < 0)") == 1);
  CHECK(ev("1 = 2 || 2 >= 2") == 1);
  CHECK(ev("1 != 1") == 0);
  CHECK(ev("min(4, 9) + max(4, 9)") == 13);
  CHECK(ev("true") == 1);
}

TEST_CASE("state reads") {
  MachineState s;
  s.regs[3] = 40;
  s.pc = 0x1000;
  s.n = true;
  s.write(0x20, 4, 0x01020304);
  CHECK(ev("x3 + 2", &s) == 42);
  CHECK(ev("reg(x3)", &s) == 40);
  CHECK(ev("pc", &s) == 0x1000);
  CHECK(ev("flag_n", &s) == 1);
  CHECK(ev("flag_z", &s) == 0);
  CHECK(ev("mem1(0x20)", &s) == 0x04);
  CHECK(ev("mem4(0x20)", &s) == 0x01020304);
  CHECK(ev("mem8(0x20)", &s) == 0x01020304);
}

TEST_CASE("buffer builtins against a byte-wise count") {
  MachineState s;
  const std::vector<std::uint8_t> a = {1, 2, 3, 9}, b = {1, 2, 4, 9};
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.write8(0x100 + i, a[i]);
    s.write8(0x200 + i, b[i]);
  }
  CHECK(ev("prefixlen(0x100, 0x200, 4)", &s) == 2);
  CHECK(ev("suffixlen(0x100, 0x200, 4)", &s) == 1);
  CHECK(ev("memeq(0x100, 0x200, 2)", &s) == 1);
  CHECK(ev("memeq(0x100, 0x200, 3)", &s) == 0);
  CHECK(ev("memeq(0x100, 0x200, 0)", &s) == 1);

  auto arr = [](const std::string& n) -> std::optional<u64> {
    if (n == "kb[0]") return 1;
    if (n == "kb[1]") return 2;
    if (n == "kb[2]") return 3;
    return std::nullopt;
  };
  CHECK(ev("bytes(0x100, 3, kb)", &s, arr) == 1);
  CHECK(ev("bytes(0x200, 3, kb)", &s, arr) == 0);
  CHECK(ev("bytes(0x200, 2, kb)", &s, arr) == 1);
}

TEST_CASE("names, labels and errors") {
  auto env = [](const std::string& n) -> std::optional<u64> {
    if (n == "k") return 5;
    return std::nullopt;
  };
  CHECK(ev("k * 2", nullptr, env) == 10);
  CHECK(code_of([&] { ev("j + 1", nullptr, env); }) == ErrorCode::undeclared_param);
  CHECK(code_of([] { ev("x1"); }) == ErrorCode::syntax_error);
  CHECK(code_of([] { ev("nosuch(1)"); }) == ErrorCode::syntax_error);
  CHECK(code_of([] { parse("1 +", 7); }) == ErrorCode::syntax_error);
  try {
    parse("(1", 12);
    FAIL("expected a syntax error");
  } catch (const Error& e) {
    CHECK(e.line() == 12);
  }

  Env sym;
  sym.symbol = [](const std::string& n) -> std::optional<u64> {
    if (n == "loop") return 0x1008;
    return std::nullopt;
  };
  CHECK(eval(*parse("@loop + 4"), sym) == 0x100c);
}

TEST_CASE("to_string re-parses to the same value") {
  MachineState s;
  s.regs[1] = 6;
  s.regs[2] = 7;
  for (const auto* t : {"x1 * (x2 - 1)", "not (x1 < x2) or x1 = 6", "min(x1, x2) % 4", "1 - 2 - 3"}) {
    const auto e = parse(t);
    CHECK(ev(to_string(*e), &s) == ev(t, &s));
  }
}

TEST_CASE("read sets") {
  const auto r = reads(*parse("x1 + mem1(x2) + k"));
  CHECK(r.labels == std::set<Label>{Label::reg(1), Label::reg(2)});
  CHECK(r.memory);
  CHECK(r.names == std::set<std::string>{"k"});
  CHECK(invariant_under(r, {Label::reg(3)}));
  CHECK_FALSE(invariant_under(r, {Label::reg(1)}));
  CHECK_FALSE(invariant_under(r, {Label::mem(0x40)}));
  CHECK(invariant_under(reads(*parse("x1 + 1")), {Label::mem(0x40), Label::events()}));
}

// Invariance claimed statically must hold semantically: changing any label
// in L leaves the value alone.
TEST_CASE("invariant_under agrees with evaluation on random perturbations") {
  const std::vector<std::string> exprs = {"x1 + x2",       "mem1(x1) * 3", "x4 = 0 or flag_z", "pc - 4",
                                          "mem4(16) + x0", "flag_n",       "max(x5, x6)"};
  const std::vector<Label> pool = {Label::reg(0),    Label::reg(1),   Label::reg(2),  Label::reg(4),
                                   Label::reg(5),    Label::reg(6),   Label::pc(),    Label::flag_n(),
                                   Label::flag_z(),  Label::mem(16),  Label::mem(17), Label::mem(3)};
  std::mt19937_64 rng(7);
  std::size_t claimed = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    MachineState s;
    for (auto& r : s.regs) r = rng() % 32;
    s.pc = 0x1000;
    s.n = rng() & 1;
    s.z = rng() & 1;
    for (u64 a = 0; a < 32; ++a) s.write8(a, rng() % 4);
    std::set<Label> changed;
    for (const auto& l : pool)
      if (rng() % 4 == 0) changed.insert(l);
    MachineState t = s;
    for (const auto& l : changed) t.set(l, l.kind == Label::Kind::mem ? rng() % 256 : rng() % 32);
    const auto& text = exprs[trial % exprs.size()];
    const auto e = parse(text);
    if (invariant_under(reads(*e), changed)) {
      ++claimed;
      Env a, b;
      a.state = &s;
      b.state = &t;
      CHECK(eval(*e, a) == eval(*e, b));
    }
  }
  CHECK(claimed > 500);
}
