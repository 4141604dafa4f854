#include <cstdlib>

#include "doctest.h"
#include "relhoare/spec.hpp"

using namespace relhoare;
using namespace relhoare::spec;
using machine::Label;

namespace {

const std::string dir = RELHOARE_CORPUS_DIR;

template <class F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorCode::io_error, "");
}

const std::string small =
    "kind = unary\n"          // 1
    "[program0]\n"            // 2
    "file = mulnd.masm\n"     // 3
    "[params]\n"              // 4
    "x in 0..3\n"             // 5
    "[pre]\n"                 // 6
    "aligned\n"               // 7
    "x0 = x\n"                // 8
    "[post]\n"                // 9
    "terminated\n"            // 10
    "[frame]\n"               // 11
    "maychange = pc, x1, x2, x3, flag_n\n";

}  // namespace

TEST_CASE("parse a constant-time spec") {
  const auto s = load_spec(dir + "/compare_ct.spec");
  CHECK(s.kind == Kind::ct_relational);
  REQUIRE(s.programs[0]);
  CHECK(s.programs[0]->file == "compare.masm");
  CHECK(s.programs[0]->base == 0x1000);
  CHECK_FALSE(s.programs[1]);
  CHECK(s.params.size() == 5);
  CHECK(s.params[3].name == "kb[0]");
  CHECK(s.pre.size() == 6);
  CHECK(s.f0.text == "auto");
  CHECK(s.pub.items.size() == 5);
  CHECK(s.priv.items.size() == 2);
  CHECK(enumeration_size(s) == 4);

  const auto inst = instantiate(s);
  CHECK(inst.sides[0].instances.size() == 4);
  CHECK(inst.partition.priv == std::set<Label>{Label::mem(10), Label::mem(20)});
  CHECK(inst.partition.pub.count(Label::reg(2)));
}

TEST_CASE("enumeration size is the product of the domains") {
  CHECK(enumeration_size(load_spec(dir + "/compare_constant_ct.spec")) == 48);
  CHECK(enumeration_size(parse_spec(small, dir)) == 4);
}

TEST_CASE("errors carry codes and lines") {
  // replaces the line starting with the first word of `line`
  auto with = [](std::string a, const std::string& line) {
    const auto at = a.find("\n" + line.substr(0, line.find(' ')) + " ") + 1;
    return a.replace(at, a.find('\n', at) - at, line);
  };
  const auto undeclared = error_of([&] { parse_spec(with(small, "x0 = y"), dir); });
  CHECK(undeclared.code() == ErrorCode::undeclared_param);
  CHECK(undeclared.line() == 8);

  const auto section = error_of([&] { parse_spec(small + "[bogus]\n", dir); });
  CHECK(section.code() == ErrorCode::unknown_section);
  CHECK(section.line() == 13);

  CHECK(error_of([&] { instantiate(parse_spec(with(small, "x in 0..99999999"), dir)); }).code() ==
        ErrorCode::domain_too_large);
  CHECK(error_of([&] { instantiate(parse_spec(small, dir), 3); }).code() == ErrorCode::domain_too_large);
  CHECK(error_of([&] { parse_spec(with(small, "file = nosuch.masm"), dir); }).code() == ErrorCode::io_error);
  CHECK(error_of([&] { parse_spec("kind = sideways\n", dir); }).code() == ErrorCode::syntax_error);
}

TEST_CASE("post and frame may not read parameters") {
  auto s = small;
  s.replace(s.find("terminated\n"), 11, "x3 = x\n");
  CHECK(error_of([&] { parse_spec(s, dir); }).code() == ErrorCode::syntax_error);
}

TEST_CASE("RELHOARE_ENUM_CAP overrides the default cap") {
  ::setenv("RELHOARE_ENUM_CAP", "7", 1);
  CHECK(default_cap() == 7);
  ::unsetenv("RELHOARE_ENUM_CAP");
  CHECK(default_cap() == (std::size_t{1} << 16));
}

TEST_CASE("a small spec runs to a verdict") {
  const auto r = run(parse_spec(small, dir));
  CHECK(r.outcome == kernel::Outcome::proven);
  CHECK(r.report.rfind("VERDICT: Proven\n", 0) == 0);
  CHECK(exit_code(kernel::Outcome::proven) == 0);
  CHECK(exit_code(kernel::Outcome::refuted) == 1);
  CHECK(exit_code(kernel::Outcome::unknown) == 2);
}

TEST_CASE("state scripts round-trip") {
  const auto s = load_spec(dir + "/compare_constant_ct.spec");
  const auto inst = instantiate(s);
  const auto& side = inst.sides[0];
  for (const auto& st : side.instances) {
    const auto text = state_script(st, side.program, side.base);
    CHECK(parse_state_script(text, side.program, side.base) == st);
  }
}

TEST_CASE("a reported counterexample replays to its final states") {
  const auto s = load_spec(dir + "/compare_ct.spec");
  const auto inst = instantiate(s);
  const auto& side = inst.sides[0];
  ct::CtProblem p{side.pre, side.post, side.frame, side.steps, inst.partition, kernel::default_budget};
  const auto v = ct::check_ct_relational(p);
  REQUIRE(v.counterexample);
  const auto& cx = *v.counterexample;
  REQUIRE(cx.initial.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto script = state_script(cx.initial[i], side.program, side.base);
    const auto init = parse_state_script(script, side.program, side.base);
    CHECK(init == cx.initial[i]);
    CHECK(kernel::replay(*machine::system(), init, cx.choices[i]) == cx.final_states[i]);
  }

  const auto r = run(s);
  CHECK(r.outcome == kernel::Outcome::refuted);
  CHECK(r.report.find("replay:") != std::string::npos);
}
