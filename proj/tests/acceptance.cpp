// One line per acceptance criterion; exits nonzero if any fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "relhoare/ct.hpp"
#include "relhoare/equiv.hpp"
#include "relhoare/finsys.hpp"
#include "relhoare/masm.hpp"
#include "relhoare/spec.hpp"

using namespace relhoare;
namespace k = relhoare::kernel;
using machine::Label;
using machine::u64;
using MSt = machine::MachineState;

namespace {

const std::string corpus = RELHOARE_CORPUS_DIR;

struct Failed {
  std::string why;
};

void expect(bool ok, const std::string& why) {
  if (!ok) throw Failed{why};
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw Failed{"expected an error"};
}

struct Cli {
  int status = -1;
  std::string out;
};

Cli cli(const std::string& args) {
#ifdef RELHOARE_CLI
  Cli r;
  const std::string cmd = std::string("'") + RELHOARE_CLI + "' " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) throw Failed{"cannot start the command-line tool"};
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
  const int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
#else
  (void)args;
  throw Failed{"built without the command-line tool"};
#endif
}

std::string line_after(const std::string& text, const std::string& key) {
  const auto at = text.find(key);
  if (at == std::string::npos) return {};
  const auto from = at + key.size();
  return text.substr(from, text.find('\n', from) - from);
}

k::Precondition<finsys::State> states(std::vector<finsys::State> xs) {
  return {xs, {[xs](const finsys::State& s) { return k::contains(xs, s); }, "P"}};
}

k::Precondition<MSt> machine_pre(std::vector<MSt> xs) {
  return {xs, {[xs](const MSt& s) { return k::contains(xs, s); }, "P"}};
}

// ---------------------------------------------------------------------------

std::string c1() {
  const auto r = cli("selftest --seed 42 --trials 10000");
  expect(r.status == 0, "selftest exit " + std::to_string(r.status));
  expect(line_after(r.out, "violations: ") == "0", "violations reported");
  for (const auto* rule : {"LEMMA1", "CONJ", "COMM", "COMP", "LEMMA_COMMUTATIVITY", "LEMMA_COMPOSITIONAL",
                           "LEMMA_COMPOSITIONAL_FRAME", "LEMMA_CONJUNCTION", "THM1", "THM3", "THM4", "A_PRE",
                           "A_SEQ", "A_LOOP", "C_RESTRICT"})
    expect(r.out.find(std::string("  ") + rule + " ") != std::string::npos, std::string("rule not exercised: ") + rule);
  return "10000 trials, 0 violations";
}

std::string c2() {
  const auto r = finsys::exhaustive_lemma1(3, 3);
  expect(r.cases == 512 * 8 * 4, "case count " + std::to_string(r.cases));
  expect(r.violations == 0, std::to_string(r.violations) + " violations");
  expect(r.elapsed_seconds < 5, "too slow");
  return std::to_string(r.cases) + " cases, 0 violations";
}

std::string c3() {
  const finsys::FinSys g(2, {{0, 1}});
  const auto prod = finsys::product_graph(g);
  const finsys::StateSet q = finsys::StateSet{1} << (0 * 2 + 1);
  const auto ev = finsys::exact_eventually_set(prod, q);
  expect(!finsys::has(ev, 0 * 2 + 0), "(0,0) is in the product's eventually set");

  const auto sys = finsys::as_oracle(g);
  k::PairPrecondition<finsys::State> pre;
  pre.instances = {{0, 0}};
  pre.predicate = {[](const finsys::State& a, const finsys::State& b) { return a == 0 && b == 0; }, "(0,0)",
                   std::nullopt};
  const k::PairProperty<finsys::State> qq{
      [](const finsys::State& a, const finsys::State& b) { return a == 0 && b == 1; }, "(0,1)", std::nullopt};
  const auto v = k::check_ensures2<finsys::State>(sys, pre, k::StepFn<finsys::State>::constant(0),
                                                  k::StepFn<finsys::State>::constant(1), qq,
                                                  k::product(k::any_change<finsys::State>(), k::any_change<finsys::State>()));
  expect(v.proven(), "check_ensures2 not proven");
  return "product eventually excludes (0,0); ensures2 Proven";
}

std::string c4() {
  const auto p = masm::assemble_file(corpus + "/loop.masm");
  constexpr u64 base = 0x1000;
  MSt init = masm::load_program(MSt{}, p, base);
  init.pc = base;
  init.regs[0] = 1;
  const u64 check = base + p.symbols.at("check");
  auto at_check = [check](u64 v) {
    return k::Property<MSt>{[check, v](const MSt& s) { return s.pc == check && s.regs[0] == v; },
                            "pc = check & x0 = " + std::to_string(v)};
  };
  const auto both = k::Property<MSt>{[check](const MSt& s) { return s.pc == check && s.regs[0] == 2 && s.regs[0] == 3; },
                                     "pc = check & x0 = 2 & x0 = 3"};
  const auto sys = machine::system();
  const auto pre = machine_pre({init});
  const auto any = k::any_change<MSt>();
  const auto q = k::check_ensures(sys, pre, at_check(2), any, 64);
  const auto q2 = k::check_ensures(sys, pre, at_check(3), any, 64);
  const auto qq = k::check_ensures(sys, pre, both, any, 64);
  expect(q.proven(), "Q not proven");
  expect(q2.proven(), "Q' not proven");
  expect(qq.refuted(), "Q and Q' together not refuted");

  const auto n = k::check_ensures_n(sys, pre, k::StepFn<MSt>::automatic(), at_check(2), any);
  const auto n2 = k::check_ensures_n(sys, pre, k::StepFn<MSt>::automatic(), at_check(3), any);
  expect(n.proven() && n2.proven(), "step-indexed forms not proven");
  const auto s1 = n.report.steps0.at(0), s2 = n2.report.steps0.at(0);
  const auto code = code_of([&] { k::apply_rule<MSt>(k::Rule::conj, {n.judgment, n2.judgment}); });
  expect(code == ErrorCode::side_condition_failed, "CONJ accepted differing step counts");
  return "Q Proven, Q' Proven, Q&Q' Refuted; CONJ rejects steps " + std::to_string(s1) + " vs " + std::to_string(s2);
}

std::string c5() {
  const auto r = cli("check '" + corpus + "/compare_ct.spec'");
  expect(r.status == 1, "exit " + std::to_string(r.status));
  expect(r.out.rfind("VERDICT: Refuted", 0) == 0, "verdict line");
  const auto t0 = line_after(r.out, "  trace 0: ");
  const auto t1 = line_after(r.out, "  trace 1: ");
  expect(t0 == "[branch false, load 10,4, load 20,4, branch false, branch false]", "trace 0 = " + t0);
  expect(t1 == "[branch false, load 10,4, load 20,4, branch true]", "trace 1 = " + t1);
  return "Refuted, both projected traces match";
}

std::string c6() {
  const auto s = spec::load_spec(corpus + "/compare_constant_ct.spec");
  expect(spec::enumeration_size(s) == 3 * 16, "enumeration size");
  const auto inst = spec::instantiate(s);
  const auto& side = inst.sides[0];
  ct::CtProblem p{side.pre, side.post, side.frame, side.steps, inst.partition, k::default_budget};
  const auto rel = ct::check_ct_relational(p);
  const auto un = ct::check_ct_unary(p, *inst.witness, inst.symbols0);
  expect(rel.proven(), "relational form not proven");
  expect(un.proven(), "witness form not proven");
  const auto b = ct::bridge(un.judgment, inst.partition);
  expect(b.recheck.proven(), "product of the witness judgment not re-proven");
  return "relational Proven, witness Proven, forms agree (" + std::to_string(side.instances.size()) + " instances)";
}

std::string c7() {
  const auto s = spec::load_spec(corpus + "/mulnd.spec");
  const auto inst = spec::instantiate(s);
  const auto& side = inst.sides[0];
  expect(side.instances.size() == 8, "instance count");
  for (const auto& st : side.instances)
    expect(machine::successors(st).size() == 2, "MULND state without exactly two successors");
  const auto sys = machine::system();
  const auto e = k::check_ensures(sys, side.pre, side.post, side.frame);
  expect(e.proven(), "ensures not proven");
  const auto n = k::check_ensures_n(sys, side.pre, k::StepFn<MSt>::automatic(), side.post, side.frame);
  expect(n.proven(), "ensures_n not proven");
  for (auto steps : n.report.steps0) expect(steps == 3, "auto resolved to " + std::to_string(steps));
  return "2 successors, ensures Proven, ensures_n Proven with steps 3";
}

std::string c8() {
  using finsys::FinSys;
  using St = finsys::State;
  const auto det = finsys::as_oracle(FinSys(4, {{0, 1}, {1, 2}, {2, 3}}));
  const auto e = k::check_ensures(det, states({0, 1}), finsys::member(0b1100), k::any_change<St>(), 8);
  expect(e.proven(), "deterministic premise");
  const auto n = k::convert<St>(k::Conversion::thm2, {e.judgment});
  const auto& u = n->unary();
  expect(k::check_ensures_n(det, u.pre, u.steps, u.post, u.frame).proven(), "synthesized steps not re-proven");

  const FinSys g(4, {{0, 1}, {0, 2}, {2, 3}});
  const auto nd = finsys::as_oracle(g);
  const auto q = finsys::member(0b1010);
  const auto ev = k::check_ensures(nd, states({0}), q, k::any_change<St>(), 8);
  expect(ev.proven(), "nondeterministic premise");
  expect(code_of([&] { k::convert<St>(k::Conversion::thm2, {ev.judgment}); }) == ErrorCode::not_deterministic,
         "THM2 did not report NotDeterministic");
  for (k::Steps i = 0; i <= 8; ++i)
    expect(!finsys::oracle_ensures_n(g, {0}, k::StepFn<St>::constant(i), q, k::any_change<St>()),
           "ensures_n holds for n = " + std::to_string(i));
  return "THM2 ok on the chain; NotDeterministic, no n <= 8";
}

std::string c9() {
  const auto sys = machine::system();
  const auto es = spec::load_spec(corpus + "/compare_equiv.spec");
  const auto ei = spec::instantiate(es);
  auto fill = [](const spec::Side& src) {
    equiv::EquivSide d;
    d.program = src.id;
    d.entry = src.entry;
    d.exit = src.exit;
    d.pre = src.pre;
    d.post = src.post;
    d.frame = src.frame;
    d.steps = src.steps;
    return d;
  };
  const equiv::EquivProblem p{fill(ei.sides[0]), fill(ei.sides[1]), ei.in, ei.out};
  const auto eq = equiv::check_equiv(p);
  expect(eq.judgment.has_value(), "equivalence not proven");

  const auto ci = spec::instantiate(spec::load_spec(corpus + "/compare_correct.spec"));
  const auto ti = spec::instantiate(spec::load_spec(corpus + "/compare_constant_correct.spec"));
  const auto& c = ci.sides[0];
  const auto& t = ti.sides[0];
  const auto corr = k::check_ensures(sys, c.pre, c.post, c.frame);
  expect(corr.proven(), "compare correctness not proven");
  const k::UnaryComponents<MSt> target{t.pre, t.post, t.frame, k::StepFn<MSt>::automatic()};
  const auto tr = equiv::transfer_correctness(corr.judgment, *eq.judgment, target);
  expect(tr.result && tr.result->form == k::Form::ensures_n, "no ensures_n for compare_constant");
  const auto& u = tr.result->unary();
  expect(k::check_ensures_n(sys, u.pre, u.steps, u.post, u.frame).proven(), "transferred triple not re-proven");

  // the stopper-less variant with its exit anchor at the former halt
  const auto nostop = masm::assemble_file(corpus + "/compare_nostop.masm");
  const u64 base = 0x1000, neq = base + nostop.symbols.at("neq");
  std::vector<MSt> xn;
  for (const auto& s : c.instances) xn.push_back(masm::load_program(s, nostop, base));
  const k::Property<MSt> at_neq{[neq](const MSt& s) { return s.pc == neq; }, "pc = neq"};
  const auto ncorr = k::check_ensures(sys, machine_pre(xn), at_neq, k::any_change<MSt>());
  expect(ncorr.proven(), "stopper-less reachability not proven");
  equiv::EquivSide n0;
  n0.program = {"compare_nostop", nostop.bytes, base};
  n0.entry = base;
  n0.exit = neq;
  n0.pre = machine_pre(xn);
  n0.post = k::always_true<MSt>();
  n0.frame = k::any_change<MSt>();
  auto n1 = fill(ei.sides[0]);
  n1.post = k::always_true<MSt>();
  const auto neq_e = equiv::check_equiv({n0, n1, ei.in, ei.out});
  expect(neq_e.judgment.has_value(), "stopper-less equivalence not proven");
  const k::UnaryComponents<MSt> anything{n1.pre, k::always_true<MSt>(), k::any_change<MSt>(),
                                         k::StepFn<MSt>::automatic()};
  expect(code_of([&] { equiv::transfer_correctness(ncorr.judgment, *neq_e.judgment, anything); }) ==
             ErrorCode::promotion_failed,
         "stopper-less transfer did not fail with PromotionFailed");
  return "equiv Proven, transferred ensures_n re-proven, stopper-less PromotionFailed";
}

std::string c10() {
  const auto sys = machine::system();
  auto at_pc = [&](const std::string& file, k::Steps n) {
    const auto inst = spec::instantiate(spec::load_spec(corpus + "/" + file));
    const auto& s = inst.sides[0];
    return k::check_eventually_n_at_pc<MSt>(sys, s.pre, [](const MSt& st) { return st.pc; }, s.entry, s.exit, n)
        .outcome;
  };
  expect(at_pc("add_promote.spec", 1) == k::Outcome::proven, "n = 1 not proven");
  expect(at_pc("add_promote.spec", 2) == k::Outcome::refuted, "n = 2 not refuted");
  expect(at_pc("add_backjump_promote.spec", 1) == k::Outcome::refuted, "backward jump not refuted");
  return "n=1 Proven, n=2 Refuted, backward jump Refuted";
}

std::string c11() {
  std::uint64_t valid = 0;
  for (auto op : machine::all_ops()) {
    std::uint64_t per_op = 0;
    for (std::uint32_t bits = 0; bits < (1u << 24); ++bits) {
      const std::uint32_t w = (static_cast<std::uint32_t>(op) << 24) | bits;
      const auto ins = machine::decode_word(w);
      if (ins.op == machine::Op::undecodable) continue;
      ++per_op;
      if (machine::encode(ins) != w) throw Failed{"round trip fails for a word of " + std::string(machine::mnemonic(op))};
    }
    expect(per_op > 0, std::string("no valid encodings for ") + machine::mnemonic(op));
    valid += per_op;
  }
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(corpus)) {
    if (entry.path().extension() != ".masm") continue;
    ++files;
    const auto p = masm::assemble_file(entry.path().string());
    expect(p.warnings.empty(), entry.path().filename().string() + " assembles with warnings");
  }
  return std::to_string(valid) + " valid words round-trip; " + std::to_string(files) + " corpus files clean";
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<std::string()>>> criteria = {
      {1, c1}, {2, c2}, {3, c3}, {4, c4}, {5, c5}, {6, c6}, {7, c7}, {8, c8}, {9, c9}, {10, c10}, {11, c11}};
  const std::map<int, double> limits = {{1, 60}, {2, 5}, {4, 1}, {5, 1}, {6, 10}, {7, 1}, {9, 30}};
  int failures = 0;
  for (const auto& [n, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = run();
    } catch (const Failed& f) {
      ok = false;
      detail = f.why;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && limits.count(n) && secs > limits.at(n)) {
      ok = false;
      detail += " (over the time limit)";
    }
    failures += !ok;
    std::printf("criterion %2d: %s  %.3fs  %s\n", n, ok ? "PASS" : "FAIL", secs, detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
