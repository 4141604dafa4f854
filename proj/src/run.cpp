#include <filesystem>
#include <sstream>

#include "relhoare/spec.hpp"

namespace relhoare::spec {

namespace k = relhoare::kernel;

namespace {

std::string choices_text(const std::vector<std::size_t>& c) {
  std::string out;
  for (auto i : c) out += (out.empty() ? "" : ",") + std::to_string(i);
  return out.empty() ? "-" : out;
}

struct Writer {
  const CheckSpec& spec;
  const Instance& inst;
  std::ostringstream os;

  std::string program_path(std::size_t side) const {
    return (std::filesystem::path(spec.dir) / spec.programs[side]->file).string();
  }

  void header(k::Outcome o) {
    os << "VERDICT: " << k::to_string(o) << "\n";
    os << "kind: " << to_string(spec.kind) << "\n";
    for (std::size_t i = 0; i < inst.sides.size(); ++i) {
      const auto& s = inst.sides[i];
      os << "program" << i << ": " << spec.programs[i]->file << " at 0x" << std::hex << s.base << " entry 0x" << s.entry
         << " exit 0x" << s.exit << std::dec << ", " << s.instances.size() << " instances\n";
    }
    os << "scope: exhaustive over " << enumeration_size(spec)
       << " parameter valuations; the verdict holds for the enumerated instances only\n";
  }

  void report(const k::Verdict<St>& v) {
    for (const auto& w : v.report.warnings) os << "warning: " << w << "\n";
    if (!v.report.steps0.empty()) os << "checked: " << v.report.steps0.size() << " cases\n";
    if (v.outcome == k::Outcome::unknown) os << "budget exhausted after " << v.budget_exhausted << " steps\n";
    if (v.judgment) os << "judgment:\n" << k::describe(*v.judgment);
    if (v.counterexample) counterexample(*v.counterexample);
  }

  void counterexample(const k::Counterexample<St>& cx) {
    os << "reason: " << cx.reason << "\n";
    os << "counterexample:\n";
    const bool relational = inst.sides.size() == 2;
    for (std::size_t i = 0; i < cx.initial.size(); ++i) {
      const auto& side = inst.sides[relational ? i : 0];
      os << "  initial " << i << ": " << state_script(cx.initial[i], side.program, side.base) << "\n";
      if (i < cx.choices.size()) os << "  choices " << i << ": " << choices_text(cx.choices[i]) << "\n";
    }
    for (std::size_t i = 0; i < cx.final_states.size(); ++i) {
      const auto& f = cx.final_states[i];
      os << "  final " << i << ": pc=0x" << std::hex << f.pc << std::dec << "\n";
      os << "  trace " << i << ": " << ct::to_string(ct::project_trace(f.events)) << "\n";
      os << "  raw trace " << i << ": " << ct::to_string(f.events) << "\n";
    }
    os << "replay:\n";
    for (std::size_t i = 0; i < cx.initial.size(); ++i) {
      const auto side_index = relational ? i : 0;
      const auto& side = inst.sides[side_index];
      const auto& ch = i < cx.choices.size() ? cx.choices[i] : std::vector<std::size_t>{};
      os << "  relhoare run " << program_path(side_index) << " --base 0x" << std::hex << side.base << std::dec
         << " --steps " << ch.size() << " --state \"" << state_script(cx.initial[i], side.program, side.base)
         << "\" --choices " << choices_text(ch) << " --trace\n";
    }
  }
};

k::Verdict<St> ct_other(const Instance& inst, const ct::CtProblem& p, bool unary_first) {
  if (unary_first) return ct::check_ct_relational(p);
  return ct::check_ct_unary(p, *inst.witness, inst.symbols0);
}

}  // namespace

RunResult run(const CheckSpec& s, const RunOptions& o) {
  const auto inst = instantiate(s, o.cap);
  const auto sys = machine::system();
  const auto& side = inst.sides[0];
  k::Verdict<St> v;
  RunResult r;
  std::vector<std::string> extra;

  switch (s.kind) {
    case Kind::unary: v = k::check_ensures(sys, side.pre, side.post, side.frame, o.budget); break;
    case Kind::unary_n: v = k::check_ensures_n(sys, side.pre, side.steps, side.post, side.frame, o.budget); break;
    case Kind::promote:
      v = k::check_eventually_n_at_pc<St>(sys, side.pre, [](const St& st) { return st.pc; }, side.entry, side.exit,
                                          side.steps, o.budget);
      break;
    case Kind::ct_relational:
    case Kind::ct_unary: {
      ct::CtProblem p{side.pre, side.post, side.frame, side.steps, inst.partition, o.budget};
      if (s.kind == Kind::ct_relational) v = ct::check_ct_relational(p);
      else v = ct::check_ct_unary(p, *inst.witness, inst.symbols0);
      if (inst.witness) {
        const auto other = ct_other(inst, p, s.kind == Kind::ct_unary);
        r.other = other.outcome;
        extra.push_back(std::string(s.kind == Kind::ct_relational ? "witness form" : "relational form") + ": " +
                        k::to_string(other.outcome));
        extra.push_back(std::string("forms agree: ") + (other.outcome == v.outcome ? "yes" : "NO"));
        const auto& unary = s.kind == Kind::ct_unary ? v : other;
        if (unary.proven()) {
          auto b = ct::bridge(unary.judgment, inst.partition);
          extra.push_back(std::string("product of the witness judgment, re-checked: ") + k::to_string(b.recheck.outcome));
        }
      }
      break;
    }
    case Kind::relational:
    case Kind::equiv: {
      equiv::EquivProblem p;
      auto fill = [](const Side& src, equiv::EquivSide& dst) {
        dst.program = src.id;
        dst.entry = src.entry;
        dst.exit = src.exit;
        dst.pre = src.pre;
        dst.post = src.post;
        dst.frame = src.frame;
        dst.steps = src.steps;
      };
      fill(inst.sides[0], p.side0);
      fill(inst.sides[1], p.side1);
      p.in = inst.in;
      p.out = inst.out;
      p.budget = o.budget;
      extra.push_back("equiv_in: " + p.in.description());
      extra.push_back("equiv_out: " + p.out.description());
      v = equiv::check_equiv(p).verdict;
      break;
    }
  }
  r.outcome = v.outcome;
  Writer w{s, inst, {}};
  w.header(v.outcome);
  for (const auto& e : extra) w.os << e << "\n";
  w.report(v);
  r.report = w.os.str();
  return r;
}

}  // namespace relhoare::spec
