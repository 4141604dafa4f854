#include "relhoare/equiv.hpp"

#include <algorithm>

#include "relhoare/masm.hpp"

namespace relhoare::equiv {

namespace k = relhoare::kernel;

namespace {

bool agree(const St& a, const St& b, const Label& l) {
  if (l.kind == Label::Kind::events) return a.events == b.events;
  return a.get(l) == b.get(l);
}

std::string list(const std::set<Label>& ls) {
  std::string out;
  for (const auto& l : ls) out += (out.empty() ? "" : ", ") + machine::to_string(l);
  return out;
}

[[noreturn]] void anchor(const std::string& what) { throw Error(ErrorCode::anchor_mismatch, what); }
[[noreturn]] void side(const std::string& what) { throw Error(ErrorCode::side_condition_failed, what); }

k::RuleInputs<St> inputs() {
  k::RuleInputs<St> in;
  in.maychange = [](const std::set<std::string>& names) { return machine::maychange_named(names); };
  return in;
}

bool holds_code(const St& s, const ProgramId& p) {
  for (std::size_t i = 0; i < p.bytes.size(); ++i)
    if (s.read8(p.base + i) != p.bytes[i]) return false;
  return true;
}

}  // namespace

bool EquivRel::operator()(const St& a, const St& b) const {
  switch (form) {
    case Form::keep:
      return std::all_of(labels.begin(), labels.end(), [&](const Label& l) { return agree(a, b, l); });
    case Form::all_except: return machine::maychange(labels)(a, b);
    case Form::general: return general(a, b);
  }
  return false;
}

std::string EquivRel::description() const {
  switch (form) {
    case Form::keep: return "keep{" + list(labels) + "}";
    case Form::all_except: return labels.empty() ? "keep all" : "keep all except{" + list(labels) + "}";
    case Form::general: return general.description;
  }
  return "?";
}

k::PairProperty<St> EquivRel::as_property() const {
  const EquivRel self = *this;
  return {[self](const St& a, const St& b) { return self(a, b); }, description(), std::nullopt};
}

EquivRel EquivRel::swapped() const {
  if (form != Form::general) return *this;
  return of(k::swapped(general));
}

std::optional<bool> kept_within(const EquivRel& inner, const EquivRel& outer) {
  using F = EquivRel::Form;
  if (inner.form == F::general || outer.form == F::general) return std::nullopt;
  if (inner.form == F::keep && outer.form == F::keep)
    return std::includes(outer.labels.begin(), outer.labels.end(), inner.labels.begin(), inner.labels.end());
  if (inner.form == F::keep)  // outer keeps everything outside its labels
    return std::none_of(inner.labels.begin(), inner.labels.end(), [&](const Label& l) { return outer.labels.count(l); });
  if (outer.form == F::keep) return false;  // a cofinite set never fits in a finite one
  return std::includes(inner.labels.begin(), inner.labels.end(), outer.labels.begin(), outer.labels.end());
}

EquivResult check_equiv(const EquivProblem& p) {
  for (const auto* s : {&p.side0, &p.side1})
    for (const auto& i : s->pre.instances) {
      if (i.pc != s->entry)
        throw Error(ErrorCode::precondition_violated, "an instance of " + s->program.name + " is not at its entry anchor");
      if (!holds_code(i, s->program))
        throw Error(ErrorCode::precondition_violated, "an instance does not hold the code of " + s->program.name);
    }
  k::PairPrecondition<St> pre;
  for (const auto& a : p.side0.pre.instances)
    for (const auto& b : p.side1.pre.instances)
      if (p.in(a, b)) pre.instances.emplace_back(a, b);
  pre.predicate = k::conjoin(k::product(p.side0.pre.predicate, p.side1.pre.predicate), p.in.as_property());
  pre.domains = std::make_pair(p.side0.pre.instances, p.side1.pre.instances);
  const auto post = k::conjoin(k::product(p.side0.post, p.side1.post), p.out.as_property());
  auto steps = [](const EquivSide& s) {
    if (!s.steps.is_auto() || s.steps.auto_target()) return s.steps;
    const u64 exit = s.exit;
    return k::StepFn<St>::automatic([exit](const St&, const St& cur) { return cur.pc == exit; });
  };
  EquivResult r;
  r.verdict = k::check_ensures2(machine::system(), pre, steps(p.side0), steps(p.side1), post,
                                k::product(p.side0.frame, p.side1.frame), p.budget);
  if (r.verdict.proven())
    r.judgment = EquivJudgment{p.side0.program, p.side1.program, p.in,  p.out, p.side0.entry,
                               p.side0.exit,    p.side1.entry,   p.side1.exit, r.verdict.judgment};
  return r;
}

EquivProblem swapped(const EquivProblem& p) {
  EquivProblem out = p;
  std::swap(out.side0, out.side1);
  out.in = p.in.swapped();
  out.out = p.out.swapped();
  return out;
}

EquivJudgment compose_sequential(const EquivJudgment& e1, const EquivJudgment& e2) {
  if (!(e1.program0 == e2.program0) || !(e1.program1 == e2.program1))
    anchor("sequential composition needs the same two programs on both sides");
  if (e1.exit0 != e2.entry0 || e1.exit1 != e2.entry1) anchor("the first equivalence does not end where the second starts");
  if (auto within = kept_within(e2.in, e1.out)) {
    if (!*within)
      side("the second input relation (" + e2.in.description() + ") keeps more than the first output relation (" +
           e1.out.description() + ")");
  } else {
    const auto& c = e1.judgment->relational();
    for (const auto& p : c.pre.instances)
      for (const auto& a : k::reach_exactly(*e1.judgment->system, p.first, c.steps0(p.first)))
        for (const auto& b : k::reach_exactly(*e1.judgment->system, p.second, c.steps1(p.second)))
          if (e1.out(a, b) && !e2.in(a, b)) side("a reached middle pair is related by the first output but not the second input");
  }
  auto j = k::apply_rule<St>(k::Rule::comp, {e1.judgment, e2.judgment}, inputs());
  return {e1.program0, e1.program1, e1.in, e2.out, e1.entry0, e2.exit0, e1.entry1, e2.exit1, j};
}

EquivJudgment compose_transitive(const EquivJudgment& e1, const EquivJudgment& e2, const MiddleWitness& witness,
                                 std::vector<k::StatePair<St>> domain) {
  if (!(e1.program1 == e2.program0)) anchor("transitive composition needs a shared middle program");
  if (e1.entry1 != e2.entry0 || e1.exit1 != e2.exit0) anchor("the middle program's anchors differ");
  if (!witness)
    throw Error(ErrorCode::factorization_witness_missing, "transitive composition needs a middle-state witness");

  using F = EquivRel::Form;
  auto compose = [](const EquivRel& a, const EquivRel& b) -> std::optional<EquivRel> {
    if (a.form == F::general || b.form == F::general) return std::nullopt;
    if (a.form == F::keep && b.form == F::keep) {
      std::set<Label> both;
      std::set_intersection(a.labels.begin(), a.labels.end(), b.labels.begin(), b.labels.end(),
                            std::inserter(both, both.begin()));
      return EquivRel::keep(both);
    }
    if (a.form == F::all_except && b.form == F::all_except) {
      auto both = a.labels;
      both.insert(b.labels.begin(), b.labels.end());
      return EquivRel::all_except(both);
    }
    const auto& kept = a.form == F::keep ? a : b;
    const auto& cof = a.form == F::keep ? b : a;
    std::set<Label> out;
    for (const auto& l : kept.labels)
      if (!cof.labels.count(l)) out.insert(l);
    return EquivRel::keep(out);
  };
  auto in = compose(e1.in, e2.in);
  auto out = compose(e1.out, e2.out);
  if (!in || !out) side("general relations do not compose without explicit composed relations");

  const auto& c1 = e1.judgment->relational();
  const auto& c2 = e2.judgment->relational();
  if (domain.empty()) {
    std::vector<St> firsts, lasts;
    for (const auto& [a, b] : c1.pre.instances) k::insert_unique(firsts, a);
    for (const auto& [b, c] : c2.pre.instances) k::insert_unique(lasts, c);
    for (const auto& a : firsts)
      for (const auto& c : lasts)
        if ((*in)(a, c)) domain.emplace_back(a, c);
  }
  for (const auto& [a, c] : domain) {
    const auto b = witness(a, c);
    if (!b) side("the witness has no middle state for an outer pair");
    if (!k::contains(c1.pre.instances, k::StatePair<St>{a, *b}) || !c1.pre.predicate(a, *b))
      side("a witness middle state is not an instance of the first equivalence");
    if (!k::contains(c2.pre.instances, k::StatePair<St>{*b, c}) || !c2.pre.predicate(*b, c))
      side("a witness middle state is not an instance of the second equivalence");
  }

  auto composed = k::apply_rule<St>(k::Rule::frame_comp, {e1.judgment, e2.judgment}, inputs());
  const auto& cc = composed->relational();

  auto in_pre = inputs();
  k::PairPrecondition<St> pre;
  pre.instances = domain;
  pre.predicate = k::conjoin(cc.pre.predicate, in->as_property());
  in_pre.pair_pre = pre;
  auto restricted = k::apply_rule<St>(k::Rule::pre2, {composed}, in_pre);

  auto in_post = inputs();
  const auto q0 = c1.post.factors ? c1.post.factors->first : k::always_true<St>();
  const auto q2 = c2.post.factors ? c2.post.factors->second : k::always_true<St>();
  in_post.pair_post = k::conjoin(k::product(q0, q2), out->as_property());
  auto weakened = k::apply_rule<St>(k::Rule::post2, {restricted}, in_post);
  return {e1.program0, e2.program1, *in, *out, e1.entry0, e1.exit0, e2.entry1, e2.exit1, weakened};
}

Transfer transfer_correctness(const k::JudgmentPtr<St>& correctness, const EquivJudgment& e,
                              const k::UnaryComponents<St>& target, k::Steps budget) {
  if (!correctness) throw Error(ErrorCode::schema_mismatch, "transfer: no correctness judgment");
  if (correctness->form != k::Form::ensures && correctness->form != k::Form::ensures_n)
    throw Error(ErrorCode::schema_mismatch, "transfer: correctness must be ensures or ensures_n");
  for (const auto& s : correctness->unary().pre.instances)
    if (!holds_code(s, e.program0)) anchor("the correctness judgment is not about the equivalence's first program");

  Transfer t;
  k::JudgmentPtr<St> stepped = correctness;
  if (correctness->form == k::Form::ensures) {
    const auto& c = correctness->unary();
    auto pc_of = [](const St& s) { return s.pc; };
    k::Verdict<St> at;
    try {
      at = k::check_eventually_n_at_pc<St>(machine::system(), c.pre, pc_of, e.entry0, e.exit0,
                                           k::StepFn<St>::automatic(), budget);
    } catch (const Error& err) {
      throw Error(ErrorCode::promotion_failed, std::string("no step count at the exit pc: ") + err.what());
    }
    if (!at.proven())
      throw Error(ErrorCode::promotion_failed,
                  "eventually_n_at_pc does not hold: " + (at.counterexample ? at.counterexample->reason : "unknown"));
    t.at_pc = at.judgment;
    k::RuleInputs<St> in;
    in.budget = budget;
    try {
      t.promoted = k::convert<St>(k::Conversion::promote, {correctness, t.at_pc}, in);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::side_condition_failed) throw;
      throw Error(ErrorCode::promotion_failed, err.what());
    }
    stepped = t.promoted;
  }
  k::RuleInputs<St> in;
  in.target = target;
  in.budget = budget;
  t.hybrid = k::convert<St>(k::Conversion::thm5, {stepped, e.judgment}, in);
  t.result = k::convert<St>(k::Conversion::thm4, {t.hybrid});
  return t;
}

}  // namespace relhoare::equiv
