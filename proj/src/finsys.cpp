#include "relhoare/finsys.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <random>
#include <sstream>

namespace relhoare::finsys {

namespace k = kernel;

FinSys::FinSys(std::size_t n_states, std::set<std::pair<State, State>> edges)
    : n_(n_states), edges_(std::move(edges)), succ_(n_states), succ_mask_(n_states, 0) {
  if (n_states == 0 || n_states > 64) throw Error(ErrorCode::precondition_violated, "state count must be in 1..64");
  for (const auto& [a, b] : edges_) {
    if (a >= n_ || b >= n_)
      throw Error(ErrorCode::precondition_violated,
                  "edge (" + std::to_string(a) + "," + std::to_string(b) + ") references a missing state");
    succ_[a].push_back(b);  // std::set iteration keeps each list ascending
    succ_mask_[a] |= StateSet{1} << b;
  }
}

bool FinSys::deterministic() const {
  for (const auto& s : succ_)
    if (s.size() > 1) return false;
  return true;
}

std::string to_string(const FinSys& g) {
  std::ostringstream os;
  os << "n=" << g.n_states() << " edges={";
  bool first = true;
  for (const auto& [a, b] : g.edges()) {
    os << (first ? "" : ",") << "(" << a << "," << b << ")";
    first = false;
  }
  os << "}";
  return os.str();
}

StateSet exact_eventually_set(const FinSys& g, StateSet q) {
  StateSet acc = q & g.all();
  for (bool changed = true; changed;) {
    changed = false;
    for (State s = 0; s < g.n_states(); ++s) {
      if (has(acc, s)) continue;
      const StateSet succ = g.successor_set(s);
      if (succ != 0 && (succ & ~acc) == 0) {
        acc |= StateSet{1} << s;
        changed = true;
      }
    }
  }
  return acc;
}

StateSet exact_eventually_n_set(const FinSys& g, k::Steps n, StateSet q) {
  StateSet e = q & g.all();
  for (k::Steps i = 0; i < n; ++i) {
    StateSet next = 0;
    for (State s = 0; s < g.n_states(); ++s) {
      const StateSet succ = g.successor_set(s);
      if (succ != 0 && (succ & ~e) == 0) next |= StateSet{1} << s;
    }
    e = next;
  }
  return e;
}

StateSet reach_exactly(const FinSys& g, State s, k::Steps n) {
  StateSet cur = StateSet{1} << s;
  for (k::Steps i = 0; i < n; ++i) {
    StateSet next = 0;
    for (State t = 0; t < g.n_states(); ++t)
      if (has(cur, t)) next |= g.successor_set(t);
    cur = next;
  }
  return cur;
}

FinSys random_system(std::uint64_t seed, std::size_t n_states, std::size_t max_out_degree) {
  if (n_states == 0 || n_states > 6 || max_out_degree > 3)
    throw Error(ErrorCode::precondition_violated, "random systems need 1..6 states and out-degree <= 3");
  std::mt19937_64 rng(seed);
  std::set<std::pair<State, State>> edges;
  std::vector<State> targets(n_states);
  for (State s = 0; s < n_states; ++s) {
    const std::size_t deg = std::min<std::size_t>(rng() % (max_out_degree + 1), n_states);
    for (State t = 0; t < n_states; ++t) targets[t] = t;
    std::shuffle(targets.begin(), targets.end(), rng);
    for (std::size_t i = 0; i < deg; ++i) edges.emplace(s, targets[i]);
  }
  return FinSys(n_states, std::move(edges));
}

FinSys product_graph(const FinSys& g) {
  const std::size_t n = g.n_states();
  std::set<std::pair<State, State>> edges;
  for (State a = 0; a < n; ++a)
    for (State b = 0; b < n; ++b) {
      for (State a2 : g.successors(a)) edges.emplace(a * n + b, a2 * n + b);
      for (State b2 : g.successors(b)) edges.emplace(a * n + b, a * n + b2);
    }
  return FinSys(n * n, std::move(edges));
}

k::SystemPtr<State> as_oracle(const FinSys& g) {
  auto copy = std::make_shared<const FinSys>(g);
  return k::make_system<State>([copy](const State& s) { return copy->successors(s); });
}

k::Property<State> member(StateSet q, std::string description) {
  if (description.empty()) {
    std::ostringstream os;
    os << "in{";
    bool first = true;
    for (State s = 0; s < 64; ++s)
      if (has(q, s)) {
        os << (first ? "" : ",") << s;
        first = false;
      }
    os << "}";
    description = os.str();
  }
  return {[q](const State& s) { return s < 64 && has(q, s); }, std::move(description)};
}

namespace {

StateSet target_set(const FinSys& g, State init, const k::Property<State>& q, const k::Frame<State>& f) {
  StateSet t = 0;
  for (State s = 0; s < g.n_states(); ++s)
    if (q(s) && f(init, s)) t |= StateSet{1} << s;
  return t;
}

}  // namespace

bool oracle_ensures(const FinSys& g, const std::vector<State>& pre, const k::Property<State>& q,
                    const k::Frame<State>& f) {
  for (State s : pre)
    if (!has(exact_eventually_set(g, target_set(g, s, q, f)), s)) return false;
  return true;
}

bool oracle_ensures_n(const FinSys& g, const std::vector<State>& pre, const k::StepFn<State>& steps,
                      const k::Property<State>& q, const k::Frame<State>& f) {
  for (State s : pre)
    if (!has(exact_eventually_n_set(g, steps(s), target_set(g, s, q, f)), s)) return false;
  return true;
}

bool oracle_ensures2(const FinSys& g, const std::vector<k::StatePair<State>>& pre, const k::StepFn<State>& f0,
                     const k::StepFn<State>& f1, const k::PairProperty<State>& q, const k::PairFrame<State>& f) {
  const std::size_t n = g.n_states();
  for (const auto& init : pre) {
    const auto [s0, s1] = init;
    const k::Steps n0 = f0(s0);
    const k::Steps n1 = f1(s1);
    StateSet m = 0;
    for (State a = 0; a < n; ++a) {
      StateSet row = 0;
      for (State b = 0; b < n; ++b)
        if (q(a, b) && f(init, {a, b})) row |= StateSet{1} << b;
      if (has(exact_eventually_n_set(g, n1, row), s1)) m |= StateSet{1} << a;
    }
    if (!has(exact_eventually_n_set(g, n0, m), s0)) return false;
  }
  return true;
}

bool nested(const FinSys& g, State s0, State s1, k::Steps n0, k::Steps n1, std::uint64_t qx) {
  const std::size_t n = g.n_states();
  StateSet m = 0;
  for (State a = 0; a < n; ++a) {
    const StateSet row = (qx >> (a * n)) & g.all();
    if (has(exact_eventually_n_set(g, n1, row), s1)) m |= StateSet{1} << a;
  }
  return has(exact_eventually_n_set(g, n0, m), s0);
}

namespace {

using Pair = k::StatePair<State>;

std::vector<State> states_of(StateSet q, std::size_t n) {
  std::vector<State> out;
  for (State s = 0; s < n; ++s)
    if (has(q, s)) out.push_back(s);
  return out;
}

k::Precondition<State> pre_of(StateSet q, std::size_t n) { return {states_of(q, n), member(q)}; }

k::Frame<State> frame_of(std::uint64_t mask, std::size_t n) {
  std::ostringstream os;
  os << "F#" << std::hex << mask;
  return {[mask, n](const State& a, const State& b) { return (mask >> (a * n + b)) & 1u; }, os.str(), std::nullopt};
}

k::PairProperty<State> pair_member(std::uint64_t mask, std::size_t n) {
  std::ostringstream os;
  os << "Q#" << std::hex << mask;
  return {[mask, n](const State& a, const State& b) { return (mask >> (a * n + b)) & 1u; }, os.str(), std::nullopt};
}

k::PairPrecondition<State> pair_pre_of(std::uint64_t mask, std::size_t n) {
  k::PairPrecondition<State> p;
  p.predicate = pair_member(mask, n);
  for (State a = 0; a < n; ++a)
    for (State b = 0; b < n; ++b)
      if ((mask >> (a * n + b)) & 1u) p.instances.emplace_back(a, b);
  return p;
}

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

/// A pseudo-random relation on quadruples, related with probability 3/4.
k::PairFrame<State> hashed_pair_frame(std::uint64_t key) {
  std::ostringstream os;
  os << "H#" << std::hex << key;
  return {[key](const Pair& b, const Pair& a) {
            const std::uint64_t h = mix(key ^ (b.first << 24) ^ (b.second << 16) ^ (a.first << 8) ^ a.second);
            return (h & 3u) != 0;
          },
          os.str(), std::nullopt};
}

class Trial {
 public:
  Trial(const FinSys& g, std::mt19937_64& rng, SuiteReport& rep, const SuiteOptions& opt)
      : g_(g), n_(g.n_states()), sys_(as_oracle(g)), rng_(rng), rep_(rep), opt_(opt), desc_(to_string(g)) {}

  void run() {
    lemma1_and_cross();
    conj_state();
    comm_state();
    comp_state();
    conj_rule();
    commutativity();
    compositional();
    compositional_frame();
    conjunction2();
    thm1_thm2();
    thm3();
    thm4_hybrid();
    thm5();
    promote();
    unary_rules();
    seq_rule();
    branch_rule();
    loop_rule();
    relational_rules();
  }

 private:
  const FinSys& g_;
  std::size_t n_;
  k::SystemPtr<State> sys_;
  std::mt19937_64& rng_;
  SuiteReport& rep_;
  const SuiteOptions& opt_;
  std::string desc_;

  std::uint64_t bits() { return rng_(); }
  StateSet rand_set() { return bits() & g_.all(); }
  StateSet rand_nonempty() {
    StateSet s = rand_set();
    return s ? s : StateSet{1} << (rng_() % n_);
  }
  std::uint64_t pair_all() const { return n_ * n_ >= 64 ? ~0ULL : (1ULL << (n_ * n_)) - 1; }
  std::uint64_t rand_pairs() { return bits() & pair_all(); }
  /// Mostly-true relation (about 7/8 of the pairs).
  std::uint64_t dense_pairs() { return (bits() | bits() | bits()) & pair_all(); }
  k::Steps rand_steps(k::Steps max) { return rng_() % (max + 1); }
  State rand_state() { return rng_() % n_; }

  static std::uint64_t pbit(std::size_t n, State a, State b) { return 1ULL << (a * n + b); }

  StateSet reach_from(StateSet from, k::Steps steps) const {
    StateSet out = 0;
    for (State s = 0; s < n_; ++s)
      if (has(from, s)) out |= reach_exactly(g_, s, steps);
    return out;
  }

  /// Postcondition likely to hold: the states reached in `steps` from `pre`,
  /// sometimes perturbed.
  StateSet biased_post(StateSet pre, k::Steps steps) {
    StateSet q = reach_from(pre, steps);
    switch (rng_() % 4) {
      case 0: return q | rand_set();
      case 1: return q & ~(StateSet{1} << rand_state());
      case 2: return rand_set();
      default: return q;
    }
  }

  std::uint64_t biased_pair_post(const std::vector<Pair>& pre, k::Steps n0, k::Steps n1) {
    std::uint64_t q = 0;
    for (const auto& [a, b] : pre) {
      const StateSet ra = reach_exactly(g_, a, n0), rb = reach_exactly(g_, b, n1);
      for (State x = 0; x < n_; ++x)
        for (State y = 0; y < n_; ++y)
          if (has(ra, x) && has(rb, y)) q |= pbit(n_, x, y);
    }
    switch (rng_() % 4) {
      case 0: return q | rand_pairs();
      case 1: return q & ~pbit(n_, rand_state(), rand_state());
      case 2: return rand_pairs();
      default: return q;
    }
  }

  std::uint64_t small_pair_set() {
    std::uint64_t m = 0;
    const std::size_t count = 1 + rng_() % 4;
    for (std::size_t i = 0; i < count; ++i) m |= pbit(n_, rand_state(), rand_state());
    return m;
  }

  void held(const std::string& rule) { ++rep_.premises_held[rule]; }
  void violation(const std::string& rule, const std::string& inputs) {
    rep_.violations.push_back({rule, desc_, inputs});
  }

  /// Runs a derivation; a failed side condition or an unresolvable step
  /// function means the premises did not hold, anything else is a harness
  /// error.
  template <class F>
  void guarded(const std::string& rule, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::side_condition_failed:
        case ErrorCode::step_fn_unresolvable:
        case ErrorCode::not_deterministic:
          break;
        default: violation(rule, std::string("unexpected error: ") + e.what());
      }
    }
  }

  void audit(const std::string& rule, const k::Judgment<State>& j) {
    if (!k::replay(j)) violation(rule + "/AUDIT", "derived judgment does not replay");
  }

  bool recheck(const k::Judgment<State>& j) {
    switch (j.form) {
      case k::Form::ensures: {
        const auto& c = j.unary();
        return oracle_ensures(g_, c.pre.instances, c.post, c.frame);
      }
      case k::Form::ensures_n: {
        const auto& c = j.unary();
        return oracle_ensures_n(g_, c.pre.instances, c.steps, c.post, c.frame);
      }
      case k::Form::ensures2: {
        const auto& c = j.relational();
        return oracle_ensures2(g_, c.pre.instances, c.steps0, c.steps1, c.post, c.frame);
      }
      case k::Form::hybrid: {
        const auto& h = j.hybrid();
        return oracle_ensures2(g_, h.rel.pre.instances, h.rel.steps0, h.rel.steps1, h.rel.post, h.rel.frame);
      }
      case k::Form::eventually_n_at_pc: return true;
    }
    return false;
  }

  bool instances_sound(const k::Judgment<State>& j) {
    if (j.form == k::Form::ensures2) {
      const auto& c = j.relational();
      for (const auto& p : c.pre.instances)
        if (!c.pre.predicate(p)) return false;
      return true;
    }
    if (j.form == k::Form::ensures || j.form == k::Form::ensures_n) {
      const auto& c = j.unary();
      for (const auto& s : c.pre.instances)
        if (!c.pre.predicate(s)) return false;
    }
    return true;
  }

  void conclude(const std::string& rule, const k::JudgmentPtr<State>& j, const std::string& inputs) {
    held(rule);
    if (!instances_sound(*j) || !recheck(*j)) violation(rule, inputs);
    audit(rule, *j);
  }

  // ---- state level ----

  /// Every subset on systems of at most three states, one random subset otherwise.
  std::vector<StateSet> target_sets() {
    if (n_ > 3) return {rand_set()};
    std::vector<StateSet> all;
    for (StateSet q = 0; q <= g_.all(); ++q) all.push_back(q);
    return all;
  }

  void lemma1_and_cross() {
    for (StateSet q : target_sets()) lemma1_and_cross(q);
  }

  void lemma1_and_cross(StateSet q) {
    const StateSet ev = exact_eventually_set(g_, q);
    for (k::Steps n = 0; n <= 4; ++n) {
      const StateSet en = exact_eventually_n_set(g_, n, q);
      held("LEMMA1");
      if (en & ~ev) violation("LEMMA1", "q=" + std::to_string(q) + " n=" + std::to_string(n));
      for (State s = 0; s < n_; ++s) {
        held("CROSS_N");
        if (k::eventually_n_holds(*sys_, s, n, member(q)) != has(en, s))
          violation("CROSS_N", "s=" + std::to_string(s) + " n=" + std::to_string(n) + " q=" + std::to_string(q));
      }
    }
    for (State s = 0; s < n_; ++s) {
      const auto r = k::eventually_holds(*sys_, s, member(q), n_ + 1);
      held("CROSS_EV");
      if (r.outcome == k::Outcome::unknown || (r.outcome == k::Outcome::proven) != has(ev, s))
        violation("CROSS_EV", "s=" + std::to_string(s) + " q=" + std::to_string(q));
    }
  }

  void conj_state() {
    const auto qs = target_sets();
    if (qs.size() == 1) return conj_state(qs[0], rand_set());
    for (StateSet q1 : qs)
      for (StateSet q2 : qs) conj_state(q1, q2);
  }

  void conj_state(StateSet q1, StateSet q2) {
    for (k::Steps n = 0; n <= 4; ++n) {
      const StateSet both = exact_eventually_n_set(g_, n, q1) & exact_eventually_n_set(g_, n, q2);
      if (both) held("CONJ");
      if (both & ~exact_eventually_n_set(g_, n, q1 & q2))
        violation("CONJ", "q=" + std::to_string(q1) + "," + std::to_string(q2) + " n=" + std::to_string(n));
    }
  }

  /// The swapped form evaluated directly: s1 in E_{n1}({b | s0 in E_{n0}(col b)}).
  bool nested_swapped(State s0, State s1, k::Steps n0, k::Steps n1, std::uint64_t qx) const {
    StateSet m = 0;
    for (State b = 0; b < n_; ++b) {
      StateSet col = 0;
      for (State a = 0; a < n_; ++a)
        if ((qx >> (a * n_ + b)) & 1u) col |= StateSet{1} << a;
      if (has(exact_eventually_n_set(g_, n0, col), s0)) m |= StateSet{1} << b;
    }
    return has(exact_eventually_n_set(g_, n1, m), s1);
  }

  void comm_state() {
    const State s0 = rand_state(), s1 = rand_state();
    const k::Steps n0 = rand_steps(4), n1 = rand_steps(4);
    const std::uint64_t qx = rng_() % 2 ? biased_pair_post({{s0, s1}}, n0, n1) : rand_pairs();
    const bool lhs = nested(g_, s0, s1, n0, n1, qx);
    if (lhs) held("COMM");
    if (lhs != nested_swapped(s0, s1, n0, n1, qx))
      violation("COMM", "s=" + std::to_string(s0) + "," + std::to_string(s1) + " qx=" + std::to_string(qx));
  }

  void comp_state() {
    const State s0 = rand_state(), s1 = rand_state();
    const k::Steps n0 = rand_steps(2), n1 = rand_steps(2), m0 = rand_steps(2), m1 = rand_steps(2);
    const std::uint64_t qx = biased_pair_post({{s0, s1}}, n0, n1);
    std::vector<Pair> qpairs;
    for (State a = 0; a < n_; ++a)
      for (State b = 0; b < n_; ++b)
        if ((qx >> (a * n_ + b)) & 1u) qpairs.emplace_back(a, b);
    const std::uint64_t rx = biased_pair_post(qpairs, m0, m1);
    if (!nested(g_, s0, s1, n0, n1, qx)) return;
    for (const auto& [a, b] : qpairs)
      if (!nested(g_, a, b, m0, m1, rx)) return;
    held("COMP");
    const k::Steps extra = opt_.broken_comp ? 1 : 0;
    if (!nested(g_, s0, s1, n0 + m0 + extra, n1 + m1, rx))
      violation("COMP", "s=" + std::to_string(s0) + "," + std::to_string(s1) + " n=" + std::to_string(n0) + "," +
                            std::to_string(n1) + " m=" + std::to_string(m0) + "," + std::to_string(m1));
  }

  // ---- kernel rules, rechecked by the oracle ----

  void conj_rule() {
    guarded("RULE_CONJ", [&] {
      const StateSet p = rand_nonempty();
      const k::Steps n = rand_steps(4);
      const StateSet q1 = biased_post(p, n), q2 = biased_post(p, n);
      const auto f1 = frame_of(dense_pairs(), n_), f2 = frame_of(dense_pairs(), n_);
      auto a = k::check_ensures_n(sys_, pre_of(p, n_), k::StepFn<State>::constant(n), member(q1), f1);
      auto b = k::check_ensures_n(sys_, pre_of(p | rand_set(), n_), k::StepFn<State>::constant(n), member(q2), f2);
      if (!a.proven() || !b.proven()) return;
      conclude("RULE_CONJ", k::apply_rule<State>(k::Rule::conj, {a.judgment, b.judgment}), "n=" + std::to_string(n));
    });
  }

  void commutativity() {
    guarded("LEMMA_COMMUTATIVITY", [&] {
      auto pre = pair_pre_of(small_pair_set(), n_);
      const k::Steps n0 = rand_steps(3), n1 = rand_steps(3);
      const auto q = pair_member(biased_pair_post(pre.instances, n0, n1), n_);
      const auto f = rng_() % 2 ? hashed_pair_frame(rng_())
                                : k::product(frame_of(dense_pairs(), n_), frame_of(dense_pairs(), n_));
      const auto c0 = k::StepFn<State>::constant(n0), c1 = k::StepFn<State>::constant(n1);
      auto v = k::check_ensures2(sys_, pre, c0, c1, q, f);
      k::PairPrecondition<State> sw;
      for (const auto& [a, b] : pre.instances) sw.instances.emplace_back(b, a);
      sw.predicate = k::swapped(pre.predicate);
      auto w = k::check_ensures2(sys_, sw, c1, c0, k::swapped(q), k::swapped(f));
      held("LEMMA_COMMUTATIVITY");
      if (v.outcome != w.outcome) violation("LEMMA_COMMUTATIVITY", "verdicts differ after swapping");
      if (v.proven() != oracle_ensures2(g_, pre.instances, c0, c1, q, f))
        violation("CROSS_ENSURES2", "kernel and oracle disagree");
      if (v.proven()) conclude("RULE_COMM", k::apply_rule<State>(k::Rule::comm, {v.judgment}), "");
    });
  }

  void compositional() {
    guarded("LEMMA_COMPOSITIONAL", [&] {
      auto pre = pair_pre_of(small_pair_set(), n_);
      const k::Steps n0 = rand_steps(2), n1 = rand_steps(2), m0 = rand_steps(2), m1 = rand_steps(2);
      const std::uint64_t r = biased_pair_post(pre.instances, n0, n1);
      auto mid = pair_pre_of(r, n_);
      const auto q = pair_member(biased_pair_post(mid.instances, m0, m1), n_);
      const auto f0 = hashed_pair_frame(rng_()), f1 = hashed_pair_frame(rng_());
      auto a = k::check_ensures2(sys_, pre, k::StepFn<State>::constant(n0), k::StepFn<State>::constant(n1),
                                 pair_member(r, n_), f0);
      if (!a.proven()) return;
      auto b = k::check_ensures2(sys_, mid, k::StepFn<State>::constant(m0), k::StepFn<State>::constant(m1), q, f1);
      if (!b.proven()) return;
      conclude("LEMMA_COMPOSITIONAL", k::apply_rule<State>(k::Rule::comp, {a.judgment, b.judgment}), "");
    });
  }

  void compositional_frame() {
    guarded("LEMMA_COMPOSITIONAL_FRAME", [&] {
      const k::Steps s0 = rand_steps(2), s1 = rand_steps(2), s2 = rand_steps(2);
      const auto f0 = frame_of(dense_pairs(), n_), f1 = frame_of(dense_pairs(), n_), f2 = frame_of(dense_pairs(), n_);
      auto p = pair_pre_of(small_pair_set(), n_);
      // second triple starts where the first one's second program starts
      std::uint64_t pm = 0;
      for (const auto& [a, b] : p.instances) pm |= pbit(n_, b, rand_state());
      pm |= small_pair_set();
      auto p2 = pair_pre_of(pm, n_);
      auto a = k::check_ensures2(sys_, p, k::StepFn<State>::constant(s0), k::StepFn<State>::constant(s1),
                                 pair_member(biased_pair_post(p.instances, s0, s1), n_), k::product(f0, f1));
      if (!a.proven()) return;
      auto b = k::check_ensures2(sys_, p2, k::StepFn<State>::constant(s1), k::StepFn<State>::constant(s2),
                                 pair_member(biased_pair_post(p2.instances, s1, s2), n_), k::product(f1, f2));
      if (!b.proven()) return;
      conclude("LEMMA_COMPOSITIONAL_FRAME", k::apply_rule<State>(k::Rule::frame_comp, {a.judgment, b.judgment}), "");
    });
  }

  void conjunction2() {
    guarded("LEMMA_CONJUNCTION", [&] {
      const k::Steps n0 = rand_steps(3), n1 = rand_steps(3);
      const std::uint64_t shared = small_pair_set();
      auto p0 = pair_pre_of(shared | small_pair_set(), n_);
      auto p1 = pair_pre_of(shared | small_pair_set(), n_);
      const auto f = hashed_pair_frame(rng_());
      const auto c0 = k::StepFn<State>::constant(n0), c1 = k::StepFn<State>::constant(n1);
      auto a = k::check_ensures2(sys_, p0, c0, c1, pair_member(biased_pair_post(p0.instances, n0, n1), n_), f);
      auto b = k::check_ensures2(sys_, p1, c0, c1, pair_member(biased_pair_post(p1.instances, n0, n1), n_), f);
      if (!a.proven() || !b.proven()) return;
      conclude("LEMMA_CONJUNCTION", k::apply_rule<State>(k::Rule::conj2, {a.judgment, b.judgment}), "");
    });
  }

  void thm1_thm2() {
    guarded("THM1", [&] {
      const StateSet p = rand_nonempty();
      const k::Steps n = rand_steps(4);
      const auto q = member(biased_post(p, n));
      const auto f = frame_of(dense_pairs(), n_);
      auto v = k::check_ensures_n(sys_, pre_of(p, n_), k::StepFn<State>::constant(n), q, f);
      if (v.proven() != oracle_ensures_n(g_, states_of(p, n_), k::StepFn<State>::constant(n), q, f))
        violation("CROSS_ENSURES_N", "kernel and oracle disagree");
      if (v.proven()) conclude("THM1", k::convert<State>(k::Conversion::thm1, {v.judgment}), "n=" + std::to_string(n));
    });
    guarded("THM2", [&] {
      const StateSet p = rand_nonempty();
      const auto q = member(biased_post(p, rand_steps(4)));
      const auto f = frame_of(dense_pairs(), n_);
      auto v = k::check_ensures(sys_, pre_of(p, n_), q, f, n_ + 1);
      if (v.proven() != oracle_ensures(g_, states_of(p, n_), q, f))
        violation("CROSS_ENSURES", "kernel and oracle disagree");
      if (!v.proven()) return;
      conclude("THM2", k::convert<State>(k::Conversion::thm2, {v.judgment}), "");
    });
  }

  void thm3() {
    guarded("THM3", [&] {
      const StateSet p0 = rand_nonempty(), p1 = rand_nonempty();
      const k::Steps n0 = rand_steps(3), n1 = rand_steps(3);
      auto a = k::check_ensures_n(sys_, pre_of(p0, n_), k::StepFn<State>::constant(n0), member(biased_post(p0, n0)),
                                  frame_of(dense_pairs(), n_));
      auto b = k::check_ensures_n(sys_, pre_of(p1, n_), k::StepFn<State>::constant(n1), member(biased_post(p1, n1)),
                                  frame_of(dense_pairs(), n_));
      if (!a.proven() || !b.proven()) return;
      conclude("THM3", k::convert<State>(k::Conversion::thm3, {a.judgment, b.judgment}), "");
    });
  }

  void thm4_hybrid() {
    guarded("THM4", [&] {
      auto pre = pair_pre_of(small_pair_set(), n_);
      const k::Steps n0 = rand_steps(3), n1 = rand_steps(3);
      StateSet seconds = 0;
      for (const auto& [a, b] : pre.instances) seconds |= StateSet{1} << b;
      const StateSet uq = biased_post(seconds, n1);
      const auto fl = frame_of(dense_pairs(), n_), fr = frame_of(dense_pairs(), n_);
      std::uint64_t qx = biased_pair_post(pre.instances, n0, n1);
      if (rng_() % 2) {  // keep only pairs whose second component is in the unary post
        for (State a = 0; a < n_; ++a)
          for (State b = 0; b < n_; ++b)
            if (!has(uq, b)) qx &= ~pbit(n_, a, b);
      }
      const StateSet up = rng_() % 4 ? seconds : seconds | rand_set();
      k::UnaryComponents<State> unary{pre_of(up, n_), member(uq), fr, k::StepFn<State>::constant(0)};
      std::vector<State> domain = states_of(g_.all(), n_);
      auto v = k::check_hybrid(sys_, pre, k::StepFn<State>::constant(n0), k::StepFn<State>::constant(n1),
                               pair_member(qx, n_), k::product(fl, fr), unary, domain);
      if (!v.proven()) return;
      held("HYBRID");
      const auto& h = v.judgment->hybrid();
      bool ok = recheck(*v.judgment);
      for (State s1 : h.unary.pre.instances) {
        bool partner = false;
        for (const auto& p : h.rel.pre.instances) partner = partner || p.second == s1;
        ok = ok && partner;
      }
      for (State a = 0; a < n_; ++a)
        for (State b = 0; b < n_; ++b)
          if (h.rel.post(a, b) && !h.unary.post(b)) ok = false;
      if (!ok) violation("HYBRID", "checked hybrid fails its definition");
      conclude("THM4", k::convert<State>(k::Conversion::thm4, {v.judgment}), "");
    });
  }

  void thm5() {
    guarded("THM5", [&] {
      const k::Steps n0 = rand_steps(3), n1 = rand_steps(3);
      const StateSet p0 = rand_nonempty();
      const auto f0 = frame_of(dense_pairs(), n_);
      auto corr = k::check_ensures_n(sys_, pre_of(p0, n_), k::StepFn<State>::constant(n0),
                                     member(biased_post(p0, n0)), f0);
      if (!corr.proven()) return;
      std::uint64_t pm = 0;
      for (State a : states_of(p0, n_))
        if (rng_() % 2) pm |= pbit(n_, a, rand_state());
      pm |= small_pair_set();
      auto pre = pair_pre_of(pm, n_);
      const auto fa = frame_of(dense_pairs(), n_), fb = frame_of(dense_pairs(), n_);
      auto rel = k::check_ensures2(sys_, pre, k::StepFn<State>::constant(n0), k::StepFn<State>::constant(n1),
                                   pair_member(biased_pair_post(pre.instances, n0, n1), n_), k::product(fa, fb));
      if (!rel.proven()) return;
      StateSet p1 = 0;
      for (const auto& [a, b] : pre.instances)
        if (has(p0, a)) p1 |= StateSet{1} << b;
      k::RuleInputs<State> in;
      in.target = k::UnaryComponents<State>{pre_of(p1, n_), member(biased_post(p1, n1) | (rng_() % 2 ? g_.all() : 0)),
                                            rng_() % 3 ? fb : frame_of(dense_pairs(), n_),
                                            k::StepFn<State>::constant(0)};
      in.universe = states_of(g_.all(), n_);
      auto h = k::convert<State>(k::Conversion::thm5, {corr.judgment, rel.judgment}, in);
      conclude("THM5", h, "");
      conclude("THM5/THM4", k::convert<State>(k::Conversion::thm4, {h}), "");
    });
  }

  void promote() {
    guarded("PROMOTE", [&] {
      std::vector<std::uint64_t> label(n_);
      for (auto& l : label) l = rng_() % 3;
      const std::uint64_t x0 = rng_() % 3, xw = rng_() % 3;
      StateSet p = 0;
      for (State s = 0; s < n_; ++s)
        if (label[s] == x0 && rng_() % 4) p |= StateSet{1} << s;
      if (!p) return;
      auto pc_of = [label](const State& s) { return label[s]; };
      const k::Steps n = rand_steps(4);
      auto at = k::check_eventually_n_at_pc<State>(sys_, pre_of(p, n_), pc_of, x0, xw, n);
      if (!at.proven()) return;
      StateSet q = biased_post(p, n);
      for (State s = 0; s < n_; ++s)
        if (label[s] != xw && rng_() % 2) q &= ~(StateSet{1} << s);
      auto e = k::check_ensures(sys_, pre_of(p, n_), member(q), frame_of(dense_pairs(), n_), n_ + 1);
      if (!e.proven()) return;
      conclude("PROMOTE", k::convert<State>(k::Conversion::promote, {e.judgment, at.judgment}), "n=" + std::to_string(n));
    });
  }

  k::Verdict<State> random_ensures(StateSet p) {
    return k::check_ensures(sys_, pre_of(p, n_), member(biased_post(p, rand_steps(3))), frame_of(dense_pairs(), n_),
                            n_ + 1);
  }

  void unary_rules() {
    const StateSet p = rand_nonempty();
    auto v = random_ensures(p);
    if (!v.proven()) return;
    const auto& c = v.judgment->unary();
    guarded("A_PRE", [&] {
      k::RuleInputs<State> in;
      in.pre = pre_of(rng_() % 4 ? p & rand_set() : rand_set(), n_);
      conclude("A_PRE", k::apply_rule<State>(k::Rule::pre, {v.judgment}, in), "");
    });
    guarded("A_POST", [&] {
      k::RuleInputs<State> in;
      StateSet q = 0;
      for (State s = 0; s < n_; ++s)
        if (c.post(s)) q |= StateSet{1} << s;
      in.post = member(rng_() % 4 ? q | rand_set() : rand_set());
      conclude("A_POST", k::apply_rule<State>(k::Rule::post, {v.judgment}, in), "");
    });
    guarded("A_FRAME", [&] {
      k::RuleInputs<State> in;
      std::uint64_t m = 0;
      for (State a = 0; a < n_; ++a)
        for (State b = 0; b < n_; ++b)
          if (c.frame(a, b)) m |= pbit(n_, a, b);
      in.frame = frame_of(rng_() % 4 ? m | rand_pairs() : rand_pairs(), n_);
      conclude("A_FRAME", k::apply_rule<State>(k::Rule::frame, {v.judgment}, in), "");
    });
  }

  void seq_rule() {
    guarded("A_SEQ", [&] {
      const StateSet p = rand_nonempty();
      const StateSet r = biased_post(p, rand_steps(2));
      auto a = k::check_ensures(sys_, pre_of(p, n_), member(r), frame_of(dense_pairs(), n_), n_ + 1);
      if (!a.proven()) return;
      auto b = random_ensures(r);
      if (!b.proven()) return;
      conclude("A_SEQ", k::apply_rule<State>(k::Rule::seq, {a.judgment, b.judgment}), "");
    });
    guarded("A_SEQ_N", [&] {
      const StateSet p = rand_nonempty();
      const k::Steps n = rand_steps(2), m = rand_steps(2);
      const StateSet r = biased_post(p, n);
      auto a = k::check_ensures_n(sys_, pre_of(p, n_), k::StepFn<State>::constant(n), member(r),
                                  frame_of(dense_pairs(), n_));
      if (!a.proven()) return;
      auto b = k::check_ensures_n(sys_, pre_of(r, n_), k::StepFn<State>::constant(m), member(biased_post(r, m)),
                                  frame_of(dense_pairs(), n_));
      if (!b.proven()) return;
      conclude("A_SEQ_N", k::apply_rule<State>(k::Rule::seq, {a.judgment, b.judgment}), "");
    });
  }

  void branch_rule() {
    guarded("A_BRANCH", [&] {
      const StateSet p = rand_nonempty(), cond = rand_set();
      const StateSet q = biased_post(p, rand_steps(3));
      const auto f = frame_of(dense_pairs(), n_);
      auto a = k::check_ensures(sys_, pre_of(p & cond, n_), member(q), f, n_ + 1);
      auto b = k::check_ensures(sys_, pre_of(p & ~cond & g_.all(), n_), member(q), f, n_ + 1);
      if (!a.proven() || !b.proven()) return;
      k::RuleInputs<State> in;
      in.pre = pre_of(p, n_);
      in.condition = member(cond);
      conclude("A_BRANCH", k::apply_rule<State>(k::Rule::branch, {a.judgment, b.judgment}, in), "");
    });
  }

  void loop_rule() {
    guarded("A_LOOP", [&] {
      const std::size_t iters = 1 + rng_() % 2;
      const StateSet p = rand_nonempty();
      const auto f = frame_of(dense_pairs(), n_);
      std::vector<k::JudgmentPtr<State>> premises;
      std::vector<k::Property<State>> invariants;
      StateSet from = p;
      for (std::size_t i = 0; i <= iters; ++i) {
        const StateSet inv = biased_post(from, rand_steps(2));
        auto v = k::check_ensures(sys_, pre_of(from, n_), member(inv), f, n_ + 1);
        if (!v.proven()) return;
        premises.push_back(v.judgment);
        invariants.push_back(member(inv));
        from = inv;
      }
      auto last = k::check_ensures(sys_, pre_of(from, n_), member(biased_post(from, rand_steps(2))), f, n_ + 1);
      if (!last.proven()) return;
      premises.push_back(last.judgment);
      k::RuleInputs<State> in;
      in.invariants = invariants;
      conclude("A_LOOP", k::apply_rule<State>(k::Rule::loop, premises, in), "iterations=" + std::to_string(iters));
    });
  }

  void relational_rules() {
    auto pre = pair_pre_of(small_pair_set(), n_);
    const k::Steps n0 = rand_steps(3), n1 = rand_steps(3);
    const std::uint64_t qm = biased_pair_post(pre.instances, n0, n1);
    const std::uint64_t fl = dense_pairs(), fr = dense_pairs();
    auto v = k::check_ensures2(sys_, pre, k::StepFn<State>::constant(n0), k::StepFn<State>::constant(n1),
                               pair_member(qm, n_), k::product(frame_of(fl, n_), frame_of(fr, n_)));
    if (!v.proven()) return;
    guarded("C_PRE", [&] {
      k::RuleInputs<State> in;
      std::uint64_t pm = 0;
      for (const auto& [a, b] : pre.instances)
        if (rng_() % 2) pm |= pbit(n_, a, b);
      if (rng_() % 4 == 0) pm |= small_pair_set();
      in.pair_pre = pair_pre_of(pm, n_);
      conclude("C_PRE", k::apply_rule<State>(k::Rule::pre2, {v.judgment}, in), "");
    });
    guarded("C_POST", [&] {
      k::RuleInputs<State> in;
      in.pair_post = pair_member(rng_() % 4 ? qm | rand_pairs() : rand_pairs(), n_);
      conclude("C_POST", k::apply_rule<State>(k::Rule::post2, {v.judgment}, in), "");
    });
    guarded("C_FRAME", [&] {
      k::RuleInputs<State> in;
      in.pair_frame = rng_() % 2 ? k::product(frame_of(fl | rand_pairs(), n_), frame_of(fr | rand_pairs(), n_))
                                 : hashed_pair_frame(rng_());
      conclude("C_FRAME", k::apply_rule<State>(k::Rule::frame2, {v.judgment}, in), "");
    });
    guarded("C_RESTRICT", [&] {
      k::RuleInputs<State> in;
      in.restriction = pair_member(rng_() % 2 ? pair_all() & ~small_pair_set() : rand_pairs(), n_);
      conclude("C_RESTRICT", k::apply_rule<State>(k::Rule::restrict, {v.judgment}, in), "");
    });
  }
};

const std::vector<std::string> kRules = {
    "LEMMA1",      "CROSS_N",     "CROSS_EV",   "CONJ",       "COMM",      "COMP",
    "RULE_CONJ",   "LEMMA_COMMUTATIVITY",       "RULE_COMM",  "LEMMA_COMPOSITIONAL",
    "LEMMA_COMPOSITIONAL_FRAME",  "LEMMA_CONJUNCTION",         "THM1",      "THM2",
    "THM3",        "HYBRID",      "THM4",       "THM5",       "THM5/THM4", "PROMOTE",
    "A_PRE",       "A_POST",      "A_FRAME",    "A_SEQ",      "A_SEQ_N",   "A_BRANCH",
    "A_LOOP",      "C_PRE",       "C_POST",     "C_FRAME",    "C_RESTRICT"};

}  // namespace

SuiteReport run_soundness_suite(std::uint64_t seed, std::size_t trials, const SuiteOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport rep;
  rep.trials = trials;
  rep.rules_tested = kRules;
  for (const auto& r : kRules) rep.premises_held[r] = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(t)};
    std::mt19937_64 rng(seq);
    const std::size_t n = 1 + rng() % options.max_states;
    const FinSys g = random_system(rng(), n, options.max_out_degree);
    Trial(g, rng, rep, options).run();
  }
  rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::string to_string(const SuiteReport& r) {
  std::ostringstream os;
  os << "trials: " << r.trials << "\n";
  os << "elapsed: " << r.elapsed_seconds << " s\n";
  os << "rule                        premises held\n";
  for (const auto& name : r.rules_tested) {
    os << "  " << name;
    for (std::size_t i = name.size(); i < 28; ++i) os << ' ';
    auto it = r.premises_held.find(name);
    os << (it == r.premises_held.end() ? 0 : it->second) << "\n";
  }
  os << "violations: " << r.violations.size() << "\n";
  for (std::size_t i = 0; i < r.violations.size() && i < 20; ++i)
    os << "  " << r.violations[i].rule << " on " << r.violations[i].system << " " << r.violations[i].inputs << "\n";
  return os.str();
}

ExhaustiveReport exhaustive_lemma1(std::size_t n_states, k::Steps max_n) {
  const auto start = std::chrono::steady_clock::now();
  ExhaustiveReport rep;
  const std::size_t n_edges = n_states * n_states;
  for (std::uint64_t mask = 0; mask < (1ULL << n_edges); ++mask) {
    std::set<std::pair<State, State>> edges;
    for (std::size_t e = 0; e < n_edges; ++e)
      if ((mask >> e) & 1u) edges.emplace(e / n_states, e % n_states);
    const FinSys g(n_states, std::move(edges));
    for (StateSet q = 0; q <= g.all(); ++q) {
      const StateSet ev = exact_eventually_set(g, q);
      for (k::Steps n = 0; n <= max_n; ++n) {
        ++rep.cases;
        if (exact_eventually_n_set(g, n, q) & ~ev) ++rep.violations;
      }
    }
  }
  rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace relhoare::finsys
