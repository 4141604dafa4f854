#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "relhoare/kernel.hpp"

namespace relhoare::finsys {

using State = std::size_t;
/// Bit i set iff state i is in the set (systems are small).
using StateSet = std::uint64_t;

class FinSys {
 public:
  FinSys(std::size_t n_states, std::set<std::pair<State, State>> edges);

  std::size_t n_states() const { return n_; }
  const std::set<std::pair<State, State>>& edges() const { return edges_; }
  /// Ascending.
  const std::vector<State>& successors(State s) const { return succ_[s]; }
  StateSet successor_set(State s) const { return succ_mask_[s]; }
  StateSet all() const { return n_ >= 64 ? ~StateSet{0} : (StateSet{1} << n_) - 1; }
  bool deterministic() const;

 private:
  std::size_t n_;
  std::set<std::pair<State, State>> edges_;
  std::vector<std::vector<State>> succ_;
  std::vector<StateSet> succ_mask_;
};

std::string to_string(const FinSys& g);

inline bool has(StateSet q, State s) { return (q >> s) & 1u; }

/// Least fixed point of Eventually.
StateSet exact_eventually_set(const FinSys& g, StateSet q);
/// Backward iteration E_0 = q, E_{k+1} = {s | succ(s) nonempty, succ(s) within E_k}.
StateSet exact_eventually_n_set(const FinSys& g, kernel::Steps n, StateSet q);
/// States reachable in exactly n steps.
StateSet reach_exactly(const FinSys& g, State s, kernel::Steps n);

/// Deterministic in the seed. Each state gets a uniformly chosen out-degree
/// in [0, max_out_degree] and distinct uniformly chosen targets.
FinSys random_system(std::uint64_t seed, std::size_t n_states, std::size_t max_out_degree);

/// The interleaving product (a,b) -> (a',b) | (a,b'), state index a*n+b.
FinSys product_graph(const FinSys& g);

kernel::SystemPtr<State> as_oracle(const FinSys& g);
kernel::Property<State> member(StateSet q, std::string description = {});

/// Direct evaluation of the triple definitions over explicit state sets,
/// independent of the kernel checkers.
bool oracle_ensures(const FinSys& g, const std::vector<State>& pre, const kernel::Property<State>& q,
                    const kernel::Frame<State>& f);
bool oracle_ensures_n(const FinSys& g, const std::vector<State>& pre, const kernel::StepFn<State>& steps,
                      const kernel::Property<State>& q, const kernel::Frame<State>& f);
bool oracle_ensures2(const FinSys& g, const std::vector<kernel::StatePair<State>>& pre,
                     const kernel::StepFn<State>& f0, const kernel::StepFn<State>& f1,
                     const kernel::PairProperty<State>& q, const kernel::PairFrame<State>& f);
/// s0 in E_{n0}({a | s1 in E_{n1}({b | (a,b) in qx})}); qx bit a*n+b.
bool nested(const FinSys& g, State s0, State s1, kernel::Steps n0, kernel::Steps n1, std::uint64_t qx);

struct Violation {
  std::string rule;
  std::string system;
  std::string inputs;
};

struct SuiteOptions {
  /// Mutation of the harness: conclude COMP one step late.
  bool broken_comp = false;
  std::size_t max_states = 6;
  std::size_t max_out_degree = 3;
};

struct SuiteReport {
  std::size_t trials = 0;
  std::vector<std::string> rules_tested;
  std::vector<Violation> violations;
  /// Per rule: how often its premises held, i.e. how often the conclusion was
  /// actually put to the test.
  std::map<std::string, std::size_t> premises_held;
  double elapsed_seconds = 0;

  bool passed() const { return violations.empty(); }
};

SuiteReport run_soundness_suite(std::uint64_t seed, std::size_t trials, const SuiteOptions& options = {});
std::string to_string(const SuiteReport& r);

struct ExhaustiveReport {
  std::size_t cases = 0;
  std::size_t violations = 0;
  double elapsed_seconds = 0;
};

/// eventually_n within eventually, over every edge set on `n_states` states,
/// every target set and every n <= max_n.
ExhaustiveReport exhaustive_lemma1(std::size_t n_states = 3, kernel::Steps max_n = 3);

}  // namespace relhoare::finsys
