#include "relhoare/ct.hpp"

#include <cctype>
#include <sstream>

namespace relhoare::ct {

namespace k = relhoare::kernel;
using machine::Label;
using machine::u64;

std::vector<SimpleEvent> project_trace(const std::vector<Event>& t) {
  std::vector<SimpleEvent> out;
  for (const auto& e : t) {
    if (e.kind == Event::Kind::branch)
      out.push_back({e.kind, 0, 0, e.b != e.a + 4});
    else
      out.push_back({e.kind, e.a, e.b, false});
  }
  return out;
}

std::string to_string(const SimpleEvent& e) {
  switch (e.kind) {
    case Event::Kind::branch: return std::string("branch ") + (e.taken ? "true" : "false");
    case Event::Kind::load: return "load " + std::to_string(e.addr) + "," + std::to_string(e.size);
    case Event::Kind::store: return "store " + std::to_string(e.addr) + "," + std::to_string(e.size);
  }
  return "?";
}

std::string to_string(const std::vector<SimpleEvent>& t) {
  std::string out = "[";
  for (std::size_t i = 0; i < t.size(); ++i) out += (i ? ", " : "") + to_string(t[i]);
  return out + "]";
}

std::string to_string(const std::vector<Event>& t) {
  std::string out = "[";
  for (std::size_t i = 0; i < t.size(); ++i) out += (i ? ", " : "") + machine::to_string(t[i]);
  return out + "]";
}

namespace {

[[noreturn]] void bad_template(int line, const std::string& msg) {
  throw Error(ErrorCode::template_expansion_failure, msg, line);
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool starts_word(const std::string& s, const std::string& w) {
  return s.compare(0, w.size(), w) == 0 && (s.size() == w.size() || std::isspace(static_cast<unsigned char>(s[w.size()])));
}

/// Splits "a, b" at the top-level comma.
std::pair<std::string, std::string> split_comma(const std::string& s, int line) {
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(' || s[i] == '[') ++depth;
    if (s[i] == ')' || s[i] == ']') --depth;
    if (s[i] == ',' && depth == 0) return {trim(s.substr(0, i)), trim(s.substr(i + 1))};
  }
  throw Error(ErrorCode::syntax_error, "expected 'address, size' in '" + s + "'", line);
}

TraceTemplate parse_block(const std::vector<std::pair<int, std::string>>& lines, std::size_t& i, bool nested) {
  TraceTemplate out;
  while (i < lines.size()) {
    const auto [line, raw] = lines[i];
    const auto text = trim(raw);
    ++i;
    if (text.empty()) continue;
    if (text == "end") {
      if (!nested) throw Error(ErrorCode::syntax_error, "'end' without 'repeat'", line);
      return out;
    }
    if (starts_word(text, "let")) {
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::syntax_error, "expected 'let NAME = EXPR'", line);
      out.items.push_back({LetItem{trim(text.substr(3, eq - 3)), expr::parse(trim(text.substr(eq + 1)), line), line}});
    } else if (starts_word(text, "load") || starts_word(text, "store")) {
      const bool load = text[0] == 'l';
      const auto [a, b] = split_comma(text.substr(load ? 4 : 5), line);
      out.items.push_back(
          {EventItem{load ? Event::Kind::load : Event::Kind::store, expr::parse(a, line), expr::parse(b, line), {}, line}});
    } else if (starts_word(text, "branch")) {
      auto rest = text.substr(6);
      const auto arrow = rest.find("->");
      if (arrow == std::string::npos) throw Error(ErrorCode::syntax_error, "expected 'branch FROM -> TO'", line);
      auto from = trim(rest.substr(0, arrow));
      auto to = trim(rest.substr(arrow + 2));
      expr::ExprPtr cond;
      const auto at = to.find(" if ");
      if (at != std::string::npos) {
        cond = expr::parse(trim(to.substr(at + 4)), line);
        to = trim(to.substr(0, at));
      }
      out.items.push_back({EventItem{Event::Kind::branch, expr::parse(from, line), expr::parse(to, line), cond, line}});
    } else if (starts_word(text, "repeat")) {
      if (text.back() != ':') throw Error(ErrorCode::syntax_error, "repeat header must end with ':'", line);
      const auto body = text.substr(6, text.size() - 7);
      const auto lt = body.find('<');
      if (lt == std::string::npos) throw Error(ErrorCode::syntax_error, "expected 'repeat NAME < EXPR:'", line);
      RepeatItem r{trim(body.substr(0, lt)), expr::parse(trim(body.substr(lt + 1)), line), {}, line};
      r.body = parse_block(lines, i, true);
      out.items.push_back({std::move(r)});
    } else {
      throw Error(ErrorCode::syntax_error, "unknown witness item '" + text + "'", line);
    }
  }
  if (nested) throw Error(ErrorCode::syntax_error, "'repeat' without 'end'", lines.empty() ? 0 : lines.back().first);
  return out;
}

struct Expander {
  const MachineState& init;
  const machine::Partition& part;
  const std::function<std::optional<u64>(const std::string&)>& symbols;
  std::vector<std::pair<std::string, u64>> scope;
  std::vector<Event> out;

  u64 value(const expr::ExprPtr& e, int line) {
    const auto r = expr::reads(*e);
    if (r.memory) bad_template(line, "witness reads memory in " + expr::to_string(*e));
    for (const auto& l : r.labels)
      if (!part.pub.count(l)) bad_template(line, "witness reads non-public " + machine::to_string(l));
    expr::Env env;
    env.state = &init;
    env.symbol = symbols;
    env.lookup = [this](const std::string& n) -> std::optional<u64> {
      for (auto it = scope.rbegin(); it != scope.rend(); ++it)
        if (it->first == n) return it->second;
      return std::nullopt;
    };
    try {
      return expr::eval(*e, env);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::undeclared_param)
        bad_template(line, std::string("unbound public parameter: ") + err.what());
      throw;
    }
  }

  void run(const TraceTemplate& t) {
    const auto depth = scope.size();
    for (const auto& item : t.items) {
      if (const auto* ev = std::get_if<EventItem>(&item.v)) {
        const auto a = value(ev->a, ev->line);
        const auto b = value(ev->b, ev->line);
        if (ev->kind != Event::Kind::branch) {
          out.push_back({ev->kind, a, b});
        } else {
          const bool taken = !ev->condition || value(ev->condition, ev->line);
          out.push_back(Event::branch(a, taken ? b : a + 4));
        }
      } else if (const auto* let = std::get_if<LetItem>(&item.v)) {
        scope.emplace_back(let->name, value(let->value, let->line));
      } else {
        const auto& r = std::get<RepeatItem>(item.v);
        const auto bound = value(r.bound, r.line);
        constexpr u64 max_iterations = 1u << 20;
        if (bound > max_iterations) bad_template(r.line, "repeat bound " + std::to_string(bound) + " is implausibly large");
        for (u64 i = 0; i < bound; ++i) {
          scope.emplace_back(r.index, i);
          run(r.body);
          scope.pop_back();
        }
      }
    }
    scope.resize(depth);
  }
};

kernel::PairProperty<St> same_public(const machine::Partition& part) {
  return {[part](const St& a, const St& b) { return machine::project_public(a, part) == machine::project_public(b, part); },
          "public parts equal", std::nullopt};
}

kernel::PairProperty<St> same_events() {
  return {[](const St& a, const St& b) { return a.events == b.events; }, "events equal", std::nullopt};
}

}  // namespace

TraceTemplate parse_template(const std::vector<std::pair<int, std::string>>& lines) {
  std::size_t i = 0;
  return parse_block(lines, i, false);
}

std::vector<Event> expand(const TraceTemplate& t, const MachineState& init, const machine::Partition& part,
                          const std::function<std::optional<u64>(const std::string&)>& symbols) {
  Expander x{init, part, symbols, {}, {}};
  x.run(t);
  return x.out;
}

std::vector<k::StatePair<St>> public_pairs(const std::vector<St>& instances, const machine::Partition& part) {
  machine::validate(part);
  std::vector<machine::Snapshot> snaps;
  snaps.reserve(instances.size());
  for (const auto& s : instances) snaps.push_back(machine::project_public(s, part));
  std::vector<k::StatePair<St>> out;
  for (std::size_t i = 0; i < instances.size(); ++i)
    for (std::size_t j = 0; j < instances.size(); ++j)
      if (snaps[i] == snaps[j]) out.emplace_back(instances[i], instances[j]);
  return out;
}

k::Verdict<St> check_ct_relational(const CtProblem& p) {
  k::PairPrecondition<St> pre;
  pre.instances = public_pairs(p.pre.instances, p.partition);
  pre.predicate = conjoin(product(p.pre.predicate, p.pre.predicate), same_public(p.partition));
  pre.domains = std::make_pair(p.pre.instances, p.pre.instances);
  const auto post = conjoin(product(p.post, p.post), same_events());
  return k::check_ensures2(machine::system(), pre, p.steps, p.steps, post, product(p.frame, p.frame), p.budget);
}

k::Verdict<St> check_ct_unary(const CtProblem& p, const TraceTemplate& witness,
                              const std::function<std::optional<u64>(const std::string&)>& symbols) {
  machine::validate(p.partition);
  // expansion failures surface before any simulation
  for (const auto& s : p.pre.instances) expand(witness, s, p.partition, symbols);
  const auto part = p.partition;
  const k::Frame<St> traced{[witness, part, symbols](const St& before, const St& after) {
                              auto expect = before.events;
                              const auto w = expand(witness, before, part, symbols);
                              expect.insert(expect.end(), w.begin(), w.end());
                              return after.events == expect;
                            },
                            "events = initial events ++ witness", std::nullopt};
  // resolved like the relational form: a mismatching trace must refute, not
  // leave the step count unresolvable
  const auto sys = machine::system();
  const auto steps = p.steps.is_auto() && !p.steps.auto_target() ? k::StepFn<St>::automatic(k::stuck_target(sys)) : p.steps;
  return k::check_ensures_n(sys, p.pre, steps, p.post, conjoin(p.frame, traced), p.budget);
}

Bridge bridge(const k::JudgmentPtr<St>& unary_ct, const machine::Partition& part) {
  auto derived = k::convert<St>(k::Conversion::thm3, {unary_ct, unary_ct});
  const auto& rel = derived->relational();
  k::PairPrecondition<St> pre;
  pre.instances = public_pairs(rel.pre.domains->first, part);
  pre.predicate = conjoin(rel.pre.predicate, same_public(part));
  pre.domains = rel.pre.domains;
  auto recheck = k::check_ensures2(derived->system, pre, rel.steps0, rel.steps1, conjoin(rel.post, same_events()),
                                   rel.frame);
  return {derived, recheck};
}

}  // namespace relhoare::ct
