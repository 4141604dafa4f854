#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "relhoare/ct.hpp"
#include "relhoare/finsys.hpp"
#include "relhoare/masm.hpp"
#include "relhoare/spec.hpp"

using namespace relhoare;

namespace {

constexpr int usage_exit = 64;
constexpr int error_exit = 3;

int cmd_assemble(const std::string& in, const std::string& out) {
  const auto p = masm::assemble_file(in);
  for (const auto& w : p.warnings) std::cerr << in << ": warning: " << w << "\n";
  if (out.empty()) {
    for (auto w : p.words()) std::cout << std::hex << std::setw(8) << std::setfill('0') << w << "\n";
    return 0;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, "cannot write " + out);
  f.write(reinterpret_cast<const char*>(p.bytes.data()), static_cast<std::streamsize>(p.bytes.size()));
  return 0;
}

int cmd_disasm(const std::string& in) {
  std::cout << masm::disassemble(masm::read_binary(in));
  return 0;
}

int cmd_run(const std::string& in, std::uint64_t base, std::uint64_t steps, bool trace, const std::string& state,
            const std::string& choices) {
  const auto p = masm::assemble_file(in);
  auto s = state.empty() ? masm::load_program(machine::MachineState{}, p, base) : spec::parse_state_script(state, p, base);
  std::vector<std::size_t> pick;
  if (!choices.empty() && choices != "-") {
    std::stringstream ss(choices);
    std::string item;
    while (std::getline(ss, item, ',')) pick.push_back(std::stoul(item));
  }
  std::uint64_t taken = 0;
  for (; taken < steps; ++taken) {
    auto next = machine::successors(s);
    if (next.empty()) break;
    const auto c = taken < pick.size() ? pick[taken] : 0;
    if (c >= next.size()) throw Error(ErrorCode::syntax_error, "choice " + std::to_string(c) + " out of range");
    s = next[c];
  }
  std::cout << "steps: " << taken << (machine::successors(s).empty() ? " (stuck)" : "") << "\n";
  std::cout << "state: " << machine::to_string(s) << "\n";
  if (trace) {
    std::cout << "trace: " << ct::to_string(ct::project_trace(s.events)) << "\n";
    std::cout << "raw trace: " << ct::to_string(s.events) << "\n";
  }
  return 0;
}

int cmd_check(const std::string& path, std::size_t cap, kernel::Steps budget) {
  const auto s = spec::load_spec(path);
  const auto r = spec::run(s, {cap, budget});
  std::cout << r.report;
  return spec::exit_code(r.outcome);
}

int cmd_selftest(std::uint64_t seed, std::size_t trials, bool exhaustive) {
  const auto r = finsys::run_soundness_suite(seed, trials);
  std::cout << finsys::to_string(r);
  bool ok = r.passed();
  if (exhaustive) {
    const auto e = finsys::exhaustive_lemma1();
    std::cout << "exhaustive eventually_n within eventually: " << e.cases << " cases, " << e.violations << " violations, " << e.elapsed_seconds
              << " s\n";
    ok = ok && e.violations == 0;
  }
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relational Hoare logic checks for MiniARM machine code"};
  app.require_subcommand(1);

  std::string in, out, state, choices;
  std::uint64_t base = 0x1000, steps = 1000, seed = 42;
  std::size_t trials = 1000, cap = 0;
  kernel::Steps budget = kernel::default_budget;
  bool trace = false, exhaustive = false;

  auto* assemble = app.add_subcommand("assemble", "Assemble a .masm file to raw words");
  assemble->add_option("input", in, "source file")->required();
  assemble->add_option("-o,--output", out, "binary output (default: hex words on stdout)");

  auto* disasm = app.add_subcommand("disasm", "Disassemble a raw word image");
  disasm->add_option("input", in, "binary file")->required();

  auto* run = app.add_subcommand("run", "Execute a program and print the final state");
  run->add_option("input", in, "source file")->required();
  run->add_option("--base", base, "load address")->capture_default_str();
  run->add_option("--steps", steps, "maximum steps")->capture_default_str();
  run->add_flag("--trace", trace, "print the event trace");
  run->add_option("--state", state, "initial state assignments, as printed in counterexamples");
  run->add_option("--choices", choices, "successor index per step, comma separated");

  auto* check = app.add_subcommand("check", "Check a .spec file");
  check->add_option("spec", in, "spec file")->required();
  check->add_option("--cap", cap, "enumeration cap (default 65536 or RELHOARE_ENUM_CAP)");
  check->add_option("--budget", budget, "step budget for unbounded searches")->capture_default_str();

  auto* selftest = app.add_subcommand("selftest", "Run the finite-system soundness suite");
  selftest->add_option("--seed", seed, "random seed")->capture_default_str();
  selftest->add_option("--trials", trials, "number of random systems")->capture_default_str();
  selftest->add_flag("--exhaustive", exhaustive, "also run the exhaustive 3-state check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return usage_exit;
  }

  try {
    if (*assemble) return cmd_assemble(in, out);
    if (*disasm) return cmd_disasm(in);
    if (*run) return cmd_run(in, base, steps, trace, state, choices);
    if (*check) return cmd_check(in, cap ? cap : spec::default_cap(), budget);
    if (*selftest) return cmd_selftest(seed, trials, exhaustive);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return error_exit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return error_exit;
  }
  return usage_exit;
}
