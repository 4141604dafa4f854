#include "relhoare/masm.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>

#include "relhoare/error.hpp"

namespace relhoare::masm {

using machine::Format;
using machine::Instruction;
using machine::Op;

std::vector<std::uint32_t> Program::words() const {
  std::vector<std::uint32_t> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (unsigned k = 0; k < 4; ++k) out[i] |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
  return out;
}

Program from_words(const std::vector<std::uint32_t>& words) {
  Program p;
  for (auto w : words)
    for (unsigned k = 0; k < 4; ++k) p.bytes.push_back(static_cast<std::uint8_t>(w >> (8 * k)));
  return p;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_ident(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
}

struct Line {
  int number = 0;
  std::string mnemonic;
  std::vector<std::string> operands;
  std::uint64_t offset = 0;
};

[[noreturn]] void fail(ErrorCode code, int line, const std::string& msg) { throw Error(code, msg, line); }

/// Splits on commas outside brackets.
std::vector<std::string> split_operands(const std::string& s, int line) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (depth < 0) fail(ErrorCode::syntax_error, line, "unbalanced ']'");
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (depth != 0) fail(ErrorCode::syntax_error, line, "unbalanced '['");
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  for (const auto& o : out)
    if (o.empty()) fail(ErrorCode::syntax_error, line, "empty operand");
  return out;
}

unsigned parse_reg(const std::string& s, int line) {
  auto l = machine::parse_label(lower(s));
  if (!l || l->kind != machine::Label::Kind::reg) fail(ErrorCode::syntax_error, line, "expected a register, got '" + s + "'");
  return static_cast<unsigned>(l->index);
}

/// `#dec`, `#-dec`, `#0xhex`.
std::optional<std::int64_t> parse_number(const std::string& s) {
  if (s.size() < 2 || s[0] != '#') return std::nullopt;
  std::string body = s.substr(1);
  bool neg = false;
  if (body[0] == '-') {
    neg = true;
    body = body.substr(1);
  }
  if (body.empty()) return std::nullopt;
  int base = 10;
  if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
    base = 16;
    body = body.substr(2);
  }
  std::uint64_t v = 0;
  for (char c : body) {
    int d;
    if (c >= '0' && c <= '9')
      d = c - '0';
    else if (base == 16 && std::isxdigit(static_cast<unsigned char>(c)))
      d = std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
    else
      return std::nullopt;
    if (v > (std::uint64_t{1} << 40)) return std::nullopt;  // far beyond any field
    v = v * static_cast<unsigned>(base) + static_cast<unsigned>(d);
  }
  const auto sv = static_cast<std::int64_t>(v);
  return neg ? -sv : sv;
}

std::int64_t parse_imm(const std::string& s, std::int64_t max, int line,
                       ErrorCode range = ErrorCode::immediate_out_of_range) {
  auto v = parse_number(s);
  if (!v) fail(ErrorCode::syntax_error, line, "expected an immediate, got '" + s + "'");
  if (*v < 0 || *v > max)
    fail(range, line,
         "immediate " + std::to_string(*v) + " outside 0.." + std::to_string(max));
  return *v;
}

/// `[xN]` or `[xN, #imm]`.
void parse_mem(const std::string& s, Instruction& ins, int line) {
  if (s.size() < 3 || s.front() != '[' || s.back() != ']')
    fail(ErrorCode::syntax_error, line, "expected a memory operand, got '" + s + "'");
  const auto parts = split_operands(s.substr(1, s.size() - 2), line);
  if (parts.empty() || parts.size() > 2) fail(ErrorCode::syntax_error, line, "bad memory operand '" + s + "'");
  ins.rn = parse_reg(parts[0], line);
  ins.imm = parts.size() == 2 ? parse_imm(parts[1], 0xFFF, line, ErrorCode::offset_out_of_range) : 0;
}

std::int64_t branch_offset(const std::string& target, const Line& l, const std::map<std::string, std::uint64_t>& syms,
                           std::int64_t lo, std::int64_t hi) {
  std::int64_t off;
  if (target[0] == '#') {
    auto v = parse_number(target);
    if (!v) fail(ErrorCode::syntax_error, l.number, "bad branch offset '" + target + "'");
    off = *v;
  } else {
    auto it = syms.find(target);
    if (it == syms.end()) fail(ErrorCode::undefined_label, l.number, "undefined label '" + target + "'");
    off = (static_cast<std::int64_t>(it->second) - static_cast<std::int64_t>(l.offset) - 4) / 4;
  }
  if (off < lo || off > hi)
    fail(ErrorCode::offset_out_of_range, l.number, "branch offset " + std::to_string(off) + " does not fit");
  return off;
}

std::uint32_t encode_line(const Line& l, const std::map<std::string, std::uint64_t>& syms,
                          std::vector<std::string>& warnings) {
  const auto& ops = l.operands;
  auto arity = [&](std::size_t n) {
    if (ops.size() != n)
      fail(ErrorCode::syntax_error, l.number,
           l.mnemonic + " takes " + std::to_string(n) + " operands, got " + std::to_string(ops.size()));
  };
  if (l.mnemonic == "halt") {
    arity(0);
    return 0;
  }
  if (l.mnemonic == ".word") {
    arity(1);
    auto v = parse_number("#" + ops[0]);
    if (!v || *v < 0 || *v > 0xFFFFFFFFLL) fail(ErrorCode::immediate_out_of_range, l.number, "bad .word value");
    const auto w = static_cast<std::uint32_t>(*v);
    if (w != 0 && machine::decode_word(w).op != Op::undecodable)
      warnings.push_back("line " + std::to_string(l.number) + ": .word encodes '" +
                         machine::to_string(machine::decode_word(w)) + "'");
    return w;
  }
  auto op = machine::op_from_mnemonic(l.mnemonic);
  if (!op) fail(ErrorCode::unknown_mnemonic, l.number, "unknown mnemonic '" + l.mnemonic + "'");
  Instruction ins;
  ins.op = *op;
  switch (machine::format_of(*op)) {
    case Format::none: break;
    case Format::rd_imm16:
      arity(2);
      ins.rd = parse_reg(ops[0], l.number);
      ins.imm = parse_imm(ops[1], 0xFFFF, l.number);
      break;
    case Format::rd_rn:
      arity(2);
      ins.rd = parse_reg(ops[0], l.number);
      ins.rn = parse_reg(ops[1], l.number);
      break;
    case Format::rd_rn_rm:
      arity(3);
      ins.rd = parse_reg(ops[0], l.number);
      ins.rn = parse_reg(ops[1], l.number);
      ins.rm = parse_reg(ops[2], l.number);
      break;
    case Format::rd_rn_imm:
      if (*op == Op::addi || *op == Op::subi) {
        arity(3);
        ins.rd = parse_reg(ops[0], l.number);
        ins.rn = parse_reg(ops[1], l.number);
        ins.imm = parse_imm(ops[2], 0xFFF, l.number);
      } else {
        arity(2);
        ins.rd = parse_reg(ops[0], l.number);
        parse_mem(ops[1], ins, l.number);
      }
      break;
    case Format::rn_rm:
      arity(2);
      ins.rn = parse_reg(ops[0], l.number);
      ins.rm = parse_reg(ops[1], l.number);
      break;
    case Format::rn_imm:
      arity(2);
      ins.rn = parse_reg(ops[0], l.number);
      ins.imm = parse_imm(ops[1], 0xFFF, l.number);
      break;
    case Format::rd:
      arity(1);
      ins.rd = parse_reg(ops[0], l.number);
      break;
    case Format::off20:
      arity(1);
      ins.imm = branch_offset(ops[0], l, syms, -(1 << 19), (1 << 19) - 1);
      break;
    case Format::rd_off16:
      arity(2);
      ins.rd = parse_reg(ops[0], l.number);
      ins.imm = branch_offset(ops[1], l, syms, -(1 << 15), (1 << 15) - 1);
      break;
    case Format::rn:
      arity(1);
      ins.rn = parse_reg(ops[0], l.number);
      break;
  }
  return machine::encode(ins);
}

}  // namespace

Program assemble(const std::string& text) {
  Program p;
  std::vector<Line> lines;
  std::vector<std::pair<std::string, int>> defined;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  std::uint64_t offset = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string s = raw.substr(0, raw.find(';'));
    s = trim(s);
    // leading `name:` definitions, possibly several
    for (;;) {
      const auto colon = s.find(':');
      if (colon == std::string::npos) break;
      const std::string name = trim(s.substr(0, colon));
      if (!is_ident(name)) fail(ErrorCode::syntax_error, number, "bad label '" + name + "'");
      if (p.symbols.count(name)) fail(ErrorCode::syntax_error, number, "label '" + name + "' defined twice");
      p.symbols[name] = offset;
      defined.emplace_back(name, number);
      s = trim(s.substr(colon + 1));
    }
    if (s.empty()) continue;
    Line l;
    l.number = number;
    l.offset = offset;
    const auto sp = s.find_first_of(" \t");
    l.mnemonic = lower(s.substr(0, sp));
    if (sp != std::string::npos) l.operands = split_operands(trim(s.substr(sp)), number);
    lines.push_back(std::move(l));
    offset += 4;
  }
  for (const auto& [name, line] : defined)
    if (p.symbols[name] >= offset)
      fail(ErrorCode::syntax_error, line, "label '" + name + "' does not precede an instruction");
  std::vector<std::uint32_t> words;
  for (const auto& l : lines) words.push_back(encode_line(l, p.symbols, p.warnings));
  auto warnings = std::move(p.warnings);
  auto symbols = std::move(p.symbols);
  p = from_words(words);
  p.symbols = std::move(symbols);
  p.warnings = std::move(warnings);
  return p;
}

std::string disassemble(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0)
    throw Error(ErrorCode::length_not_aligned, std::to_string(bytes.size()) + " bytes is not a whole number of words");
  Program p;
  p.bytes = bytes;
  const auto words = p.words();
  const auto count = static_cast<std::int64_t>(words.size());
  std::vector<Instruction> decoded;
  std::set<std::int64_t> targets;
  for (std::int64_t i = 0; i < count; ++i) {
    decoded.push_back(machine::decode_word(words[i]));
    const Format f = machine::format_of(decoded.back().op);
    if (f == Format::off20 || f == Format::rd_off16) {
      const std::int64_t t = i + 1 + decoded.back().imm;
      if (t >= 0 && t < count) targets.insert(t);
    }
  }
  auto label = [](std::int64_t i) { return "L" + std::to_string(i); };
  std::ostringstream os;
  for (std::int64_t i = 0; i < count; ++i) {
    if (targets.count(i)) os << label(i) << ": ";
    const auto& ins = decoded[i];
    const Format f = machine::format_of(ins.op);
    if (ins.op == Op::undecodable) {
      char buf[24];
      std::snprintf(buf, sizeof buf, ".word 0x%08x", words[i]);
      os << buf;
    } else if (f == Format::off20 || f == Format::rd_off16) {
      const std::int64_t t = i + 1 + ins.imm;
      const std::string target = targets.count(t) ? label(t) : "#" + std::to_string(ins.imm);
      os << machine::mnemonic(ins.op) << " ";
      if (f == Format::rd_off16) os << "x" << ins.rd << ", ";
      os << target;
    } else {
      os << machine::to_string(ins);
    }
    os << "\n";
  }
  return os.str();
}

machine::MachineState load_program(machine::MachineState s, const Program& p, std::uint64_t base) {
  if (base % 4 != 0) throw Error(ErrorCode::misaligned_base, "base address is not word aligned");
  for (std::size_t i = 0; i < p.bytes.size(); ++i) s.write8(base + i, p.bytes[i]);
  s.pc = base;
  return s;
}

bool is_aligned_at(const machine::MachineState& s, std::uint64_t base, const Program& p) {
  return machine::is_aligned_at(s, base, p.bytes);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, "cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> read_binary(const std::string& path) {
  const auto t = read_text(path);
  return {t.begin(), t.end()};
}

Program assemble_file(const std::string& path) { return assemble(read_text(path)); }

}  // namespace relhoare::masm
