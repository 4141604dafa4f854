#include "relhoare/machine.hpp"

#include <cstdio>
#include <sstream>

#include "relhoare/error.hpp"

namespace relhoare::machine {

namespace {

std::string hex(u64 v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string to_string(const Label& l) {
  switch (l.kind) {
    case Label::Kind::reg: return "x" + std::to_string(l.index);
    case Label::Kind::pc: return "pc";
    case Label::Kind::flag_n: return "n";
    case Label::Kind::flag_z: return "z";
    case Label::Kind::mem: return "mem[" + hex(l.index) + "]";
    case Label::Kind::events: return "events";
  }
  return "?";
}

std::optional<Label> parse_label(const std::string& t) {
  if (t == "pc") return Label::pc();
  if (t == "n") return Label::flag_n();
  if (t == "z") return Label::flag_z();
  if (t == "events") return Label::events();
  if (t.size() >= 2 && t.size() <= 3 && t[0] == 'x') {
    unsigned v = 0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (t[i] < '0' || t[i] > '9') return std::nullopt;
      v = v * 10 + static_cast<unsigned>(t[i] - '0');
    }
    if (t.size() == 3 && t[1] == '0') return std::nullopt;
    if (v < 16) return Label::reg(v);
    return std::nullopt;
  }
  if (t.size() > 5 && t.compare(0, 4, "mem[") == 0 && t.back() == ']') {
    const std::string body = t.substr(4, t.size() - 5);
    try {
      std::size_t used = 0;
      const u64 a = std::stoull(body, &used, 0);
      if (used == body.size()) return Label::mem(a);
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

std::string to_string(const Event& e) {
  switch (e.kind) {
    case Event::Kind::load: return "load " + std::to_string(e.a) + "," + std::to_string(e.b);
    case Event::Kind::store: return "store " + std::to_string(e.a) + "," + std::to_string(e.b);
    case Event::Kind::branch: return "branch " + hex(e.a) + "," + hex(e.b);
  }
  return "?";
}

std::uint8_t MachineState::read8(u64 addr) const {
  auto it = mem.find(addr);
  return it == mem.end() ? 0 : it->second;
}

void MachineState::write8(u64 addr, std::uint8_t v) {
  if (v == 0)
    mem.erase(addr);
  else
    mem[addr] = v;
}

u64 MachineState::read(u64 addr, unsigned size) const {
  u64 v = 0;
  for (unsigned i = 0; i < size; ++i) v |= static_cast<u64>(read8(addr + i)) << (8 * i);
  return v;
}

void MachineState::write(u64 addr, unsigned size, u64 v) {
  for (unsigned i = 0; i < size; ++i) write8(addr + i, static_cast<std::uint8_t>(v >> (8 * i)));
}

u64 MachineState::get(const Label& l) const {
  switch (l.kind) {
    case Label::Kind::reg: return regs.at(l.index);
    case Label::Kind::pc: return pc;
    case Label::Kind::flag_n: return n;
    case Label::Kind::flag_z: return z;
    case Label::Kind::mem: return read8(l.index);
    case Label::Kind::events: break;
  }
  throw Error(ErrorCode::precondition_violated, "events has no scalar value");
}

void MachineState::set(const Label& l, u64 v) {
  switch (l.kind) {
    case Label::Kind::reg: regs.at(l.index) = v; return;
    case Label::Kind::pc: pc = v; return;
    case Label::Kind::flag_n: n = v != 0; return;
    case Label::Kind::flag_z: z = v != 0; return;
    case Label::Kind::mem: write8(l.index, static_cast<std::uint8_t>(v)); return;
    case Label::Kind::events: break;
  }
  throw Error(ErrorCode::precondition_violated, "events has no scalar value");
}

std::string to_string(const MachineState& s) {
  std::ostringstream os;
  os << "pc=" << hex(s.pc) << " n=" << s.n << " z=" << s.z;
  for (unsigned i = 0; i < 16; ++i)
    if (s.regs[i]) os << " x" << i << "=" << s.regs[i];
  if (!s.mem.empty()) {
    os << " mem{";
    bool first = true;
    for (const auto& [a, v] : s.mem) {
      os << (first ? "" : " ") << hex(a) << ":" << static_cast<unsigned>(v);
      first = false;
    }
    os << "}";
  }
  os << " events[";
  for (std::size_t i = 0; i < s.events.size(); ++i) os << (i ? ", " : "") << to_string(s.events[i]);
  os << "]";
  return os.str();
}

Format format_of(Op op) {
  switch (op) {
    case Op::undecodable: return Format::none;
    case Op::movi: return Format::rd_imm16;
    case Op::movr: return Format::rd_rn;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::umulh:
    case Op::mulnd: return Format::rd_rn_rm;
    case Op::addi:
    case Op::subi:
    case Op::ldrb:
    case Op::ldrw:
    case Op::ldr:
    case Op::strb:
    case Op::strw:
    case Op::str: return Format::rd_rn_imm;
    case Op::cmp: return Format::rn_rm;
    case Op::cmpi: return Format::rn_imm;
    case Op::csetn: return Format::rd;
    case Op::b:
    case Op::beq:
    case Op::bne: return Format::off20;
    case Op::cbz:
    case Op::cbnz: return Format::rd_off16;
    case Op::br: return Format::rn;
  }
  return Format::none;
}

const std::vector<Op>& all_ops() {
  static const std::vector<Op> ops = {Op::movi, Op::movr, Op::add,  Op::addi, Op::sub,  Op::subi, Op::mul,
                                      Op::umulh, Op::mulnd, Op::cmp, Op::cmpi, Op::csetn, Op::b,  Op::beq,
                                      Op::bne,  Op::cbz,  Op::cbnz, Op::br,   Op::ldrb, Op::ldrw, Op::ldr,
                                      Op::strb, Op::strw, Op::str};
  return ops;
}

const char* mnemonic(Op op) {
  switch (op) {
    case Op::undecodable: return ".word";
    case Op::movi: return "movi";
    case Op::movr: return "movr";
    case Op::add: return "add";
    case Op::addi: return "addi";
    case Op::sub: return "sub";
    case Op::subi: return "subi";
    case Op::mul: return "mul";
    case Op::umulh: return "umulh";
    case Op::mulnd: return "mulnd";
    case Op::cmp: return "cmp";
    case Op::cmpi: return "cmpi";
    case Op::csetn: return "csetn";
    case Op::b: return "b";
    case Op::beq: return "beq";
    case Op::bne: return "bne";
    case Op::cbz: return "cbz";
    case Op::cbnz: return "cbnz";
    case Op::br: return "br";
    case Op::ldrb: return "ldrb";
    case Op::ldrw: return "ldrw";
    case Op::ldr: return "ldr";
    case Op::strb: return "strb";
    case Op::strw: return "strw";
    case Op::str: return "str";
  }
  return "?";
}

std::optional<Op> op_from_mnemonic(const std::string& m) {
  for (Op op : all_ops())
    if (m == mnemonic(op)) return op;
  return std::nullopt;
}

namespace {

bool known_opcode(std::uint8_t b) {
  for (Op op : all_ops())
    if (static_cast<std::uint8_t>(op) == b) return true;
  return false;
}

std::int64_t sign_extend(u64 v, unsigned bits) {
  const u64 m = u64{1} << (bits - 1);
  return static_cast<std::int64_t>((v ^ m) - m);
}

/// Bits of the word an opcode's format uses besides the opcode byte.
std::uint32_t used_mask(Format f) {
  switch (f) {
    case Format::none: return 0;
    case Format::rd_imm16: return 0x00F0FFFF;
    case Format::rd_rn: return 0x00FF0000;
    case Format::rd_rn_rm: return 0x00FFF000;
    case Format::rd_rn_imm: return 0x00FF0FFF;
    case Format::rn_rm: return 0x000FF000;
    case Format::rn_imm: return 0x000F0FFF;
    case Format::rd: return 0x00F00000;
    case Format::off20: return 0x000FFFFF;
    case Format::rd_off16: return 0x00F0FFFF;
    case Format::rn: return 0x000F0000;
  }
  return 0;
}

}  // namespace

Instruction decode_word(std::uint32_t w) {
  Instruction ins;
  const auto opb = static_cast<std::uint8_t>(w >> 24);
  if (w == 0 || !known_opcode(opb)) return ins;
  const auto op = static_cast<Op>(opb);
  const Format f = format_of(op);
  if (w & 0x00FFFFFF & ~used_mask(f)) return ins;
  ins.op = op;
  const unsigned rd = (w >> 20) & 0xF, rn = (w >> 16) & 0xF, rm = (w >> 12) & 0xF;
  switch (f) {
    case Format::none: break;
    case Format::rd_imm16: ins.rd = rd; ins.imm = w & 0xFFFF; break;
    case Format::rd_rn: ins.rd = rd; ins.rn = rn; break;
    case Format::rd_rn_rm: ins.rd = rd; ins.rn = rn; ins.rm = rm; break;
    case Format::rd_rn_imm: ins.rd = rd; ins.rn = rn; ins.imm = w & 0xFFF; break;
    case Format::rn_rm: ins.rn = rn; ins.rm = rm; break;
    case Format::rn_imm: ins.rn = rn; ins.imm = w & 0xFFF; break;
    case Format::rd: ins.rd = rd; break;
    case Format::off20: ins.imm = sign_extend(w & 0xFFFFF, 20); break;
    case Format::rd_off16: ins.rd = rd; ins.imm = sign_extend(w & 0xFFFF, 16); break;
    case Format::rn: ins.rn = rn; break;
  }
  return ins;
}

std::uint32_t encode(const Instruction& ins) {
  const Format f = format_of(ins.op);
  if (f == Format::none) throw Error(ErrorCode::precondition_violated, "cannot encode an undecodable instruction");
  if (ins.rd > 15 || ins.rn > 15 || ins.rm > 15)
    throw Error(ErrorCode::precondition_violated, "register index out of range");
  auto need = [&](std::int64_t lo, std::int64_t hi) {
    if (ins.imm < lo || ins.imm > hi)
      throw Error(ErrorCode::immediate_out_of_range, "immediate " + std::to_string(ins.imm) + " out of range");
  };
  std::uint32_t w = static_cast<std::uint32_t>(ins.op) << 24;
  const std::uint32_t rd = ins.rd << 20, rn = ins.rn << 16, rm = ins.rm << 12;
  switch (f) {
    case Format::none: break;
    case Format::rd_imm16: need(0, 0xFFFF); w |= rd | static_cast<std::uint32_t>(ins.imm); break;
    case Format::rd_rn: w |= rd | rn; break;
    case Format::rd_rn_rm: w |= rd | rn | rm; break;
    case Format::rd_rn_imm: need(0, 0xFFF); w |= rd | rn | static_cast<std::uint32_t>(ins.imm); break;
    case Format::rn_rm: w |= rn | rm; break;
    case Format::rn_imm: need(0, 0xFFF); w |= rn | static_cast<std::uint32_t>(ins.imm); break;
    case Format::rd: w |= rd; break;
    case Format::off20:
      need(-(1 << 19), (1 << 19) - 1);
      w |= static_cast<std::uint32_t>(ins.imm) & 0xFFFFF;
      break;
    case Format::rd_off16:
      need(-(1 << 15), (1 << 15) - 1);
      w |= rd | (static_cast<std::uint32_t>(ins.imm) & 0xFFFF);
      break;
    case Format::rn: w |= rn; break;
  }
  return w;
}

Instruction decode(const std::function<std::uint8_t(u64)>& read, u64 addr) {
  std::uint32_t w = 0;
  for (unsigned i = 0; i < 4; ++i) w |= static_cast<std::uint32_t>(read(addr + i)) << (8 * i);
  return decode_word(w);
}

Instruction decode(const MachineState& s, u64 addr) {
  return decode_word(static_cast<std::uint32_t>(s.read(addr, 4)));
}

std::string to_string(const Instruction& ins) {
  const std::string m = mnemonic(ins.op);
  auto x = [](unsigned r) { return "x" + std::to_string(r); };
  const std::string imm = "#" + std::to_string(ins.imm);
  switch (format_of(ins.op)) {
    case Format::none: return m;
    case Format::rd_imm16: return m + " " + x(ins.rd) + ", " + imm;
    case Format::rd_rn: return m + " " + x(ins.rd) + ", " + x(ins.rn);
    case Format::rd_rn_rm: return m + " " + x(ins.rd) + ", " + x(ins.rn) + ", " + x(ins.rm);
    case Format::rd_rn_imm:
      if (ins.op == Op::addi || ins.op == Op::subi) return m + " " + x(ins.rd) + ", " + x(ins.rn) + ", " + imm;
      return m + " " + x(ins.rd) + ", [" + x(ins.rn) + (ins.imm ? ", " + imm : "") + "]";
    case Format::rn_rm: return m + " " + x(ins.rn) + ", " + x(ins.rm);
    case Format::rn_imm: return m + " " + x(ins.rn) + ", " + imm;
    case Format::rd: return m + " " + x(ins.rd);
    case Format::off20: return m + " " + imm;
    case Format::rd_off16: return m + " " + x(ins.rd) + ", " + imm;
    case Format::rn: return m + " " + x(ins.rn);
  }
  return m;
}

std::vector<MachineState> successors(const MachineState& s) {
  if (s.pc % 4 != 0) return {};
  const Instruction ins = decode(s, s.pc);
  if (ins.op == Op::undecodable) return {};
  MachineState t = s;
  t.pc = s.pc + 4;
  auto& r = t.regs;
  const u64 a = s.regs[ins.rn], b = s.regs[ins.rm];
  const auto imm = static_cast<u64>(ins.imm);
  auto jump = [&](bool taken, u64 dest) {
    const u64 to = taken ? dest : s.pc + 4;
    t.events.push_back(Event::branch(s.pc, to));
    t.pc = to;
  };
  auto compare = [&](u64 x, u64 y) {
    t.z = x == y;
    t.n = ((x - y) >> 63) & 1u;
  };
  switch (ins.op) {
    case Op::undecodable: return {};
    case Op::movi: r[ins.rd] = imm; break;
    case Op::movr: r[ins.rd] = a; break;
    case Op::add: r[ins.rd] = a + b; break;
    case Op::addi: r[ins.rd] = a + imm; break;
    case Op::sub: r[ins.rd] = a - b; break;
    case Op::subi: r[ins.rd] = a - imm; break;
    case Op::mul: r[ins.rd] = a * b; break;
    case Op::umulh:
      r[ins.rd] = static_cast<u64>((static_cast<unsigned __int128>(a) * b) >> 64);
      break;
    case Op::mulnd: {
      r[ins.rd] = a * b;
      MachineState t1 = t;
      t.n = false;
      t1.n = true;
      return {t, t1};
    }
    case Op::cmp: compare(a, b); break;
    case Op::cmpi: compare(a, imm); break;
    case Op::csetn: r[ins.rd] = s.n; break;
    case Op::b: jump(true, branch_target(s.pc, ins.imm)); break;
    case Op::beq: jump(s.z, branch_target(s.pc, ins.imm)); break;
    case Op::bne: jump(!s.z, branch_target(s.pc, ins.imm)); break;
    case Op::cbz: jump(s.regs[ins.rd] == 0, branch_target(s.pc, ins.imm)); break;
    case Op::cbnz: jump(s.regs[ins.rd] != 0, branch_target(s.pc, ins.imm)); break;
    case Op::br: jump(true, a); break;
    case Op::ldrb:
    case Op::ldrw:
    case Op::ldr: {
      const unsigned size = ins.op == Op::ldrb ? 1 : ins.op == Op::ldrw ? 4 : 8;
      const u64 addr = a + imm;
      r[ins.rd] = s.read(addr, size);
      t.events.push_back(Event::load(addr, size));
      break;
    }
    case Op::strb:
    case Op::strw:
    case Op::str: {
      const unsigned size = ins.op == Op::strb ? 1 : ins.op == Op::strw ? 4 : 8;
      const u64 addr = a + imm;
      t.write(addr, size, s.regs[ins.rd]);
      t.events.push_back(Event::store(addr, size));
      break;
    }
  }
  return {t};
}

kernel::SystemPtr<MachineState> system() {
  static const auto sys = kernel::make_system<MachineState>(successors);
  return sys;
}

bool is_aligned_at(const MachineState& s, u64 base, const std::vector<std::uint8_t>& code) {
  if (s.pc != base || base % 4 != 0) return false;
  for (std::size_t i = 0; i < code.size(); ++i)
    if (s.read8(base + i) != code[i]) return false;
  return true;
}

bool is_terminated_at(const MachineState& s, u64 addr) {
  return s.pc == addr && decode(s, addr).op == Op::undecodable;
}

std::set<Label> diff(const MachineState& a, const MachineState& b) {
  std::set<Label> out;
  for (unsigned i = 0; i < 16; ++i)
    if (a.regs[i] != b.regs[i]) out.insert(Label::reg(i));
  if (a.pc != b.pc) out.insert(Label::pc());
  if (a.n != b.n) out.insert(Label::flag_n());
  if (a.z != b.z) out.insert(Label::flag_z());
  for (const auto& [addr, v] : a.mem)
    if (b.read8(addr) != v) out.insert(Label::mem(addr));
  for (const auto& [addr, v] : b.mem)
    if (a.read8(addr) != v) out.insert(Label::mem(addr));
  if (a.events != b.events) out.insert(Label::events());
  return out;
}

kernel::Frame<MachineState> maychange(const std::set<Label>& labels) {
  std::set<std::string> names;
  std::string desc = "maychange{";
  bool first = true;
  for (const auto& l : labels) {
    names.insert(to_string(l));
    desc += (first ? "" : ", ") + to_string(l);
    first = false;
  }
  desc += "}";
  auto related = [labels](const MachineState& a, const MachineState& b) {
    for (const auto& l : diff(a, b))
      if (!labels.count(l)) return false;
    return true;
  };
  return {related, desc, names};
}

kernel::Frame<MachineState> maychange_named(const std::set<std::string>& names) {
  std::set<Label> labels;
  for (const auto& n : names) {
    auto l = parse_label(n);
    if (!l) throw Error(ErrorCode::syntax_error, "unknown label '" + n + "'");
    labels.insert(*l);
  }
  return maychange(labels);
}

void validate(const Partition& p) {
  for (const auto& l : p.pub)
    if (p.priv.count(l)) throw Error(ErrorCode::partition_overlap, to_string(l) + " is both public and private");
}

Snapshot project_public(const MachineState& s, const Partition& p) {
  validate(p);
  Snapshot snap;
  for (const auto& l : p.pub) {
    if (l.kind == Label::Kind::events)
      snap.events = s.events;
    else
      snap.values.emplace_back(l, s.get(l));
  }
  return snap;
}

}  // namespace relhoare::machine
