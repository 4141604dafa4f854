#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relhoare/kernel/types.hpp"

namespace relhoare::machine {

using u64 = std::uint64_t;

struct Label {
  enum class Kind { reg, pc, flag_n, flag_z, mem, events };
  Kind kind = Kind::reg;
  /// Register index or byte address.
  u64 index = 0;

  static Label reg(unsigned i) { return {Kind::reg, i}; }
  static Label pc() { return {Kind::pc, 0}; }
  static Label flag_n() { return {Kind::flag_n, 0}; }
  static Label flag_z() { return {Kind::flag_z, 0}; }
  static Label mem(u64 addr) { return {Kind::mem, addr}; }
  static Label events() { return {Kind::events, 0}; }

  auto operator<=>(const Label&) const = default;
};

/// x0..x15, pc, n, z, mem[0x1f], events.
std::string to_string(const Label& l);
/// Inverse of to_string; also accepts decimal addresses in mem[...].
std::optional<Label> parse_label(const std::string& text);

struct Event {
  enum class Kind { load, store, branch };
  Kind kind = Kind::load;
  /// Address, or source pc of a branch.
  u64 a = 0;
  /// Access size in bytes, or destination pc of a branch.
  u64 b = 0;

  static Event load(u64 addr, u64 size) { return {Kind::load, addr, size}; }
  static Event store(u64 addr, u64 size) { return {Kind::store, addr, size}; }
  static Event branch(u64 from, u64 to) { return {Kind::branch, from, to}; }

  bool operator==(const Event&) const = default;
};

/// "load 10,4", "store 8,1", "branch 0x1000,0x1004".
std::string to_string(const Event& e);

struct MachineState {
  std::array<u64, 16> regs{};
  u64 pc = 0;
  bool n = false;
  bool z = false;
  /// Nonzero bytes only; every other address reads as 0.
  std::map<u64, std::uint8_t> mem;
  std::vector<Event> events;

  std::uint8_t read8(u64 addr) const;
  void write8(u64 addr, std::uint8_t v);
  /// Little-endian, size in {1, 2, 4, 8}.
  u64 read(u64 addr, unsigned size) const;
  void write(u64 addr, unsigned size, u64 v);

  /// Scalar value of a label; Events has none and throws.
  u64 get(const Label& l) const;
  void set(const Label& l, u64 v);

  bool operator==(const MachineState&) const = default;
};

std::string to_string(const MachineState& s);

enum class Op : std::uint8_t {
  undecodable = 0x00,
  movi = 0x01,
  movr = 0x02,
  add = 0x03,
  addi = 0x04,
  sub = 0x05,
  subi = 0x06,
  mul = 0x07,
  umulh = 0x08,
  mulnd = 0x09,
  cmp = 0x0A,
  cmpi = 0x0B,
  csetn = 0x0C,
  b = 0x10,
  beq = 0x11,
  bne = 0x12,
  cbz = 0x13,
  cbnz = 0x14,
  br = 0x15,
  ldrb = 0x20,
  ldrw = 0x21,
  ldr = 0x22,
  strb = 0x28,
  strw = 0x29,
  str = 0x2A,
};

/// Operand shape of an opcode; fixes which bits of the word are used.
enum class Format {
  none,      // undecodable
  rd_imm16,  // movi
  rd_rn,     // movr
  rd_rn_rm,  // add sub mul umulh mulnd
  rd_rn_imm, // addi subi, loads and stores (imm12)
  rn_rm,     // cmp
  rn_imm,    // cmpi
  rd,        // csetn
  off20,     // b beq bne
  rd_off16,  // cbz cbnz (register in the rd field)
  rn,        // br
};

Format format_of(Op op);
const std::vector<Op>& all_ops();
std::optional<Op> op_from_mnemonic(const std::string& m);
const char* mnemonic(Op op);

struct Instruction {
  Op op = Op::undecodable;
  unsigned rd = 0, rn = 0, rm = 0;
  /// Zero-extended imm12/imm16, or the signed word offset of a branch.
  std::int64_t imm = 0;

  bool operator==(const Instruction&) const = default;
};

/// Branch destination for a word offset: the offset counts words from the
/// instruction after the branch.
inline u64 branch_target(u64 pc, std::int64_t off) { return pc + 4 + static_cast<u64>(off) * 4; }

/// Strict: any set bit outside the opcode's fields makes the word undecodable,
/// as do unknown opcodes and the all-zero word.
Instruction decode_word(std::uint32_t w);
/// Fields must be in range (checked by the assembler); throws otherwise.
std::uint32_t encode(const Instruction& ins);
Instruction decode(const std::function<std::uint8_t(u64)>& read, u64 addr);
Instruction decode(const MachineState& s, u64 addr);

/// "add x1, x2, x3"; branch offsets print as "#-1".
std::string to_string(const Instruction& ins);

/// Empty when stuck (misaligned pc or undecodable word). MULND yields two
/// successors, N = 0 first.
std::vector<MachineState> successors(const MachineState& s);
kernel::SystemPtr<MachineState> system();

bool is_aligned_at(const MachineState& s, u64 base, const std::vector<std::uint8_t>& code);
bool is_terminated_at(const MachineState& s, u64 addr);

/// Frame whose states agree on every label outside `labels`.
kernel::Frame<MachineState> maychange(const std::set<Label>& labels);
/// Same, from label names (x3, pc, mem[0x100], ...); throws SyntaxError.
kernel::Frame<MachineState> maychange_named(const std::set<std::string>& names);
/// The labels on which two states differ.
std::set<Label> diff(const MachineState& a, const MachineState& b);

struct Partition {
  std::set<Label> pub;
  std::set<Label> priv;
};

struct Snapshot {
  std::vector<std::pair<Label, u64>> values;
  std::optional<std::vector<Event>> events;

  bool operator==(const Snapshot&) const = default;
};

/// Throws PartitionOverlap when a label is both public and private.
void validate(const Partition& p);
Snapshot project_public(const MachineState& s, const Partition& p);

}  // namespace relhoare::machine
