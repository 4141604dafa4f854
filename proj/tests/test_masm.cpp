#include <fstream>
#include <random>

#include "doctest.h"
#include "relhoare/masm.hpp"

using namespace relhoare;
using namespace relhoare::machine;
using relhoare::masm::assemble;

namespace {

ErrorCode code_of(const std::string& src, int* line = nullptr) {
  try {
    assemble(src);
  } catch (const Error& e) {
    if (line) *line = e.line();
    return e.code();
  }
  FAIL("assembled without error: " << src);
  return ErrorCode::io_error;
}

int used_bits(Format f) {
  switch (f) {
    case Format::none: return 0;
    case Format::rd_imm16: return 4 + 16;
    case Format::rd_rn: return 8;
    case Format::rd_rn_rm: return 12;
    case Format::rd_rn_imm: return 8 + 12;
    case Format::rn_rm: return 8;
    case Format::rn_imm: return 4 + 12;
    case Format::rd: return 4;
    case Format::off20: return 20;
    case Format::rd_off16: return 4 + 16;
    case Format::rn: return 4;
  }
  return -1;
}

}  // namespace

TEST_CASE("fixed encodings") {
  CHECK(assemble("halt\n").words() == std::vector<std::uint32_t>{0});
  CHECK(assemble("loop: b loop\n").words() == std::vector<std::uint32_t>{0x100FFFFF});
  CHECK(assemble("ADD X1, X2, X3").words() == std::vector<std::uint32_t>{0x03123000});
  CHECK(assemble(".word 0xdeadbeef").words() == std::vector<std::uint32_t>{0xdeadbeef});
  CHECK(assemble("cbz x0, #-2").words() == std::vector<std::uint32_t>{0x1300FFFE});
}

TEST_CASE("labels resolve to hand-computed offsets") {
  auto p = assemble(
      "start:  movi x0, #3\n"
      "        ; comment only\n"
      "again:  subi x0, x0, #1\n"
      "        cbnz x0, again\n"
      "        b done\n"
      "        halt\n"
      "a: b: done: halt\n");
  CHECK(p.symbols.at("start") == 0);
  CHECK(p.symbols.at("again") == 4);
  CHECK(p.symbols.at("done") == 20);
  CHECK(p.symbols.at("a") == 20);
  const auto w = p.words();
  CHECK(decode_word(w[2]).imm == -2);  // 8+4-8 = 4 bytes back
  CHECK(branch_target(8, decode_word(w[2]).imm) == 4);
  CHECK(decode_word(w[3]).imm == 1);
  CHECK(branch_target(12, decode_word(w[3]).imm) == 20);
}

TEST_CASE("assembler errors carry codes and lines") {
  int line = 0;
  CHECK(code_of("add x1, x2, x3\nfrob x1\n", &line) == ErrorCode::unknown_mnemonic);
  CHECK(line == 2);
  CHECK(code_of("b nowhere\n", &line) == ErrorCode::undefined_label);
  CHECK(line == 1);
  CHECK(code_of("\n\nmovi x1, #0x10000\n", &line) == ErrorCode::immediate_out_of_range);
  CHECK(line == 3);
  CHECK(code_of("addi x1, x1, #4096") == ErrorCode::immediate_out_of_range);
  CHECK(code_of("ldrw x1, [x2, #5000]") == ErrorCode::offset_out_of_range);
  CHECK(code_of("add x1, x2") == ErrorCode::syntax_error);
  CHECK(code_of("add x1, x2, x16") == ErrorCode::syntax_error);
  CHECK(code_of("x: halt\nx: halt\n") == ErrorCode::syntax_error);
  CHECK(code_of("halt\ndangling:\n") == ErrorCode::syntax_error);
  CHECK(code_of("cbz x0, #40000") == ErrorCode::offset_out_of_range);
}

TEST_CASE("disassembly") {
  auto bytes = assemble("add x1, x2, x3\n").bytes;
  CHECK(masm::disassemble(bytes) == "add x1, x2, x3\n");
  CHECK(masm::disassemble(std::vector<std::uint8_t>(4, 0)) == ".word 0x00000000\n");
  try {
    masm::disassemble(std::vector<std::uint8_t>(6, 0));
    FAIL("expected LengthNotAligned");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::length_not_aligned);
  }
  auto loop = masm::disassemble(assemble("top: b top\n").bytes);
  CHECK(loop.find("L0: ") != std::string::npos);
  CHECK(assemble(loop).words() == std::vector<std::uint32_t>{0x100FFFFF});
}

TEST_CASE("loading at a base") {
  auto p = assemble("add x1, x2, x3\nhalt\n");
  auto s = masm::load_program(MachineState{}, p, 0x1000);
  CHECK(s.pc == 0x1000);
  CHECK(masm::is_aligned_at(s, 0x1000, p));
  CHECK_FALSE(masm::is_aligned_at(s, 0x1004, p));
  try {
    masm::load_program(MachineState{}, p, 0x1002);
    FAIL("expected MisalignedBase");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::misaligned_base);
  }
  s.write(0x1001, 1, 0x77);
  CHECK_FALSE(masm::is_aligned_at(s, 0x1000, p));
}

TEST_CASE("every word of every opcode round-trips through decode and encode") {
  for (auto op : all_ops()) {
    const std::uint32_t hi = static_cast<std::uint32_t>(op) << 24;
    std::uint64_t valid = 0, mismatched = 0;
    for (std::uint32_t low = 0; low < (1u << 24); ++low) {
      const auto w = hi | low;
      const auto ins = decode_word(w);
      if (ins.op == Op::undecodable) continue;
      ++valid;
      if (ins.op != op || encode(ins) != w) ++mismatched;
    }
    INFO(mnemonic(op));
    CHECK(mismatched == 0);
    CHECK(valid == (std::uint64_t{1} << used_bits(format_of(op))));
  }
  // opcodes outside the table never decode
  for (unsigned o = 0; o < 256; ++o) {
    bool known = false;
    for (auto op : all_ops()) known |= static_cast<unsigned>(op) == o;
    if (!known) CHECK(decode_word((o << 24) | 0x123).op == Op::undecodable);
  }
}

TEST_CASE("text round trip on sampled instructions") {
  std::mt19937_64 rng(3);
  int checked = 0;
  while (checked < 20000) {
    const auto w = static_cast<std::uint32_t>(rng());
    const auto op = all_ops()[rng() % all_ops().size()];
    const auto ins = decode_word((static_cast<std::uint32_t>(op) << 24) | (w & 0x00FFFFFF));
    if (ins.op == Op::undecodable) continue;
    const auto word = encode(ins);
    const auto text = masm::disassemble(masm::from_words({word}).bytes);
    REQUIRE(assemble(text).words() == std::vector<std::uint32_t>{word});
    ++checked;
  }
}

TEST_CASE("warnings") {
  CHECK(assemble(".word 0x03123000\n").warnings.size() == 1);
  CHECK(assemble(".word 0xffffffff\n").warnings.empty());
}

TEST_CASE("CRLF and comments") {
  auto a = assemble("movi x1, #1 ; set\r\nhalt\r\n");
  auto b = assemble("movi x1, #1\nhalt\n");
  CHECK(a.words() == b.words());
}

TEST_CASE("corpus programs assemble cleanly") {
  for (const char* name : {"compare", "compare_constant", "compare_nostop", "loop", "mulnd", "add_stopper",
                           "add_backjump"}) {
    INFO(name);
    auto p = masm::assemble_file(std::string(RELHOARE_CORPUS_DIR) + "/" + name + ".masm");
    CHECK(p.warnings.empty());
    CHECK(p.byte_len() % 4 == 0);
    CHECK(p.byte_len() > 0);
  }
}

TEST_CASE("missing files are io errors") {
  try {
    masm::assemble_file("/nonexistent/x.masm");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io_error);
  }
}
