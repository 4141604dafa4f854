#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relhoare/machine.hpp"

namespace relhoare::masm {

struct Program {
  std::vector<std::uint8_t> bytes;
  /// Label name -> byte offset.
  std::map<std::string, std::uint64_t> symbols;
  std::vector<std::string> warnings;

  std::size_t byte_len() const { return bytes.size(); }
  std::vector<std::uint32_t> words() const;
};

/// Two passes: labels first, then one instruction per line. Errors carry the
/// 1-based source line.
Program assemble(const std::string& text);
Program from_words(const std::vector<std::uint32_t>& words);
/// One line per word; throws LengthNotAligned.
std::string disassemble(const std::vector<std::uint8_t>& bytes);

/// Throws MisalignedBase.
machine::MachineState load_program(machine::MachineState s, const Program& p, std::uint64_t base);
bool is_aligned_at(const machine::MachineState& s, std::uint64_t base, const Program& p);

Program assemble_file(const std::string& path);
std::vector<std::uint8_t> read_binary(const std::string& path);
std::string read_text(const std::string& path);

}  // namespace relhoare::masm
