#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hytrain/conic_program.hpp"

namespace hytrain {

/// Plain-text serialization of a finalized, unequilibrated conic program.
/// Line-oriented format with section headers; all values printed with 12
/// significant digits, so export -> import -> export is byte-identical.
std::string program_to_text(const ConicProgram& prog);
void write_program(const ConicProgram& prog, const std::filesystem::path& path);

ConicProgram program_from_text(const std::string& text);
ConicProgram read_program(const std::filesystem::path& path);

}  // namespace hytrain
