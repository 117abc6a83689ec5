#pragma once

#include <iosfwd>
#include <string>

#include "fedrec/params.h"

namespace fedrec {

// Binary little-endian checkpoint:
//   "FRLB" | u32 version | u32 segment count |
//   per segment: u16 name length, UTF-8 name, u64 offset, u64 length |
//   total_len raw f64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParamVector& params);
ParamVector read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const ParamVector& params);
ParamVector load_checkpoint(const std::string& path);

}  // namespace fedrec
