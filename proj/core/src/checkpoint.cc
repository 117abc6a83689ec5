#include "fedrec/checkpoint.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "fedrec/error.h"

namespace fedrec {
namespace {

constexpr std::array<char, 4> kMagic = {'F', 'R', 'L', 'B'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("checkpoint: truncated input");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(bytes[i]) << (8 * i);
  }
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamVector& params) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  const auto& entries = params.layout.entries();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const Segment& s : entries) {
    if (s.name.size() > 0xffff) throw StructuralError("segment name too long");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put_le<std::uint64_t>(out, s.offset);
    put_le<std::uint64_t>(out, s.length);
  }
  for (double v : params.values) {
    put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError("checkpoint: write failed");
}

ParamVector read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("checkpoint: bad magic");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " +
                    std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in);
  std::vector<Segment> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get_le<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw DataError("checkpoint: truncated segment name");
    const auto offset = get_le<std::uint64_t>(in);
    const auto length = get_le<std::uint64_t>(in);
    entries.push_back({std::move(name), offset, length});
  }
  SegmentMap layout(std::move(entries));
  std::vector<double> values(layout.total_len());
  for (double& v : values) {
    v = std::bit_cast<double>(get_le<std::uint64_t>(in));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("checkpoint: trailing bytes");
  }
  return ParamVector(std::move(values), std::move(layout));
}

void save_checkpoint(const std::string& path, const ParamVector& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_checkpoint(out, params);
}

ParamVector load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace fedrec
