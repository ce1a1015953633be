#include "boilingflow/phs1.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace bflow {

namespace {

constexpr char kMagic[4] = {'P', 'H', 'S', '1'};

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw FormatError("PHS1: truncated stream");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_phs1(std::ostream& os, const ScreenSequence& seq) {
  validate(seq);
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(seq.frames.size()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(seq.rows()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(seq.cols()));
  put_le<double>(os, seq.delta);
  put_le<double>(os, seq.fs);
  std::vector<float> buf(static_cast<std::size_t>(seq.mask.size()));
  for (const auto& f : seq.frames) {
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      float v = seq.mask(i) ? static_cast<float>(f(i)) : std::numeric_limits<float>::quiet_NaN();
      if constexpr (std::endian::native == std::endian::big)
        v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(v)));
      buf[static_cast<std::size_t>(i)] = v;
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!os) throw FormatError("PHS1: write failed");
}

void write_phs1(const std::filesystem::path& path, const ScreenSequence& seq) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("PHS1: cannot open " + path.string() + " for writing");
  write_phs1(os, seq);
}

ScreenSequence read_phs1(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("PHS1: bad magic");
  const auto nt = get_le<std::uint32_t>(is);
  const auto m = get_le<std::uint32_t>(is);
  const auto n = get_le<std::uint32_t>(is);
  ScreenSequence seq;
  seq.delta = get_le<double>(is);
  seq.fs = get_le<double>(is);
  if (nt < 1 || m < 2 || n < 2) throw FormatError("PHS1: invalid dimensions");
  if (!(seq.delta > 0.0) || !(seq.fs > 0.0)) throw FormatError("PHS1: delta and fs must be positive");

  const std::size_t pixels = static_cast<std::size_t>(m) * n;
  std::vector<float> buf(pixels);
  seq.mask = Mask::Constant(m, n, true);
  seq.frames.reserve(nt);
  for (std::uint32_t t = 0; t < nt; ++t) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels * sizeof(float))))
      throw FormatError("PHS1: truncated frame data");
    ImageD frame(m, n);
    for (std::size_t i = 0; i < pixels; ++i) {
      float v = buf[i];
      if constexpr (std::endian::native == std::endian::big) {
        auto u = std::bit_cast<std::uint32_t>(v);
        v = std::bit_cast<float>(__builtin_bswap32(u));
      }
      frame(static_cast<Eigen::Index>(i)) = v;
      if (!std::isfinite(v)) seq.mask(static_cast<Eigen::Index>(i)) = false;
    }
    seq.frames.push_back(std::move(frame));
  }
  for (auto& f : seq.frames) f = seq.mask.select(f, kInvalidPixel);
  return seq;
}

ScreenSequence read_phs1(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("PHS1: cannot open " + path.string());
  return read_phs1(is);
}

}  // namespace bflow
