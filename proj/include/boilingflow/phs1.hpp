#pragma once

// PHS1 screen-sequence container.
//
//   offset 0   char[4]  "PHS1"
//   offset 4   u32 LE   N_T (frames)
//   offset 8   u32 LE   M   (rows)
//   offset 12  u32 LE   N   (cols)
//   offset 16  f64 LE   delta [m]
//   offset 24  f64 LE   fs [Hz]
//   offset 32  f32 LE   N_T * M * N samples, frame-major, row-major within a frame
//
// NaN samples mark masked pixels. A pixel is valid only if it is finite in
// every frame.

#include <filesystem>
#include <iosfwd>

#include "boilingflow/core_grid.hpp"

namespace bflow {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_phs1(std::ostream& os, const ScreenSequence& seq);
void write_phs1(const std::filesystem::path& path, const ScreenSequence& seq);

ScreenSequence read_phs1(std::istream& is);
ScreenSequence read_phs1(const std::filesystem::path& path);

}  // namespace bflow
