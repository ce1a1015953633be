#pragma once

// Screen and sequence types, tip/tilt/piston projection, per-frame
// normalization and aperture geometry.
//
// Layout convention used throughout the library: images are row-major with
// rows indexing y and columns indexing x. A 2D vector (x, y) therefore maps
// to (col, row).

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bflow {

template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageD = Image<double>;
using ImageC = Image<std::complex<double>>;
using Mask = Image<bool>;

/// Plain 2D vector in (x, y) order.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

/// Thrown for inputs that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when data are valid in form but degenerate for the requested
/// statistic (zero variance, empty index set, ...).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInvalidPixel = std::numeric_limits<double>::quiet_NaN();

/// Time-ordered stack of phase screens sharing one validity mask.
/// Invalid pixels hold NaN in every frame.
struct ScreenSequence {
  std::vector<ImageD> frames;
  double delta = 1.0;  // pixel pitch [m/pixel]
  double fs = 1.0;     // temporal sampling rate [Hz]
  Mask mask;

  Eigen::Index rows() const { return mask.rows(); }
  Eigen::Index cols() const { return mask.cols(); }
  std::size_t size() const { return frames.size(); }
  Eigen::Index valid_count() const { return mask.count(); }
};

/// Throws InvalidInput unless the sequence satisfies its structural invariants.
void validate(const ScreenSequence& seq);

/// Builds a sequence with an all-valid mask sized from the first frame.
ScreenSequence make_sequence(std::vector<ImageD> frames, double delta, double fs);

/// Mask of pixels that are finite in `frame`.
Mask finite_mask(const ImageD& frame);

/// Piston, tip and tilt modes, orthonormal under the masked inner product.
/// Modes are zero outside the mask.
struct TtpBasis {
  Mask mask;
  std::array<ImageD, 3> modes;
};

TtpBasis make_ttp_basis(const Mask& mask);

/// Screen minus its least-squares projection onto span{piston, tip, tilt}
/// over valid pixels. Invalid pixels come back as NaN.
ImageD ttp_remove(const ImageD& screen, const TtpBasis& basis);

/// Masked inner product <a, b> over the basis mask.
double masked_dot(const ImageD& a, const ImageD& b, const Mask& mask);

/// Mean-subtracted, std-normalized copy (population std over valid pixels).
/// Throws DegenerateInput for zero variance.
ImageD normalize_frame(const ImageD& screen, const Mask& mask);
ImageD normalize_frame(const ImageD& screen);

struct ApertureSquare {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  Eigen::Index side = 0;
};

/// Largest all-valid square; ties resolved by smallest (row, col) origin.
ApertureSquare largest_inscribed_square(const Mask& mask);

/// Side of the bounding box of valid pixels along its larger extent.
Eigen::Index valid_extent(const Mask& mask);

/// Crops every frame and the mask to the square.
ScreenSequence crop(const ScreenSequence& seq, const ApertureSquare& square);

/// Keeps frames [first, first + count).
ScreenSequence slice_frames(const ScreenSequence& seq, std::size_t first, std::size_t count);

/// Applies ttp_remove to every frame with a basis built from the mask.
ScreenSequence ttp_remove(const ScreenSequence& seq);

}  // namespace bflow
