#include "boilingflow/core_grid.hpp"

#include <algorithm>
#include <cmath>

namespace bflow {

void validate(const ScreenSequence& seq) {
  if (seq.frames.empty()) throw InvalidInput("sequence has no frames");
  if (seq.mask.rows() < 2 || seq.mask.cols() < 2)
    throw InvalidInput("frames must be at least 2x2");
  if (!(seq.delta > 0.0) || !(seq.fs > 0.0))
    throw InvalidInput("delta and fs must be positive");
  for (const auto& f : seq.frames) {
    if (f.rows() != seq.mask.rows() || f.cols() != seq.mask.cols())
      throw InvalidInput("frame dimensions differ from mask");
  }
}

ScreenSequence make_sequence(std::vector<ImageD> frames, double delta, double fs) {
  if (frames.empty()) throw InvalidInput("sequence has no frames");
  ScreenSequence seq;
  seq.mask = Mask::Constant(frames.front().rows(), frames.front().cols(), true);
  seq.frames = std::move(frames);
  seq.delta = delta;
  seq.fs = fs;
  validate(seq);
  return seq;
}

Mask finite_mask(const ImageD& frame) { return frame.isFinite(); }

double masked_dot(const ImageD& a, const ImageD& b, const Mask& mask) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (mask(i)) acc += a(i) * b(i);
  }
  return acc;
}

namespace {

void zero_invalid(ImageD& img, const Mask& mask) {
  img = mask.select(img, 0.0);
}

}  // namespace

TtpBasis make_ttp_basis(const Mask& mask) {
  const Eigen::Index valid = mask.count();
  if (valid < 4) throw DegenerateInput("TTP basis needs at least 4 valid pixels");

  const Eigen::Index rows = mask.rows();
  const Eigen::Index cols = mask.cols();
  ImageD x(rows, cols), y(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      x(r, c) = static_cast<double>(c);
      y(r, c) = static_cast<double>(r);
    }
  }

  TtpBasis basis;
  basis.mask = mask;
  basis.modes = {ImageD::Ones(rows, cols), x, y};
  for (auto& m : basis.modes) zero_invalid(m, mask);

  // Modified Gram-Schmidt, two sweeps so the modes are orthonormal to
  // round-off even for badly centered masks.
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (std::size_t i = 0; i < basis.modes.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        basis.modes[i] -= masked_dot(basis.modes[i], basis.modes[j], mask) * basis.modes[j];
      }
      const double n = std::sqrt(masked_dot(basis.modes[i], basis.modes[i], mask));
      if (!(n > 1e-9 * std::sqrt(static_cast<double>(valid))))
        throw DegenerateInput("valid pixels are collinear; tip/tilt undefined");
      basis.modes[i] /= n;
    }
  }
  return basis;
}

ImageD ttp_remove(const ImageD& screen, const TtpBasis& basis) {
  if (screen.rows() != basis.mask.rows() || screen.cols() != basis.mask.cols())
    throw InvalidInput("ttp_remove: screen and basis dimensions differ");
  ImageD out = basis.mask.select(screen, 0.0);
  // Project twice; the second pass removes the residual left by round-off.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& mode : basis.modes) {
      out -= masked_dot(out, mode, basis.mask) * mode;
    }
  }
  return basis.mask.select(out, kInvalidPixel);
}

ImageD normalize_frame(const ImageD& screen, const Mask& mask) {
  const Eigen::Index n = mask.count();
  if (n < 2) throw DegenerateInput("normalize_frame: fewer than 2 valid pixels");
  const double mean = mask.select(screen, 0.0).sum() / static_cast<double>(n);
  const double var =
      mask.select((screen - mean).square(), 0.0).sum() / static_cast<double>(n);
  if (!(var > 0.0) || !std::isfinite(var))
    throw DegenerateInput("normalize_frame: zero-variance frame");
  const double inv_std = 1.0 / std::sqrt(var);
  return mask.select((screen - mean) * inv_std, kInvalidPixel);
}

ImageD normalize_frame(const ImageD& screen) { return normalize_frame(screen, finite_mask(screen)); }

ApertureSquare largest_inscribed_square(const Mask& mask) {
  const Eigen::Index rows = mask.rows();
  const Eigen::Index cols = mask.cols();
  // side(r, c): side of the largest all-valid square whose bottom-right
  // corner is (r, c).
  Image<Eigen::Index> side = Image<Eigen::Index>::Zero(rows, cols);
  ApertureSquare best;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!mask(r, c)) continue;
      Eigen::Index s = 1;
      if (r > 0 && c > 0) s = 1 + std::min({side(r - 1, c), side(r, c - 1), side(r - 1, c - 1)});
      side(r, c) = s;
    }
  }
  // Every square of side s with origin (r0, c0) is found at bottom-right
  // (r0+s-1, c0+s-1) with side(...) >= s, so scanning for the maximal side and
  // taking the smallest origin gives the tie rule directly.
  Eigen::Index max_side = side.maxCoeff();
  if (max_side == 0) throw InvalidInput("largest_inscribed_square: empty mask");
  for (Eigen::Index r = max_side - 1; r < rows; ++r) {
    for (Eigen::Index c = max_side - 1; c < cols; ++c) {
      if (side(r, c) < max_side) continue;
      const Eigen::Index r0 = r - max_side + 1;
      const Eigen::Index c0 = c - max_side + 1;
      if (best.side == 0 || r0 < best.row || (r0 == best.row && c0 < best.col)) {
        best = {r0, c0, max_side};
      }
    }
  }
  return best;
}

Eigen::Index valid_extent(const Mask& mask) {
  Eigen::Index rmin = mask.rows(), rmax = -1, cmin = mask.cols(), cmax = -1;
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      if (!mask(r, c)) continue;
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      cmin = std::min(cmin, c);
      cmax = std::max(cmax, c);
    }
  }
  if (rmax < 0) throw InvalidInput("valid_extent: empty mask");
  return std::max(rmax - rmin + 1, cmax - cmin + 1);
}

ScreenSequence crop(const ScreenSequence& seq, const ApertureSquare& sq) {
  validate(seq);
  if (sq.side < 1 || sq.row < 0 || sq.col < 0 || sq.row + sq.side > seq.rows() ||
      sq.col + sq.side > seq.cols())
    throw InvalidInput("crop: square outside frame");
  ScreenSequence out;
  out.delta = seq.delta;
  out.fs = seq.fs;
  out.mask = seq.mask.block(sq.row, sq.col, sq.side, sq.side);
  out.frames.reserve(seq.frames.size());
  for (const auto& f : seq.frames) out.frames.emplace_back(f.block(sq.row, sq.col, sq.side, sq.side));
  return out;
}

ScreenSequence slice_frames(const ScreenSequence& seq, std::size_t first, std::size_t count) {
  if (first + count > seq.frames.size() || count == 0)
    throw InvalidInput("slice_frames: range outside sequence");
  ScreenSequence out;
  out.delta = seq.delta;
  out.fs = seq.fs;
  out.mask = seq.mask;
  out.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(first),
                    seq.frames.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

ScreenSequence ttp_remove(const ScreenSequence& seq) {
  validate(seq);
  const TtpBasis basis = make_ttp_basis(seq.mask);
  ScreenSequence out;
  out.delta = seq.delta;
  out.fs = seq.fs;
  out.mask = seq.mask;
  out.frames.reserve(seq.frames.size());
  for (const auto& f : seq.frames) out.frames.push_back(ttp_remove(f, basis));
  return out;
}

}  // namespace bflow
