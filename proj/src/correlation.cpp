#include "boilingflow/correlation.hpp"

#include <cmath>

namespace bflow {

CorrelationPlan::CorrelationPlan(Eigen::Index rows, Eigen::Index cols)
    : rows_(rows), cols_(cols), fft_(std::make_shared<RealFft2>(2 * rows, 2 * cols)) {}

ImageC CorrelationPlan::spectrum(const ImageD& img) const {
  if (img.rows() != rows_ || img.cols() != cols_) throw InvalidInput("CorrelationPlan: shape mismatch");
  ImageD padded = ImageD::Zero(2 * rows_, 2 * cols_);
  padded.topLeftCorner(rows_, cols_) = img.isFinite().select(img, 0.0);
  ImageC half;
  fft_->forward(padded, half);
  return half;
}

ImageD CorrelationPlan::lattice(const ImageC& cross) const {
  ImageD circ;
  fft_->inverse(cross, circ);
  const Eigen::Index pr = 2 * rows_, pc = 2 * cols_;
  const double scale = 1.0 / static_cast<double>(pr * pc);
  ImageD out(2 * rows_ - 1, 2 * cols_ - 1);
  for (Eigen::Index ry = -(rows_ - 1); ry <= rows_ - 1; ++ry) {
    const Eigen::Index sr = (ry + pr) % pr;
    for (Eigen::Index rx = -(cols_ - 1); rx <= cols_ - 1; ++rx) {
      const Eigen::Index sc = (rx + pc) % pc;
      out(ry + rows_ - 1, rx + cols_ - 1) = circ(sr, sc) * scale;
    }
  }
  return out;
}

ImageD lag_sum(const ImageD& a, const ImageD& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("lag_sum: shape mismatch");
  CorrelationPlan plan(a.rows(), a.cols());
  const ImageC sa = plan.spectrum(a);
  const ImageC sb = plan.spectrum(b);
  return plan.lattice(sa * sb.conjugate());
}

ImageD pair_counts(const Mask& mask) {
  const ImageD m = mask.cast<double>();
  return lag_sum(m, m).round();
}

}  // namespace bflow
