#pragma once

// Lag sums over all integer separations of two images, via zero-padded FFTs.
//
// For images a, b of shape M x N the separation lattice covers
// r = (rx, ry) with |rx| <= N - 1, |ry| <= M - 1 and is stored as a
// (2M - 1) x (2N - 1) array at [ry + M - 1, rx + N - 1].

#include <memory>

#include "boilingflow/fft.hpp"

namespace bflow {

class CorrelationPlan {
 public:
  CorrelationPlan(Eigen::Index rows, Eigen::Index cols);

  /// Half spectrum of `img` zero-padded to 2M x 2N; NaN pixels count as 0.
  ImageC spectrum(const ImageD& img) const;

  /// Inverse of an accumulated cross spectrum sum_n A_n conj(B_n), rearranged
  /// onto the separation lattice: out(r) = sum_n sum_i a_n(i) b_n(i - r).
  ImageD lattice(const ImageC& cross) const;

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

 private:
  Eigen::Index rows_, cols_;
  std::shared_ptr<RealFft2> fft_;
};

/// sum_i a(i) b(i - r) on the separation lattice.
ImageD lag_sum(const ImageD& a, const ImageD& b);

/// Number of index pairs (i, i - r) with both pixels valid, per separation.
ImageD pair_counts(const Mask& mask);

}  // namespace bflow
