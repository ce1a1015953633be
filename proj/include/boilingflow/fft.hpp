#pragma once

// Thin RAII wrappers over FFTW plans. All transforms are unnormalized:
// forward uses exp(-2*pi*i*k*x/n), inverse uses exp(+2*pi*i*k*x/n), and an
// inverse after a forward scales by the number of samples.
//
// Plans are created with FFTW_ESTIMATE so results are reproducible run to
// run. Plan creation is serialized internally; execution is thread-safe.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

#include "boilingflow/core_grid.hpp"

namespace bflow {

/// Complex 2D transform of a fixed rows x cols shape, in place.
class Fft2 {
 public:
  Fft2(Eigen::Index rows, Eigen::Index cols);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;
  Fft2(Fft2&&) noexcept;
  Fft2& operator=(Fft2&&) noexcept;

  void forward(ImageC& data) const;
  void inverse(ImageC& data) const;

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

 private:
  struct Plans;
  Eigen::Index rows_, cols_;
  std::unique_ptr<Plans> plans_;
};

/// Real-to-half-complex 2D transform. The half spectrum has cols/2 + 1 columns.
class RealFft2 {
 public:
  RealFft2(Eigen::Index rows, Eigen::Index cols);
  ~RealFft2();
  RealFft2(const RealFft2&) = delete;
  RealFft2& operator=(const RealFft2&) = delete;

  void forward(const ImageD& in, ImageC& half) const;
  /// `half` is taken by value because the c2r transform destroys its input.
  void inverse(ImageC half, ImageD& out) const;

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  Eigen::Index half_cols() const { return cols_ / 2 + 1; }

 private:
  struct Plans;
  Eigen::Index rows_, cols_;
  std::unique_ptr<Plans> plans_;
};

/// Real 1D transform of fixed length; the spectrum has n/2 + 1 bins.
class RealFft1 {
 public:
  explicit RealFft1(std::size_t n);
  ~RealFft1();
  RealFft1(const RealFft1&) = delete;
  RealFft1& operator=(const RealFft1&) = delete;

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

  std::size_t size() const { return n_; }

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

/// Signed frequency index of storage position i on an n-point FFT axis.
inline Eigen::Index fft_freq_index(Eigen::Index i, Eigen::Index n) { return i < (n + 1) / 2 ? i : i - n; }

/// Storage position of signed frequency index k on an n-point FFT axis.
inline Eigen::Index fft_storage_index(Eigen::Index k, Eigen::Index n) { return ((k % n) + n) % n; }

/// Moves the zero-frequency bin to the array center (numpy fftshift).
template <typename Scalar>
Image<Scalar> fftshift(const Image<Scalar>& in) {
  const Eigen::Index rows = in.rows(), cols = in.cols();
  Image<Scalar> out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out((r + rows / 2) % rows, (c + cols / 2) % cols) = in(r, c);
  return out;
}

}  // namespace bflow
