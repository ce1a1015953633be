#include "boilingflow/fft.hpp"

#include <mutex>
#include <vector>

#include <fftw3.h>

namespace bflow {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

}  // namespace

// ---------------------------------------------------------------- Fft2

struct Fft2::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

Fft2::Fft2(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols), plans_(std::make_unique<Plans>()) {
  if (rows < 1 || cols < 1) throw InvalidInput("Fft2: empty shape");
  ImageC tmp(rows, cols);
  std::lock_guard lock(planner_mutex());
  plans_->fwd = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), as_fftw(tmp.data()),
                                 as_fftw(tmp.data()), FFTW_FORWARD, kFlags);
  plans_->inv = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), as_fftw(tmp.data()),
                                 as_fftw(tmp.data()), FFTW_BACKWARD, kFlags);
}

Fft2::~Fft2() = default;
Fft2::Fft2(Fft2&&) noexcept = default;
Fft2& Fft2::operator=(Fft2&&) noexcept = default;

void Fft2::forward(ImageC& data) const {
  if (data.rows() != rows_ || data.cols() != cols_) throw InvalidInput("Fft2: shape mismatch");
  fftw_execute_dft(plans_->fwd, as_fftw(data.data()), as_fftw(data.data()));
}

void Fft2::inverse(ImageC& data) const {
  if (data.rows() != rows_ || data.cols() != cols_) throw InvalidInput("Fft2: shape mismatch");
  fftw_execute_dft(plans_->inv, as_fftw(data.data()), as_fftw(data.data()));
}

// ---------------------------------------------------------------- RealFft2

struct RealFft2::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

RealFft2::RealFft2(Eigen::Index rows, Eigen::Index cols)
    : rows_(rows), cols_(cols), plans_(std::make_unique<Plans>()) {
  if (rows < 1 || cols < 1) throw InvalidInput("RealFft2: empty shape");
  ImageD real(rows, cols);
  ImageC half(rows, cols / 2 + 1);
  std::lock_guard lock(planner_mutex());
  plans_->fwd = fftw_plan_dft_r2c_2d(static_cast<int>(rows), static_cast<int>(cols), real.data(),
                                     as_fftw(half.data()), kFlags);
  plans_->inv = fftw_plan_dft_c2r_2d(static_cast<int>(rows), static_cast<int>(cols), as_fftw(half.data()),
                                     real.data(), kFlags);
}

RealFft2::~RealFft2() = default;

void RealFft2::forward(const ImageD& in, ImageC& half) const {
  if (in.rows() != rows_ || in.cols() != cols_) throw InvalidInput("RealFft2: shape mismatch");
  half.resize(rows_, half_cols());
  fftw_execute_dft_r2c(plans_->fwd, const_cast<double*>(in.data()), as_fftw(half.data()));
}

void RealFft2::inverse(ImageC half, ImageD& out) const {
  if (half.rows() != rows_ || half.cols() != half_cols()) throw InvalidInput("RealFft2: shape mismatch");
  out.resize(rows_, cols_);
  fftw_execute_dft_c2r(plans_->inv, as_fftw(half.data()), out.data());
}

// ---------------------------------------------------------------- RealFft1

struct RealFft1::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

RealFft1::RealFft1(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n < 1) throw InvalidInput("RealFft1: empty length");
  std::vector<double> real(n);
  std::vector<std::complex<double>> half(n / 2 + 1);
  std::lock_guard lock(planner_mutex());
  plans_->fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.data(), as_fftw(half.data()), kFlags);
  plans_->inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), as_fftw(half.data()), real.data(), kFlags);
}

RealFft1::~RealFft1() = default;

void RealFft1::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != n_ / 2 + 1) throw InvalidInput("RealFft1: size mismatch");
  fftw_execute_dft_r2c(plans_->fwd, const_cast<double*>(in.data()), as_fftw(out.data()));
}

void RealFft1::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  if (in.size() != n_ / 2 + 1 || out.size() != n_) throw InvalidInput("RealFft1: size mismatch");
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(plans_->inv, as_fftw(scratch.data()), out.data());
}

}  // namespace bflow
