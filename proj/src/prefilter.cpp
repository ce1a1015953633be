#include "boilingflow/prefilter.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "boilingflow/fft.hpp"
#include "boilingflow/spectrum.hpp"

namespace bflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_design(const FilterDesign& d) {
  if (d.N_W < 1 || d.N_W % 2 == 0) throw InvalidInput("filter length N_W must be odd and positive");
  if (!(d.fs > 0.0)) throw InvalidInput("sampling rate must be positive");
  if (!(d.r > 0.0 && d.r < 1.0)) throw InvalidInput("reduction factor r must lie in (0, 1)");
  if (!(d.f0 >= 0.0 && d.f0 < d.fs / 2.0)) throw InvalidInput("f0 must lie in [0, fs/2)");
  if (d.kind == FilterKind::bandstop) {
    if (!d.fr || !(*d.fr >= 0.0)) throw InvalidInput("band-stop half-width fr must be nonnegative");
    if (!(d.f0 + *d.fr < d.fs / 2.0)) throw InvalidInput("band-stop requires f0 + fr < fs/2");
  }
}

// Centered sample index of tap i.
double centered(int i, int n_w) { return static_cast<double>(i - (n_w - 1) / 2); }

// Modulates `kernel` to f0, normalizes its response there and forms
// delta - (1 - sqrt(r)) * kernel.
Eigen::ArrayXd finish(Eigen::ArrayXd kernel, const FilterDesign& d) {
  const int n_w = d.N_W;
  Eigen::ArrayXd carrier(n_w);
  for (int i = 0; i < n_w; ++i) carrier(i) = std::cos(kTwoPi * d.f0 * centered(i, n_w) / d.fs);
  kernel *= carrier;
  const double denom = (kernel * carrier).sum();
  if (std::abs(denom) < 1e-12) throw DegenerateInput("filter normalization denominator vanishes");
  Eigen::ArrayXd taps = -(1.0 - std::sqrt(d.r)) * kernel / denom;
  taps((n_w - 1) / 2) += 1.0;
  return taps;
}

}  // namespace

FirFilter design_notch(double f0, double r, int N_W, double fs) {
  FilterDesign d{FilterKind::notch, f0, std::nullopt, r, N_W, fs};
  check_design(d);
  return {finish(hamming(N_W), d), d};
}

FirFilter design_bandstop(double f0, double fr, double r, int N_W, double fs) {
  FilterDesign d{FilterKind::bandstop, f0, fr, r, N_W, fs};
  check_design(d);
  // Low-pass of half-width fr in normalized frequency fr / fs.
  const double nu = fr / fs;
  Eigen::ArrayXd g(N_W);
  for (int i = 0; i < N_W; ++i) {
    const double x = kTwoPi * nu * centered(i, N_W);
    g(i) = 2.0 * nu * (x == 0.0 ? 1.0 : std::sin(x) / x);
  }
  if (nu == 0.0) g.setConstant(1.0);
  return {finish(hamming(N_W) * g, d), d};
}

FirFilter design_bandstop_edges(double f1, double f2, double r, int N_W, double fs) {
  if (!(f1 > 0.0 && f1 < f2 && f2 < fs / 2.0)) throw InvalidInput("band-stop edges require 0 < f1 < f2 < fs/2");
  return design_bandstop(0.5 * (f1 + f2), 0.5 * (f2 - f1), r, N_W, fs);
}

std::complex<double> frequency_response(const Eigen::ArrayXd& taps, double f, double fs) {
  std::complex<double> h = 0.0;
  for (Eigen::Index n = 0; n < taps.size(); ++n)
    h += taps(n) * std::polar(1.0, -kTwoPi * f * static_cast<double>(n) / fs);
  return h;
}

ScreenSequence apply_fir(const ScreenSequence& seq, const std::vector<FirFilter>& filters) {
  validate(seq);
  if (filters.empty()) return seq;
  std::size_t trim = 0;
  for (const auto& f : filters) {
    if (f.taps.size() < 1 || f.taps.size() % 2 == 0) throw InvalidInput("apply_fir: filter length must be odd");
    trim += static_cast<std::size_t>(f.taps.size() - 1);
  }
  const std::size_t nt = seq.size();
  if (nt <= trim)
    throw InvalidInput("apply_fir: sequence of " + std::to_string(nt) + " frames is shorter than the combined filter length " +
                       std::to_string(trim + 1));

  std::size_t len = 1;
  while (len < nt) len <<= 1;
  RealFft1 fft(len);
  const std::size_t bins = len / 2 + 1;
  // Circular convolution of length len >= nt is exact on the valid region
  // because the wrapped terms land only in the first N_W - 1 samples.
  std::vector<std::vector<std::complex<double>>> responses;
  for (const auto& f : filters) {
    std::vector<double> padded(len, 0.0);
    for (Eigen::Index i = 0; i < f.taps.size(); ++i) padded[static_cast<std::size_t>(i)] = f.taps(i);
    std::vector<std::complex<double>> h(bins);
    fft.forward(padded, h);
    responses.push_back(std::move(h));
  }

  const std::size_t n_out = nt - trim;
  const Eigen::Index rows = seq.rows(), cols = seq.cols();
  ScreenSequence out;
  out.delta = seq.delta;
  out.fs = seq.fs;
  out.mask = seq.mask;
  out.frames.assign(n_out, ImageD::Constant(rows, cols, kInvalidPixel));

  std::vector<double> series(len);
  std::vector<std::complex<double>> spec(bins);
  const double scale = 1.0 / static_cast<double>(len);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!seq.mask(r, c)) continue;
      std::fill(series.begin(), series.end(), 0.0);
      for (std::size_t t = 0; t < nt; ++t) series[t] = seq.frames[t](r, c);
      fft.forward(series, spec);
      for (const auto& h : responses)
        for (std::size_t k = 0; k < bins; ++k) spec[k] *= h[k];
      fft.inverse(spec, series);
      for (std::size_t j = 0; j < n_out; ++j) out.frames[j](r, c) = series[j + trim] * scale;
    }
  }
  return out;
}

}  // namespace bflow
