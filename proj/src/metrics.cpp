#include "boilingflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <ostream>

#include "boilingflow/correlation.hpp"
#include "boilingflow/fft.hpp"
#include "boilingflow/spectrum.hpp"

namespace bflow {

std::size_t default_segment_length(std::size_t n_samples) { return std::min<std::size_t>(1024, n_samples / 8); }

namespace {

class WelchAccumulator {
 public:
  WelchAccumulator(std::size_t n_samples, double fs, std::size_t segment_length)
      : n_samples_(n_samples), fs_(fs), seg_(segment_length ? segment_length : default_segment_length(n_samples)) {
    if (!(fs > 0.0)) throw InvalidInput("temporal_psd: fs must be positive");
    if (seg_ < 2 || n_samples < seg_) throw InvalidInput("temporal_psd: series shorter than one Welch segment");
    fft_ = std::make_unique<RealFft1>(seg_);
    const Eigen::ArrayXd w = hamming(static_cast<Eigen::Index>(seg_));
    window_.assign(w.data(), w.data() + w.size());
    window_energy_ = w.square().sum();
    hop_ = std::max<std::size_t>(1, seg_ / 2);
    acc_.assign(seg_ / 2 + 1, 0.0);
    buf_.resize(seg_);
    spec_.resize(seg_ / 2 + 1);
  }

  // Strided view: sample t lives at data[t * stride].
  void add(const double* data, std::size_t stride) {
    for (std::size_t start = 0; start + seg_ <= n_samples_; start += hop_) {
      for (std::size_t i = 0; i < seg_; ++i) buf_[i] = data[(start + i) * stride] * window_[i];
      fft_->forward(buf_, spec_);
      for (std::size_t k = 0; k < spec_.size(); ++k) acc_[k] += std::norm(spec_[k]);
      ++segments_;
    }
  }

  TemporalSpectrum result(SpectrumKind kind) const {
    TemporalSpectrum out;
    out.kind = kind;
    const std::size_t nb = acc_.size();
    out.freqs.resize(nb);
    out.power.resize(nb);
    const double norm = 1.0 / (fs_ * window_energy_ * static_cast<double>(std::max<std::size_t>(segments_, 1)));
    for (std::size_t k = 0; k < nb; ++k) {
      out.freqs[k] = static_cast<double>(k) * fs_ / static_cast<double>(seg_);
      const bool unpaired = (k == 0) || (seg_ % 2 == 0 && k == nb - 1);
      out.power[k] = acc_[k] * norm * (unpaired ? 1.0 : 2.0);
    }
    return out;
  }

 private:
  std::size_t n_samples_;
  double fs_;
  std::size_t seg_;
  std::size_t hop_ = 1;
  std::unique_ptr<RealFft1> fft_;
  std::vector<double> window_;
  double window_energy_ = 0.0;
  std::vector<double> acc_;
  std::vector<double> buf_;
  std::vector<std::complex<double>> spec_;
  std::size_t segments_ = 0;
};

// Runs the Welch accumulator over every valid pixel series, one image row at
// a time so each frame is read contiguously.
TemporalSpectrum sequence_tps(const ScreenSequence& seq, std::size_t segment_length, bool x_difference) {
  validate(seq);
  const std::size_t nt = seq.size();
  const Eigen::Index rows = seq.rows(), cols = seq.cols();
  WelchAccumulator welch(nt, seq.fs, segment_length);
  const Eigen::Index out_cols = x_difference ? cols - 1 : cols;
  if (out_cols < 1) throw InvalidInput("flow_tps: need at least 2 columns");

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> block(static_cast<Eigen::Index>(nt), out_cols);
  std::size_t channels = 0;
  const double inv_delta = 1.0 / seq.delta;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& f = seq.frames[t];
      for (Eigen::Index c = 0; c < out_cols; ++c)
        block(static_cast<Eigen::Index>(t), c) = x_difference ? (f(r, c + 1) - f(r, c)) * inv_delta : f(r, c);
    }
    for (Eigen::Index c = 0; c < out_cols; ++c) {
      const bool valid = x_difference ? (seq.mask(r, c) && seq.mask(r, c + 1)) : seq.mask(r, c);
      if (!valid) continue;
      welch.add(block.data() + c, static_cast<std::size_t>(out_cols));
      ++channels;
    }
  }
  if (channels == 0) throw DegenerateInput("temporal_psd: no valid pixel series");
  // The accumulator averages over segments of every channel.
  return welch.result(x_difference ? SpectrumKind::flow : SpectrumKind::phase);
}

}  // namespace

TemporalSpectrum temporal_psd(std::span<const double> series, double fs, std::size_t segment_length) {
  WelchAccumulator welch(series.size(), fs, segment_length);
  welch.add(series.data(), 1);
  return welch.result(SpectrumKind::phase);
}

TemporalSpectrum temporal_psd(const ScreenSequence& seq, std::size_t segment_length) {
  return sequence_tps(seq, segment_length, false);
}

TemporalSpectrum flow_tps(const ScreenSequence& seq, std::size_t segment_length) {
  return sequence_tps(seq, segment_length, true);
}

double StructureFunction2D::at(Eigen::Index rx, Eigen::Index ry) const {
  if (std::abs(rx) > cols - 1 || std::abs(ry) > rows - 1)
    throw InvalidInput("StructureFunction2D: separation outside lattice");
  const Eigen::Index r = ry + rows - 1, c = rx + cols - 1;
  if (counts(r, c) < 1.0) throw DegenerateInput("StructureFunction2D: no pixel pairs at this separation");
  return values(r, c);
}

StructureFunction2D structure_function_2d(const ScreenSequence& seq) {
  validate(seq);
  if (seq.size() < 2) throw InvalidInput("structure_function_2d: need at least 2 frames");
  const Eigen::Index rows = seq.rows(), cols = seq.cols();
  CorrelationPlan plan(rows, cols);
  ImageC acc = ImageC::Zero(2 * rows, cols + 1);
  for (const auto& f : seq.frames) {
    const ImageC s = plan.spectrum(normalize_frame(f, seq.mask));
    acc += s.abs2().cast<std::complex<double>>();
  }
  const ImageD sums = plan.lattice(acc);

  StructureFunction2D sf;
  sf.rows = rows;
  sf.cols = cols;
  sf.counts = pair_counts(seq.mask);
  sf.values = ImageD::Constant(2 * rows - 1, 2 * cols - 1, kInvalidPixel);
  const double nt = static_cast<double>(seq.size());
  const Eigen::Index lr = 2 * rows - 1, lc = 2 * cols - 1;
  for (Eigen::Index r = 0; r < lr; ++r) {
    for (Eigen::Index c = 0; c < lc; ++c) {
      const double n = sf.counts(r, c);
      if (n < 1.0) continue;
      // +r and -r hold the same ordered-pair sum; averaging them makes the
      // lattice exactly symmetric.
      const double s = 0.5 * (sums(r, c) + sums(lr - 1 - r, lc - 1 - c));
      sf.values(r, c) = 2.0 * (1.0 - s / (n * nt));
    }
  }
  sf.values(rows - 1, cols - 1) = 0.0;
  return sf;
}

double kolmogorov_slope_check(const StructureFunction2D& sf, double r_min, double r_max) {
  // Group by exact |r|^2 so each radius bin holds one distance.
  std::map<long long, std::pair<double, int>> bins;
  for (Eigen::Index ry = -(sf.rows - 1); ry <= sf.rows - 1; ++ry) {
    for (Eigen::Index rx = -(sf.cols - 1); rx <= sf.cols - 1; ++rx) {
      const long long r2 = static_cast<long long>(rx * rx + ry * ry);
      const double rad = std::sqrt(static_cast<double>(r2));
      if (rad < r_min || rad > r_max) continue;
      const Eigen::Index r = ry + sf.rows - 1, c = rx + sf.cols - 1;
      if (sf.counts(r, c) < 1.0) continue;
      auto& b = bins[r2];
      b.first += sf.values(r, c);
      b.second += 1;
    }
  }
  std::vector<double> lx, ly;
  for (const auto& [r2, b] : bins) {
    const double d = b.first / b.second;
    if (!(d > 0.0)) continue;
    lx.push_back(0.5 * std::log(static_cast<double>(r2)));
    ly.push_back(std::log(d));
  }
  if (lx.size() < 3) throw DegenerateInput("kolmogorov_slope_check: fewer than 3 radii in range");
  const Eigen::Map<const Eigen::VectorXd> x(lx.data(), static_cast<Eigen::Index>(lx.size()));
  const Eigen::Map<const Eigen::VectorXd> y(ly.data(), static_cast<Eigen::Index>(ly.size()));
  const double xm = x.mean(), ym = y.mean();
  const double sxx = (x.array() - xm).square().sum();
  const double sxy = ((x.array() - xm) * (y.array() - ym)).sum();
  return sxy / sxx;
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw InvalidInput("percentile: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double nrmse(std::span<const double> y, std::span<const double> y_data) {
  if (y.size() != y_data.size() || y.size() < 2) throw InvalidInput("nrmse: inputs must have equal length >= 2");
  const double range = percentile(y_data, 95.0) - percentile(y_data, 5.0);
  if (!(range > 0.0)) throw DegenerateInput("nrmse: degenerate percentile range");
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) ss += (y[i] - y_data[i]) * (y[i] - y_data[i]);
  return std::sqrt(ss / static_cast<double>(y.size())) / range;
}

double tps_nrmse(const TemporalSpectrum& candidate, const TemporalSpectrum& reference) {
  if (candidate.freqs.size() != reference.freqs.size()) throw InvalidInput("tps_nrmse: frequency grids differ");
  for (std::size_t i = 0; i < candidate.freqs.size(); ++i) {
    if (std::abs(candidate.freqs[i] - reference.freqs[i]) > 1e-9 * std::max(1.0, std::abs(reference.freqs[i])))
      throw InvalidInput("tps_nrmse: frequency grids differ");
  }
  return nrmse(candidate.power, reference.power);
}

double sf_nrmse(const StructureFunction2D& candidate, const StructureFunction2D& reference) {
  if (candidate.values.rows() != reference.values.rows() || candidate.values.cols() != reference.values.cols())
    throw InvalidInput("sf_nrmse: lattices differ");
  std::vector<double> y, yd;
  for (Eigen::Index i = 0; i < candidate.values.size(); ++i) {
    if (candidate.counts(i) < 1.0 || reference.counts(i) < 1.0) continue;
    y.push_back(std::sqrt(std::max(0.0, candidate.values(i))));
    yd.push_back(std::sqrt(std::max(0.0, reference.values(i))));
  }
  return nrmse(y, yd);
}

StrouhalSpectrum strouhal_premultiplied(const TemporalSpectrum& tps, double delta_star, double U_c) {
  if (!(delta_star > 0.0) || !(U_c > 0.0)) throw InvalidInput("strouhal_premultiplied: delta_star and U_c must be positive");
  StrouhalSpectrum out;
  out.st.reserve(tps.freqs.size());
  out.premultiplied.reserve(tps.freqs.size());
  for (std::size_t i = 0; i < tps.freqs.size(); ++i) {
    const double st = tps.freqs[i] * delta_star / U_c;
    out.st.push_back(st);
    out.premultiplied.push_back(st * tps.power[i]);
  }
  return out;
}

void write_tps_csv(std::ostream& os, const TemporalSpectrum& tps) {
  os << "f_Hz,power\n";
  os.precision(17);
  for (std::size_t i = 0; i < tps.freqs.size(); ++i) os << tps.freqs[i] << ',' << tps.power[i] << '\n';
}

void write_sf_csv(std::ostream& os, const StructureFunction2D& sf) {
  os << "rx_px,ry_px,value,count\n";
  os.precision(17);
  for (Eigen::Index ry = -(sf.rows - 1); ry <= sf.rows - 1; ++ry) {
    for (Eigen::Index rx = -(sf.cols - 1); rx <= sf.cols - 1; ++rx) {
      const Eigen::Index r = ry + sf.rows - 1, c = rx + sf.cols - 1;
      if (sf.counts(r, c) < 1.0) continue;
      os << rx << ',' << ry << ',' << sf.values(r, c) << ',' << static_cast<long long>(sf.counts(r, c)) << '\n';
    }
  }
}

void write_strouhal_csv(std::ostream& os, const StrouhalSpectrum& s) {
  os << "St,St_times_S\n";
  os.precision(17);
  for (std::size_t i = 0; i < s.st.size(); ++i) os << s.st[i] << ',' << s.premultiplied[i] << '\n';
}

}  // namespace bflow
