#include "boilingflow/spectrum.hpp"

#include <numbers>
#include <ostream>

#include "boilingflow/fft.hpp"

namespace bflow {

SpectralGrid make_spectral_grid(Eigen::Index n, double delta, int kmax) {
  if (!(delta > 0.0)) throw InvalidInput("SpectralGrid: delta must be positive");
  if (kmax < 0) throw InvalidInput("SpectralGrid: kmax must be nonnegative");
  if (!(2 * static_cast<Eigen::Index>(kmax) + 1 < n))
    throw DegenerateInput("SpectralGrid: kmax leaves no valid frequency bins");
  return SpectralGrid{n, delta, kmax};
}

void validate(const VonKarmanModel& m) {
  if (!(m.L0 > 0.0) || !(m.r0 > 0.0) || !(m.gamma0 > 0.0))
    throw InvalidInput("VonKarmanModel: L0, r0, gamma0 must be positive");
}

std::vector<FreqIndex> valid_index_set(const SpectralGrid& grid) {
  const int n = static_cast<int>(grid.n);
  const int lo = -n / 2 + grid.kmax;       // smallest retained component
  const int hi = n / 2 - 1 - grid.kmax;    // largest retained component
  std::vector<FreqIndex> out;
  for (int k1 = lo; k1 <= hi; ++k1) {
    if (k1 == 0) continue;
    for (int k0 = lo; k0 <= hi; ++k0) {
      if (k0 == 0) continue;
      out.push_back({k0, k1});
    }
  }
  if (out.empty()) throw DegenerateInput("valid_index_set: no retained frequency bins");
  return out;
}

Eigen::ArrayXd hamming(Eigen::Index n) {
  if (n == 1) return Eigen::ArrayXd::Ones(1);
  Eigen::ArrayXd w(n);
  for (Eigen::Index i = 0; i < n; ++i)
    w(i) = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  return w;
}

ImageD estimate_spatial_psd(const ScreenSequence& seq) {
  validate(seq);
  const Eigen::Index n = seq.rows();
  if (seq.cols() != n) throw InvalidInput("estimate_spatial_psd: frames must be square");
  if (seq.valid_count() != seq.mask.size())
    throw InvalidInput("estimate_spatial_psd: frames must be fully valid (crop to the inscribed square)");

  const Eigen::ArrayXd w1 = hamming(n);
  const ImageD window = (w1.matrix() * w1.matrix().transpose()).array();
  const double window_energy = window.square().sum();

  Fft2 fft(n, n);
  ImageD acc = ImageD::Zero(n, n);
  ImageC buf(n, n);
  for (const auto& frame : seq.frames) {
    buf = (frame * window).cast<std::complex<double>>();
    fft.forward(buf);
    acc += buf.abs2();
  }
  const double scale = seq.delta * seq.delta / (window_energy * static_cast<double>(seq.frames.size()));
  return fftshift<double>(acc * scale);
}

ImageD sample_v_phi(const SpectralGrid& grid, const VonKarmanModel& model) {
  const Eigen::Index n = grid.n;
  const double df = grid.delta_f();
  ImageD out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double fx = static_cast<double>(c - n / 2) * df;
      const double fy = static_cast<double>(r - n / 2) * df;
      out(r, c) = v_phi(fx, fy, model);
    }
  }
  return out;
}

void write_psd_csv(std::ostream& os, const ImageD& psd, const SpectralGrid& grid) {
  const Eigen::Index n = grid.n;
  if (psd.rows() != n || psd.cols() != n) throw InvalidInput("write_psd_csv: shape mismatch");
  const double df = grid.delta_f();
  os << "k0,k1,f_x,f_y,value\n";
  os.precision(17);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const Eigen::Index k0 = c - n / 2, k1 = r - n / 2;
      os << k0 << ',' << k1 << ',' << static_cast<double>(k0) * df << ',' << static_cast<double>(k1) * df << ','
         << psd(r, c) << '\n';
    }
  }
}

}  // namespace bflow
