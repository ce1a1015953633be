#pragma once

// Anisotropic Von Karman spectral model and empirical spatial PSD estimation.

#include <iosfwd>
#include <vector>

#include "boilingflow/core_grid.hpp"

namespace bflow {

/// Default number of excluded edge bins per axis.
inline constexpr int kDefaultKmax = 2;

/// Square frequency lattice with k in [-n/2, n/2 - 1] per axis.
struct SpectralGrid {
  Eigen::Index n = 0;
  double delta = 1.0;  // pixel pitch [m]
  int kmax = kDefaultKmax;

  double delta_f() const { return 1.0 / (static_cast<double>(n) * delta); }
};

/// Validated constructor; requires delta > 0, kmax >= 0 and 2*kmax + 1 < n.
SpectralGrid make_spectral_grid(Eigen::Index n, double delta, int kmax = kDefaultKmax);

struct VonKarmanModel {
  double L0 = 1.0;      // outer scale [m]
  double r0 = 1.0;      // Fried coherence length [m]
  double gamma0 = 1.0;  // anisotropy multiplier on fy^2
};

void validate(const VonKarmanModel& model);

/// Unit-scale spectrum 0.023 / (fx^2 + gamma0 fy^2 + L0^-2)^(11/6).
inline double q_phi(double fx, double fy, double L0, double gamma0) {
  return 0.023 * std::pow(fx * fx + gamma0 * fy * fy + 1.0 / (L0 * L0), -11.0 / 6.0);
}

/// r0^(-5/3) * q_phi.
inline double v_phi(double fx, double fy, const VonKarmanModel& m) {
  return std::pow(m.r0, -5.0 / 3.0) * q_phi(fx, fy, m.L0, m.gamma0);
}

/// Signed lattice index (k0 along x/columns, k1 along y/rows).
struct FreqIndex {
  int k0 = 0;
  int k1 = 0;
  friend bool operator==(const FreqIndex&, const FreqIndex&) = default;
};

/// Indices with both components nonzero and outside the kmax lowest and
/// highest bins of each axis. Throws DegenerateInput if the set is empty.
std::vector<FreqIndex> valid_index_set(const SpectralGrid& grid);

/// Storage position of k in an fftshifted n x n array.
inline Eigen::Index shifted_row(const FreqIndex& k, Eigen::Index n) { return k.k1 + n / 2; }
inline Eigen::Index shifted_col(const FreqIndex& k, Eigen::Index n) { return k.k0 + n / 2; }

/// Symmetric Hamming window 0.54 - 0.46 cos(2 pi i / (n - 1)).
Eigen::ArrayXd hamming(Eigen::Index n);

/// Average Hamming-windowed periodogram of the frames, fftshifted, scaled so
/// a process with spatial PSD V [rad^2 m^2] is estimated as V. Frames must be
/// square and fully valid.
ImageD estimate_spatial_psd(const ScreenSequence& seq);

/// von Karman PSD sampled on the fftshifted lattice of `grid`.
ImageD sample_v_phi(const SpectralGrid& grid, const VonKarmanModel& model);

/// CSV rows: k0,k1,f_x,f_y,value for every lattice point.
void write_psd_csv(std::ostream& os, const ImageD& psd, const SpectralGrid& grid);

}  // namespace bflow
