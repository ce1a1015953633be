#pragma once

// Temporal power spectra, 2D structure functions, NRMSE and Strouhal
// scaling used to compare generated and reference sequences.

#include <iosfwd>
#include <span>
#include <vector>

#include "boilingflow/core_grid.hpp"

namespace bflow {

enum class SpectrumKind { phase, flow };

struct TemporalSpectrum {
  std::vector<double> freqs;  // [Hz], strictly increasing from 0
  std::vector<double> power;  // one-sided density [units^2 / Hz]
  SpectrumKind kind = SpectrumKind::phase;
};

/// Welch segment length used when none is given: min(1024, n_samples / 8).
std::size_t default_segment_length(std::size_t n_samples);

/// Welch estimate of one series: symmetric Hamming window, 50% overlap,
/// one-sided density normalized by fs * sum(w^2). No detrending.
TemporalSpectrum temporal_psd(std::span<const double> series, double fs, std::size_t segment_length = 0);

/// Phase TPS: Welch estimate averaged over all valid pixels.
TemporalSpectrum temporal_psd(const ScreenSequence& seq, std::size_t segment_length = 0);

/// Flow TPS: Welch estimate of theta_x = (phi(x + 1) - phi(x)) / delta,
/// averaged over all pixel pairs valid in both columns.
TemporalSpectrum flow_tps(const ScreenSequence& seq, std::size_t segment_length = 0);

struct StructureFunction2D {
  Eigen::Index rows = 0;  // aperture rows M; lattice has 2M - 1 rows
  Eigen::Index cols = 0;  // aperture cols N; lattice has 2N - 1 cols
  ImageD values;          // lattice [ry + M - 1, rx + N - 1]; NaN where counts == 0
  ImageD counts;          // contributing ordered pixel pairs per separation

  /// D at separation (rx, ry); throws DegenerateInput where no pair exists.
  double at(Eigen::Index rx, Eigen::Index ry) const;
};

/// D(r) = average over pixel pairs with i1 - i2 = +-r of
/// 2 (1 - time-average[phi'(i1) phi'(i2)]), phi' the per-frame normalized
/// screens. Frames are normalized internally.
StructureFunction2D structure_function_2d(const ScreenSequence& seq);

/// Least-squares slope of log D against log |r| after averaging D over
/// separations of identical |r|, for r_min <= |r| <= r_max (pixels).
double kolmogorov_slope_check(const StructureFunction2D& sf, double r_min, double r_max);

/// Percentile with linear interpolation between closest ranks; p in [0, 100].
double percentile(std::span<const double> values, double p);

/// (||y - y_data||_2 / sqrt(K)) / (P95(y_data) - P5(y_data)).
double nrmse(std::span<const double> y, std::span<const double> y_data);

/// NRMSE between two spectra on identical frequency grids.
double tps_nrmse(const TemporalSpectrum& candidate, const TemporalSpectrum& reference);

/// NRMSE of sqrt(D) over separations populated in both structure functions.
double sf_nrmse(const StructureFunction2D& candidate, const StructureFunction2D& reference);

struct StrouhalSpectrum {
  std::vector<double> st;             // f * delta_star / U_c
  std::vector<double> premultiplied;  // St * S(f)
};

StrouhalSpectrum strouhal_premultiplied(const TemporalSpectrum& tps, double delta_star, double U_c);

/// U_c = v_x [px/step] * delta [m/px] * fs [steps/s].
inline double convective_velocity(double vx, double delta, double fs) { return vx * delta * fs; }

void write_tps_csv(std::ostream& os, const TemporalSpectrum& tps);
void write_sf_csv(std::ostream& os, const StructureFunction2D& sf);
void write_strouhal_csv(std::ostream& os, const StrouhalSpectrum& s);

}  // namespace bflow
