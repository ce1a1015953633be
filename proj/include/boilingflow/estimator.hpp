#pragma once

// Estimation of (L0, r0, gamma0, v, alpha) from a screen sequence.

#include <optional>
#include <string>
#include <vector>

#include "boilingflow/core_grid.hpp"
#include "boilingflow/metrics.hpp"
#include "boilingflow/spectrum.hpp"

namespace bflow {

/// Estimator failure tagged with the pipeline stage that raised it.
class EstimationError : public std::runtime_error {
 public:
  EstimationError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class Averaging { mean, median };

/// Which aperture extent defines L0.
enum class L0Extent {
  valid_width,       // larger side of the valid-data bounding box
  inscribed_square,  // side of the largest inscribed square
};

double estimate_L0(const ApertureSquare& square, double delta);
double estimate_L0(const Mask& mask, double delta, L0Extent extent);

// ------------------------------------------------------------------ r0

struct R0Map {
  std::vector<FreqIndex> indices;
  std::vector<double> values;  // [m], one per index
};

/// Per-bin (Q_phi(k df; gamma0) / V_meas(k df))^(3/5) over valid_index_set.
/// `psd_meas` is fftshifted on the grid lattice.
R0Map estimate_r0_map(const ImageD& psd_meas, const SpectralGrid& grid, double L0, double gamma0);

double estimate_r0(const R0Map& map, Averaging avg = Averaging::mean);

// ------------------------------------------------------------------ gamma0

/// Deterministic model structure function for normalized, TTP-removed
/// screens cropped from an oversampled von Karman field. The output is
/// independent of r0.
StructureFunction2D model_structure_function(Eigen::Index n, double delta, double L0, double gamma0,
                                             int oversample = 4);

struct Gamma0Options {
  double log10_lo = -2.0;
  double log10_hi = 2.0;
  double tolerance = 1e-3;  // absolute, in log10(gamma0)
  int oversample = 4;
  bool widen_on_bracket_end = false;  // extend the hit side by two decades once
  Averaging r0_average = Averaging::mean;
};

struct Gamma0Fit {
  double gamma0 = 1.0;
  double r0 = 0.0;
  double objective = 0.0;
  bool non_unimodal = false;   // both bracket ends beat the interior probes
  bool at_bracket_end = false;
  std::vector<std::pair<double, double>> evaluations;  // (log10 gamma0, MSE)
};

/// Golden-section search over log10(gamma0) minimizing the MSE between the
/// model and data structure functions; r0 follows from the PSD at the
/// optimum. `seq` must be square, fully valid and TTP-removed.
Gamma0Fit estimate_gamma0(const ScreenSequence& seq, const SpectralGrid& grid, double L0,
                          const Gamma0Options& options = {});

/// Same search with the data statistics supplied by the caller.
Gamma0Fit estimate_gamma0(const ImageD& psd_meas, const StructureFunction2D& data_sf, const SpectralGrid& grid,
                          double L0, const Gamma0Options& options = {});

// ------------------------------------------------------------------ velocity

/// Lower bound on the peak correlation for a lag to be trusted:
/// 15 sqrt(2) / sqrt(N_T - T).
double snr_correlation_bound(std::size_t n_frames, int lag);

/// Average over n of the overlap-normalized inner product
/// sum_i phi'_{n-T}(i - T v) phi'_n(i) / P_contrib, with bilinear
/// interpolation for fractional shifts. Returns nullopt when the overlap of
/// the shifted aperture falls below `min_overlap` of the valid pixels.
std::optional<double> cross_correlation(const ScreenSequence& seq_norm, const Vec2& v, int lag,
                                        double min_overlap = 0.25);

struct LagEstimate {
  int lag = 0;
  Vec2 v_hat;               // [px/step]
  double peak_corr = 0.0;   // correlation at the integer-shift maximum
  double snr_bound = 0.0;   // snr_correlation_bound for this lag
  int lag_cap = 0;          // floor((N - 1) / max ||v_hat||) at this lag
  bool at_boundary = false; // integer maximum touches the admissible-shift edge
  bool retained = false;
};

struct VelocityEstimate {
  Vec2 v_hat;
  std::vector<LagEstimate> per_lag;  // every evaluated lag, in order
  int t_max_used = 0;                // largest retained lag
};

struct VelocityOptions {
  int max_lag = 512;       // hard cap on evaluated lags
  int batch = 8;           // lags accumulated per pass over the data
  double min_overlap = 0.25;
  Averaging average = Averaging::mean;
};

/// Integer grid search of the lag-T correlation surface (FFT based),
/// per-axis parabolic peak refinement, and prefix retention of lags that
/// satisfy the aperture-crossing cap and the SNR bound and whose maximum
/// lies inside the admissible shifts.
VelocityEstimate estimate_velocity(const ScreenSequence& seq_norm, const VelocityOptions& options = {});

// ------------------------------------------------------------------ alpha

struct AlphaEstimate {
  double alpha = 0.0;  // clamped to [0, 1]
  double raw = 0.0;
  bool clamped = false;
  double numerator = 0.0;
  double denominator = 0.0;
};

/// Closed-form least-squares flow coefficient over the valid index set.
/// `seq` must be square, fully valid and TTP-removed.
AlphaEstimate estimate_alpha(const ScreenSequence& seq, const Vec2& v_hat, const SpectralGrid& grid);

// ------------------------------------------------------------------ pipeline

struct EstimateOptions {
  bool anisotropic = false;
  int kmax = kDefaultKmax;
  L0Extent l0_extent = L0Extent::valid_width;
  Averaging r0_average = Averaging::mean;
  VelocityOptions velocity;
  Gamma0Options gamma0;
};

struct EstimationDiagnostics {
  ApertureSquare square;
  double L0_inscribed = 0.0;
  double L0_valid_width = 0.0;
  double r0_isotropic = 0.0;
  std::optional<Gamma0Fit> gamma0_fit;
  std::vector<LagEstimate> lag_table;
  int t_max_used = 0;
  double alpha_raw = 0.0;
  bool alpha_clamped = false;
};

struct EstimationReport {
  double L0_hat = 0.0;
  double r0_hat = 0.0;
  double gamma0_hat = 1.0;
  Vec2 v_hat;
  double alpha_hat = 0.0;
  int kmax = kDefaultKmax;
  bool anisotropic = false;
  EstimationDiagnostics diagnostics;
};

/// inscribed square -> crop -> TTP removal -> L0 -> (gamma0,) r0 ->
/// velocity -> alpha.
EstimationReport estimate_all(const ScreenSequence& seq, const EstimateOptions& options = {});

}  // namespace bflow
