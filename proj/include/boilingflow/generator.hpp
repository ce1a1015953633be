#pragma once

// Boiling-flow synthesis of phase-screen sequences.
//
// The recursion runs on an oversampled (oversample * n_out)^2 Fourier grid.
// Spectral arrays here are in natural FFT order (zero frequency at [0, 0]).

#include <cstdint>
#include <memory>
#include <numbers>

#include "boilingflow/fft.hpp"
#include "boilingflow/random.hpp"
#include "boilingflow/spectrum.hpp"

namespace bflow {

struct BoilingFlowParams {
  VonKarmanModel model;
  Vec2 v;              // flow velocity [output-grid pixels / step]
  double alpha = 0.0;  // flow coefficient in [0, 1]
  Eigen::Index n_out = 64;
  double delta = 1.0;  // pixel pitch [m]
  double fs = 1.0;     // sampling rate [Hz]
  int oversample = 4;

  Eigen::Index n_grid() const { return n_out * oversample; }
};

void validate(const BoilingFlowParams& p);

struct GeneratorState {
  ImageC phi_tilde;  // current Fourier-domain screen on the oversampled grid
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

/// Delta_f * sqrt(V_phi(k Delta_f)) on the natural-order lattice of `grid`
/// with the zero-frequency bin set to 0.
ImageD boiling_amplitude(const SpectralGrid& grid, const VonKarmanModel& model);

/// Hermitian white noise with E|eps_k|^2 = 1 on every bin. Paired bins get
/// (a + ib)/sqrt(2) and its conjugate; self-conjugate bins get a real unit
/// normal. Draw order is row-major over the first member of each pair.
template <typename NormalSource>
ImageC hermitian_noise(Eigen::Index n, NormalSource&& next) {
  ImageC eps(n, n);
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index pr = (n - r) % n;
    for (Eigen::Index c = 0; c < n; ++c) {
      const Eigen::Index pc = (n - c) % n;
      const Eigen::Index self = r * n + c;
      const Eigen::Index partner = pr * n + pc;
      if (partner == self) {
        eps(r, c) = next();
      } else if (self < partner) {
        const double a = next();
        const double b = next();
        eps(r, c) = {a * inv_sqrt2, b * inv_sqrt2};
        eps(pr, pc) = std::conj(eps(r, c));
      }
    }
  }
  return eps;
}

/// One boiling draw given a precomputed amplitude.
template <typename NormalSource>
ImageC boiling_step(const ImageD& amplitude, NormalSource&& next) {
  return hermitian_noise(amplitude.rows(), next) * amplitude.cast<std::complex<double>>();
}

/// One boiling draw on `grid` for `model`.
template <typename NormalSource>
ImageC boiling_step(const SpectralGrid& grid, const VonKarmanModel& model, NormalSource&& next) {
  return boiling_step(boiling_amplitude(grid, model), next);
}

/// Unimodular multiplier exp(-j 2 pi (v.x k0 + v.y k1) / n) that translates
/// an n_grid x n_grid image by v pixels.
ImageC flow_multiplier(const Vec2& v, Eigen::Index n_grid);

/// Element-wise flow translation of a natural-order spectrum.
ImageC flow_step(const ImageC& phi_tilde, const Vec2& v, Eigen::Index n_grid);

/// Restores exact conjugate symmetry on the self-paired Nyquist row and
/// column, which a fractional translation breaks. No-op elsewhere.
void symmetrize_nyquist(ImageC& spectrum);

/// Initial state phi_0 = B_0.
GeneratorState initial_state(const BoilingFlowParams& params, std::uint64_t seed);

/// phi_n = sqrt(1 - alpha^2) B_n + alpha F_n. The boiling draw is taken even
/// when alpha == 1 so equal seeds share noise across alpha values.
GeneratorState boiling_flow_step(const GeneratorState& state, const BoilingFlowParams& params);

struct GenerateOptions {
  bool remove_ttp = true;
};

/// Streams frames of a boiling-flow sequence with cached amplitude, flow
/// multiplier and FFT plans.
class BoilingFlowGenerator {
 public:
  BoilingFlowGenerator(const BoilingFlowParams& params, std::uint64_t seed, GenerateOptions options = {});

  const GeneratorState& state() const { return state_; }
  const BoilingFlowParams& params() const { return params_; }

  /// Advances the recursion by one step.
  void advance();

  /// Image-domain screen of the current state: inverse FFT, real part
  /// (exact by symmetry), crop to n_out x n_out, optional TTP removal.
  ImageD frame() const;

  /// Full oversampled image-domain screen (no crop, no TTP removal).
  ImageD oversampled_frame() const;

 private:
  BoilingFlowParams params_;
  GenerateOptions options_;
  SpectralGrid grid_;
  ImageD amplitude_;
  ImageC flow_;
  std::unique_ptr<RealFft2> fft_;
  TtpBasis basis_;
  GeneratorState state_;
};

/// Generates n_frames screens; deterministic in (params, seed).
ScreenSequence generate_sequence(const BoilingFlowParams& params, std::size_t n_frames, std::uint64_t seed,
                                 GenerateOptions options = {});

}  // namespace bflow
