#include "boilingflow/generator.hpp"

#include <cmath>
#include <limits>

namespace bflow {

namespace {

// Upper bound on stored samples for one generated sequence.
constexpr std::size_t kMaxSequenceSamples = std::size_t{1} << 31;

ImageC make_boiling(const ImageD& amplitude, std::uint64_t seed, std::uint64_t step) {
  StepNoise noise(seed, step);
  return boiling_step(amplitude, noise);
}

}  // namespace

void validate(const BoilingFlowParams& p) {
  validate(p.model);
  if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw InvalidInput("BoilingFlowParams: alpha must lie in [0, 1]");
  if (p.n_out < 2) throw InvalidInput("BoilingFlowParams: n_out must be >= 2");
  if (p.oversample < 1) throw InvalidInput("BoilingFlowParams: oversample must be >= 1");
  if (!(p.delta > 0.0) || !(p.fs > 0.0)) throw InvalidInput("BoilingFlowParams: delta and fs must be positive");
  if (!std::isfinite(p.v.x) || !std::isfinite(p.v.y)) throw InvalidInput("BoilingFlowParams: velocity must be finite");
}

ImageD boiling_amplitude(const SpectralGrid& grid, const VonKarmanModel& model) {
  validate(model);
  const Eigen::Index n = grid.n;
  const double df = grid.delta_f();
  ImageD amp(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double fy = static_cast<double>(fft_freq_index(r, n)) * df;
    for (Eigen::Index c = 0; c < n; ++c) {
      const double fx = static_cast<double>(fft_freq_index(c, n)) * df;
      amp(r, c) = df * std::sqrt(v_phi(fx, fy, model));
    }
  }
  amp(0, 0) = 0.0;
  return amp;
}

ImageC flow_multiplier(const Vec2& v, Eigen::Index n_grid) {
  ImageC mult(n_grid, n_grid);
  const double scale = 2.0 * std::numbers::pi / static_cast<double>(n_grid);
  for (Eigen::Index r = 0; r < n_grid; ++r) {
    const double k1 = static_cast<double>(fft_freq_index(r, n_grid));
    for (Eigen::Index c = 0; c < n_grid; ++c) {
      const double k0 = static_cast<double>(fft_freq_index(c, n_grid));
      const double phase = -scale * (v.x * k0 + v.y * k1);
      mult(r, c) = {std::cos(phase), std::sin(phase)};
    }
  }
  return mult;
}

ImageC flow_step(const ImageC& phi_tilde, const Vec2& v, Eigen::Index n_grid) {
  if (phi_tilde.rows() != n_grid || phi_tilde.cols() != n_grid)
    throw InvalidInput("flow_step: spectrum is not n_grid x n_grid");
  return phi_tilde * flow_multiplier(v, n_grid);
}

void symmetrize_nyquist(ImageC& s) {
  const Eigen::Index n = s.rows();
  if (n % 2 != 0 || s.cols() != n) return;
  const Eigen::Index h = n / 2;
  auto fix = [&](Eigen::Index r, Eigen::Index c) {
    const Eigen::Index pr = (n - r) % n, pc = (n - c) % n;
    if (pr * n + pc < r * n + c) return;  // handled from the partner
    const std::complex<double> avg = 0.5 * (s(r, c) + std::conj(s(pr, pc)));
    s(r, c) = avg;
    s(pr, pc) = std::conj(avg);
  };
  for (Eigen::Index c = 0; c < n; ++c) fix(h, c);
  for (Eigen::Index r = 0; r < n; ++r) fix(r, h);
}

GeneratorState initial_state(const BoilingFlowParams& params, std::uint64_t seed) {
  validate(params);
  const SpectralGrid grid{params.n_grid(), params.delta, 0};
  return GeneratorState{make_boiling(boiling_amplitude(grid, params.model), seed, 0), seed, 0};
}

namespace {

GeneratorState advance_state(const GeneratorState& state, const BoilingFlowParams& params, const ImageD& amplitude,
                             const ImageC& flow) {
  GeneratorState next;
  next.seed = state.seed;
  next.step = state.step + 1;
  const ImageC boiling = make_boiling(amplitude, state.seed, next.step);
  const double a = params.alpha;
  const double b = std::sqrt(std::max(0.0, 1.0 - a * a));
  next.phi_tilde = b * boiling + a * (state.phi_tilde * flow);
  symmetrize_nyquist(next.phi_tilde);
  return next;
}

}  // namespace

GeneratorState boiling_flow_step(const GeneratorState& state, const BoilingFlowParams& params) {
  validate(params);
  const Eigen::Index n = params.n_grid();
  if (state.phi_tilde.rows() != n || state.phi_tilde.cols() != n)
    throw InvalidInput("boiling_flow_step: state does not match the oversampled grid");
  const SpectralGrid grid{n, params.delta, 0};
  // The oversampled grid shares the output pixel pitch, so v carries over unchanged.
  return advance_state(state, params, boiling_amplitude(grid, params.model), flow_multiplier(params.v, n));
}

BoilingFlowGenerator::BoilingFlowGenerator(const BoilingFlowParams& params, std::uint64_t seed,
                                           GenerateOptions options)
    : params_(params), options_(options) {
  validate(params_);
  const Eigen::Index n = params_.n_grid();
  grid_ = SpectralGrid{n, params_.delta, 0};
  amplitude_ = boiling_amplitude(grid_, params_.model);
  flow_ = flow_multiplier(params_.v, n);
  fft_ = std::make_unique<RealFft2>(n, n);
  basis_ = make_ttp_basis(Mask::Constant(params_.n_out, params_.n_out, true));
  state_ = GeneratorState{make_boiling(amplitude_, seed, 0), seed, 0};
}

void BoilingFlowGenerator::advance() { state_ = advance_state(state_, params_, amplitude_, flow_); }

ImageD BoilingFlowGenerator::oversampled_frame() const {
  ImageD img;
  fft_->inverse(state_.phi_tilde.leftCols(fft_->half_cols()), img);
  return img;
}

ImageD BoilingFlowGenerator::frame() const {
  ImageD crop = oversampled_frame().topLeftCorner(params_.n_out, params_.n_out);
  if (options_.remove_ttp) return ttp_remove(crop, basis_);
  return crop;
}

ScreenSequence generate_sequence(const BoilingFlowParams& params, std::size_t n_frames, std::uint64_t seed,
                                 GenerateOptions options) {
  validate(params);
  if (n_frames < 1) throw InvalidInput("generate_sequence: n_frames must be >= 1");
  const auto pixels = static_cast<std::size_t>(params.n_out * params.n_out);
  if (n_frames > kMaxSequenceSamples / pixels)
    throw InvalidInput("generate_sequence: frame count x grid size exceeds the sample limit");

  BoilingFlowGenerator gen(params, seed, options);
  ScreenSequence seq;
  seq.delta = params.delta;
  seq.fs = params.fs;
  seq.mask = Mask::Constant(params.n_out, params.n_out, true);
  seq.frames.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    if (i > 0) gen.advance();
    seq.frames.push_back(gen.frame());
  }
  return seq;
}

}  // namespace bflow
