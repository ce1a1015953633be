#include "boilingflow/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "boilingflow/correlation.hpp"
#include "boilingflow/fft.hpp"
#include "boilingflow/generator.hpp"

namespace bflow {

namespace {

double average(std::vector<double> v, Averaging avg) {
  if (v.empty()) throw DegenerateInput("average of an empty set");
  if (avg == Averaging::mean) return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

void require_square_full(const ScreenSequence& seq, const char* who) {
  validate(seq);
  if (seq.rows() != seq.cols()) throw InvalidInput(std::string(who) + ": frames must be square");
  if (seq.valid_count() != seq.mask.size())
    throw InvalidInput(std::string(who) + ": frames must be fully valid (crop to the inscribed square)");
}

}  // namespace

// ------------------------------------------------------------------ L0

double estimate_L0(const ApertureSquare& square, double delta) { return static_cast<double>(square.side) * delta; }

double estimate_L0(const Mask& mask, double delta, L0Extent extent) {
  if (extent == L0Extent::inscribed_square) return estimate_L0(largest_inscribed_square(mask), delta);
  return static_cast<double>(valid_extent(mask)) * delta;
}

// ------------------------------------------------------------------ r0

R0Map estimate_r0_map(const ImageD& psd_meas, const SpectralGrid& grid, double L0, double gamma0) {
  if (psd_meas.rows() != grid.n || psd_meas.cols() != grid.n)
    throw InvalidInput("estimate_r0_map: PSD does not match the grid");
  if (!(L0 > 0.0) || !(gamma0 > 0.0)) throw InvalidInput("estimate_r0_map: L0 and gamma0 must be positive");
  R0Map map;
  map.indices = valid_index_set(grid);
  map.values.reserve(map.indices.size());
  const double df = grid.delta_f();
  for (const auto& k : map.indices) {
    const double v = psd_meas(shifted_row(k, grid.n), shifted_col(k, grid.n));
    if (!(v > 0.0)) throw DegenerateInput("estimate_r0_map: nonpositive PSD inside the valid index set");
    const double q = q_phi(k.k0 * df, k.k1 * df, L0, gamma0);
    map.values.push_back(std::pow(q / v, 3.0 / 5.0));
  }
  return map;
}

double estimate_r0(const R0Map& map, Averaging avg) {
  if (map.values.empty()) throw DegenerateInput("estimate_r0: empty index set");
  return average(map.values, avg);
}

// ------------------------------------------------------------------ gamma0

StructureFunction2D model_structure_function(Eigen::Index n, double delta, double L0, double gamma0,
                                             int oversample) {
  if (n < 2 || oversample < 2) throw InvalidInput("model_structure_function: need n >= 2 and oversample >= 2");
  const Eigen::Index ng = n * oversample;
  const SpectralGrid grid{ng, delta, 0};
  // E|B_k|^2 on the oversampled lattice; r0 = 1 since the normalized
  // structure function does not depend on it.
  const ImageD power = boiling_amplitude(grid, VonKarmanModel{L0, 1.0, gamma0}).square();

  Fft2 fft(ng, ng);
  ImageC cov_c = power.cast<std::complex<double>>();
  fft.inverse(cov_c);
  const ImageD cov = cov_c.real();  // C(r), periodic on ng

  const TtpBasis basis = make_ttp_basis(Mask::Constant(n, n, true));
  std::array<ImageD, 3> w;  // (C U_m) restricted to the aperture
  for (int m = 0; m < 3; ++m) {
    ImageC buf = ImageC::Zero(ng, ng);
    buf.topLeftCorner(n, n) = basis.modes[m].cast<std::complex<double>>();
    fft.forward(buf);
    buf *= power.cast<std::complex<double>>();
    fft.inverse(buf);
    w[m] = buf.topLeftCorner(n, n).real();
  }
  Eigen::Matrix3d g;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) g(a, b) = (basis.modes[a] * w[b]).sum();

  // C'_ij = C(i - j) - sum_m U_im (W_jm - H_jm) - sum_m W_im U_jm, H = U G.
  std::array<ImageD, 3> a_m;
  ImageD diag = ImageD::Constant(n, n, cov(0, 0));
  for (int m = 0; m < 3; ++m) {
    ImageD h = ImageD::Zero(n, n);
    for (int l = 0; l < 3; ++l) h += basis.modes[l] * g(l, m);
    a_m[m] = w[m] - h;
    diag += -2.0 * basis.modes[m] * w[m] + basis.modes[m] * h;
  }
  const double var = diag.mean();

  CorrelationPlan plan(n, n);
  ImageC cross = ImageC::Zero(2 * n, n + 1);
  for (int m = 0; m < 3; ++m) {
    const ImageC su = plan.spectrum(basis.modes[m]);
    cross += su * plan.spectrum(a_m[m]).conjugate();
    cross += plan.spectrum(w[m]) * su.conjugate();
  }
  const ImageD corrections = plan.lattice(cross);

  StructureFunction2D sf;
  sf.rows = n;
  sf.cols = n;
  sf.counts = pair_counts(Mask::Constant(n, n, true));
  const Eigen::Index l = 2 * n - 1;
  ImageD mean_cov(l, l);
  for (Eigen::Index ry = -(n - 1); ry <= n - 1; ++ry) {
    for (Eigen::Index rx = -(n - 1); rx <= n - 1; ++rx) {
      const Eigen::Index r = ry + n - 1, c = rx + n - 1;
      mean_cov(r, c) = cov(fft_storage_index(ry, ng), fft_storage_index(rx, ng)) - corrections(r, c) / sf.counts(r, c);
    }
  }
  sf.values.resize(l, l);
  for (Eigen::Index r = 0; r < l; ++r)
    for (Eigen::Index c = 0; c < l; ++c)
      sf.values(r, c) = 2.0 * (1.0 - 0.5 * (mean_cov(r, c) + mean_cov(l - 1 - r, l - 1 - c)) / var);
  sf.values(n - 1, n - 1) = 0.0;
  return sf;
}

namespace {

double sf_mse(const StructureFunction2D& model, const StructureFunction2D& data) {
  double ss = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < data.values.size(); ++i) {
    if (data.counts(i) < 1.0) continue;
    const double d = model.values(i) - data.values(i);
    ss += d * d;
    ++count;
  }
  return ss / static_cast<double>(count);
}

struct GoldenResult {
  double x = 0.0;
  double f = 0.0;
};

template <typename F>
GoldenResult golden_section(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

}  // namespace

Gamma0Fit estimate_gamma0(const ImageD& psd_meas, const StructureFunction2D& data_sf, const SpectralGrid& grid,
                          double L0, const Gamma0Options& opt) {
  if (data_sf.rows != grid.n || data_sf.cols != grid.n)
    throw InvalidInput("estimate_gamma0: structure function does not match the grid");
  Gamma0Fit fit;
  auto objective = [&](double x) {
    const double f = sf_mse(model_structure_function(grid.n, grid.delta, L0, std::pow(10.0, x), opt.oversample), data_sf);
    fit.evaluations.emplace_back(x, f);
    return f;
  };

  double lo = opt.log10_lo, hi = opt.log10_hi;
  GoldenResult best;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const double f_lo = objective(lo);
    const double f_hi = objective(hi);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    const double f_c = objective(hi - inv_phi * (hi - lo));
    const double f_d = objective(lo + inv_phi * (hi - lo));
    fit.non_unimodal = f_lo < std::min(f_c, f_d) && f_hi < std::min(f_c, f_d);
    best = golden_section(objective, lo, hi, opt.tolerance);
    if (f_lo < best.f) best = {lo, f_lo};
    if (f_hi < best.f) best = {hi, f_hi};
    fit.at_bracket_end = best.x - lo < 2.0 * opt.tolerance || hi - best.x < 2.0 * opt.tolerance;
    if (!(fit.at_bracket_end && opt.widen_on_bracket_end) || attempt == 1) break;
    if (best.x - lo < hi - best.x) lo -= 2.0; else hi += 2.0;
  }
  fit.gamma0 = std::pow(10.0, best.x);
  fit.objective = best.f;
  fit.r0 = estimate_r0(estimate_r0_map(psd_meas, grid, L0, fit.gamma0), opt.r0_average);
  return fit;
}

Gamma0Fit estimate_gamma0(const ScreenSequence& seq, const SpectralGrid& grid, double L0, const Gamma0Options& opt) {
  require_square_full(seq, "estimate_gamma0");
  return estimate_gamma0(estimate_spatial_psd(seq), structure_function_2d(seq), grid, L0, opt);
}

// ------------------------------------------------------------------ velocity

double snr_correlation_bound(std::size_t n_frames, int lag) {
  if (lag < 1 || static_cast<std::size_t>(lag) >= n_frames) throw InvalidInput("snr_correlation_bound: lag out of range");
  return 15.0 * std::numbers::sqrt2 / std::sqrt(static_cast<double>(n_frames - static_cast<std::size_t>(lag)));
}

std::optional<double> cross_correlation(const ScreenSequence& seq, const Vec2& v, int lag, double min_overlap) {
  validate(seq);
  if (lag < 1 || static_cast<std::size_t>(lag) >= seq.size()) throw InvalidInput("cross_correlation: lag out of range");
  const Eigen::Index rows = seq.rows(), cols = seq.cols();
  const double sx = lag * v.x, sy = lag * v.y;

  struct Tap {
    Eigen::Index target;
    std::array<Eigen::Index, 4> src;
    std::array<double, 4> w;
  };
  std::vector<Tap> taps;
  const double eps = 1e-12;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!seq.mask(r, c)) continue;
      const double px = static_cast<double>(c) - sx, py = static_cast<double>(r) - sy;
      const double fx0 = std::floor(px + eps), fy0 = std::floor(py + eps);
      double tx = px - fx0, ty = py - fy0;
      if (tx < eps) tx = 0.0;
      if (ty < eps) ty = 0.0;
      const auto x0 = static_cast<Eigen::Index>(fx0), y0 = static_cast<Eigen::Index>(fy0);
      Tap tap{r * cols + c, {}, {}};
      bool ok = true;
      int k = 0;
      for (int dy = 0; dy < 2 && ok; ++dy) {
        for (int dx = 0; dx < 2 && ok; ++dx) {
          const double wt = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty);
          const Eigen::Index xx = x0 + dx, yy = y0 + dy;
          if (wt == 0.0) {
            tap.src[k] = 0;
            tap.w[k++] = 0.0;
            continue;
          }
          if (xx < 0 || yy < 0 || xx >= cols || yy >= rows || !seq.mask(yy, xx)) {
            ok = false;
            break;
          }
          tap.src[k] = yy * cols + xx;
          tap.w[k++] = wt;
        }
      }
      if (ok) taps.push_back(tap);
    }
  }
  if (static_cast<double>(taps.size()) < min_overlap * static_cast<double>(seq.valid_count()) || taps.empty())
    return std::nullopt;

  double total = 0.0;
  for (std::size_t n = static_cast<std::size_t>(lag); n < seq.size(); ++n) {
    const ImageD& prev = seq.frames[n - static_cast<std::size_t>(lag)];
    const ImageD& cur = seq.frames[n];
    double s = 0.0;
    for (const auto& t : taps) {
      double p = 0.0;
      for (int k = 0; k < 4; ++k)
        if (t.w[k] != 0.0) p += t.w[k] * prev(t.src[k]);
      s += p * cur(t.target);
    }
    total += s / static_cast<double>(taps.size());
  }
  return total / static_cast<double>(seq.size() - static_cast<std::size_t>(lag));
}

namespace {

// Per-axis three-point parabolic vertex offset, in [-0.5, 0.5].
double parabolic_offset(double left, double center, double right) {
  const double denom = left - 2.0 * center + right;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace

VelocityEstimate estimate_velocity(const ScreenSequence& seq, const VelocityOptions& opt) {
  validate(seq);
  const std::size_t nt = seq.size();
  if (nt < 3) throw InvalidInput("estimate_velocity: need at least 3 frames");
  const Eigen::Index rows = seq.rows(), cols = seq.cols();
  const Eigen::Index side = std::min(rows, cols);
  const int last_lag = static_cast<int>(std::min<std::size_t>(nt - 1, static_cast<std::size_t>(std::max(1, opt.max_lag))));
  const int batch = std::max(1, opt.batch);

  CorrelationPlan plan(rows, cols);
  const ImageD counts = pair_counts(seq.mask);
  const double min_pairs = opt.min_overlap * static_cast<double>(seq.valid_count());
  const Mask admissible = counts >= std::max(1.0, min_pairs);

  VelocityEstimate out;
  double vmax = 0.0;
  std::vector<Vec2> kept;
  bool stop = false;
  for (int first = 1; first <= last_lag && !stop; first += batch) {
    const int last = std::min(last_lag, first + batch - 1);
    const std::size_t ring = static_cast<std::size_t>(last) + 1;
    std::vector<ImageC> spectra(ring);
    std::vector<ImageC> acc(static_cast<std::size_t>(last - first + 1), ImageC::Zero(2 * rows, cols + 1));
    for (std::size_t n = 0; n < nt; ++n) {
      ImageC& s = spectra[n % ring];
      s = plan.spectrum(seq.frames[n]);
      for (int lag = first; lag <= last; ++lag) {
        if (n < static_cast<std::size_t>(lag)) continue;
        acc[static_cast<std::size_t>(lag - first)] += s * spectra[(n - static_cast<std::size_t>(lag)) % ring].conjugate();
      }
    }

    for (int lag = first; lag <= last; ++lag) {
      ImageD surface = plan.lattice(acc[static_cast<std::size_t>(lag - first)]);
      surface /= counts.max(1.0) * static_cast<double>(nt - static_cast<std::size_t>(lag));
      Eigen::Index br = -1, bc = -1;
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < surface.rows(); ++r)
        for (Eigen::Index c = 0; c < surface.cols(); ++c)
          if (admissible(r, c) && surface(r, c) > best) {
            best = surface(r, c);
            br = r;
            bc = c;
          }
      if (br < 0) throw EstimationError("velocity", "no admissible shift");

      const bool x_ok = bc > 0 && bc + 1 < surface.cols() && admissible(br, bc - 1) && admissible(br, bc + 1);
      const bool y_ok = br > 0 && br + 1 < surface.rows() && admissible(br - 1, bc) && admissible(br + 1, bc);
      const double ox = x_ok ? parabolic_offset(surface(br, bc - 1), best, surface(br, bc + 1)) : 0.0;
      const double oy = y_ok ? parabolic_offset(surface(br - 1, bc), best, surface(br + 1, bc)) : 0.0;

      LagEstimate est;
      est.lag = lag;
      est.v_hat = {(static_cast<double>(bc - (cols - 1)) + ox) / lag, (static_cast<double>(br - (rows - 1)) + oy) / lag};
      est.peak_corr = best;
      est.snr_bound = snr_correlation_bound(nt, lag);
      vmax = std::max(vmax, norm(est.v_hat));
      const double cap = vmax > 0.0 ? std::floor(static_cast<double>(side - 1) / vmax) : static_cast<double>(last_lag);
      est.lag_cap = static_cast<int>(std::min(cap, static_cast<double>(std::numeric_limits<int>::max())));
      // A maximum on the edge of the admissible region may be a truncated
      // peak lying outside it.
      est.at_boundary = !(x_ok && y_ok);
      est.retained = lag <= est.lag_cap && est.peak_corr >= est.snr_bound && !est.at_boundary;
      out.per_lag.push_back(est);
      if (!est.retained) {
        stop = true;
        break;
      }
      kept.push_back(est.v_hat);
      out.t_max_used = lag;
    }
  }

  if (kept.empty()) {
    std::string detail = "no lag satisfies both the aperture cap and the SNR bound";
    if (!out.per_lag.empty()) {
      const auto& l = out.per_lag.front();
      detail += " (lag 1: peak " + std::to_string(l.peak_corr) + ", bound " + std::to_string(l.snr_bound) + ")";
    }
    throw EstimationError("velocity", detail);
  }
  std::vector<double> xs, ys;
  for (const auto& v : kept) {
    xs.push_back(v.x);
    ys.push_back(v.y);
  }
  out.v_hat = {average(xs, opt.average), average(ys, opt.average)};
  return out;
}

// ------------------------------------------------------------------ alpha

AlphaEstimate estimate_alpha(const ScreenSequence& seq, const Vec2& v_hat, const SpectralGrid& grid) {
  require_square_full(seq, "estimate_alpha");
  const Eigen::Index n = seq.rows();
  if (grid.n != n) throw InvalidInput("estimate_alpha: grid does not match the frames");
  if (seq.size() < 2) throw InvalidInput("estimate_alpha: need at least 2 frames");

  std::vector<Eigen::Index> bins;
  for (const auto& k : valid_index_set(grid))
    bins.push_back(fft_storage_index(k.k1, n) * n + fft_storage_index(k.k0, n));

  Fft2 fft(n, n);
  const ImageC flow = flow_multiplier(v_hat, n);
  const TtpBasis basis = make_ttp_basis(seq.mask);
  const double inv_size = 1.0 / static_cast<double>(n * n);

  auto forward = [&](const ImageD& img) {
    ImageC s = img.cast<std::complex<double>>();
    fft.forward(s);
    return s;
  };

  AlphaEstimate out;
  ImageC prev = forward(seq.frames[0]);
  for (std::size_t t = 1; t < seq.size(); ++t) {
    ImageC cur = forward(seq.frames[t]);
    ImageC pred = prev * flow;
    fft.inverse(pred);
    const ImageD moved = ttp_remove(ImageD(pred.real() * inv_size), basis);
    const ImageC pred_s = forward(moved);
    for (const Eigen::Index b : bins) {
      out.numerator += std::real(std::conj(pred_s(b)) * cur(b));
      out.denominator += std::norm(pred_s(b));
    }
    prev = std::move(cur);
  }
  if (!(out.denominator > 0.0)) throw DegenerateInput("estimate_alpha: predicted flow has zero energy");
  out.raw = out.numerator / out.denominator;
  out.alpha = std::clamp(out.raw, 0.0, 1.0);
  out.clamped = out.alpha != out.raw;
  return out;
}

// ------------------------------------------------------------------ pipeline

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const EstimationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EstimationError(name, e.what());
  }
}

}  // namespace

EstimationReport estimate_all(const ScreenSequence& seq, const EstimateOptions& opt) {
  EstimationReport rep;
  rep.kmax = opt.kmax;
  rep.anisotropic = opt.anisotropic;
  auto& diag = rep.diagnostics;

  stage("input", [&] { validate(seq); return 0; });
  diag.square = stage("aperture", [&] { return largest_inscribed_square(seq.mask); });
  const ScreenSequence data = stage("ttp", [&] { return ttp_remove(crop(seq, diag.square)); });

  diag.L0_inscribed = estimate_L0(diag.square, seq.delta);
  diag.L0_valid_width = stage("L0", [&] { return estimate_L0(seq.mask, seq.delta, L0Extent::valid_width); });
  rep.L0_hat = opt.l0_extent == L0Extent::valid_width ? diag.L0_valid_width : diag.L0_inscribed;

  const SpectralGrid grid = stage("grid", [&] { return make_spectral_grid(diag.square.side, seq.delta, opt.kmax); });
  const ImageD psd = stage("psd", [&] { return estimate_spatial_psd(data); });
  diag.r0_isotropic = stage("r0", [&] { return estimate_r0(estimate_r0_map(psd, grid, rep.L0_hat, 1.0), opt.r0_average); });

  if (opt.anisotropic) {
    Gamma0Options gopt = opt.gamma0;
    gopt.r0_average = opt.r0_average;
    diag.gamma0_fit = stage("gamma0", [&] {
      return estimate_gamma0(psd, structure_function_2d(data), grid, rep.L0_hat, gopt);
    });
    rep.gamma0_hat = diag.gamma0_fit->gamma0;
    rep.r0_hat = diag.gamma0_fit->r0;
  } else {
    rep.gamma0_hat = 1.0;
    rep.r0_hat = diag.r0_isotropic;
  }

  const VelocityEstimate vel = stage("velocity", [&] {
    ScreenSequence norm_seq = data;
    for (auto& f : norm_seq.frames) f = normalize_frame(f, norm_seq.mask);
    return estimate_velocity(norm_seq, opt.velocity);
  });
  rep.v_hat = vel.v_hat;
  diag.lag_table = vel.per_lag;
  diag.t_max_used = vel.t_max_used;

  const AlphaEstimate alpha = stage("alpha", [&] { return estimate_alpha(data, rep.v_hat, grid); });
  rep.alpha_hat = alpha.alpha;
  diag.alpha_raw = alpha.raw;
  diag.alpha_clamped = alpha.clamped;
  return rep;
}

}  // namespace bflow
