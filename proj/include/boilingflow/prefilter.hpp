#pragma once

// Linear-phase FIR notch and band-stop filters applied along time to every
// pixel of a sequence.

#include <complex>
#include <optional>
#include <vector>

#include "boilingflow/core_grid.hpp"

namespace bflow {

enum class FilterKind { notch, bandstop };

struct FilterDesign {
  FilterKind kind = FilterKind::notch;
  double f0 = 0.0;                // center frequency [Hz]
  std::optional<double> fr;       // half-width [Hz], band-stop only
  double r = 1.0;                 // power reduction factor at f0, in (0, 1)
  int N_W = 1;                    // odd filter length
  double fs = 1.0;                // sampling rate [Hz]
};

struct FirFilter {
  Eigen::ArrayXd taps;  // symmetric, length N_W, centered on index (N_W - 1) / 2
  FilterDesign design;
};

/// taps = delta - (1 - sqrt(r)) g / sum(g cos), g = hamming * cos(2 pi f0 n / fs).
FirFilter design_notch(double f0, double r, int N_W, double fs);

/// Windowed-sinc low-pass of half-width fr, modulated to f0 and normalized
/// there; taps = delta - (1 - sqrt(r)) b.
FirFilter design_bandstop(double f0, double fr, double r, int N_W, double fs);

/// Band-stop over (f1, f2): f0 = (f1 + f2) / 2, fr = (f2 - f1) / 2.
FirFilter design_bandstop_edges(double f1, double f2, double r, int N_W, double fs);

/// Discrete-time frequency response sum_n taps[n] exp(-i 2 pi f n / fs).
std::complex<double> frequency_response(const Eigen::ArrayXd& taps, double f, double fs);

/// Convolves every valid pixel's time series with each filter in turn,
/// keeping only the fully overlapped region. Output length is
/// N_T - sum(N_W - 1); output frame j is centered on input frame
/// j + sum(N_W - 1) / 2.
ScreenSequence apply_fir(const ScreenSequence& seq, const std::vector<FirFilter>& filters);

}  // namespace bflow
