#pragma once

// Generate -> estimate -> regenerate experiment on synthetic data.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "boilingflow/estimator.hpp"
#include "boilingflow/generator.hpp"

namespace bflow {

struct RoundtripConfig {
  BoilingFlowParams truth;
  std::size_t frames_train = 10000;
  std::size_t frames_eval = 10000;
  int trials = 3;
  std::uint64_t seed = 0;
  EstimateOptions estimate;
};

/// Seeds of one trial: train, eval and regenerated sequences use streams
/// 0, 1 and 2 of derive_seed(master, trial).
struct TrialSeeds {
  std::uint64_t train = 0, eval = 0, regen = 0;
};
TrialSeeds trial_seeds(std::uint64_t master, int trial);

struct TrialResult {
  int trial = 0;
  bool ok = false;
  std::string error;  // stage-labeled message when !ok
  EstimationReport report;
  double rel_err_r0 = 0.0;
  double rel_err_v = 0.0;  // ||v_hat - v|| / ||v||
  double rel_err_alpha = 0.0;
  double rel_err_gamma0 = 0.0;
  double phase_tps_nrmse = 0.0;
  double flow_tps_nrmse = 0.0;
  double sf_nrmse = 0.0;
};

/// Relative error |est - truth| / |truth|, or the absolute error when truth is 0.
double relative_error(double estimate, double truth);

TrialResult run_trial(const RoundtripConfig& config, int trial);

struct RoundtripSummary {
  std::vector<TrialResult> trials;
  std::optional<TrialResult> mean;  // averages over successful trials
};

/// Runs every trial in order; a failing trial is recorded and the run continues.
RoundtripSummary run_roundtrip(const RoundtripConfig& config);

void write_roundtrip_csv(std::ostream& os, const RoundtripSummary& summary);

}  // namespace bflow
