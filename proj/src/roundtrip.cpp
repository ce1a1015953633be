#include "boilingflow/roundtrip.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "boilingflow/json_io.hpp"
#include "boilingflow/metrics.hpp"
#include "boilingflow/random.hpp"

namespace bflow {

TrialSeeds trial_seeds(std::uint64_t master, int trial) {
  const std::uint64_t base = derive_seed(master, static_cast<std::uint64_t>(trial));
  return {derive_seed(base, 0), derive_seed(base, 1), derive_seed(base, 2)};
}

double relative_error(double estimate, double truth) {
  const double err = std::abs(estimate - truth);
  return truth == 0.0 ? err : err / std::abs(truth);
}

TrialResult run_trial(const RoundtripConfig& cfg, int trial) {
  TrialResult res;
  res.trial = trial;
  const TrialSeeds seeds = trial_seeds(cfg.seed, trial);
  const BoilingFlowParams& t = cfg.truth;
  std::string stage = "generate";
  try {
    {
      const ScreenSequence train = generate_sequence(t, cfg.frames_train, seeds.train);
      stage = "estimate";
      res.report = estimate_all(train, cfg.estimate);
    }
    stage = "generate";
    const ScreenSequence eval = generate_sequence(t, cfg.frames_eval, seeds.eval);
    const BoilingFlowParams fitted = params_from_report(res.report, t.n_out, t.delta, t.fs, t.oversample);
    const ScreenSequence regen = generate_sequence(fitted, cfg.frames_eval, seeds.regen);

    stage = "metrics";
    res.phase_tps_nrmse = tps_nrmse(temporal_psd(regen), temporal_psd(eval));
    res.flow_tps_nrmse = tps_nrmse(flow_tps(regen), flow_tps(eval));
    res.sf_nrmse = sf_nrmse(structure_function_2d(regen), structure_function_2d(eval));

    const auto& r = res.report;
    res.rel_err_r0 = relative_error(r.r0_hat, t.model.r0);
    const double dv = norm({r.v_hat.x - t.v.x, r.v_hat.y - t.v.y});
    res.rel_err_v = norm(t.v) > 0.0 ? dv / norm(t.v) : dv;
    res.rel_err_alpha = relative_error(r.alpha_hat, t.alpha);
    res.rel_err_gamma0 = relative_error(r.gamma0_hat, t.model.gamma0);
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = dynamic_cast<const EstimationError*>(&e) ? std::string(e.what()) : stage + ": " + e.what();
  }
  return res;
}

RoundtripSummary run_roundtrip(const RoundtripConfig& cfg) {
  if (cfg.trials < 1) throw InvalidInput("roundtrip: trials must be >= 1");
  RoundtripSummary out;
  for (int i = 0; i < cfg.trials; ++i) out.trials.push_back(run_trial(cfg, i));

  TrialResult mean;
  mean.trial = -1;
  mean.ok = true;
  mean.report.kmax = cfg.estimate.kmax;
  mean.report.anisotropic = cfg.estimate.anisotropic;
  mean.report.gamma0_hat = 0.0;
  int n = 0;
  for (const auto& r : out.trials) {
    if (!r.ok) continue;
    ++n;
    mean.report.L0_hat += r.report.L0_hat;
    mean.report.r0_hat += r.report.r0_hat;
    mean.report.gamma0_hat += r.report.gamma0_hat;
    mean.report.v_hat.x += r.report.v_hat.x;
    mean.report.v_hat.y += r.report.v_hat.y;
    mean.report.alpha_hat += r.report.alpha_hat;
    mean.report.diagnostics.t_max_used += r.report.diagnostics.t_max_used;
    mean.rel_err_r0 += r.rel_err_r0;
    mean.rel_err_v += r.rel_err_v;
    mean.rel_err_alpha += r.rel_err_alpha;
    mean.rel_err_gamma0 += r.rel_err_gamma0;
    mean.phase_tps_nrmse += r.phase_tps_nrmse;
    mean.flow_tps_nrmse += r.flow_tps_nrmse;
    mean.sf_nrmse += r.sf_nrmse;
  }
  if (n == 0) return out;
  const double s = 1.0 / n;
  auto& m = mean.report;
  m.L0_hat *= s;
  m.r0_hat *= s;
  m.gamma0_hat *= s;
  m.v_hat.x *= s;
  m.v_hat.y *= s;
  m.alpha_hat *= s;
  m.diagnostics.t_max_used = static_cast<int>(std::lround(m.diagnostics.t_max_used * s));
  mean.rel_err_r0 *= s;
  mean.rel_err_v *= s;
  mean.rel_err_alpha *= s;
  mean.rel_err_gamma0 *= s;
  mean.phase_tps_nrmse *= s;
  mean.flow_tps_nrmse *= s;
  mean.sf_nrmse *= s;
  out.mean = mean;
  return out;
}

void write_roundtrip_csv(std::ostream& os, const RoundtripSummary& summary) {
  os << "trial,status,L0_hat,r0_hat,gamma0_hat,vx_hat,vy_hat,alpha_hat,t_max_used,"
        "rel_err_r0,rel_err_v,rel_err_alpha,rel_err_gamma0,phase_tps_nrmse,flow_tps_nrmse,sf_nrmse,error\n";
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << std::setprecision(10);
  auto row = [&](const TrialResult& r, const std::string& label) {
    const auto& e = r.report;
    os << label << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      os << e.L0_hat << ',' << e.r0_hat << ',' << e.gamma0_hat << ',' << e.v_hat.x << ',' << e.v_hat.y << ','
         << e.alpha_hat << ',' << e.diagnostics.t_max_used << ',' << r.rel_err_r0 << ',' << r.rel_err_v << ','
         << r.rel_err_alpha << ',' << r.rel_err_gamma0 << ',' << r.phase_tps_nrmse << ',' << r.flow_tps_nrmse << ','
         << r.sf_nrmse << ",\n";
    } else {
      std::string msg = r.error;
      for (char& c : msg)
        if (c == ',' || c == '\n' || c == '"') c = ';';
      os << ",,,,,,,,,,,,,," << msg << '\n';
    }
  };
  for (const auto& r : summary.trials) row(r, std::to_string(r.trial));
  if (summary.mean) row(*summary.mean, "mean");
  os.flags(old_flags);
  os.precision(old_prec);
}

}  // namespace bflow
