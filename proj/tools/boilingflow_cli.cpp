// boilingflow: generate, estimate, metrics, prefilter and roundtrip.
//
// Exit codes: 0 success, 1 runtime or estimation failure, 2 usage or
// configuration error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "boilingflow/json_io.hpp"
#include "boilingflow/metrics.hpp"
#include "boilingflow/phs1.hpp"
#include "boilingflow/roundtrip.hpp"

namespace fs = std::filesystem;
using namespace bflow;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Shared {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string config;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--seed", s.seed, "Master seed")->capture_default_str();
  app->add_option("--out-dir", s.out_dir, "Output directory")->capture_default_str();
  app->add_option("--config", s.config, "JSON configuration document");
}

Json load_config(const Shared& s, bool required) {
  if (s.config.empty()) {
    if (required) throw UsageError("--config is required");
    return Json::object();
  }
  try {
    return read_json_file(s.config);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

template <typename F>
auto config_stage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidInput& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const Json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

fs::path output_path(const Shared& s, const std::string& name) {
  fs::create_directories(s.out_dir);
  return fs::path(s.out_dir) / name;
}

ScreenSequence read_input(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("input file not found: " + path);
  try {
    return read_phs1(fs::path(path));
  } catch (const std::exception& e) {
    throw std::runtime_error("read: " + std::string(e.what()));
  }
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream os(path);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("write: cannot write " + path.string());
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& w) {
  std::ofstream os(path);
  w(os);
  if (!os) throw std::runtime_error("write: cannot write " + path.string());
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  Shared shared;
  std::size_t frames = 1000;
  std::string output = "screens.phs1";
  bool keep_ttp = false;
};

int cmd_generate(const GenerateArgs& a) {
  const Json cfg = load_config(a.shared, true);
  const BoilingFlowParams p = config_stage([&] { return params_from_json(cfg.contains("params") ? cfg.at("params") : cfg); });
  GenerateOptions opt;
  opt.remove_ttp = !a.keep_ttp;
  const ScreenSequence seq = generate_sequence(p, a.frames, a.shared.seed, opt);
  const fs::path out = output_path(a.shared, a.output);
  write_phs1(out, seq);
  Json echo = {{"params", params_to_json(p)}, {"seed", a.shared.seed}, {"frames", a.frames}, {"output", out.string()}};
  std::cout << echo.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  Shared shared;
  std::string input;
  bool anisotropic = false;
  int kmax = kDefaultKmax;
  double train_fraction = 0.8;
  std::string output = "report.json";
};

int cmd_estimate(const EstimateArgs& a) {
  ScreenSequence seq = read_input(a.input);
  const auto n_train = static_cast<std::size_t>(std::floor(a.train_fraction * static_cast<double>(seq.size())));
  if (n_train < 3) throw UsageError("train fraction leaves fewer than 3 frames");
  seq = slice_frames(seq, 0, n_train);
  EstimateOptions opt;
  opt.anisotropic = a.anisotropic;
  opt.kmax = a.kmax;
  const EstimationReport rep = estimate_all(seq, opt);
  Json j = report_to_json(rep);
  j["train_frames"] = n_train;
  write_json(output_path(a.shared, a.output), j);
  Json brief = j;
  brief.erase("diagnostics");
  std::cout << brief.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
  Shared shared;
  std::string reference, candidate;
  std::string which = "all";
  std::optional<double> delta_star;  // [m]
  std::optional<double> uc;          // [m/s]
  std::optional<double> vx;          // [px/step]
};

int cmd_metrics(const MetricsArgs& a) {
  const ScreenSequence ref = read_input(a.reference);
  const ScreenSequence cand = read_input(a.candidate);
  if (ref.rows() != cand.rows() || ref.cols() != cand.cols() || ref.fs != cand.fs)
    throw std::runtime_error("metrics: grid mismatch between reference and candidate");
  const std::size_t seg = default_segment_length(std::min(ref.size(), cand.size()));
  const bool all = a.which == "all";

  const TemporalSpectrum ref_tps = temporal_psd(ref, seg), cand_tps = temporal_psd(cand, seg);
  const TemporalSpectrum ref_flow = flow_tps(ref, seg), cand_flow = flow_tps(cand, seg);
  const StructureFunction2D ref_sf = structure_function_2d(ref), cand_sf = structure_function_2d(cand);

  if (all || a.which == "tps") {
    write_csv(output_path(a.shared, "tps_reference.csv"), [&](std::ostream& os) { write_tps_csv(os, ref_tps); });
    write_csv(output_path(a.shared, "tps_candidate.csv"), [&](std::ostream& os) { write_tps_csv(os, cand_tps); });
  }
  if (all || a.which == "flowtps") {
    write_csv(output_path(a.shared, "flowtps_reference.csv"), [&](std::ostream& os) { write_tps_csv(os, ref_flow); });
    write_csv(output_path(a.shared, "flowtps_candidate.csv"), [&](std::ostream& os) { write_tps_csv(os, cand_flow); });
  }
  if (all || a.which == "sf") {
    write_csv(output_path(a.shared, "sf_reference.csv"), [&](std::ostream& os) { write_sf_csv(os, ref_sf); });
    write_csv(output_path(a.shared, "sf_candidate.csv"), [&](std::ostream& os) { write_sf_csv(os, cand_sf); });
  }
  if (a.which == "strouhal" || (all && a.delta_star)) {
    if (!a.delta_star) throw UsageError("strouhal output needs --delta-star");
    double uc = 0.0;
    if (a.uc) uc = *a.uc;
    else if (a.vx) uc = convective_velocity(*a.vx, ref.delta, ref.fs);
    else throw UsageError("strouhal output needs --uc or --vx");
    write_csv(output_path(a.shared, "strouhal_reference.csv"),
              [&](std::ostream& os) { write_strouhal_csv(os, strouhal_premultiplied(ref_flow, *a.delta_star, uc)); });
    write_csv(output_path(a.shared, "strouhal_candidate.csv"),
              [&](std::ostream& os) { write_strouhal_csv(os, strouhal_premultiplied(cand_flow, *a.delta_star, uc)); });
  }

  const Json summary = {{"flow_tps_nrmse", tps_nrmse(cand_flow, ref_flow)},
                        {"phase_tps_nrmse", tps_nrmse(cand_tps, ref_tps)},
                        {"sf_nrmse", sf_nrmse(cand_sf, ref_sf)},
                        {"segment_length", seg}};
  write_json(output_path(a.shared, "metrics_summary.json"), summary);
  std::cout << summary.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- prefilter

struct PrefilterArgs {
  Shared shared;
  std::string input;
  std::string output = "filtered.phs1";
};

int cmd_prefilter(const PrefilterArgs& a) {
  const Json cfg = load_config(a.shared, true);
  const ScreenSequence seq = read_input(a.input);
  const std::vector<FirFilter> chain = config_stage([&] { return filters_from_json(cfg, seq.fs); });
  const ScreenSequence out = apply_fir(seq, chain);
  write_phs1(output_path(a.shared, a.output), out);
  std::cout << "filters " << chain.size() << ", frames " << seq.size() << " -> " << out.size() << '\n';
  return 0;
}

// ---------------------------------------------------------------- roundtrip

struct RoundtripArgs {
  Shared shared;
  std::optional<int> trials;
  std::optional<std::size_t> frames_train, frames_eval;
  bool anisotropic = false;
  std::string output = "roundtrip.csv";
};

int cmd_roundtrip(const RoundtripArgs& a) {
  const Json cfg = load_config(a.shared, true);
  RoundtripConfig rc = config_stage([&] {
    RoundtripConfig c;
    c.truth = params_from_json(cfg.contains("params") ? cfg.at("params") : cfg);
    c.frames_train = cfg.value("frames_train", c.frames_train);
    c.frames_eval = cfg.value("frames_eval", c.frames_eval);
    c.trials = cfg.value("trials", c.trials);
    c.estimate.anisotropic = cfg.value("anisotropic", false);
    c.estimate.kmax = cfg.value("kmax", kDefaultKmax);
    return c;
  });
  rc.seed = a.shared.seed;
  if (a.trials) rc.trials = *a.trials;
  if (a.frames_train) rc.frames_train = *a.frames_train;
  if (a.frames_eval) rc.frames_eval = *a.frames_eval;
  if (a.anisotropic) rc.estimate.anisotropic = true;
  if (rc.trials < 1 || rc.frames_train < 3 || rc.frames_eval < 8) throw UsageError("roundtrip: invalid trial counts");

  const RoundtripSummary s = run_roundtrip(rc);
  const fs::path out = output_path(a.shared, a.output);
  write_csv(out, [&](std::ostream& os) { write_roundtrip_csv(os, s); });
  write_roundtrip_csv(std::cout, s);
  for (const auto& t : s.trials)
    if (!t.ok) std::cerr << "trial " << t.trial << " failed: " << t.error << '\n';
  return s.mean ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boiling-flow phase-screen generation and parameter estimation"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a PHS1 screen sequence");
  add_shared(g, gen.shared);
  g->add_option("--frames", gen.frames, "Number of frames")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--output", gen.output, "Output file name inside --out-dir")->capture_default_str();
  g->add_flag("--keep-ttp", gen.keep_ttp, "Skip tip/tilt/piston removal");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate model parameters from a PHS1 file");
  add_shared(e, est.shared);
  e->add_option("--input", est.input, "PHS1 input")->required();
  e->add_flag("--anisotropic", est.anisotropic, "Fit gamma0 as well");
  e->add_option("--kmax", est.kmax, "Edge bins excluded from the index set")->check(CLI::NonNegativeNumber)->capture_default_str();
  e->add_option("--train-fraction", est.train_fraction, "Leading fraction of frames used")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  e->add_option("--output", est.output, "Report file name inside --out-dir")->capture_default_str();

  MetricsArgs met;
  auto* m = app.add_subcommand("metrics", "Compare a candidate sequence against a reference");
  add_shared(m, met.shared);
  m->add_option("--reference", met.reference, "Reference PHS1")->required();
  m->add_option("--candidate", met.candidate, "Candidate PHS1")->required();
  m->add_option("--which", met.which, "Series to export")
      ->check(CLI::IsMember({"all", "tps", "flowtps", "sf", "strouhal"}))
      ->capture_default_str();
  m->add_option("--delta-star", met.delta_star, "Boundary-layer thickness [m] for Strouhal scaling");
  m->add_option("--uc", met.uc, "Convective velocity [m/s]");
  m->add_option("--vx", met.vx, "Flow velocity [px/step] used to derive U_c");

  PrefilterArgs pre;
  auto* p = app.add_subcommand("prefilter", "Apply a FIR filter chain along time");
  add_shared(p, pre.shared);
  p->add_option("--input", pre.input, "PHS1 input")->required();
  p->add_option("--output", pre.output, "Output file name inside --out-dir")->capture_default_str();

  RoundtripArgs rt;
  auto* r = app.add_subcommand("roundtrip", "Generate, estimate, regenerate and score");
  add_shared(r, rt.shared);
  r->add_option("--trials", rt.trials, "Number of trials")->check(CLI::PositiveNumber);
  r->add_option("--frames-train", rt.frames_train, "Training frames per trial")->check(CLI::PositiveNumber);
  r->add_option("--frames-eval", rt.frames_eval, "Evaluation frames per trial")->check(CLI::PositiveNumber);
  r->add_flag("--anisotropic", rt.anisotropic, "Fit gamma0 as well");
  r->add_option("--output", rt.output, "CSV file name inside --out-dir")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (e->parsed()) return cmd_estimate(est);
    if (m->parsed()) return cmd_metrics(met);
    if (p->parsed()) return cmd_prefilter(pre);
    if (r->parsed()) return cmd_roundtrip(rt);
  } catch (const UsageError& err) {
    std::cerr << "usage: " << err.what() << '\n';
    return 2;
  } catch (const EstimationError& err) {
    std::cerr << "estimate: " << err.what() << '\n';
    return 1;
  } catch (const InvalidInput& err) {
    std::cerr << "input: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 2;
}
