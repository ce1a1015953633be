#include "boilingflow/json_io.hpp"

#include <fstream>

namespace bflow {

namespace {

double number(const Json& j, const char* key) {
  if (!j.contains(key)) throw InvalidInput(std::string("missing key \"") + key + "\"");
  const Json& v = j.at(key);
  if (!v.is_number()) throw InvalidInput(std::string("key \"") + key + "\" must be a number");
  return v.get<double>();
}

double number_or(const Json& j, const char* key, double fallback) { return j.contains(key) ? number(j, key) : fallback; }

Json vec(const Vec2& v) { return Json::array({v.x, v.y}); }

Json lag_json(const LagEstimate& l) {
  return {{"lag", l.lag},           {"v_hat", vec(l.v_hat)}, {"peak_corr", l.peak_corr},
          {"snr_bound", l.snr_bound}, {"lag_cap", l.lag_cap},  {"at_boundary", l.at_boundary},
          {"retained", l.retained}};
}

}  // namespace

BoilingFlowParams params_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("parameter document must be a JSON object");
  const Json& m = j.contains("model") ? j.at("model") : j;
  BoilingFlowParams p;
  p.model.L0 = number(m, "L0");
  p.model.r0 = number(m, "r0");
  p.model.gamma0 = number_or(m, "gamma0", 1.0);
  if (!j.contains("v") || !j.at("v").is_array() || j.at("v").size() != 2)
    throw InvalidInput("key \"v\" must be a two-element array [vx, vy]");
  p.v = {j.at("v").at(0).get<double>(), j.at("v").at(1).get<double>()};
  p.alpha = number(j, "alpha");
  p.n_out = static_cast<Eigen::Index>(number_or(j, "n_out", 64));
  p.delta = number(j, "delta");
  p.fs = number(j, "fs");
  p.oversample = static_cast<int>(number_or(j, "oversample", 4));
  validate(p);
  return p;
}

Json params_to_json(const BoilingFlowParams& p) {
  return {{"L0", p.model.L0},   {"r0", p.model.r0}, {"gamma0", p.model.gamma0}, {"v", vec(p.v)},
          {"alpha", p.alpha},   {"n_out", p.n_out}, {"delta", p.delta},         {"fs", p.fs},
          {"oversample", p.oversample}};
}

Json report_to_json(const EstimationReport& r) {
  const auto& d = r.diagnostics;
  Json diag;
  diag["inscribed_square"] = {{"row", d.square.row}, {"col", d.square.col}, {"side", d.square.side}};
  diag["L0_inscribed"] = d.L0_inscribed;
  diag["L0_valid_width"] = d.L0_valid_width;
  diag["r0_isotropic"] = d.r0_isotropic;
  if (d.gamma0_fit) {
    const auto& g = *d.gamma0_fit;
    Json evals = Json::array();
    for (const auto& [x, f] : g.evaluations) evals.push_back({{"log10_gamma0", x}, {"objective", f}});
    diag["gamma0_fit"] = {{"gamma0", g.gamma0},
                          {"r0", g.r0},
                          {"objective", g.objective},
                          {"non_unimodal", g.non_unimodal},
                          {"at_bracket_end", g.at_bracket_end},
                          {"evaluations", evals}};
  }
  Json lags = Json::array();
  for (const auto& l : d.lag_table) lags.push_back(lag_json(l));
  diag["lag_table"] = lags;
  diag["t_max_used"] = d.t_max_used;
  diag["alpha_raw"] = d.alpha_raw;
  diag["alpha_clamped"] = d.alpha_clamped;

  return {{"L0_hat", r.L0_hat},       {"r0_hat", r.r0_hat}, {"gamma0_hat", r.gamma0_hat},
          {"v_hat", vec(r.v_hat)},    {"alpha_hat", r.alpha_hat}, {"kmax", r.kmax},
          {"anisotropic", r.anisotropic}, {"diagnostics", diag}};
}

BoilingFlowParams params_from_report(const EstimationReport& r, Eigen::Index n_out, double delta, double fs,
                                     int oversample) {
  BoilingFlowParams p;
  p.model = {r.L0_hat, r.r0_hat, r.gamma0_hat};
  p.v = r.v_hat;
  p.alpha = r.alpha_hat;
  p.n_out = n_out;
  p.delta = delta;
  p.fs = fs;
  p.oversample = oversample;
  validate(p);
  return p;
}

std::vector<FirFilter> filters_from_json(const Json& j, double fs) {
  const Json& list = j.is_object() && j.contains("filters") ? j.at("filters") : j;
  if (!list.is_array()) throw InvalidInput("filter chain must be a JSON array");
  std::vector<FirFilter> out;
  for (const auto& b : list) {
    if (!b.is_object() || !b.contains("type")) throw InvalidInput("filter block needs a \"type\"");
    const std::string type = b.at("type").get<std::string>();
    const int n_w = static_cast<int>(number(b, "N_W"));
    const double r = number(b, "r");
    if (type == "notch") {
      out.push_back(design_notch(number(b, "f_0"), r, n_w, fs));
    } else if (type == "bandstop" || type == "band-stop") {
      if (b.contains("f_1") || b.contains("f_2"))
        out.push_back(design_bandstop_edges(number(b, "f_1"), number(b, "f_2"), r, n_w, fs));
      else
        out.push_back(design_bandstop(number(b, "f_0"), number(b, "f_r"), r, n_w, fs));
    } else {
      throw InvalidInput("unknown filter type \"" + type + "\"");
    }
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

}  // namespace bflow
