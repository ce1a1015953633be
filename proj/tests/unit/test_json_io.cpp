#include "doctest.h"

#include <sstream>

#include "boilingflow/json_io.hpp"
#include "boilingflow/roundtrip.hpp"

using namespace bflow;

TEST_CASE("parameter documents round trip") {
  const Json j = Json::parse(R"({"L0": 0.044, "r0": 0.0044, "v": [1.0, -0.5], "alpha": 0.9,
                                 "delta": 0.0006875, "fs": 100000})");
  const BoilingFlowParams p = params_from_json(j);
  CHECK(p.model.gamma0 == 1.0);
  CHECK(p.n_out == 64);
  CHECK(p.oversample == 4);
  CHECK(p.v.y == -0.5);
  const BoilingFlowParams q = params_from_json(params_to_json(p));
  CHECK(q.model.L0 == p.model.L0);
  CHECK(q.model.r0 == p.model.r0);
  CHECK(q.alpha == p.alpha);
  CHECK(q.fs == p.fs);

  const Json nested = Json::parse(R"({"model": {"L0": 1, "r0": 0.1, "gamma0": 0.3}, "v": [0, 0],
                                      "alpha": 0, "delta": 0.01, "fs": 1, "n_out": 16})");
  CHECK(params_from_json(nested).model.gamma0 == 0.3);
  CHECK(params_from_json(nested).n_out == 16);

  Json missing = j;
  missing.erase("r0");
  CHECK_THROWS_AS(params_from_json(missing), InvalidInput);
  Json bad_v = j;
  bad_v["v"] = {1.0};
  CHECK_THROWS_AS(params_from_json(bad_v), InvalidInput);
  Json bad_alpha = j;
  bad_alpha["alpha"] = 2.0;
  CHECK_THROWS_AS(params_from_json(bad_alpha), InvalidInput);
  CHECK_THROWS_AS(params_from_json(Json::array()), InvalidInput);
}

TEST_CASE("report document field names") {
  EstimationReport r;
  r.L0_hat = 0.04;
  r.r0_hat = 0.004;
  r.v_hat = {1.1, 0.1};
  r.alpha_hat = 0.8;
  r.diagnostics.lag_table.push_back(LagEstimate{1, {1.1, 0.1}, 0.9, 0.1, 57, false, true});
  const Json j = report_to_json(r);
  for (const char* k : {"L0_hat", "r0_hat", "gamma0_hat", "v_hat", "alpha_hat", "kmax", "anisotropic", "diagnostics"})
    CHECK(j.contains(k));
  CHECK(j["v_hat"][0] == 1.1);
  CHECK(j["diagnostics"]["lag_table"][0]["lag_cap"] == 57);
  CHECK_FALSE(j["diagnostics"].contains("gamma0_fit"));

  const BoilingFlowParams p = params_from_report(r, 32, 1e-3, 1e4);
  CHECK(p.model.r0 == 0.004);
  CHECK(p.v.x == 1.1);
  CHECK(p.n_out == 32);
}

TEST_CASE("filter chains") {
  const Json j = Json::parse(R"({"filters": [
      {"type": "band-stop", "N_W": 2001, "f_r": 350, "f_0": 850, "r": 0.81},
      {"type": "notch", "N_W": 1029, "f_0": 683.59, "r": 0.81},
      {"type": "bandstop", "N_W": 101, "f_1": 100, "f_2": 300, "r": 0.5}]})");
  const auto chain = filters_from_json(j, 1e5);
  REQUIRE(chain.size() == 3);
  CHECK(chain[0].design.kind == FilterKind::bandstop);
  CHECK(chain[1].taps.size() == 1029);
  CHECK(chain[2].design.f0 == 200.0);
  CHECK(filters_from_json(Json::array(), 1e5).empty());
  CHECK_THROWS_AS(filters_from_json(Json::parse(R"([{"type": "comb", "N_W": 3, "r": 0.5}])"), 1e5), InvalidInput);
  CHECK_THROWS_AS(filters_from_json(Json::parse(R"([{"type": "notch", "N_W": 3}])"), 1e5), InvalidInput);
}

TEST_CASE("trial seeds are distinct and reproducible") {
  const TrialSeeds a = trial_seeds(7, 0), b = trial_seeds(7, 1);
  CHECK(a.train != a.eval);
  CHECK(a.eval != a.regen);
  CHECK(a.train != b.train);
  CHECK(trial_seeds(7, 1).regen == b.regen);
  CHECK(relative_error(1.1, 1.0) == doctest::Approx(0.1));
  CHECK(relative_error(0.2, 0.0) == 0.2);
}

TEST_CASE("roundtrip CSV on a small run") {
  RoundtripConfig cfg;
  cfg.truth.model = {0.016, 0.004, 1.0};
  cfg.truth.v = {1.0, 0.0};
  cfg.truth.alpha = 0.9;
  cfg.truth.n_out = 16;
  cfg.truth.delta = 1e-3;
  cfg.truth.fs = 1e4;
  cfg.frames_train = 600;
  cfg.frames_eval = 600;
  cfg.trials = 1;
  cfg.seed = 3;
  const RoundtripSummary s = run_roundtrip(cfg);
  REQUIRE(s.trials.size() == 1);
  CHECK(s.trials[0].ok);
  REQUIRE(s.mean.has_value());
  std::ostringstream os;
  write_roundtrip_csv(os, s);
  std::istringstream is(os.str());
  std::string header, row, mean;
  std::getline(is, header);
  std::getline(is, row);
  std::getline(is, mean);
  CHECK(header.rfind("trial,status,L0_hat,r0_hat", 0) == 0);
  CHECK(row.rfind("0,ok,", 0) == 0);
  CHECK(mean.rfind("mean,", 0) == 0);
  CHECK(row.find("nan") == std::string::npos);
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
}
