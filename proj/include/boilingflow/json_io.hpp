#pragma once

// JSON documents for parameters, estimation reports and filter chains.

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "boilingflow/estimator.hpp"
#include "boilingflow/generator.hpp"
#include "boilingflow/prefilter.hpp"

namespace bflow {

using Json = nlohmann::ordered_json;

/// Keys: L0, r0, gamma0 (default 1), v [vx, vy], alpha, n_out, delta, fs,
/// oversample (default 4). L0/r0/gamma0 may also sit under "model".
BoilingFlowParams params_from_json(const Json& j);
Json params_to_json(const BoilingFlowParams& p);

Json report_to_json(const EstimationReport& report);

/// Parameters implied by an estimation report on a given output grid.
BoilingFlowParams params_from_report(const EstimationReport& report, Eigen::Index n_out, double delta, double fs,
                                     int oversample = 4);

/// A list of {"type": "notch" | "bandstop", "N_W", "f_0", "f_r" | "f_1"/"f_2", "r"}
/// blocks; fs comes from the data being filtered.
std::vector<FirFilter> filters_from_json(const Json& j, double fs);

Json read_json_file(const std::filesystem::path& path);

}  // namespace bflow
