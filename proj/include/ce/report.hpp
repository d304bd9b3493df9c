// Serialization of results: JSON (machine), CSV (tabular artifacts), and
// fixed-width text tables (terminals). Every JSON report carries method,
// estimand, sample sizes, seed when one was used, and the library version.
#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "ce/common.hpp"
#include "ce/diagnostics.hpp"
#include "ce/inference.hpp"
#include "ce/simulate.hpp"
#include "ce/table.hpp"

namespace ce {

struct RunInfo {
  Eigen::Index n = 0, n_treated = 0, n_control = 0;
  std::optional<std::uint64_t> seed;
};

RunInfo run_info(const ObservationTable& table, std::optional<std::uint64_t> seed = {});

nlohmann::json to_json(const EffectEstimate& est, const RunInfo& info);
nlohmann::json to_json(const BootstrapResult& boot, const EffectEstimate& est,
                       const RunInfo& info);
nlohmann::json to_json(const BalanceReport& report, const RunInfo& info);
nlohmann::json to_json(const BiasReport& report);

std::string render_text(const EffectEstimate& est, const RunInfo& info);
std::string render_text(const BootstrapResult& boot, const EffectEstimate& est);
std::string render_text(const BalanceReport& report);
std::string render_text(const BiasReport& report);

std::string to_csv(const BalanceReport& report);
std::string to_csv(const BiasReport& report);
// x,density,arm rows, treated curve then control curve.
std::string to_csv(const DensityCurve& treated, const DensityCurve& control);

}  // namespace ce
