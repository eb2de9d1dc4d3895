#pragma once

// Forecast ingestion and construction of the weighted scenario set.
//
// Sampling uses std::mt19937_64 (fully specified by the standard) seeded per
// sample from splitmix64(seed, index), and a hand-written Box-Muller
// transform so that deviates are identical across standard libraries.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2grid/case.hpp"

namespace h2grid {

/// Named power series sharing one time axis. Values are either kW (as read
/// from CSV) or per-unit after to_per_unit().
struct Forecast {
  std::vector<std::string> timestamps;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> series;  // [series][t]

  std::size_t periods() const { return timestamps.size(); }
  /// Index of a series id or throws Error(invalid_argument).
  std::size_t require(const std::string& id) const;

  bool operator==(const Forecast&) const = default;
};

/// One realization: same layout as Forecast::series.
using Realization = std::vector<std::vector<double>>;

struct ScenarioSet {
  std::vector<std::string> ids;
  std::vector<Realization> scenarios;  // [s][series][t]
  std::vector<double> weights;

  std::size_t size() const { return scenarios.size(); }
  std::size_t periods() const;
  std::size_t require(const std::string& id) const;
  const std::vector<double>& series(std::size_t s, const std::string& id) const;

  bool operator==(const ScenarioSet&) const = default;
};

inline constexpr double kExtremeWeight = 0.001;
inline constexpr double kForecastWeight = 0.998;
inline constexpr double kErrorSigmaFraction = 0.10;

/// Reads `timestamp,<id>,...` with one row per step. Rejects empty files,
/// missing cells, non-numeric or negative values.
Forecast load_forecast_csv(const std::filesystem::path& path);

/// Converts kW values into per-unit of the case power base.
Forecast to_per_unit(Forecast fc, double s_base_kva);

/// Checks that every renewable and load of the case has a series of length T.
void check_forecast_covers(const Forecast& fc, const MicrogridCase& mg);

/// n realizations of forecast + N(0, (0.1 * series max)^2) errors, clamped
/// at zero. Deterministic in (seed, index); `jobs` only affects speed.
std::vector<Realization> sample_error_scenarios(const Forecast& fc, std::size_t n,
                                                std::uint64_t seed, unsigned jobs = 1);

/// Mean over time of the sum of all series.
double average_power(const Realization& r);

/// {max-average sample, min-average sample, forecast} with weights
/// {0.001, 0.001, 0.998}. Ties go to the lowest sample index.
ScenarioSet build_scenario_set(const Forecast& fc, const std::vector<Realization>& samples);

nlohmann::json scenarios_to_json(const ScenarioSet& set);
ScenarioSet scenarios_from_json(const nlohmann::json& doc);

}  // namespace h2grid
