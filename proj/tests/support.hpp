#pragma once

// Shared helpers for the unit tests and the acceptance runner.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "h2grid/case.hpp"
#include "h2grid/dispatch.hpp"
#include "h2grid/piecewise.hpp"
#include "h2grid/scenario.hpp"
#include "h2grid/solver.hpp"

namespace h2test {

std::filesystem::path fixture(const std::string& name);
std::filesystem::path data_file(const std::string& name);

/// Per-unit forecast as a one-scenario set with weight 1.
h2grid::ScenarioSet single_scenario(const h2grid::Forecast& fc);

/// Scenario set for a case from a forecast CSV, drawn like the CLI does.
h2grid::ScenarioSet scenarios_for(const h2grid::MicrogridCase& mg, const std::filesystem::path& csv,
                                  std::size_t samples = 1000, std::uint64_t seed = 42);

/// External solver from $H2GRID_SOLVER_CMD, or nullopt when unset.
std::optional<h2grid::ExternalSolverConfig> solver_from_env(double time_limit_s = 600.0);

// One curve draw for the encoding exactness checks.
struct CurveDraw {
  std::string kind;  // electrolyzer, fuel-cell, renewable, volt-var
  h2grid::PiecewiseCurve curve;
  std::function<double(double)> oracle;
  h2grid::Interval input;
  h2grid::Interval output;
  double x = 0.0;
};

CurveDraw random_curve_draw(std::mt19937_64& rng);

struct Projection {
  bool feasible = false;
  double lo = 0.0;
  double hi = 0.0;
};

/// Range of the output variable of linearize_piecewise_affine with the
/// input fixed at x, by exhaustive enumeration of the segment binaries.
Projection project_output(const h2grid::PiecewiseCurve& curve, double x, h2grid::Interval input,
                          h2grid::Interval output);

// Small instances for the enumeration oracle.
struct MicroInstance {
  std::string name;
  h2grid::MicrogridCase grid;
  h2grid::ScenarioSet scenarios;
};

/// Deterministic in `seed`; at most `max_binaries` binaries once built.
MicroInstance micro_instance(std::uint64_t seed, int max_binaries = 14);

/// Largest |generation - served load| over (s, t).
double max_balance_error(const h2grid::OperationPlan& plan, const h2grid::MicrogridCase& mg);

struct TankCheck {
  double telescoping = 0.0;  // relative
  double dynamics = 0.0;     // absolute p.u. energy
};

/// Telescoping of stored tank levels and agreement of each step with the
/// tank update from the decoded powers.
TankCheck check_tank(const h2grid::OperationPlan& plan, const h2grid::MicrogridCase& mg);

}  // namespace h2test
