#pragma once

// Scenario-based islanded dispatch MILP: construction from a case and a
// scenario set, and decoding of solver output into an operation plan.
//
// Variable layout, in creation order (ids are dense and deterministic):
//
//   load_pickup[l][t]                  L*T          binary
//   ely_mode[h][t], fc_mode[h][t]      2*H*T        binary
//   ren_setpoint[r][t]                 Rpq*T        constant-PQ renewables only
//   per scenario s, period t:
//     frequency                        1
//     voltage[bus]                     N
//     flow_p[b], flow_q[b]             2*B
//     per hydrogen source (7):         ely_power, fc_power, ely_product,
//                                      fc_product, h2_injection, h2_reactive, tank
//     per renewable (2):               ren_power, ren_reactive
//     min_select[r]                    Rpq          binary
//     segment binaries                 sum over curves of seg(c)
//
// where seg(c) is the number of curve segments overlapping the input box
// (frequency band or bus voltage band) when that number exceeds one, and 0
// otherwise. Curves per (s, t): electrolyzer, fuel cell and volt-var for
// each hydrogen source; droop and volt-var for each droop renewable. Under
// Coupling::dispatch no curves are emitted.

#include <string>
#include <vector>

#include <json.hpp>

#include "h2grid/case.hpp"
#include "h2grid/milp_model.hpp"
#include "h2grid/scenario.hpp"
#include "h2grid/solve_result.hpp"

namespace h2grid {

enum class Coupling {
  droop,     // device powers follow their droop characteristics
  dispatch,  // device powers are free setpoints within ratings
};

struct BuildOptions {
  Coupling coupling = Coupling::droop;
};

/// A built model together with the inputs it was built from.
struct DispatchModel {
  MicrogridCase grid;
  ScenarioSet scenarios;
  BuildOptions options;
  MilpModel milp;
};

DispatchModel build_model(const MicrogridCase& mg, const ScenarioSet& scen, BuildOptions options = {});

/// Closed-form variable count for the layout above.
std::size_t expected_variable_count(const MicrogridCase& mg, const ScenarioSet& scen, BuildOptions options = {});

struct ScenarioStates {
  double weight = 0.0;
  std::vector<double> frequency;                // [t]
  std::vector<std::vector<double>> voltage;     // [bus][t]
  std::vector<std::vector<double>> flow_p;      // [branch][t]
  std::vector<std::vector<double>> flow_q;
  std::vector<std::vector<double>> ely_power;   // [h][t], curve value
  std::vector<std::vector<double>> fc_power;
  std::vector<std::vector<double>> h2_power;    // net injection
  std::vector<std::vector<double>> h2_reactive;
  std::vector<std::vector<double>> tank;        // level at the end of t
  std::vector<std::vector<double>> ren_power;   // [r][t]
  std::vector<std::vector<double>> ren_reactive;
  std::vector<std::vector<double>> mpp;         // [r][t] available power
  std::vector<std::vector<double>> demand;      // [load][t] requested power

  bool operator==(const ScenarioStates&) const = default;
};

struct OperationPlan {
  std::vector<std::vector<int>> pickup;        // [load][t]
  std::vector<std::vector<int>> ely_mode;      // [h][t]
  std::vector<std::vector<int>> fc_mode;
  std::vector<std::vector<double>> setpoint;   // [r][t]; empty rows for droop renewables
  std::vector<ScenarioStates> scenarios;
  double objective = 0.0;
  double max_residual = 0.0;

  bool operator==(const OperationPlan&) const = default;
};

inline constexpr double kBinaryTolerance = 1e-5;
inline constexpr double kResidualTolerance = 1e-6;
inline constexpr double kObjectiveTolerance = 1e-6;

/// Decodes a solution. Requires status optimal/feasible, integral binaries
/// (within 1e-5), all rows satisfied within 1e-6 after rounding, and the
/// independently recomputed objective within 1e-6 relative of the solver's.
OperationPlan extract_plan(const DispatchModel& model, const SolveResult& sol);

/// Sum over scenarios, periods and loads of weight * pickup * w * P.
double served_objective(const OperationPlan& plan, const MicrogridCase& mg);

nlohmann::json plan_to_json(const OperationPlan& plan);
OperationPlan plan_from_json(const nlohmann::json& doc);

}  // namespace h2grid
