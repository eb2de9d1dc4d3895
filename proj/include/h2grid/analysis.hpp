#pragma once

// Resilience metrics and experiment harnesses.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2grid/case.hpp"
#include "h2grid/dispatch.hpp"
#include "h2grid/scenario.hpp"
#include "h2grid/solve_result.hpp"

namespace h2grid {

enum class LoadClass { all, critical, noncritical };

/// Weighted load served ratio in percent; 100 for an empty class.
double compute_lsr(const OperationPlan& plan, const MicrogridCase& mg, LoadClass cls);

struct DerStep {
  std::string id;
  double max_step = 0.0;  // p.u., worst case over scenarios and periods

  bool operator==(const DerStep&) const = default;
};

struct ResilienceReport {
  double objective = 0.0;
  double lsr_all = 100.0;
  double lsr_critical = 100.0;
  double lsr_noncritical = 100.0;
  double renewable_consumption_ratio = 100.0;
  double freq_variation_avg = 0.0;  // Hz
  double freq_variation_max = 0.0;
  double volt_variation_avg = 0.0;  // p.u.
  double volt_variation_max = 0.0;
  double volt_variation_avg_v = 0.0;  // volts, via the case voltage base
  double volt_variation_max_v = 0.0;
  std::vector<DerStep> power_steps;
  double max_power_step = 0.0;
  std::vector<std::vector<double>> hydrogen_trajectory;               // [h][t], scenario-weighted
  std::vector<std::vector<std::vector<double>>> hydrogen_by_scenario;  // [s][h][t]

  bool operator==(const ResilienceReport&) const = default;
};

/// Uses only the plan (which carries scenario weights, demand and MPP) and
/// the case's static data.
ResilienceReport compute_resilience_report(const OperationPlan& plan, const MicrogridCase& mg);
/// Same, after checking that the plan was built from `scen`.
ResilienceReport compute_resilience_report(const OperationPlan& plan, const MicrogridCase& mg,
                                           const ScenarioSet& scen);

nlohmann::json report_to_json(const ResilienceReport& report);
/// Long format: case,metric,value.
std::string report_to_csv(const ResilienceReport& report, const std::string& label);

/// Physical operating point that the plan's discrete decisions (pickup,
/// modes, constant-PQ outputs) lead to under droop control: per (s, t) the
/// frequency where droop injections balance served load, closest to nominal,
/// then bus voltages from a DistFlow sweep where volt-var injections balance
/// reactive demand.
OperationPlan realize_droop_equilibrium(const OperationPlan& plan, const MicrogridCase& mg);

using SolveFn = std::function<SolveResult(const MilpModel&)>;

struct CaseRun {
  std::string label;
  bool ok = false;
  SolveStatus status = SolveStatus::error;
  std::string message;
  OperationPlan plan;
  ResilienceReport report;
  double solve_seconds = 0.0;
  std::size_t variables = 0;
  std::size_t binaries = 0;
};

/// Build, solve, decode and report one case. Errors are captured in the run.
CaseRun run_case(const std::string& label, const MicrogridCase& mg, const ScenarioSet& scen, const SolveFn& solve,
                 BuildOptions options = {});

/// Fill fractions for the hydrogen sweep; nullopt removes the source.
using FillLevel = std::optional<double>;
std::vector<FillLevel> default_fill_levels();

/// Cases O (no source) and A-E (0..100 % initial fill). The case must have
/// exactly one hydrogen source.
std::vector<CaseRun> run_hydrogen_sweep(const MicrogridCase& mg, const ScenarioSet& scen, const SolveFn& solve,
                                        const std::vector<FillLevel>& fills = default_fill_levels(),
                                        unsigned jobs = 1);

/// Cases I (both renewables constant-PQ), II (first droop), III (both droop).
std::vector<CaseRun> run_gridforming_sweep(const MicrogridCase& mg, const ScenarioSet& scen, const SolveFn& solve,
                                           unsigned jobs = 1);

/// "proposed" (droop-coupled) and "baseline" (free dispatch). Both reports
/// are computed on the realized droop equilibrium of their decisions.
std::vector<CaseRun> run_baseline_comparison(const MicrogridCase& mg, const ScenarioSet& scen, const SolveFn& solve,
                                             unsigned jobs = 1);

/// Writes <dir>/<label>/{plan.json,report.json,report.csv} and <dir>/sweep.csv.
void write_sweep_artifacts(const std::vector<CaseRun>& runs, const std::string& dir);
std::string sweep_to_csv(const std::vector<CaseRun>& runs);

}  // namespace h2grid
