#pragma once

// Solver backends for MilpModel.
//
// External solvers are driven through files: the model is written in the LP
// text format (Maximize / Subject To / Bounds / Binary / End, variables named
// v<id>, rows c<id>, provenance tags as `\` comments) and the solver command
// writes a solution file:
//
//   status <optimal|feasible|infeasible|unbounded|error>
//   objective <float>
//   v<id> <float>        one row per variable with a value
//
// The built-in backends (dense simplex, binary enumeration) are exact
// oracles for small instances.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "h2grid/milp_model.hpp"
#include "h2grid/solve_result.hpp"

namespace h2grid {

void write_lp(const MilpModel& model, std::ostream& out);
void write_lp_file(const MilpModel& model, const std::filesystem::path& path);

/// Parses the solution format above for a model with `num_vars` variables.
/// Variables missing from the file default to 0.
SolveResult parse_solution(std::istream& in, std::size_t num_vars);

inline constexpr const char* kSolverEnvVar = "H2GRID_SOLVER_CMD";

struct ExternalSolverConfig {
  /// Shell command template. {lp} and {sol} are replaced by file paths,
  /// {time_limit} and {gap} by the numeric limits.
  std::string command;
  double time_limit_s = 600.0;
  double mip_gap = 1e-6;
};

/// The explicit command if non-empty, else $H2GRID_SOLVER_CMD, else nullopt.
std::optional<std::string> resolve_solver_command(const std::string& explicit_command);

/// Writes the LP file, runs the command, parses the solution. The process
/// is killed after time_limit_s plus a grace period. Failures come back as
/// status error with the captured stderr in `message`.
SolveResult invoke_external_solver(const MilpModel& model, const ExternalSolverConfig& config);

struct LpRow {
  std::vector<LinearTerm> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

/// Continuous maximization problem. Bounds may be infinite.
struct LpProblem {
  std::vector<double> lb;
  std::vector<double> ub;
  std::vector<double> objective;
  std::vector<LpRow> rows;

  std::size_t num_variables() const { return objective.size(); }
};

struct SimplexResult {
  SolveResult result;
  /// Reduced costs of the standard-form columns at termination; all <= 0
  /// at a maximizing optimum.
  std::vector<double> reduced_costs;
  std::size_t iterations = 0;
};

inline constexpr double kLpFeasibilityTolerance = 1e-8;

/// Dense two-phase tableau simplex with Bland's rule.
SimplexResult solve_lp_simplex(const LpProblem& lp);

/// The model with every binary fixed to the given values (in binary id
/// order) and all integrality dropped.
LpProblem fix_binaries(const MilpModel& model, const std::vector<double>& binary_values);

inline constexpr int kEnumerationBudget = 20;

/// Exact optimum by enumerating every binary assignment and solving each LP.
/// Ties go to the lexicographically smallest binary vector. Throws
/// Error(invalid_argument) when the model has more binaries than `budget`.
SolveResult solve_enumeration(const MilpModel& model, int budget = kEnumerationBudget);

}  // namespace h2grid
