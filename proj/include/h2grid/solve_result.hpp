#pragma once

#include <string>
#include <vector>

namespace h2grid {

enum class SolveStatus { optimal, feasible, infeasible, unbounded, error };

const char* status_name(SolveStatus status);
/// Inverse of status_name; unknown words map to error.
SolveStatus parse_status(const std::string& word);

struct SolveResult {
  SolveStatus status = SolveStatus::error;
  double objective = 0.0;
  std::vector<double> values;  // present iff status is optimal or feasible
  double wall_seconds = 0.0;
  std::string backend;
  std::string message;

  bool has_solution() const { return status == SolveStatus::optimal || status == SolveStatus::feasible; }
};

}  // namespace h2grid
