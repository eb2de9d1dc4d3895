#pragma once

// Solver-agnostic mixed-integer linear model (maximization).

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace h2grid {

enum class VarRole : int {
  load_pickup,     // lambda[load][t], binary, shared by all scenarios
  ely_mode,        // x_ely[h][t], binary
  fc_mode,         // x_fc[h][t], binary
  ren_setpoint,    // constant-PQ setpoint [r][t]
  frequency,       // f[s][t]
  voltage,         // U[s][bus][t]
  flow_p,          // P[s][branch][t]
  flow_q,          // Q[s][branch][t]
  ely_power,       // curve output [s][h][t]
  fc_power,
  ely_product,     // x_ely * ely_power
  fc_product,      // x_fc * fc_power
  h2_injection,    // fc_product - ely_product
  h2_reactive,
  tank,            // H[s][h][t]
  ren_power,       // [s][r][t]
  ren_reactive,
  min_select,      // constant-PQ min(setpoint, mpp) selector [s][r][t], binary
  seg_ely,         // piecewise segment binaries [s][h][t][k]
  seg_fc,
  seg_h2_voltvar,
  seg_ren,         // [s][r][t][k]
  seg_ren_voltvar,
  aux,             // free-standing variables (k = running number)
};

const char* role_name(VarRole role);

struct VarKey {
  VarRole role = VarRole::aux;
  int s = -1;
  int i = -1;
  int t = -1;
  int k = -1;

  auto operator<=>(const VarKey&) const = default;
};

struct Variable {
  VarKey key;
  double lb = 0.0;
  double ub = 0.0;
  bool binary = false;
};

enum class Sense { le, ge, eq };

struct LinearTerm {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<LinearTerm> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
  std::string tag;  // what the row encodes
};

struct BigMRecord {
  std::string tag;
  double value = 0.0;
};

class MilpModel {
 public:
  /// Throws if the key is already taken or the bounds are not lb <= ub.
  int add_variable(VarKey key, double lb, double ub, bool binary = false);
  /// Anonymous variable with a fresh `aux` key.
  int add_variable(double lb, double ub, bool binary = false);

  /// Throws on non-finite coefficients or an unknown variable id.
  int add_constraint(std::vector<LinearTerm> terms, Sense sense, double rhs, std::string tag);

  void add_objective(int var, double coef);
  void record_big_m(std::string tag, double value) { big_m_.push_back({std::move(tag), value}); }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  /// Dense maximization coefficients, one per variable.
  const std::vector<double>& objective() const { return objective_; }
  const std::vector<BigMRecord>& big_m() const { return big_m_; }

  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_binaries() const;

  std::optional<int> find(const VarKey& key) const;
  /// Id of the key or throws Error(invalid_argument).
  int at(const VarKey& key) const;

  /// Largest row violation (and bound violation) of a point; binaries are
  /// not rounded here.
  double max_violation(const std::vector<double>& values) const;
  double objective_value(const std::vector<double>& values) const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::vector<double> objective_;
  std::vector<BigMRecord> big_m_;
  std::map<VarKey, int> index_;
  int next_aux_ = 0;
};

}  // namespace h2grid
