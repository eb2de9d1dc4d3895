#include "h2grid/milp_model.hpp"

#include <algorithm>
#include <cmath>

#include "h2grid/error.hpp"

namespace h2grid {

const char* role_name(VarRole role) {
  switch (role) {
    case VarRole::load_pickup: return "load_pickup";
    case VarRole::ely_mode: return "ely_mode";
    case VarRole::fc_mode: return "fc_mode";
    case VarRole::ren_setpoint: return "ren_setpoint";
    case VarRole::frequency: return "frequency";
    case VarRole::voltage: return "voltage";
    case VarRole::flow_p: return "flow_p";
    case VarRole::flow_q: return "flow_q";
    case VarRole::ely_power: return "ely_power";
    case VarRole::fc_power: return "fc_power";
    case VarRole::ely_product: return "ely_product";
    case VarRole::fc_product: return "fc_product";
    case VarRole::h2_injection: return "h2_injection";
    case VarRole::h2_reactive: return "h2_reactive";
    case VarRole::tank: return "tank";
    case VarRole::ren_power: return "ren_power";
    case VarRole::ren_reactive: return "ren_reactive";
    case VarRole::min_select: return "min_select";
    case VarRole::seg_ely: return "seg_ely";
    case VarRole::seg_fc: return "seg_fc";
    case VarRole::seg_h2_voltvar: return "seg_h2_voltvar";
    case VarRole::seg_ren: return "seg_ren";
    case VarRole::seg_ren_voltvar: return "seg_ren_voltvar";
    case VarRole::aux: return "aux";
  }
  return "?";
}

int MilpModel::add_variable(VarKey key, double lb, double ub, bool binary) {
  if (std::isnan(lb) || std::isnan(ub) || lb > ub) {
    throw Error(ErrorCode::invalid_argument, std::string("bad bounds for variable ") + role_name(key.role));
  }
  if (binary && (lb < 0.0 || ub > 1.0)) {
    throw Error(ErrorCode::invalid_argument, "binary variable bounds must lie in [0, 1]");
  }
  const int id = static_cast<int>(vars_.size());
  if (!index_.emplace(key, id).second) {
    throw Error(ErrorCode::invalid_argument, std::string("duplicate variable key ") + role_name(key.role));
  }
  vars_.push_back({key, lb, ub, binary});
  objective_.push_back(0.0);
  return id;
}

int MilpModel::add_variable(double lb, double ub, bool binary) {
  return add_variable(VarKey{VarRole::aux, -1, -1, -1, next_aux_++}, lb, ub, binary);
}

int MilpModel::add_constraint(std::vector<LinearTerm> terms, Sense sense, double rhs, std::string tag) {
  if (!std::isfinite(rhs)) throw Error(ErrorCode::invalid_argument, "non-finite right-hand side in " + tag);
  for (const auto& term : terms) {
    if (term.var < 0 || static_cast<std::size_t>(term.var) >= vars_.size()) {
      throw Error(ErrorCode::invalid_argument, "unknown variable in " + tag);
    }
    if (!std::isfinite(term.coef)) throw Error(ErrorCode::invalid_argument, "non-finite coefficient in " + tag);
  }
  std::erase_if(terms, [](const LinearTerm& t) { return t.coef == 0.0; });
  rows_.push_back({std::move(terms), sense, rhs, std::move(tag)});
  return static_cast<int>(rows_.size()) - 1;
}

void MilpModel::add_objective(int var, double coef) {
  if (!std::isfinite(coef)) throw Error(ErrorCode::invalid_argument, "non-finite objective coefficient");
  objective_.at(static_cast<std::size_t>(var)) += coef;
}

std::size_t MilpModel::num_binaries() const {
  return static_cast<std::size_t>(std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) { return v.binary; }));
}

std::optional<int> MilpModel::find(const VarKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int MilpModel::at(const VarKey& key) const {
  auto id = find(key);
  if (!id) {
    throw Error(ErrorCode::invalid_argument, std::string("no variable ") + role_name(key.role) + "(s=" +
                                                 std::to_string(key.s) + ",i=" + std::to_string(key.i) +
                                                 ",t=" + std::to_string(key.t) + ")");
  }
  return *id;
}

double MilpModel::max_violation(const std::vector<double>& values) const {
  if (values.size() != vars_.size()) throw Error(ErrorCode::invalid_argument, "value vector length mismatch");
  double worst = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    worst = std::max({worst, vars_[j].lb - values[j], values[j] - vars_[j].ub});
  }
  for (const auto& row : rows_) {
    double lhs = 0.0;
    for (const auto& term : row.terms) lhs += term.coef * values[static_cast<std::size_t>(term.var)];
    const double gap = lhs - row.rhs;
    switch (row.sense) {
      case Sense::le: worst = std::max(worst, gap); break;
      case Sense::ge: worst = std::max(worst, -gap); break;
      case Sense::eq: worst = std::max(worst, std::abs(gap)); break;
    }
  }
  return worst;
}

double MilpModel::objective_value(const std::vector<double>& values) const {
  double obj = 0.0;
  for (std::size_t j = 0; j < objective_.size(); ++j) obj += objective_[j] * values.at(j);
  return obj;
}

}  // namespace h2grid
