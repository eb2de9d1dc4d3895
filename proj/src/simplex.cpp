#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "h2grid/error.hpp"
#include "h2grid/solver.hpp"

namespace h2grid {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr std::size_t kMaxIterations = 200000;

// x_j = offset + sum(sign * column)
struct ColumnMap {
  double offset = 0.0;
  std::vector<std::pair<std::size_t, double>> cols;
};

struct StdRow {
  std::vector<double> coef;  // structural columns
  Sense sense = Sense::le;
  double rhs = 0.0;
};

enum class PhaseOutcome { optimal, unbounded, stalled };

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), a_(rows, std::vector<double>(cols + 1, 0.0)),
                                                 cost_(cols + 1, 0.0), basis_(rows, 0), allowed_(cols, true) {}

  double& at(std::size_t i, std::size_t j) { return a_[i][j]; }
  double& rhs(std::size_t i) { return a_[i][n_]; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::vector<bool>& allowed() { return allowed_; }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  std::size_t iterations() const { return iterations_; }

  /// Sets reduced costs d = c - c_B B^-1 A for objective c (maximize).
  void price(const std::vector<double>& c) {
    for (std::size_t j = 0; j <= n_; ++j) cost_[j] = j < n_ ? c[j] : 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) cost_[j] -= cb * a_[i][j];
    }
  }

  /// Objective value of the current basis.
  double value() const { return -cost_[n_]; }
  double reduced(std::size_t j) const { return cost_[j]; }

  void pivot(std::size_t r, std::size_t c) {
    auto& prow = a_[r];
    const double p = prow[c];
    for (auto& v : prow) v /= p;
    prow[c] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = a_[i][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) a_[i][j] -= f * prow[j];
      a_[i][c] = 0.0;
    }
    const double f = cost_[c];
    if (f != 0.0) {
      for (std::size_t j = 0; j <= n_; ++j) cost_[j] -= f * prow[j];
      cost_[c] = 0.0;
    }
    basis_[r] = c;
    ++iterations_;
  }

  /// Bland's rule: lowest-index improving column, lowest-index leaving
  /// basic variable among ratio ties.
  PhaseOutcome run() {
    while (iterations_ < kMaxIterations) {
      std::size_t enter = n_;
      for (std::size_t j = 0; j < n_; ++j) {
        if (allowed_[j] && cost_[j] > kCostTol) {
          enter = j;
          break;
        }
      }
      if (enter == n_) return PhaseOutcome::optimal;
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double aij = a_[i][enter];
        if (aij <= kPivotTol) continue;
        const double ratio = std::max(0.0, a_[i][n_]) / aij;
        if (leave == m_ || ratio < best - 1e-12) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + 1e-12 && basis_[i] < basis_[leave]) {
          leave = i;
        }
      }
      if (leave == m_) return PhaseOutcome::unbounded;
      pivot(leave, enter);
    }
    return PhaseOutcome::stalled;
  }

  void drop_row(std::size_t r) {
    a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(r));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    --m_;
  }

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<std::vector<double>> a_;
  std::vector<double> cost_;
  std::vector<std::size_t> basis_;
  std::vector<bool> allowed_;
  std::size_t iterations_ = 0;
};

double row_violation(const LpRow& row, const std::vector<double>& x) {
  double lhs = 0.0;
  double scale = std::max(1.0, std::abs(row.rhs));
  for (const auto& t : row.terms) {
    const double v = t.coef * x[static_cast<std::size_t>(t.var)];
    lhs += v;
    scale = std::max(scale, std::abs(v));
  }
  double viol = lhs - row.rhs;
  if (row.sense == Sense::ge) viol = -viol;
  if (row.sense == Sense::eq) viol = std::abs(viol);
  return std::max(0.0, viol) / scale;
}

}  // namespace

SimplexResult solve_lp_simplex(const LpProblem& lp) {
  const auto start = std::chrono::steady_clock::now();
  SimplexResult out;
  out.result.backend = "simplex";
  const auto finish = [&](SolveStatus status, std::string message = {}) {
    out.result.status = status;
    out.result.message = std::move(message);
    out.result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  };

  const std::size_t nv = lp.num_variables();
  if (lp.lb.size() != nv || lp.ub.size() != nv) throw Error(ErrorCode::invalid_argument, "LP bound vectors mismatch");

  // Substitute variables onto non-negative structural columns.
  std::vector<ColumnMap> map(nv);
  std::size_t ns = 0;
  std::vector<StdRow> rows;
  std::vector<std::pair<std::size_t, double>> bound_rows;  // (column, width)
  for (std::size_t j = 0; j < nv; ++j) {
    const double lo = lp.lb[j];
    const double hi = lp.ub[j];
    if (lo > hi) return finish(SolveStatus::infeasible, "empty variable bounds");
    if (std::isfinite(lo) && std::isfinite(hi) && lo == hi) {
      map[j].offset = lo;
    } else if (std::isfinite(lo)) {
      map[j] = {lo, {{ns, 1.0}}};
      if (std::isfinite(hi)) bound_rows.emplace_back(ns, hi - lo);
      ++ns;
    } else if (std::isfinite(hi)) {
      map[j] = {hi, {{ns, -1.0}}};
      ++ns;
    } else {
      map[j] = {0.0, {{ns, 1.0}, {ns + 1, -1.0}}};
      ns += 2;
    }
  }
  for (const auto& row : lp.rows) {
    StdRow sr{std::vector<double>(ns, 0.0), row.sense, row.rhs};
    bool any = false;
    for (const auto& t : row.terms) {
      const auto& cm = map.at(static_cast<std::size_t>(t.var));
      sr.rhs -= t.coef * cm.offset;
      for (const auto& [c, sign] : cm.cols) {
        sr.coef[c] += t.coef * sign;
        any = any || sr.coef[c] != 0.0;
      }
    }
    if (!any) {
      // Constant row after substitution.
      const double tol = kLpFeasibilityTolerance * std::max(1.0, std::abs(row.rhs));
      const bool ok = sr.sense == Sense::le ? 0.0 <= sr.rhs + tol
                      : sr.sense == Sense::ge ? 0.0 >= sr.rhs - tol
                                              : std::abs(sr.rhs) <= tol;
      if (!ok) return finish(SolveStatus::infeasible, "constant row violated");
      continue;
    }
    rows.push_back(std::move(sr));
  }
  for (const auto& [c, width] : bound_rows) {
    StdRow sr{std::vector<double>(ns, 0.0), Sense::le, width};
    sr.coef[c] = 1.0;
    rows.push_back(std::move(sr));
  }
  for (auto& sr : rows) {
    if (sr.rhs < 0.0) {
      for (auto& v : sr.coef) v = -v;
      sr.rhs = -sr.rhs;
      if (sr.sense == Sense::le) sr.sense = Sense::ge;
      else if (sr.sense == Sense::ge) sr.sense = Sense::le;
    }
  }

  // Columns: structural | slack/surplus | artificial
  std::size_t n_slack = 0;
  std::size_t n_art = 0;
  for (const auto& sr : rows) {
    if (sr.sense != Sense::eq) ++n_slack;
    if (sr.sense != Sense::le) ++n_art;
  }
  const std::size_t m = rows.size();
  const std::size_t art0 = ns + n_slack;
  const std::size_t ncols = art0 + n_art;
  Tableau tab(m, ncols);
  {
    std::size_t slack = ns;
    std::size_t art = art0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& sr = rows[i];
      for (std::size_t c = 0; c < ns; ++c) tab.at(i, c) = sr.coef[c];
      tab.rhs(i) = sr.rhs;
      if (sr.sense == Sense::le) {
        tab.at(i, slack) = 1.0;
        tab.basis()[i] = slack++;
      } else {
        if (sr.sense == Sense::ge) tab.at(i, slack++) = -1.0;
        tab.at(i, art) = 1.0;
        tab.basis()[i] = art++;
      }
    }
  }

  if (n_art > 0) {
    std::vector<double> phase1(ncols, 0.0);
    for (std::size_t j = art0; j < ncols; ++j) phase1[j] = -1.0;
    tab.price(phase1);
    if (tab.run() == PhaseOutcome::stalled) return finish(SolveStatus::error, "numerical failure: iteration limit in phase I");
    double scale = 1.0;
    for (const auto& sr : rows) scale = std::max(scale, std::abs(sr.rhs));
    if (tab.value() < -kLpFeasibilityTolerance * scale) return finish(SolveStatus::infeasible);
    // Drive zero-level artificials out of the basis; drop redundant rows.
    for (std::size_t i = tab.rows(); i-- > 0;) {
      if (tab.basis()[i] < art0) continue;
      std::size_t enter = ncols;
      for (std::size_t j = 0; j < art0; ++j) {
        if (std::abs(tab.at(i, j)) > kPivotTol) {
          enter = j;
          break;
        }
      }
      if (enter == ncols) tab.drop_row(i);
      else tab.pivot(i, enter);
    }
    for (std::size_t j = art0; j < ncols; ++j) tab.allowed()[j] = false;
  }

  std::vector<double> phase2(ncols, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    for (const auto& [c, sign] : map[j].cols) phase2[c] += lp.objective[j] * sign;
  }
  tab.price(phase2);
  const auto outcome = tab.run();
  out.iterations = tab.iterations();
  if (outcome == PhaseOutcome::stalled) return finish(SolveStatus::error, "numerical failure: iteration limit");
  if (outcome == PhaseOutcome::unbounded) return finish(SolveStatus::unbounded);

  std::vector<double> col(ncols, 0.0);
  for (std::size_t i = 0; i < tab.rows(); ++i) col[tab.basis()[i]] = tab.rhs(i);
  std::vector<double> x(nv, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    x[j] = map[j].offset;
    for (const auto& [c, sign] : map[j].cols) x[j] += sign * col[c];
  }
  for (std::size_t j = 0; j < art0; ++j) out.reduced_costs.push_back(tab.reduced(j));

  double worst = 0.0;
  for (const auto& row : lp.rows) worst = std::max(worst, row_violation(row, x));
  for (std::size_t j = 0; j < nv; ++j) {
    const double scale = std::max(1.0, std::abs(x[j]));
    worst = std::max({worst, (lp.lb[j] - x[j]) / scale, (x[j] - lp.ub[j]) / scale});
  }
  if (worst > kLpFeasibilityTolerance) {
    return finish(SolveStatus::error, "numerical failure: residual " + std::to_string(worst));
  }
  double obj = 0.0;
  for (std::size_t j = 0; j < nv; ++j) obj += lp.objective[j] * x[j];
  out.result.objective = obj;
  out.result.values = std::move(x);
  return finish(SolveStatus::optimal);
}

LpProblem fix_binaries(const MilpModel& model, const std::vector<double>& binary_values) {
  LpProblem lp;
  std::size_t next = 0;
  for (const auto& v : model.variables()) {
    if (v.binary) {
      if (next >= binary_values.size()) throw Error(ErrorCode::invalid_argument, "too few binary values");
      const double b = binary_values[next++];
      lp.lb.push_back(b);
      lp.ub.push_back(b);
    } else {
      lp.lb.push_back(v.lb);
      lp.ub.push_back(v.ub);
    }
  }
  if (next != binary_values.size()) throw Error(ErrorCode::invalid_argument, "too many binary values");
  lp.objective = model.objective();
  for (const auto& row : model.constraints()) lp.rows.push_back({row.terms, row.sense, row.rhs});
  return lp;
}

SolveResult solve_enumeration(const MilpModel& model, int budget) {
  const auto start = std::chrono::steady_clock::now();
  const auto n = static_cast<int>(model.num_binaries());
  if (n > budget) {
    throw Error(ErrorCode::invalid_argument, "enumeration budget exceeded: " + std::to_string(n) +
                                                 " binaries > " + std::to_string(budget));
  }
  SolveResult best;
  best.backend = "enumeration";
  best.status = SolveStatus::infeasible;
  bool found = false;
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<double> bits(static_cast<std::size_t>(n));
  std::vector<double> lo, hi;  // binaries may be pinned by their bounds
  for (const auto& v : model.variables()) {
    if (!v.binary) continue;
    lo.push_back(v.lb);
    hi.push_back(v.ub);
  }
  for (std::uint64_t code = 0; code < count; ++code) {
    // Most significant bit first gives lexicographic order.
    bool allowed = true;
    for (int k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(k);
      bits[i] = static_cast<double>((code >> (n - 1 - k)) & 1U);
      if (bits[i] < lo[i] || bits[i] > hi[i]) allowed = false;
    }
    if (!allowed) continue;
    const auto sub = solve_lp_simplex(fix_binaries(model, bits));
    if (sub.result.status == SolveStatus::unbounded) {
      best.status = SolveStatus::unbounded;
      best.values.clear();
      break;
    }
    if (sub.result.status == SolveStatus::error) {
      best.status = SolveStatus::error;
      best.message = sub.result.message;
      best.values.clear();
      break;
    }
    if (sub.result.status != SolveStatus::optimal) continue;
    const double obj = sub.result.objective;
    if (!found || obj > best.objective + 1e-9 * (1.0 + std::abs(best.objective))) {
      found = true;
      best.status = SolveStatus::optimal;
      best.objective = obj;
      best.values = sub.result.values;
    }
  }
  best.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return best;
}

}  // namespace h2grid
