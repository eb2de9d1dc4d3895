#include "h2grid/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <thread>

#include "h2grid/device_response.hpp"
#include "h2grid/error.hpp"

namespace h2grid {

namespace fs = std::filesystem;

namespace {

constexpr double kBalanceEps = 1e-12;
constexpr double kFrequencyTol = 1e-9;
constexpr double kVoltageTol = 1e-12;

// Point of the zero set of a non-increasing g closest to `nominal`. The
// search starts in [lo, hi] and widens by `step` up to `max_widen` times when
// the bracket holds no root; if there is still none, the widest endpoint is
// returned.
template <class G>
double zero_closest(const G& g, double nominal, double lo, double hi, double step, int max_widen, double tol) {
  const double g0 = g(nominal);
  if (std::abs(g0) <= kBalanceEps) return nominal;
  if (g0 > 0.0) {
    double a = nominal;
    double b = std::max(hi, nominal);
    for (int k = 0; g(b) > kBalanceEps && k < max_widen; ++k) b += step;
    if (g(b) > kBalanceEps) return b;
    while (b - a > tol) {
      const double m = 0.5 * (a + b);
      if (g(m) > kBalanceEps) a = m;
      else b = m;
    }
    return b;
  }
  double a = std::min(lo, nominal);
  double b = nominal;
  for (int k = 0; g(a) < -kBalanceEps && k < max_widen; ++k) a -= step;
  if (g(a) < -kBalanceEps) return a;
  while (b - a > tol) {
    const double m = 0.5 * (a + b);
    if (g(m) < -kBalanceEps) b = m;
    else a = m;
  }
  return a;
}

struct Tree {
  std::size_t root = 0;
  std::vector<std::size_t> order;       // BFS from the root
  std::vector<std::size_t> parent;      // bus -> parent bus
  std::vector<std::size_t> up_branch;   // bus -> branch to the parent
  std::vector<double> sign;             // +1 when the branch is oriented parent -> bus
};

Tree build_tree(const MicrogridCase& mg) {
  const std::size_t n = mg.buses.size();
  Tree tr;
  tr.root = mg.hydrogen.empty() ? 0 : mg.require_bus(mg.hydrogen.front().bus);
  tr.parent.assign(n, n);
  tr.up_branch.assign(n, 0);
  tr.sign.assign(n, 0.0);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);
  for (std::size_t b = 0; b < mg.branches.size(); ++b) {
    const auto i = mg.require_bus(mg.branches[b].from);
    const auto j = mg.require_bus(mg.branches[b].to);
    adj[i].push_back({j, b});
    adj[j].push_back({i, b});
  }
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  q.push(tr.root);
  seen[tr.root] = true;
  while (!q.empty()) {
    const auto i = q.front();
    q.pop();
    tr.order.push_back(i);
    for (auto [j, b] : adj[i]) {
      if (seen[j]) continue;
      seen[j] = true;
      tr.parent[j] = i;
      tr.up_branch[j] = b;
      tr.sign[j] = mg.require_bus(mg.branches[b].from) == i ? 1.0 : -1.0;
      q.push(j);
    }
  }
  if (tr.order.size() != n) throw Error(ErrorCode::validation, "network not a connected tree");
  return tr;
}

// Fills voltage and branch flows for given nodal injections. p and q are
// net injections per bus; the root absorbs any mismatch.
void sweep_voltages(const MicrogridCase& mg, const Tree& tr, double u_root, const std::vector<double>& p,
                    const std::vector<double>& q, std::vector<double>& u, std::vector<double>& flow_p,
                    std::vector<double>& flow_q) {
  const std::size_t n = mg.buses.size();
  std::vector<double> sub_p(p), sub_q(q);
  for (auto it = tr.order.rbegin(); it != tr.order.rend(); ++it) {
    if (*it == tr.root) continue;
    sub_p[tr.parent[*it]] += sub_p[*it];
    sub_q[tr.parent[*it]] += sub_q[*it];
  }
  u.assign(n, u_root);
  flow_p.assign(mg.branches.size(), 0.0);
  flow_q.assign(mg.branches.size(), 0.0);
  const double u0 = mg.system.u_nominal;
  for (auto i : tr.order) {
    if (i == tr.root) continue;
    const auto b = tr.up_branch[i];
    const double pd = -sub_p[i];  // parent -> i
    const double qd = -sub_q[i];
    flow_p[b] = tr.sign[i] * pd;
    flow_q[b] = tr.sign[i] * qd;
    u[i] = u[tr.parent[i]] - (mg.branches[b].r * pd + mg.branches[b].x * qd) / u0;
  }
}

}  // namespace

OperationPlan realize_droop_equilibrium(const OperationPlan& plan, const MicrogridCase& mg) {
  const Tree tr = build_tree(mg);
  const std::size_t N = mg.buses.size();
  std::vector<std::size_t> h_bus, r_bus, l_bus;
  for (const auto& hs : mg.hydrogen) h_bus.push_back(mg.require_bus(hs.bus));
  for (const auto& rs : mg.renewables) r_bus.push_back(mg.require_bus(rs.bus));
  for (const auto& ld : mg.loads) l_bus.push_back(mg.require_bus(ld.bus));
  const auto& sys = mg.system;
  const double u0 = sys.u_nominal;

  OperationPlan out = plan;
  for (auto& sc : out.scenarios) {
    const std::size_t T = sc.frequency.size();
    for (std::size_t t = 0; t < T; ++t) {
      const auto mode = [&](std::size_t h) {
        if (plan.fc_mode[h][t]) return HydrogenMode::fuel_cell;
        if (plan.ely_mode[h][t]) return HydrogenMode::electrolyzer;
        return HydrogenMode::idle;
      };
      double served = 0.0;
      for (std::size_t l = 0; l < mg.loads.size(); ++l) served += plan.pickup[l][t] * sc.demand[l][t];

      const auto ren_p = [&](std::size_t k, double f) {
        if (mg.renewables[k].mode == ControlMode::constant_pq) return sc.ren_power[k][t];
        return renewable_power(f, sc.mpp[k][t], mg.renewables[k]);
      };
      const auto mismatch = [&](double f) {
        double g = -served;
        for (std::size_t h = 0; h < mg.hydrogen.size(); ++h) {
          g += hydrogen_net_injection(mode(h), electrolyzer_power(f, mg.hydrogen[h]), fuelcell_power(f, mg.hydrogen[h]));
        }
        for (std::size_t k = 0; k < mg.renewables.size(); ++k) g += ren_p(k, f);
        return g;
      };
      const double f = zero_closest(mismatch, sys.f_nominal, sys.f_min, sys.f_max, sys.f_max - sys.f_min, 20,
                                    kFrequencyTol);
      sc.frequency[t] = f;

      std::vector<double> p(N, 0.0), q_load(N, 0.0);
      for (std::size_t h = 0; h < mg.hydrogen.size(); ++h) {
        const auto& hs = mg.hydrogen[h];
        sc.ely_power[h][t] = electrolyzer_power(f, hs);
        sc.fc_power[h][t] = fuelcell_power(f, hs);
        sc.h2_power[h][t] = hydrogen_net_injection(mode(h), sc.ely_power[h][t], sc.fc_power[h][t]);
        p[h_bus[h]] += sc.h2_power[h][t];
      }
      for (std::size_t k = 0; k < mg.renewables.size(); ++k) {
        sc.ren_power[k][t] = ren_p(k, f);
        p[r_bus[k]] += sc.ren_power[k][t];
      }
      for (std::size_t l = 0; l < mg.loads.size(); ++l) {
        const double pl = plan.pickup[l][t] * sc.demand[l][t];
        p[l_bus[l]] -= pl;
        q_load[l_bus[l]] -= pl * mg.loads[l].reactive_ratio();
      }

      const auto reactive = [&](const std::vector<double>& u) {
        std::vector<double> q(q_load);
        for (std::size_t h = 0; h < mg.hydrogen.size(); ++h) {
          q[h_bus[h]] += voltvar_reactive_power(u[h_bus[h]], mg.hydrogen[h].volt_var);
        }
        for (std::size_t k = 0; k < mg.renewables.size(); ++k) {
          if (mg.renewables[k].mode == ControlMode::droop) {
            q[r_bus[k]] += voltvar_reactive_power(u[r_bus[k]], mg.renewables[k].volt_var);
          }
        }
        return q;
      };
      std::vector<double> u, fp, fq;
      // Inner fixed point on Q(U) for a given root voltage; the result is the
      // reactive imbalance left at the root.
      const auto settle = [&](double u_root) {
        std::vector<double> cur(N, u_root);
        double damping = 1.0;
        double last_change = INFINITY;
        for (int it = 0; it < 5000; ++it) {
          sweep_voltages(mg, tr, u_root, p, reactive(cur), u, fp, fq);
          double change = 0.0;
          for (std::size_t i = 0; i < N; ++i) change = std::max(change, std::abs(u[i] - cur[i]));
          if (change > last_change) damping = std::max(damping * 0.5, 1.0 / 64.0);
          last_change = change;
          for (std::size_t i = 0; i < N; ++i) cur[i] += damping * (u[i] - cur[i]);
          if (change < kVoltageTol) break;
        }
        u = cur;
        const auto q = reactive(cur);
        double total = 0.0;
        for (double v : q) total += v;
        return total;
      };
      const double u_root = zero_closest(settle, u0, 0.5 * u0, 1.5 * u0, 0.0, 0, kVoltageTol);
      settle(u_root);
      const auto q = reactive(u);
      sweep_voltages(mg, tr, u_root, p, q, u, fp, fq);
      for (std::size_t i = 0; i < N; ++i) sc.voltage[i][t] = u[i];
      for (std::size_t b = 0; b < mg.branches.size(); ++b) {
        sc.flow_p[b][t] = fp[b];
        sc.flow_q[b][t] = fq[b];
      }
      for (std::size_t h = 0; h < mg.hydrogen.size(); ++h) {
        sc.h2_reactive[h][t] = voltvar_reactive_power(u[h_bus[h]], mg.hydrogen[h].volt_var);
      }
      for (std::size_t k = 0; k < mg.renewables.size(); ++k) {
        sc.ren_reactive[k][t] = mg.renewables[k].mode == ControlMode::droop
                                    ? voltvar_reactive_power(u[r_bus[k]], mg.renewables[k].volt_var)
                                    : 0.0;
      }
    }
    for (std::size_t h = 0; h < mg.hydrogen.size(); ++h) {
      double level = mg.hydrogen[h].h_init;
      for (std::size_t t = 0; t < T; ++t) {
        const auto m = plan.fc_mode[h][t] ? HydrogenMode::fuel_cell
                       : plan.ely_mode[h][t] ? HydrogenMode::electrolyzer
                                             : HydrogenMode::idle;
        level = tank_step(level, m, sc.ely_power[h][t], sc.fc_power[h][t], mg.horizon.step_hours, mg.hydrogen[h])
                    .energy;
        sc.tank[h][t] = level;
      }
    }
  }
  out.max_residual = 0.0;
  return out;
}

CaseRun run_case(const std::string& label, const MicrogridCase& mg, const ScenarioSet& scen, const SolveFn& solve,
                 BuildOptions options) {
  CaseRun run;
  run.label = label;
  try {
    const auto model = build_model(mg, scen, options);
    run.variables = model.milp.num_variables();
    run.binaries = model.milp.num_binaries();
    const auto res = solve(model.milp);
    run.status = res.status;
    run.solve_seconds = res.wall_seconds;
    run.plan = extract_plan(model, res);
    run.report = compute_resilience_report(run.plan, mg, scen);
    run.ok = true;
  } catch (const Error& e) {
    run.ok = false;
    if (e.code() == ErrorCode::infeasible) run.status = SolveStatus::infeasible;
    else if (run.status == SolveStatus::optimal || run.status == SolveStatus::feasible) run.status = SolveStatus::error;
    run.message = e.what();
  } catch (const std::exception& e) {
    run.ok = false;
    run.status = SolveStatus::error;
    run.message = e.what();
  }
  return run;
}

namespace {

// Runs fn(0..n-1) on up to `jobs` threads. Each index writes its own slot, so
// the merged order is the index order regardless of scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, const Fn& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct SubCase {
  std::string label;
  MicrogridCase grid;
  BuildOptions options;
};

std::vector<CaseRun> run_all(const std::vector<SubCase>& cases, const ScenarioSet& scen, const SolveFn& solve,
                             unsigned jobs) {
  std::vector<CaseRun> runs(cases.size());
  parallel_for(cases.size(), jobs, [&](std::size_t i) {
    runs[i] = run_case(cases[i].label, cases[i].grid, scen, solve, cases[i].options);
  });
  return runs;
}

}  // namespace

std::vector<FillLevel> default_fill_levels() { return {std::nullopt, 0.0, 0.25, 0.5, 0.75, 1.0}; }

std::vector<CaseRun> run_hydrogen_sweep(const MicrogridCase& mg, const ScenarioSet& scen, const SolveFn& solve,
                                        const std::vector<FillLevel>& fills, unsigned jobs) {
  if (mg.hydrogen.size() != 1) {
    throw Error(ErrorCode::invalid_argument, "hydrogen sweep needs exactly one hydrogen source");
  }
  std::vector<SubCase> cases;
  char next = 'A';
  for (const auto& fill : fills) {
    SubCase c{"", mg, {}};
    if (!fill) {
      c.label = "O";
      c.grid.hydrogen.clear();
    } else {
      if (*fill < 0.0 || *fill > 1.0) throw Error(ErrorCode::invalid_argument, "fill level outside [0, 1]");
      c.label = std::string(1, next++);
      c.grid.hydrogen[0].h_init = *fill * c.grid.hydrogen[0].h_max;
    }
    cases.push_back(std::move(c));
  }
  return run_all(cases, scen, solve, jobs);
}

std::vector<CaseRun> run_gridforming_sweep(const MicrogridCase& mg, const ScenarioSet& scen, const SolveFn& solve,
                                           unsigned jobs) {
  if (mg.renewables.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "grid-forming sweep needs at least two renewables");
  }
  std::vector<SubCase> cases;
  const char* labels[] = {"I", "II", "III"};
  for (int droop_count = 0; droop_count < 3; ++droop_count) {
    SubCase c{labels[droop_count], mg, {}};
    for (int k = 0; k < 2; ++k) {
      c.grid.renewables[static_cast<std::size_t>(k)].mode =
          k < droop_count ? ControlMode::droop : ControlMode::constant_pq;
    }
    cases.push_back(std::move(c));
  }
  return run_all(cases, scen, solve, jobs);
}

std::vector<CaseRun> run_baseline_comparison(const MicrogridCase& mg, const ScenarioSet& scen, const SolveFn& solve,
                                             unsigned jobs) {
  std::vector<SubCase> cases{{"proposed", mg, {Coupling::droop}}, {"baseline", mg, {Coupling::dispatch}}};
  auto runs = run_all(cases, scen, solve, jobs);
  for (auto& run : runs) {
    if (!run.ok) continue;
    try {
      run.plan = realize_droop_equilibrium(run.plan, mg);
      run.report = compute_resilience_report(run.plan, mg, scen);
    } catch (const std::exception& e) {
      run.ok = false;
      run.status = SolveStatus::error;
      run.message = std::string("ex-post evaluation failed: ") + e.what();
    }
  }
  return runs;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
}

}  // namespace

void write_sweep_artifacts(const std::vector<CaseRun>& runs, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create '" + dir + "': " + ec.message());
  for (const auto& run : runs) {
    const fs::path sub = fs::path(dir) / run.label;
    fs::create_directories(sub, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create '" + sub.string() + "': " + ec.message());
    if (!run.ok) {
      write_text(sub / "error.txt", run.message + "\n");
      continue;
    }
    write_text(sub / "plan.json", plan_to_json(run.plan).dump(1) + "\n");
    write_text(sub / "report.json", report_to_json(run.report).dump(2) + "\n");
    write_text(sub / "report.csv", report_to_csv(run.report, run.label));
  }
  write_text(fs::path(dir) / "sweep.csv", sweep_to_csv(runs));
}

}  // namespace h2grid
