#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "h2grid/device_response.hpp"
#include "h2grid/milp_model.hpp"

namespace h2test {

using namespace h2grid;

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(H2GRID_FIXTURE_DIR) / name; }

std::filesystem::path data_file(const std::string& name) { return std::filesystem::path(H2GRID_DATA_DIR) / name; }

ScenarioSet single_scenario(const Forecast& fc) {
  ScenarioSet set;
  set.ids = fc.ids;
  set.scenarios.push_back(fc.series);
  set.weights.push_back(1.0);
  return set;
}

ScenarioSet scenarios_for(const MicrogridCase& mg, const std::filesystem::path& csv, std::size_t samples,
                          std::uint64_t seed) {
  const auto fc = to_per_unit(load_forecast_csv(csv), mg.system.s_base_kva);
  check_forecast_covers(fc, mg);
  return build_scenario_set(fc, sample_error_scenarios(fc, samples, seed));
}

std::optional<ExternalSolverConfig> solver_from_env(double time_limit_s) {
  const auto cmd = resolve_solver_command("");
  if (!cmd) return std::nullopt;
  ExternalSolverConfig cfg;
  cfg.command = *cmd;
  cfg.time_limit_s = time_limit_s;
  return cfg;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Mostly uniform inputs, with some mass exactly on the knees.
double pick_input(std::mt19937_64& rng, Interval box, const PiecewiseCurve& curve) {
  if (uniform(rng, 0, 1) < 0.15) {
    std::vector<double> knees;
    for (const auto& seg : curve.segments()) {
      if (box.contains(seg.lo)) knees.push_back(seg.lo);
    }
    if (!knees.empty()) return knees[std::uniform_int_distribution<std::size_t>(0, knees.size() - 1)(rng)];
  }
  return uniform(rng, box.lo, box.hi);
}

}  // namespace

CurveDraw random_curve_draw(std::mt19937_64& rng) {
  CurveDraw d;
  const Interval band{59.5, 60.5};
  const int kind = std::uniform_int_distribution<int>(0, 3)(rng);
  if (kind == 0 || kind == 1) {
    HydrogenSource hs;
    hs.p_ely_max = uniform(rng, 0.05, 2.0);
    hs.p_fc_max = uniform(rng, 0.05, 2.0);
    hs.d_ely = uniform(rng, 0.1, 8.0);
    hs.d_fc = uniform(rng, 0.1, 8.0);
    hs.f_fc_knee = uniform(rng, 59.3, 60.2);
    hs.f_ely_knee = uniform(rng, hs.f_fc_knee + 0.01, 60.7);
    d.input = band;
    if (kind == 0) {
      d.kind = "electrolyzer";
      d.curve = electrolyzer_curve(hs);
      d.oracle = [hs](double f) { return electrolyzer_power(f, hs); };
      d.output = {0.0, hs.p_ely_max};
    } else {
      d.kind = "fuel-cell";
      d.curve = fuelcell_curve(hs);
      d.oracle = [hs](double f) { return fuelcell_power(f, hs); };
      d.output = {0.0, hs.p_fc_max};
    }
  } else if (kind == 2) {
    RenewableSource rs;
    rs.f_knee = uniform(rng, 59.4, 60.4);
    rs.d_droop = uniform(rng, 0.2, 10.0);
    const double mpp = uniform(rng, 0, 1) < 0.1 ? 0.0 : uniform(rng, 0.01, 2.5);
    d.kind = "renewable";
    d.curve = renewable_curve(rs, mpp);
    d.oracle = [rs, mpp](double f) { return renewable_power(f, mpp, rs); };
    d.input = band;
    d.output = {0.0, std::max(mpp, 1e-3)};
  } else {
    VoltVarCurve vv;
    vv.q_gen_max = uniform(rng, 0.01, 1.0);
    vv.q_abs_max = uniform(rng, 0.01, 1.0);
    vv.u_gen_start = uniform(rng, 0.95, 0.995);
    vv.u_abs_start = uniform(rng, 1.005, 1.05);
    vv.d_gen = uniform(rng, 0.5, 40.0);
    vv.d_abs = uniform(rng, 0.5, 40.0);
    d.kind = "volt-var";
    d.curve = voltvar_curve(vv);
    d.oracle = [vv](double u) { return voltvar_reactive_power(u, vv); };
    d.input = {uniform(rng, 0.85, 0.97), uniform(rng, 1.03, 1.15)};
    d.output = {-vv.q_abs_max, vv.q_gen_max};
  }
  d.x = pick_input(rng, d.input, d.curve);
  return d;
}

Projection project_output(const PiecewiseCurve& curve, double x, Interval input, Interval output) {
  Projection p;
  for (const double dir : {1.0, -1.0}) {
    MilpModel m;
    const int in = m.add_variable(x, x);
    const int out = m.add_variable(output.lo, output.hi);
    linearize_piecewise_affine(m, curve, in, out, input, output, {VarRole::seg_fc, 0, 0, 0}, "curve");
    m.add_objective(out, dir);
    const auto res = solve_enumeration(m, 8);
    if (res.status != SolveStatus::optimal) return p;
    if (dir > 0) p.hi = res.values[static_cast<std::size_t>(out)];
    else p.lo = res.values[static_cast<std::size_t>(out)];
  }
  p.feasible = true;
  return p;
}

MicroInstance micro_instance(std::uint64_t seed, int max_binaries) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0;; ++attempt) {
    MicroInstance mi;
    mi.name = "micro-" + std::to_string(seed) + (attempt ? "." + std::to_string(attempt) : "");
    auto mg = parse_case_file(fixture("toy2bus.json"));
    const int T = std::uniform_int_distribution<int>(1, 2)(rng);
    mg.horizon.periods = T;

    auto& hs = mg.hydrogen.at(0);
    hs.p_fc_max = uniform(rng, 0.15, 0.4);
    hs.d_fc = uniform(rng, 0.3, 1.0);
    hs.f_fc_knee = uniform(rng, 59.5, 59.9);
    hs.p_ely_max = uniform(rng, 0.05, 0.3);
    hs.d_ely = uniform(rng, 0.2, 1.0);
    hs.f_ely_knee = uniform(rng, 60.1, 60.5);
    hs.h_max = uniform(rng, 0.02, 0.2);
    hs.h_init = uniform(rng, 0.0, 1.0) * hs.h_max;
    const bool voltvar = uniform(rng, 0, 1) < 0.4;
    if (!voltvar) hs.volt_var.q_gen_max = hs.volt_var.q_abs_max = 0.0;

    mg.loads.at(0).power_factor = voltvar ? 0.99 : 1.0;
    mg.loads.at(0).weight = uniform(rng, 0.1, 0.95);
    const int extra_loads = std::uniform_int_distribution<int>(0, T == 1 ? 2 : 1)(rng);
    for (int k = 0; k < extra_loads; ++k) {
      LoadPoint ld;
      ld.id = "load_x" + std::to_string(k);
      ld.bus = k % 2 == 0 ? "1" : "2";
      ld.weight = uniform(rng, 0.1, 0.95);
      ld.power_factor = mg.loads.at(0).power_factor;
      mg.loads.push_back(ld);
    }
    const bool wind = T == 1 && uniform(rng, 0, 1) < 0.5;
    if (wind) {
      RenewableSource rs;
      rs.id = "wind_2";
      rs.bus = "2";
      rs.f_knee = uniform(rng, 59.9, 60.2);
      rs.d_droop = uniform(rng, 0.5, 2.0);
      mg.renewables.push_back(rs);
    }

    Forecast fc;
    for (int t = 0; t < T; ++t) fc.timestamps.push_back("t" + std::to_string(t));
    for (const auto& rs : mg.renewables) {
      fc.ids.push_back(rs.id);
      std::vector<double> v;
      for (int t = 0; t < T; ++t) v.push_back(uniform(rng, 0.0, 0.4));
      fc.series.push_back(v);
    }
    for (const auto& ld : mg.loads) {
      fc.ids.push_back(ld.id);
      std::vector<double> v;
      for (int t = 0; t < T; ++t) v.push_back(uniform(rng, 0.03, 0.25));
      fc.series.push_back(v);
    }
    mi.scenarios = single_scenario(fc);
    mi.grid = mg;
    if (!validate_case(mg).ok()) continue;
    const auto dm = build_model(mi.grid, mi.scenarios);
    if (static_cast<int>(dm.milp.num_binaries()) <= max_binaries) return mi;
  }
}

double max_balance_error(const OperationPlan& plan, const MicrogridCase& mg) {
  double worst = 0.0;
  const auto T = static_cast<std::size_t>(mg.horizon.periods);
  for (const auto& st : plan.scenarios) {
    for (std::size_t t = 0; t < T; ++t) {
      double gen = 0.0, load = 0.0;
      for (const auto& row : st.ren_power) gen += row[t];
      for (const auto& row : st.h2_power) gen += row[t];
      for (std::size_t l = 0; l < mg.loads.size(); ++l) load += plan.pickup[l][t] * st.demand[l][t];
      worst = std::max(worst, std::abs(gen - load));
    }
  }
  return worst;
}

TankCheck check_tank(const OperationPlan& plan, const MicrogridCase& mg) {
  TankCheck out;
  const auto T = static_cast<std::size_t>(mg.horizon.periods);
  for (const auto& st : plan.scenarios) {
    for (std::size_t h = 0; h < mg.hydrogen.size(); ++h) {
      const auto& hs = mg.hydrogen[h];
      double prev = hs.h_init, sum = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double level = st.tank[h][t];
        sum += level - prev;
        const auto mode = plan.ely_mode[h][t] ? HydrogenMode::electrolyzer
                          : plan.fc_mode[h][t] ? HydrogenMode::fuel_cell
                                               : HydrogenMode::idle;
        const auto step = tank_step(prev, mode, st.ely_power[h][t], st.fc_power[h][t], mg.horizon.step_hours, hs);
        out.dynamics = std::max(out.dynamics, std::abs(step.energy - level));
        prev = level;
      }
      const double end = st.tank[h][T - 1];
      out.telescoping = std::max(out.telescoping, std::abs(hs.h_init + sum - end) / std::max(1.0, std::abs(end)));
    }
  }
  return out;
}

}  // namespace h2test
