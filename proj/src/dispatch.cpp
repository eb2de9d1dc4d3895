#include "h2grid/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "h2grid/error.hpp"
#include "h2grid/piecewise.hpp"

namespace h2grid {

using nlohmann::json;

namespace {

struct Dims {
  int S = 0, T = 0, N = 0, B = 0, H = 0, R = 0, L = 0;
};

struct Resolved {
  Dims d;
  std::vector<std::size_t> h_bus, r_bus, l_bus, br_from, br_to;
  std::vector<std::size_t> r_series, l_series;
  std::vector<int> pq;          // renewable indices with a setpoint variable
  std::vector<int> pq_slot;     // renewable index -> position in pq, or -1
};

Resolved resolve(const MicrogridCase& mg, const ScenarioSet& scen, const BuildOptions& opt) {
  Resolved r;
  r.d = {static_cast<int>(scen.size()), mg.horizon.periods, static_cast<int>(mg.buses.size()),
         static_cast<int>(mg.branches.size()), static_cast<int>(mg.hydrogen.size()),
         static_cast<int>(mg.renewables.size()), static_cast<int>(mg.loads.size())};
  if (scen.size() == 0) throw Error(ErrorCode::invalid_argument, "scenario set is empty");
  if (scen.weights.size() != scen.size()) throw Error(ErrorCode::invalid_argument, "scenario weights/count mismatch");
  for (const auto& sc : scen.scenarios) {
    if (sc.size() != scen.ids.size()) throw Error(ErrorCode::invalid_argument, "scenario with missing series");
    for (const auto& series : sc) {
      if (series.size() != static_cast<std::size_t>(r.d.T)) {
        throw Error(ErrorCode::invalid_argument, "scenario series length differs from the case horizon");
      }
    }
  }
  for (const auto& hs : mg.hydrogen) r.h_bus.push_back(mg.require_bus(hs.bus));
  for (const auto& rs : mg.renewables) {
    r.r_bus.push_back(mg.require_bus(rs.bus));
    r.r_series.push_back(scen.require(rs.id));
  }
  for (const auto& ld : mg.loads) {
    r.l_bus.push_back(mg.require_bus(ld.bus));
    r.l_series.push_back(scen.require(ld.id));
  }
  for (const auto& br : mg.branches) {
    r.br_from.push_back(mg.require_bus(br.from));
    r.br_to.push_back(mg.require_bus(br.to));
  }
  r.pq_slot.assign(mg.renewables.size(), -1);
  if (opt.coupling == Coupling::droop) {
    for (int k = 0; k < r.d.R; ++k) {
      if (mg.renewables[static_cast<std::size_t>(k)].mode == ControlMode::constant_pq) {
        r.pq_slot[static_cast<std::size_t>(k)] = static_cast<int>(r.pq.size());
        r.pq.push_back(k);
      }
    }
  }
  return r;
}

double mpp_at(const ScenarioSet& scen, const Resolved& r, int s, int k, int t) {
  return scen.scenarios[static_cast<std::size_t>(s)][r.r_series[static_cast<std::size_t>(k)]]
                       [static_cast<std::size_t>(t)];
}

double demand_at(const ScenarioSet& scen, const Resolved& r, int s, int l, int t) {
  return scen.scenarios[static_cast<std::size_t>(s)][r.l_series[static_cast<std::size_t>(l)]]
                       [static_cast<std::size_t>(t)];
}

double setpoint_cap(const ScenarioSet& scen, const Resolved& r, int k) {
  double cap = 0.0;
  for (int s = 0; s < r.d.S; ++s) {
    for (int t = 0; t < r.d.T; ++t) cap = std::max(cap, mpp_at(scen, r, s, k, t));
  }
  return cap;
}

std::size_t segment_binaries(const PiecewiseCurve& curve, Interval box) {
  const auto n = curve.restricted(box).size();
  return n > 1 ? n : 0;
}

Interval frequency_box(const MicrogridCase& mg) { return {mg.system.f_min, mg.system.f_max}; }

Interval voltage_box(const MicrogridCase& mg, std::size_t bus) {
  return {mg.buses[bus].u_min, mg.buses[bus].u_max};
}

}  // namespace

std::size_t expected_variable_count(const MicrogridCase& mg, const ScenarioSet& scen, BuildOptions options) {
  const auto r = resolve(mg, scen, options);
  const auto& d = r.d;
  const std::size_t T = static_cast<std::size_t>(d.T);
  const std::size_t per_period = 1 + static_cast<std::size_t>(d.N + 2 * d.B + 7 * d.H + 2 * d.R) + r.pq.size();
  std::size_t n = static_cast<std::size_t>(d.L + 2 * d.H) * T + r.pq.size() * T +
                  static_cast<std::size_t>(d.S) * T * per_period;
  if (options.coupling == Coupling::dispatch) return n;
  const auto fbox = frequency_box(mg);
  for (int s = 0; s < d.S; ++s) {
    for (int t = 0; t < d.T; ++t) {
      for (int h = 0; h < d.H; ++h) {
        const auto& hs = mg.hydrogen[static_cast<std::size_t>(h)];
        n += segment_binaries(electrolyzer_curve(hs), fbox);
        n += segment_binaries(fuelcell_curve(hs), fbox);
        n += segment_binaries(voltvar_curve(hs.volt_var), voltage_box(mg, r.h_bus[static_cast<std::size_t>(h)]));
      }
      for (int k = 0; k < d.R; ++k) {
        const auto& rs = mg.renewables[static_cast<std::size_t>(k)];
        if (rs.mode != ControlMode::droop) continue;
        n += segment_binaries(renewable_curve(rs, mpp_at(scen, r, s, k, t)), fbox);
        n += segment_binaries(voltvar_curve(rs.volt_var), voltage_box(mg, r.r_bus[static_cast<std::size_t>(k)]));
      }
    }
  }
  return n;
}

DispatchModel build_model(const MicrogridCase& mg, const ScenarioSet& scen, BuildOptions options) {
  const auto report = validate_case(mg);
  if (!report.ok()) {
    throw Error(ErrorCode::validation, "case is invalid: " + report.issues.front().message);
  }
  const auto r = resolve(mg, scen, options);
  const auto& d = r.d;
  const bool droop = options.coupling == Coupling::droop;

  DispatchModel dm{mg, scen, options, {}};
  MilpModel& m = dm.milp;
  const auto uz = [](int v) { return static_cast<std::size_t>(v); };

  for (int l = 0; l < d.L; ++l) {
    for (int t = 0; t < d.T; ++t) m.add_variable({VarRole::load_pickup, -1, l, t}, 0.0, 1.0, true);
  }
  for (int h = 0; h < d.H; ++h) {
    for (int t = 0; t < d.T; ++t) m.add_variable({VarRole::ely_mode, -1, h, t}, 0.0, 1.0, true);
  }
  for (int h = 0; h < d.H; ++h) {
    for (int t = 0; t < d.T; ++t) m.add_variable({VarRole::fc_mode, -1, h, t}, 0.0, 1.0, true);
  }
  std::vector<double> caps(uz(d.R), 0.0);
  for (int k : r.pq) {
    caps[uz(k)] = setpoint_cap(scen, r, k);
    for (int t = 0; t < d.T; ++t) m.add_variable({VarRole::ren_setpoint, -1, k, t}, 0.0, caps[uz(k)]);
  }

  for (int h = 0; h < d.H; ++h) {
    for (int t = 0; t < d.T; ++t) {
      m.add_constraint({{m.at({VarRole::ely_mode, -1, h, t}), 1.0}, {m.at({VarRole::fc_mode, -1, h, t}), 1.0}},
                       Sense::le, 1.0, "mode-exclusion");
    }
  }

  // Objective: lambda * P^L is binary times data, so each pickup variable
  // carries w_l * sum_s eta_s * P^L_{s,l,t}.
  for (int l = 0; l < d.L; ++l) {
    for (int t = 0; t < d.T; ++t) {
      double coef = 0.0;
      for (int s = 0; s < d.S; ++s) coef += scen.weights[uz(s)] * demand_at(scen, r, s, l, t);
      m.add_objective(m.at({VarRole::load_pickup, -1, l, t}), mg.loads[uz(l)].weight * coef);
    }
  }

  const double u0 = mg.system.u_nominal;
  const double dt = mg.horizon.step_hours;
  const auto fbox = frequency_box(mg);

  for (int s = 0; s < d.S; ++s) {
    for (int t = 0; t < d.T; ++t) {
      const int f = m.add_variable({VarRole::frequency, s, -1, t}, fbox.lo, fbox.hi);
      std::vector<int> u(uz(d.N)), fp(uz(d.B)), fq(uz(d.B));
      for (int i = 0; i < d.N; ++i) {
        u[uz(i)] = m.add_variable({VarRole::voltage, s, i, t}, mg.buses[uz(i)].u_min, mg.buses[uz(i)].u_max);
      }
      for (int b = 0; b < d.B; ++b) {
        const auto& br = mg.branches[uz(b)];
        fp[uz(b)] = m.add_variable({VarRole::flow_p, s, b, t}, br.p_min, br.p_max);
      }
      for (int b = 0; b < d.B; ++b) {
        const auto& br = mg.branches[uz(b)];
        fq[uz(b)] = m.add_variable({VarRole::flow_q, s, b, t}, br.q_min, br.q_max);
      }
      struct H2Vars { int pe, pf, ye, yf, ph, qh, tank; };
      std::vector<H2Vars> hv;
      for (int h = 0; h < d.H; ++h) {
        const auto& hs = mg.hydrogen[uz(h)];
        H2Vars v{};
        v.pe = m.add_variable({VarRole::ely_power, s, h, t}, 0.0, hs.p_ely_max);
        v.pf = m.add_variable({VarRole::fc_power, s, h, t}, 0.0, hs.p_fc_max);
        v.ye = m.add_variable({VarRole::ely_product, s, h, t}, 0.0, hs.p_ely_max);
        v.yf = m.add_variable({VarRole::fc_product, s, h, t}, 0.0, hs.p_fc_max);
        v.ph = m.add_variable({VarRole::h2_injection, s, h, t}, -hs.p_ely_max, hs.p_fc_max);
        v.qh = m.add_variable({VarRole::h2_reactive, s, h, t}, -hs.volt_var.q_abs_max, hs.volt_var.q_gen_max);
        v.tank = m.add_variable({VarRole::tank, s, h, t}, 0.0, hs.h_max);
        hv.push_back(v);
      }
      std::vector<int> pr(uz(d.R)), qr(uz(d.R));
      for (int k = 0; k < d.R; ++k) {
        const auto& rs = mg.renewables[uz(k)];
        pr[uz(k)] = m.add_variable({VarRole::ren_power, s, k, t}, 0.0, mpp_at(scen, r, s, k, t));
        const bool reactive = rs.mode == ControlMode::droop;
        qr[uz(k)] = m.add_variable({VarRole::ren_reactive, s, k, t}, reactive ? -rs.volt_var.q_abs_max : 0.0,
                                   reactive ? rs.volt_var.q_gen_max : 0.0);
      }
      std::vector<int> sel;
      for (int k : r.pq) sel.push_back(m.add_variable({VarRole::min_select, s, k, t}, 0.0, 1.0, true));

      // Hydrogen sources.
      for (int h = 0; h < d.H; ++h) {
        const auto& hs = mg.hydrogen[uz(h)];
        const auto& v = hv[uz(h)];
        const int xe = m.at({VarRole::ely_mode, -1, h, t});
        const int xf = m.at({VarRole::fc_mode, -1, h, t});
        const auto vbox = voltage_box(mg, r.h_bus[uz(h)]);
        if (droop) {
          linearize_piecewise_affine(m, electrolyzer_curve(hs), f, v.pe, fbox, {0.0, hs.p_ely_max},
                                     {VarRole::seg_ely, s, h, t}, "droop-electrolyzer");
          linearize_piecewise_affine(m, fuelcell_curve(hs), f, v.pf, fbox, {0.0, hs.p_fc_max},
                                     {VarRole::seg_fc, s, h, t}, "droop-fuel-cell");
          linearize_piecewise_affine(m, voltvar_curve(hs.volt_var), u[r.h_bus[uz(h)]], v.qh, vbox,
                                     {-hs.volt_var.q_abs_max, hs.volt_var.q_gen_max},
                                     {VarRole::seg_h2_voltvar, s, h, t}, "voltvar-hydrogen");
        }
        linearize_binary_product(m, xe, v.pe, v.ye, hs.p_ely_max, "product-electrolyzer");
        linearize_binary_product(m, xf, v.pf, v.yf, hs.p_fc_max, "product-fuel-cell");
        m.add_constraint({{v.ph, 1.0}, {v.yf, -1.0}, {v.ye, 1.0}}, Sense::eq, 0.0, "hydrogen-injection");
        // H_t - H_{t-1} - dt eta_e y_e + dt / eta_f y_f = 0
        std::vector<LinearTerm> tank{{v.tank, 1.0}, {v.ye, -dt * hs.eta_ely}, {v.yf, dt / hs.eta_fc}};
        double rhs = hs.h_init;
        if (t > 0) {
          tank.push_back({m.at({VarRole::tank, s, h, t - 1}), -1.0});
          rhs = 0.0;
        }
        m.add_constraint(std::move(tank), Sense::eq, rhs, "tank-balance");
      }

      // Renewables.
      for (int k = 0; k < d.R; ++k) {
        const auto& rs = mg.renewables[uz(k)];
        const double mpp = mpp_at(scen, r, s, k, t);
        if (!droop || rs.mode == ControlMode::droop) {
          if (droop) {
            linearize_piecewise_affine(m, renewable_curve(rs, mpp), f, pr[uz(k)], fbox, {0.0, mpp},
                                       {VarRole::seg_ren, s, k, t}, "droop-renewable");
            const auto vbox = voltage_box(mg, r.r_bus[uz(k)]);
            linearize_piecewise_affine(m, voltvar_curve(rs.volt_var), u[r.r_bus[uz(k)]], qr[uz(k)], vbox,
                                       {-rs.volt_var.q_abs_max, rs.volt_var.q_gen_max},
                                       {VarRole::seg_ren_voltvar, s, k, t}, "voltvar-renewable");
          }
          continue;
        }
        // Constant PQ: P = min(setpoint, mpp). z = 1 selects the setpoint.
        const int slot = r.pq_slot[uz(k)];
        const int set = m.at({VarRole::ren_setpoint, -1, k, t});
        const int z = sel[uz(slot)];
        const double big = caps[uz(k)];
        m.add_constraint({{pr[uz(k)], 1.0}, {set, -1.0}}, Sense::le, 0.0, "pq-min");
        m.add_constraint({{pr[uz(k)], 1.0}, {set, -1.0}, {z, -big}}, Sense::ge, -big, "pq-min");
        m.add_constraint({{pr[uz(k)], 1.0}, {z, big}}, Sense::ge, mpp, "pq-min");
        m.record_big_m("pq-min", big);
      }

      // Nodal balance: outflow - inflow = generation - served load.
      std::vector<std::vector<LinearTerm>> kcl_p(uz(d.N)), kcl_q(uz(d.N));
      for (int b = 0; b < d.B; ++b) {
        kcl_p[r.br_from[uz(b)]].push_back({fp[uz(b)], 1.0});
        kcl_p[r.br_to[uz(b)]].push_back({fp[uz(b)], -1.0});
        kcl_q[r.br_from[uz(b)]].push_back({fq[uz(b)], 1.0});
        kcl_q[r.br_to[uz(b)]].push_back({fq[uz(b)], -1.0});
      }
      for (int h = 0; h < d.H; ++h) {
        kcl_p[r.h_bus[uz(h)]].push_back({hv[uz(h)].ph, -1.0});
        kcl_q[r.h_bus[uz(h)]].push_back({hv[uz(h)].qh, -1.0});
      }
      for (int k = 0; k < d.R; ++k) {
        kcl_p[r.r_bus[uz(k)]].push_back({pr[uz(k)], -1.0});
        kcl_q[r.r_bus[uz(k)]].push_back({qr[uz(k)], -1.0});
      }
      for (int l = 0; l < d.L; ++l) {
        const double p = demand_at(scen, r, s, l, t);
        const int lam = m.at({VarRole::load_pickup, -1, l, t});
        kcl_p[r.l_bus[uz(l)]].push_back({lam, p});
        kcl_q[r.l_bus[uz(l)]].push_back({lam, p * mg.loads[uz(l)].reactive_ratio()});
      }
      for (int i = 0; i < d.N; ++i) {
        m.add_constraint(std::move(kcl_p[uz(i)]), Sense::eq, 0.0, "kcl-active");
        m.add_constraint(std::move(kcl_q[uz(i)]), Sense::eq, 0.0, "kcl-reactive");
      }

      // Linearized DistFlow drop along the file orientation.
      for (int b = 0; b < d.B; ++b) {
        const auto& br = mg.branches[uz(b)];
        m.add_constraint({{u[r.br_from[uz(b)]], 1.0},
                          {u[r.br_to[uz(b)]], -1.0},
                          {fp[uz(b)], -br.r / u0},
                          {fq[uz(b)], -br.x / u0}},
                         Sense::eq, 0.0, "kvl-distflow");
      }
    }
  }
  return dm;
}

double served_objective(const OperationPlan& plan, const MicrogridCase& mg) {
  double obj = 0.0;
  for (const auto& sc : plan.scenarios) {
    for (std::size_t l = 0; l < plan.pickup.size(); ++l) {
      for (std::size_t t = 0; t < plan.pickup[l].size(); ++t) {
        obj += sc.weight * plan.pickup[l][t] * mg.loads[l].weight * sc.demand[l][t];
      }
    }
  }
  return obj;
}

OperationPlan extract_plan(const DispatchModel& dm, const SolveResult& sol) {
  if (!sol.has_solution()) {
    throw Error(sol.status == SolveStatus::infeasible ? ErrorCode::infeasible : ErrorCode::solver,
                std::string("no plan: solver status ") + status_name(sol.status) +
                    (sol.message.empty() ? "" : " (" + sol.message + ")"));
  }
  const auto& m = dm.milp;
  if (sol.values.size() != m.num_variables()) {
    throw Error(ErrorCode::solver, "solution has " + std::to_string(sol.values.size()) + " values for " +
                                       std::to_string(m.num_variables()) + " variables");
  }
  std::vector<double> x = sol.values;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!m.variables()[j].binary) continue;
    const double rounded = std::round(x[j]);
    if (std::abs(x[j] - rounded) >= kBinaryTolerance) {
      throw Error(ErrorCode::solver, "integrality violation on variable v" + std::to_string(j));
    }
    x[j] = rounded;
  }
  double worst = 0.0;
  std::string worst_tag;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto& v = m.variables()[j];
    const double viol = std::max(v.lb - x[j], x[j] - v.ub);
    if (viol > worst) {
      worst = viol;
      worst_tag = std::string("bound of ") + role_name(v.key.role);
    }
  }
  for (const auto& row : m.constraints()) {
    double lhs = 0.0;
    for (const auto& term : row.terms) lhs += term.coef * x[static_cast<std::size_t>(term.var)];
    double viol = lhs - row.rhs;
    if (row.sense == Sense::ge) viol = -viol;
    if (row.sense == Sense::eq) viol = std::abs(viol);
    if (viol > worst) {
      worst = viol;
      worst_tag = row.tag;
    }
  }
  if (worst > kResidualTolerance) {
    std::ostringstream msg;
    msg << "constraint residual " << worst << " in " << worst_tag << " exceeds tolerance";
    throw Error(ErrorCode::solver, msg.str());
  }

  const auto& mg = dm.grid;
  const auto r = resolve(mg, dm.scenarios, dm.options);
  const auto& d = r.d;
  const auto val = [&](VarKey key) { return x[static_cast<std::size_t>(m.at(key))]; };
  const auto bin = [&](VarKey key) { return static_cast<int>(val(key)); };
  const auto uz = [](int v) { return static_cast<std::size_t>(v); };

  OperationPlan plan;
  plan.max_residual = worst;
  plan.pickup.assign(uz(d.L), std::vector<int>(uz(d.T)));
  plan.ely_mode.assign(uz(d.H), std::vector<int>(uz(d.T)));
  plan.fc_mode.assign(uz(d.H), std::vector<int>(uz(d.T)));
  plan.setpoint.assign(uz(d.R), {});
  for (int t = 0; t < d.T; ++t) {
    for (int l = 0; l < d.L; ++l) plan.pickup[uz(l)][uz(t)] = bin({VarRole::load_pickup, -1, l, t});
    for (int h = 0; h < d.H; ++h) {
      plan.ely_mode[uz(h)][uz(t)] = bin({VarRole::ely_mode, -1, h, t});
      plan.fc_mode[uz(h)][uz(t)] = bin({VarRole::fc_mode, -1, h, t});
    }
  }
  for (int k : r.pq) {
    for (int t = 0; t < d.T; ++t) plan.setpoint[uz(k)].push_back(val({VarRole::ren_setpoint, -1, k, t}));
  }

  const auto grid = [&](int rows) { return std::vector<std::vector<double>>(uz(rows), std::vector<double>(uz(d.T))); };
  for (int s = 0; s < d.S; ++s) {
    ScenarioStates st;
    st.weight = dm.scenarios.weights[uz(s)];
    st.frequency.resize(uz(d.T));
    st.voltage = grid(d.N);
    st.flow_p = grid(d.B);
    st.flow_q = grid(d.B);
    st.ely_power = grid(d.H);
    st.fc_power = grid(d.H);
    st.h2_power = grid(d.H);
    st.h2_reactive = grid(d.H);
    st.tank = grid(d.H);
    st.ren_power = grid(d.R);
    st.ren_reactive = grid(d.R);
    st.mpp = grid(d.R);
    st.demand = grid(d.L);
    for (int t = 0; t < d.T; ++t) {
      const auto ut = uz(t);
      st.frequency[ut] = val({VarRole::frequency, s, -1, t});
      for (int i = 0; i < d.N; ++i) st.voltage[uz(i)][ut] = val({VarRole::voltage, s, i, t});
      for (int b = 0; b < d.B; ++b) {
        st.flow_p[uz(b)][ut] = val({VarRole::flow_p, s, b, t});
        st.flow_q[uz(b)][ut] = val({VarRole::flow_q, s, b, t});
      }
      for (int h = 0; h < d.H; ++h) {
        st.ely_power[uz(h)][ut] = val({VarRole::ely_power, s, h, t});
        st.fc_power[uz(h)][ut] = val({VarRole::fc_power, s, h, t});
        st.h2_power[uz(h)][ut] = val({VarRole::h2_injection, s, h, t});
        st.h2_reactive[uz(h)][ut] = val({VarRole::h2_reactive, s, h, t});
        st.tank[uz(h)][ut] = val({VarRole::tank, s, h, t});
      }
      for (int k = 0; k < d.R; ++k) {
        st.ren_power[uz(k)][ut] = val({VarRole::ren_power, s, k, t});
        st.ren_reactive[uz(k)][ut] = val({VarRole::ren_reactive, s, k, t});
        st.mpp[uz(k)][ut] = mpp_at(dm.scenarios, r, s, k, t);
      }
      for (int l = 0; l < d.L; ++l) st.demand[uz(l)][ut] = demand_at(dm.scenarios, r, s, l, t);
    }
    plan.scenarios.push_back(std::move(st));
  }

  plan.objective = served_objective(plan, mg);
  if (std::abs(plan.objective - sol.objective) > kObjectiveTolerance * std::max(1.0, std::abs(sol.objective))) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "objective mismatch: solver reported " << sol.objective << ", plan recomputes " << plan.objective;
    throw Error(ErrorCode::solver, msg.str());
  }
  return plan;
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScenarioStates, weight, frequency, voltage, flow_p, flow_q, ely_power, fc_power,
                                   h2_power, h2_reactive, tank, ren_power, ren_reactive, mpp, demand)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(OperationPlan, pickup, ely_mode, fc_mode, setpoint, scenarios, objective,
                                   max_residual)

json plan_to_json(const OperationPlan& plan) { return plan; }

OperationPlan plan_from_json(const json& doc) {
  try {
    return doc.get<OperationPlan>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("plan: ") + e.what());
  }
}

}  // namespace h2grid
