#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "h2grid/analysis.hpp"
#include "h2grid/error.hpp"

namespace h2grid {

using nlohmann::json;

double compute_lsr(const OperationPlan& plan, const MicrogridCase& mg, LoadClass cls) {
  double served = 0.0;
  double total = 0.0;
  for (std::size_t l = 0; l < mg.loads.size(); ++l) {
    const bool critical = mg.loads[l].critical();
    if ((cls == LoadClass::critical && !critical) || (cls == LoadClass::noncritical && critical)) continue;
    for (const auto& sc : plan.scenarios) {
      for (std::size_t t = 0; t < sc.demand[l].size(); ++t) {
        const double e = sc.weight * sc.demand[l][t];
        total += e;
        served += e * plan.pickup[l][t];
      }
    }
  }
  return total > 0.0 ? 100.0 * served / total : 100.0;
}

ResilienceReport compute_resilience_report(const OperationPlan& plan, const MicrogridCase& mg) {
  ResilienceReport rep;
  rep.objective = served_objective(plan, mg);
  rep.lsr_all = compute_lsr(plan, mg, LoadClass::all);
  rep.lsr_critical = compute_lsr(plan, mg, LoadClass::critical);
  rep.lsr_noncritical = compute_lsr(plan, mg, LoadClass::noncritical);

  double used = 0.0;
  double available = 0.0;
  double f_sum = 0.0;
  double u_sum = 0.0;
  std::size_t f_n = 0;
  std::size_t u_n = 0;
  for (const auto& sc : plan.scenarios) {
    for (std::size_t k = 0; k < sc.mpp.size(); ++k) {
      for (std::size_t t = 0; t < sc.mpp[k].size(); ++t) {
        used += sc.weight * sc.ren_power[k][t];
        available += sc.weight * sc.mpp[k][t];
      }
    }
    for (double f : sc.frequency) {
      const double dev = std::abs(f - mg.system.f_nominal);
      f_sum += dev;
      rep.freq_variation_max = std::max(rep.freq_variation_max, dev);
      ++f_n;
    }
    for (const auto& bus : sc.voltage) {
      for (double u : bus) {
        const double dev = std::abs(u - mg.system.u_nominal);
        u_sum += dev;
        rep.volt_variation_max = std::max(rep.volt_variation_max, dev);
        ++u_n;
      }
    }
  }
  rep.renewable_consumption_ratio = available > 0.0 ? 100.0 * used / available : 100.0;
  rep.freq_variation_avg = f_n ? f_sum / static_cast<double>(f_n) : 0.0;
  rep.volt_variation_avg = u_n ? u_sum / static_cast<double>(u_n) : 0.0;
  const double volts_per_pu = mg.system.u_base_kv * 1000.0;
  rep.volt_variation_avg_v = rep.volt_variation_avg * volts_per_pu;
  rep.volt_variation_max_v = rep.volt_variation_max * volts_per_pu;

  const auto worst_step = [&](auto&& series_of) {
    double worst = 0.0;
    for (const auto& sc : plan.scenarios) {
      const std::vector<double>& p = series_of(sc);
      for (std::size_t t = 1; t < p.size(); ++t) worst = std::max(worst, std::abs(p[t] - p[t - 1]));
    }
    return worst;
  };
  for (std::size_t h = 0; h < mg.hydrogen.size(); ++h) {
    rep.power_steps.push_back({mg.hydrogen[h].id, worst_step([&](const ScenarioStates& sc) -> const std::vector<double>& {
                                 return sc.h2_power[h];
                               })});
  }
  for (std::size_t k = 0; k < mg.renewables.size(); ++k) {
    rep.power_steps.push_back({mg.renewables[k].id, worst_step([&](const ScenarioStates& sc) -> const std::vector<double>& {
                                 return sc.ren_power[k];
                               })});
  }
  for (const auto& s : rep.power_steps) rep.max_power_step = std::max(rep.max_power_step, s.max_step);

  rep.hydrogen_trajectory.assign(mg.hydrogen.size(), {});
  for (std::size_t h = 0; h < mg.hydrogen.size(); ++h) {
    const std::size_t T = plan.scenarios.empty() ? 0 : plan.scenarios.front().tank[h].size();
    rep.hydrogen_trajectory[h].assign(T, 0.0);
    for (const auto& sc : plan.scenarios) {
      for (std::size_t t = 0; t < T; ++t) rep.hydrogen_trajectory[h][t] += sc.weight * sc.tank[h][t];
    }
  }
  for (const auto& sc : plan.scenarios) rep.hydrogen_by_scenario.push_back(sc.tank);
  return rep;
}

ResilienceReport compute_resilience_report(const OperationPlan& plan, const MicrogridCase& mg,
                                           const ScenarioSet& scen) {
  if (plan.scenarios.size() != scen.size()) {
    throw Error(ErrorCode::invalid_argument, "plan and scenario set differ in scenario count");
  }
  for (std::size_t s = 0; s < scen.size(); ++s) {
    if (plan.scenarios[s].weight != scen.weights[s]) {
      throw Error(ErrorCode::invalid_argument, "plan was built from a different scenario set");
    }
    for (std::size_t l = 0; l < mg.loads.size(); ++l) {
      if (plan.scenarios[s].demand[l] != scen.series(s, mg.loads[l].id)) {
        throw Error(ErrorCode::invalid_argument, "plan was built from a different scenario set");
      }
    }
  }
  return compute_resilience_report(plan, mg);
}

json report_to_json(const ResilienceReport& r) {
  json steps = json::array();
  for (const auto& s : r.power_steps) steps.push_back({{"id", s.id}, {"max_step_pu", s.max_step}});
  return {{"objective", r.objective},
          {"lsr_all_pct", r.lsr_all},
          {"lsr_critical_pct", r.lsr_critical},
          {"lsr_noncritical_pct", r.lsr_noncritical},
          {"renewable_consumption_ratio_pct", r.renewable_consumption_ratio},
          {"freq_variation_avg_hz", r.freq_variation_avg},
          {"freq_variation_max_hz", r.freq_variation_max},
          {"volt_variation_avg_pu", r.volt_variation_avg},
          {"volt_variation_max_pu", r.volt_variation_max},
          {"volt_variation_avg_v", r.volt_variation_avg_v},
          {"volt_variation_max_v", r.volt_variation_max_v},
          {"power_steps", steps},
          {"max_power_step_pu", r.max_power_step},
          {"hydrogen_trajectory", r.hydrogen_trajectory},
          {"hydrogen_by_scenario", r.hydrogen_by_scenario}};
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string report_to_csv(const ResilienceReport& r, const std::string& label) {
  std::ostringstream out;
  out << "case,metric,value\n";
  const auto row = [&](const std::string& metric, double v) { out << label << ',' << metric << ',' << fmt(v) << '\n'; };
  row("objective", r.objective);
  row("lsr_all_pct", r.lsr_all);
  row("lsr_critical_pct", r.lsr_critical);
  row("lsr_noncritical_pct", r.lsr_noncritical);
  row("renewable_consumption_ratio_pct", r.renewable_consumption_ratio);
  row("freq_variation_avg_hz", r.freq_variation_avg);
  row("freq_variation_max_hz", r.freq_variation_max);
  row("volt_variation_avg_pu", r.volt_variation_avg);
  row("volt_variation_max_pu", r.volt_variation_max);
  row("volt_variation_avg_v", r.volt_variation_avg_v);
  row("volt_variation_max_v", r.volt_variation_max_v);
  for (const auto& s : r.power_steps) row("max_power_step_pu:" + s.id, s.max_step);
  for (std::size_t h = 0; h < r.hydrogen_trajectory.size(); ++h) {
    for (std::size_t t = 0; t < r.hydrogen_trajectory[h].size(); ++t) {
      row("hydrogen_pu:" + std::to_string(h) + ":" + std::to_string(t), r.hydrogen_trajectory[h][t]);
    }
  }
  return out.str();
}

std::string sweep_to_csv(const std::vector<CaseRun>& runs) {
  std::ostringstream out;
  out << "case,status,variables,binaries,objective,lsr_all_pct,lsr_critical_pct,lsr_noncritical_pct,"
         "renewable_consumption_ratio_pct,freq_variation_avg_hz,freq_variation_max_hz,volt_variation_avg_pu,"
         "volt_variation_max_pu,volt_variation_avg_v,volt_variation_max_v,max_power_step_pu,final_hydrogen_pu,"
         "message\n";
  for (const auto& run : runs) {
    const auto& r = run.report;
    std::string msg = run.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    double final_h = 0.0;
    for (const auto& traj : r.hydrogen_trajectory) {
      if (!traj.empty()) final_h += traj.back();
    }
    out << run.label << ',' << (run.ok ? "ok" : status_name(run.status)) << ',' << run.variables << ','
        << run.binaries;
    if (run.ok) {
      for (double v : {r.objective, r.lsr_all, r.lsr_critical, r.lsr_noncritical, r.renewable_consumption_ratio,
                       r.freq_variation_avg, r.freq_variation_max, r.volt_variation_avg, r.volt_variation_max,
                       r.volt_variation_avg_v, r.volt_variation_max_v, r.max_power_step, final_h}) {
        out << ',' << fmt(v);
      }
    } else {
      for (int k = 0; k < 13; ++k) out << ',';
    }
    out << ',' << msg << '\n';
  }
  return out.str();
}

}  // namespace h2grid
