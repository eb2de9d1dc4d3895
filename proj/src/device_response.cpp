#include "h2grid/device_response.hpp"

#include <algorithm>

namespace h2grid {

double electrolyzer_power(double f, const HydrogenSource& hs) {
  if (f >= hs.f_ely_knee) return hs.p_ely_max;
  const double p = hs.p_ely_max - hs.d_ely * (hs.f_ely_knee - f);
  return p <= 0.0 ? 0.0 : p;
}

double fuelcell_power(double f, const HydrogenSource& hs) {
  if (f <= hs.f_fc_knee) return hs.p_fc_max;
  const double p = hs.p_fc_max - hs.d_fc * (f - hs.f_fc_knee);
  return p <= 0.0 ? 0.0 : p;
}

double renewable_power(double f, double mpp, const RenewableSource& rs) {
  if (f <= rs.f_knee) return mpp;
  const double p = mpp - rs.d_droop * (f - rs.f_knee);
  return p <= 0.0 ? 0.0 : p;
}

double voltvar_reactive_power(double u, const VoltVarCurve& c) {
  if (u <= c.u_gen_start) {
    return std::min(c.d_gen * (c.u_gen_start - u), c.q_gen_max);
  }
  if (u >= c.u_abs_start) {
    return -std::min(c.d_abs * (u - c.u_abs_start), c.q_abs_max);
  }
  return 0.0;
}

double hydrogen_net_injection(HydrogenMode mode, double p_ely, double p_fc) {
  switch (mode) {
    case HydrogenMode::fuel_cell:
      return p_fc;
    case HydrogenMode::electrolyzer:
      return -p_ely;
    case HydrogenMode::idle:
      break;
  }
  return 0.0;
}

TankStep tank_step(double h_prev, HydrogenMode mode, double p_ely, double p_fc, double dt,
                   const HydrogenSource& hs) {
  double h = h_prev;
  if (mode == HydrogenMode::electrolyzer) h = h_prev + p_ely * hs.eta_ely * dt;
  if (mode == HydrogenMode::fuel_cell) h = h_prev - p_fc / hs.eta_fc * dt;
  return {h, h < 0.0 || h > hs.h_max};
}

}  // namespace h2grid
