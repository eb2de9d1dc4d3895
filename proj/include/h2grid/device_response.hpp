#pragma once

// Closed-form droop characteristics. These are the reference evaluators that
// the mixed-integer encodings are checked against, and the ex-post evaluator
// for dispatch plans computed without droop coupling.

#include "h2grid/case.hpp"

namespace h2grid {

enum class HydrogenMode { idle, electrolyzer, fuel_cell };

/// Power drawn by the electrolyzer at frequency f, in [0, p_ely_max].
double electrolyzer_power(double f, const HydrogenSource& hs);

/// Power produced by the fuel cell at frequency f, in [0, p_fc_max].
double fuelcell_power(double f, const HydrogenSource& hs);

/// Output of a droop-controlled renewable with available power mpp.
double renewable_power(double f, double mpp, const RenewableSource& rs);

/// Reactive output at voltage u: positive when generating, negative when
/// absorbing, zero inside the dead band.
double voltvar_reactive_power(double u, const VoltVarCurve& curve);

/// Signed injection of a hydrogen source: +p_fc producing, -p_ely consuming.
double hydrogen_net_injection(HydrogenMode mode, double p_ely, double p_fc);

struct TankStep {
  double energy = 0.0;
  /// True when the new level left [0, h_max].
  bool out_of_bounds = false;
};

/// One tank update over dt hours. Electrolyzer energy is stored with
/// efficiency eta_ely; fuel-cell output draws p_fc / eta_fc.
TankStep tank_step(double h_prev, HydrogenMode mode, double p_ely, double p_fc, double dt,
                   const HydrogenSource& hs);

}  // namespace h2grid
