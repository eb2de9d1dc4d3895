#pragma once

// Microgrid case data model.
//
// A case is held in per-unit form once loaded: powers are divided by the
// power base, voltages by the voltage base and impedances by u_base^2/s_base.
// Frequencies stay in Hz. Tank energies are per-unit power times hours.
// Before normalization the physical representation is kW / kvar / kV / kOhm /
// kWh, which keeps u_base^2 / s_base dimensionally consistent (kV^2/kVA = kOhm).

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace h2grid {

enum class ControlMode { droop, constant_pq };

struct Bus {
  std::string id;
  double u_min = 0.95;
  double u_max = 1.05;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  std::string from;
  std::string to;
  double r = 0.0;
  double x = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;

  bool operator==(const Branch&) const = default;
};

/// Reactive droop with a dead band. Generation is positive.
struct VoltVarCurve {
  double q_gen_max = 0.0;
  double q_abs_max = 0.0;
  double u_gen_start = 0.98;  // below this the device generates
  double u_abs_start = 1.02;  // above this the device absorbs
  double d_gen = 0.0;
  double d_abs = 0.0;

  bool operator==(const VoltVarCurve&) const = default;
};

/// Electrolyzer + fuel cell + tank sharing one bus and one inverter.
struct HydrogenSource {
  std::string id;
  std::string bus;
  double p_ely_max = 0.0;
  double p_fc_max = 0.0;
  double f_ely_knee = 0.0;  // electrolyzer saturates at or above this frequency
  double f_fc_knee = 0.0;   // fuel cell saturates at or below this frequency
  double d_ely = 0.0;
  double d_fc = 0.0;
  double eta_ely = 1.0;
  double eta_fc = 1.0;
  double h_max = 0.0;
  double h_init = 0.0;
  VoltVarCurve volt_var;

  bool operator==(const HydrogenSource&) const = default;
};

struct RenewableSource {
  std::string id;
  std::string bus;
  double f_knee = 0.0;
  double d_droop = 0.0;
  ControlMode mode = ControlMode::droop;
  VoltVarCurve volt_var;

  bool operator==(const RenewableSource&) const = default;
};

inline constexpr double kCriticalWeight = 0.7;
inline constexpr double kDefaultPowerFactor = 0.95;

struct LoadPoint {
  std::string id;
  std::string bus;
  double weight = 0.5;
  double power_factor = kDefaultPowerFactor;

  bool critical() const { return weight > kCriticalWeight; }
  /// Q/P ratio implied by the power factor, tan(acos(pf)).
  double reactive_ratio() const;

  bool operator==(const LoadPoint&) const = default;
};

struct Horizon {
  int periods = 1;
  double step_hours = 0.25;

  bool operator==(const Horizon&) const = default;
};

struct SystemParams {
  double f_nominal = 60.0;
  double f_min = 59.5;
  double f_max = 60.5;
  double u_nominal = 1.0;
  // Bases the numbers are expressed in. 1 means physical kW / kV.
  double s_base_kva = 1.0;
  double u_base_kv = 1.0;

  bool operator==(const SystemParams&) const = default;
};

struct MicrogridCase {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<HydrogenSource> hydrogen;
  std::vector<RenewableSource> renewables;
  std::vector<LoadPoint> loads;
  Horizon horizon;
  SystemParams system;

  std::optional<std::size_t> bus_index(const std::string& id) const;
  /// Index of the bus or throws Error(invalid_argument).
  std::size_t require_bus(const std::string& id) const;

  bool operator==(const MicrogridCase&) const = default;
};

struct ValidationIssue {
  std::string code;
  std::string message;
  std::string path;

  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  /// Non-blocking findings (e.g. droop knees outside the security band).
  std::vector<ValidationIssue> warnings;

  bool ok() const { return issues.empty(); }
  bool has(const std::string& code) const;
  /// JSON array of {code, message, path} for the blocking issues.
  nlohmann::json to_json() const;

  bool operator==(const ValidationReport&) const = default;
};

ValidationReport validate_case(const MicrogridCase& mg);

/// Parses a case document without validating it. Unit conversion and
/// per-unit normalization are applied.
MicrogridCase parse_case_json(const nlohmann::json& doc);
MicrogridCase parse_case_file(const std::filesystem::path& path);

/// parse_case_file followed by validate_case; throws Error(validation) with
/// every violated invariant in the message.
MicrogridCase load_case_file(const std::filesystem::path& path);

/// Serializes in per-unit form (all unit classes "pu").
nlohmann::json case_to_json(const MicrogridCase& mg);
void save_case_file(const MicrogridCase& mg, const std::filesystem::path& path);

/// Divides powers by s_base, voltages by u_base and impedances by
/// u_base^2/s_base. The recorded bases are multiplied accordingly.
MicrogridCase per_unit_normalize(MicrogridCase mg, double s_base, double u_base);

}  // namespace h2grid
