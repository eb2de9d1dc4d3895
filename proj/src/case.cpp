#include "h2grid/case.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "h2grid/error.hpp"

namespace h2grid {

using nlohmann::json;

double LoadPoint::reactive_ratio() const {
  return std::tan(std::acos(power_factor));
}

std::optional<std::size_t> MicrogridCase::bus_index(const std::string& id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t MicrogridCase::require_bus(const std::string& id) const {
  auto idx = bus_index(id);
  if (!idx) throw Error(ErrorCode::invalid_argument, "unknown bus '" + id + "'");
  return *idx;
}

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const ValidationIssue& i) { return i.code == code; });
}

json ValidationReport::to_json() const {
  json out = json::array();
  for (const auto& i : issues) {
    out.push_back({{"code", i.code}, {"message", i.message}, {"path", i.path}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct IssueSink {
  ValidationReport report;

  void issue(std::string code, std::string message, std::string path) {
    report.issues.push_back({std::move(code), std::move(message), std::move(path)});
  }
  void warn(std::string code, std::string message, std::string path) {
    report.warnings.push_back({std::move(code), std::move(message), std::move(path)});
  }
};

std::string at(const char* list, std::size_t i) {
  return std::string(list) + "[" + std::to_string(i) + "]";
}

void check_volt_var(IssueSink& sink, const VoltVarCurve& vv, const std::string& path) {
  if (!(vv.u_gen_start < vv.u_abs_start)) {
    sink.issue("volt-var", "volt-var dead band requires u_gen_start < u_abs_start", path);
  }
  if (vv.q_gen_max < 0 || vv.q_abs_max < 0 || vv.d_gen < 0 || vv.d_abs < 0) {
    sink.issue("volt-var", "volt-var limits and slopes must be non-negative", path);
  }
}

void check_bus_ref(IssueSink& sink, const MicrogridCase& mg, const std::string& bus,
                   const std::string& path) {
  if (!mg.bus_index(bus)) {
    sink.issue("unknown-bus", "reference to unknown bus '" + bus + "'", path);
  }
}

void check_unique_ids(IssueSink& sink, const std::vector<std::string>& ids, const char* list) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen.insert(ids[i]).second) {
      sink.issue("duplicate-id", "duplicate id '" + ids[i] + "'", at(list, i));
    }
  }
}

}  // namespace

ValidationReport validate_case(const MicrogridCase& mg) {
  IssueSink sink;
  const auto& sys = mg.system;

  if (mg.buses.empty()) sink.issue("empty-network", "case has no buses", "buses");
  if (mg.horizon.periods < 1) sink.issue("horizon", "horizon needs at least one period", "horizon.periods");
  if (!(mg.horizon.step_hours > 0)) sink.issue("horizon", "step length must be positive", "horizon.step_hours");
  if (!(sys.f_min < sys.f_nominal && sys.f_nominal < sys.f_max)) {
    sink.issue("frequency-bounds", "frequency bounds must satisfy f_min < f_nominal < f_max", "system");
  }
  if (!(sys.u_nominal > 0)) sink.issue("nominal-voltage", "nominal voltage must be positive", "system.u_nominal");
  if (!(sys.s_base_kva > 0) || !(sys.u_base_kv > 0)) {
    sink.issue("base", "power and voltage bases must be positive", "system");
  }

  {
    std::vector<std::string> ids;
    for (const auto& b : mg.buses) ids.push_back(b.id);
    check_unique_ids(sink, ids, "buses");
  }
  for (std::size_t i = 0; i < mg.buses.size(); ++i) {
    const auto& b = mg.buses[i];
    if (!(b.u_min > 0 && b.u_min < b.u_max)) {
      sink.issue("voltage-bounds", "bus '" + b.id + "' needs 0 < u_min < u_max", at("buses", i));
    }
  }

  DisjointSet components(mg.buses.size());
  bool tree = mg.buses.empty() || mg.branches.size() + 1 == mg.buses.size();
  for (std::size_t k = 0; k < mg.branches.size(); ++k) {
    const auto& br = mg.branches[k];
    const auto path = at("branches", k);
    if (br.from == br.to) {
      sink.issue("self-loop", "self-loop branch at bus '" + br.from + "'", path);
      tree = false;
      continue;
    }
    auto a = mg.bus_index(br.from);
    auto b = mg.bus_index(br.to);
    if (!a) check_bus_ref(sink, mg, br.from, path + ".from");
    if (!b) check_bus_ref(sink, mg, br.to, path + ".to");
    if (br.p_min > br.p_max) sink.issue("flow-bounds", "active flow bounds need p_min <= p_max", path);
    if (br.q_min > br.q_max) sink.issue("flow-bounds", "reactive flow bounds need q_min <= q_max", path);
    if (br.r < 0 || br.x < 0) sink.issue("impedance", "branch impedance must be non-negative", path);
    if (a && b && !components.unite(*a, *b)) tree = false;
    if (!a || !b) tree = false;
  }
  if (tree && !mg.buses.empty()) {
    const auto root = components.find(0);
    for (std::size_t i = 1; i < mg.buses.size(); ++i) {
      if (components.find(i) != root) tree = false;
    }
  }
  if (!tree) sink.issue("not-tree", "network not a connected tree", "branches");

  std::vector<std::string> device_ids;
  for (std::size_t k = 0; k < mg.hydrogen.size(); ++k) {
    const auto& hs = mg.hydrogen[k];
    const auto path = at("hydrogen_sources", k);
    device_ids.push_back(hs.id);
    check_bus_ref(sink, mg, hs.bus, path + ".bus");
    if (!(hs.p_ely_max > 0 && hs.p_fc_max > 0 && hs.d_ely > 0 && hs.d_fc > 0)) {
      sink.issue("device-rating", "hydrogen powers and droop slopes must be positive", path);
    }
    if (!(hs.f_fc_knee < hs.f_ely_knee)) {
      sink.issue("knee-order", "fuel-cell knee must lie below the electrolyzer knee", path);
    }
    if (!(hs.eta_ely > 0 && hs.eta_ely <= 1 && hs.eta_fc > 0 && hs.eta_fc <= 1)) {
      sink.issue("efficiency", "conversion efficiencies must lie in (0, 1]", path);
    }
    if (hs.h_max < 0) sink.issue("tank-capacity", "tank capacity must be non-negative", path + ".h_max");
    if (hs.h_init < 0) sink.issue("tank-negative", "initial tank energy is negative", path + ".h_init");
    if (hs.h_init > hs.h_max) sink.issue("tank-overfull", "tank overfull: h_init exceeds h_max", path + ".h_init");
    check_volt_var(sink, hs.volt_var, path + ".volt_var");
    for (double knee : {hs.f_ely_knee, hs.f_fc_knee}) {
      if (knee < sys.f_min || knee > sys.f_max) {
        sink.warn("knee-outside-band", "droop knee lies outside [f_min, f_max]", path);
      }
    }
  }
  for (std::size_t k = 0; k < mg.renewables.size(); ++k) {
    const auto& rs = mg.renewables[k];
    const auto path = at("renewables", k);
    device_ids.push_back(rs.id);
    check_bus_ref(sink, mg, rs.bus, path + ".bus");
    if (rs.mode == ControlMode::droop && !(rs.d_droop > 0)) {
      sink.issue("droop-slope", "droop renewable needs a positive droop slope", path + ".droop");
    }
    check_volt_var(sink, rs.volt_var, path + ".volt_var");
    if (rs.mode == ControlMode::droop && (rs.f_knee < sys.f_min || rs.f_knee > sys.f_max)) {
      sink.warn("knee-outside-band", "droop knee lies outside [f_min, f_max]", path);
    }
  }
  for (std::size_t k = 0; k < mg.loads.size(); ++k) {
    const auto& ld = mg.loads[k];
    const auto path = at("loads", k);
    device_ids.push_back(ld.id);
    check_bus_ref(sink, mg, ld.bus, path + ".bus");
    if (!(ld.weight > 0 && ld.weight < 1)) sink.issue("load-weight", "load weight must lie in (0, 1)", path + ".weight");
    if (!(ld.power_factor > 0 && ld.power_factor <= 1)) {
      sink.issue("power-factor", "power factor must lie in (0, 1]", path + ".power_factor");
    }
  }
  check_unique_ids(sink, device_ids, "devices");

  return sink.report;
}

// ---------------------------------------------------------------------------
// Per-unit scaling

namespace {

// Divisors applied per quantity class.
struct UnitScales {
  double power = 1.0;
  double voltage = 1.0;
  double impedance = 1.0;
  double energy = 1.0;
};

void rescale_volt_var(VoltVarCurve& vv, const UnitScales& s) {
  vv.q_gen_max /= s.power;
  vv.q_abs_max /= s.power;
  vv.u_gen_start /= s.voltage;
  vv.u_abs_start /= s.voltage;
  // power per voltage
  vv.d_gen = vv.d_gen * s.voltage / s.power;
  vv.d_abs = vv.d_abs * s.voltage / s.power;
}

void rescale(MicrogridCase& mg, const UnitScales& s) {
  for (auto& b : mg.buses) {
    b.u_min /= s.voltage;
    b.u_max /= s.voltage;
  }
  for (auto& br : mg.branches) {
    br.r /= s.impedance;
    br.x /= s.impedance;
    br.p_min /= s.power;
    br.p_max /= s.power;
    br.q_min /= s.power;
    br.q_max /= s.power;
  }
  for (auto& hs : mg.hydrogen) {
    hs.p_ely_max /= s.power;
    hs.p_fc_max /= s.power;
    hs.d_ely /= s.power;
    hs.d_fc /= s.power;
    hs.h_max /= s.energy;
    hs.h_init /= s.energy;
    rescale_volt_var(hs.volt_var, s);
  }
  for (auto& rs : mg.renewables) {
    rs.d_droop /= s.power;
    rescale_volt_var(rs.volt_var, s);
  }
  mg.system.u_nominal /= s.voltage;
}

}  // namespace

MicrogridCase per_unit_normalize(MicrogridCase mg, double s_base, double u_base) {
  if (!(s_base > 0) || !(u_base > 0) || !std::isfinite(s_base) || !std::isfinite(u_base)) {
    throw Error(ErrorCode::invalid_argument, "per-unit bases must be positive and finite");
  }
  rescale(mg, {s_base, u_base, u_base * u_base / s_base, s_base});
  mg.system.s_base_kva *= s_base;
  mg.system.u_base_kv *= u_base;
  return mg;
}

// ---------------------------------------------------------------------------
// JSON ingestion

namespace {

class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::parse, path_ + ": " + what);
  }

  double num(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) fail(std::string("missing field '") + key + "'");
    if (!it->is_number()) fail(std::string("field '") + key + "' must be a number");
    double v = it->get<double>();
    if (!std::isfinite(v)) fail(std::string("field '") + key + "' must be finite");
    return v;
  }

  double num_or(const char* key, double fallback) const {
    return obj_.contains(key) ? num(key) : fallback;
  }

  bool has(const char* key) const { return obj_.contains(key); }

  std::string str(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) fail(std::string("missing field '") + key + "'");
    if (it->is_string()) return it->get<std::string>();
    // Bus names such as 650 are often written as numbers.
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    fail(std::string("field '") + key + "' must be a string");
  }

  std::string str_or(const char* key, const std::string& fallback) const {
    return obj_.contains(key) ? str(key) : fallback;
  }

  Reader child(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) fail(std::string("missing object '") + key + "'");
    return Reader(*it, path_ + "." + key);
  }

  template <class Fn>
  void each(const char* key, Fn&& fn, bool required = true) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (required) fail(std::string("missing array '") + key + "'");
      return;
    }
    if (!it->is_array()) fail(std::string("field '") + key + "' must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      fn(Reader((*it)[i], path_ + "." + key + "[" + std::to_string(i) + "]"));
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& obj_;
  std::string path_;
};

// Returns the multiplier into the kW/kV/kOhm/kWh representation, or nullopt
// for "pu".
std::optional<double> unit_factor(const Reader& units, const char* cls,
                                  std::initializer_list<std::pair<const char*, double>> table) {
  const auto name = units.str(cls);
  if (name == "pu") return std::nullopt;
  for (const auto& [n, f] : table) {
    if (name == n) return f;
  }
  units.fail(std::string("unsupported ") + cls + " unit '" + name + "'");
}

VoltVarCurve read_volt_var(const Reader& r) {
  VoltVarCurve vv;
  vv.q_gen_max = r.num("q_gen_max");
  vv.q_abs_max = r.num("q_abs_max");
  vv.u_gen_start = r.num("u_gen_start");
  vv.u_abs_start = r.num("u_abs_start");
  vv.d_gen = r.num("d_gen");
  vv.d_abs = r.num("d_abs");
  return vv;
}

ControlMode read_mode(const Reader& r) {
  const auto mode = r.str_or("mode", "droop");
  if (mode == "droop") return ControlMode::droop;
  if (mode == "constant-pq") return ControlMode::constant_pq;
  r.fail("unknown control mode '" + mode + "'");
}

std::pair<double, double> read_bounds(const Reader& r, const char* lo, const char* hi) {
  const double upper = r.num(hi);
  const double lower = r.num_or(lo, -upper);
  return {lower, upper};
}

}  // namespace

MicrogridCase parse_case_json(const json& doc) {
  Reader root(doc, "$");
  MicrogridCase mg;

  const auto units = root.child("units");
  const auto power_f = unit_factor(units, "power", {{"W", 1e-3}, {"kW", 1.0}, {"MW", 1e3}});
  const auto volt_f = unit_factor(units, "voltage", {{"V", 1e-3}, {"kV", 1.0}});
  const auto imp_f = unit_factor(units, "impedance", {{"ohm", 1e-3}, {"kohm", 1.0}});
  const auto energy_f = unit_factor(units, "energy", {{"Wh", 1e-3}, {"kWh", 1.0}, {"MWh", 1e3}});

  const auto sys = root.child("system");
  mg.system.f_nominal = sys.num("f_nominal");
  mg.system.f_min = sys.num("f_min");
  mg.system.f_max = sys.num("f_max");
  mg.system.u_nominal = sys.num("u_nominal");
  const double s_base = sys.num("s_base_kva");
  const double u_base = sys.num("u_base_kv");
  if (!(s_base > 0) || !(u_base > 0)) sys.fail("bases must be positive");

  const auto hz = root.child("horizon");
  const double periods = hz.num("periods");
  if (periods != std::floor(periods)) hz.fail("periods must be an integer");
  mg.horizon.periods = static_cast<int>(periods);
  mg.horizon.step_hours = hz.num("step_hours");

  root.each("buses", [&](const Reader& r) {
    mg.buses.push_back({r.str("id"), r.num("u_min"), r.num("u_max")});
  });
  root.each("branches", [&](const Reader& r) {
    Branch br;
    br.from = r.str("from");
    br.to = r.str("to");
    br.r = r.num("r");
    br.x = r.num("x");
    std::tie(br.p_min, br.p_max) = read_bounds(r, "p_min", "p_max");
    std::tie(br.q_min, br.q_max) = read_bounds(r, "q_min", "q_max");
    mg.branches.push_back(br);
  });
  root.each("hydrogen_sources", [&](const Reader& r) {
    HydrogenSource hs;
    hs.id = r.str("id");
    hs.bus = r.str("bus");
    hs.p_ely_max = r.num("p_ely_max");
    hs.p_fc_max = r.num("p_fc_max");
    hs.f_ely_knee = r.num("f_ely_knee");
    hs.f_fc_knee = r.num("f_fc_knee");
    hs.d_ely = r.num("d_ely");
    hs.d_fc = r.num("d_fc");
    hs.eta_ely = r.num("eta_ely");
    hs.eta_fc = r.num("eta_fc");
    hs.h_max = r.num("h_max");
    hs.h_init = r.num("h_init");
    hs.volt_var = read_volt_var(r.child("volt_var"));
    mg.hydrogen.push_back(hs);
  }, false);
  root.each("renewables", [&](const Reader& r) {
    RenewableSource rs;
    rs.id = r.str("id");
    rs.bus = r.str("bus");
    rs.mode = read_mode(r);
    rs.f_knee = r.num_or("f_knee", mg.system.f_nominal);
    rs.d_droop = r.num_or("droop", 0.0);
    rs.volt_var = read_volt_var(r.child("volt_var"));
    mg.renewables.push_back(rs);
  }, false);
  root.each("loads", [&](const Reader& r) {
    LoadPoint ld;
    ld.id = r.str("id");
    ld.bus = r.str("bus");
    ld.weight = r.num("weight");
    ld.power_factor = r.num_or("power_factor", kDefaultPowerFactor);
    mg.loads.push_back(ld);
  }, false);

  // Physical units into kW/kV/kOhm/kWh first, then divide by the bases.
  // Classes already in "pu" are left untouched.
  UnitScales to_physical{power_f.value_or(1.0), volt_f.value_or(1.0), imp_f.value_or(1.0),
                         energy_f.value_or(1.0)};
  UnitScales physical{1.0 / to_physical.power, 1.0 / to_physical.voltage,
                      1.0 / to_physical.impedance, 1.0 / to_physical.energy};
  const bool any_physical = power_f || volt_f || imp_f || energy_f;
  if (any_physical) {
    rescale(mg, physical);
    UnitScales bases{power_f ? s_base : 1.0, volt_f ? u_base : 1.0,
                     imp_f ? u_base * u_base / s_base : 1.0, energy_f ? s_base : 1.0};
    rescale(mg, bases);
  }
  mg.system.s_base_kva = s_base;
  mg.system.u_base_kv = u_base;
  return mg;
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

MicrogridCase parse_case_file(const std::filesystem::path& path) {
  const auto text = read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(ErrorCode::parse, path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
  try {
    return parse_case_json(doc);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

MicrogridCase load_case_file(const std::filesystem::path& path) {
  auto mg = parse_case_file(path);
  const auto report = validate_case(mg);
  if (!report.ok()) {
    std::string msg = path.string() + ": invalid case";
    for (const auto& i : report.issues) msg += "\n  " + i.path + ": " + i.message;
    throw Error(ErrorCode::validation, msg);
  }
  return mg;
}

namespace {

json volt_var_json(const VoltVarCurve& vv) {
  return {{"q_gen_max", vv.q_gen_max}, {"q_abs_max", vv.q_abs_max},
          {"u_gen_start", vv.u_gen_start}, {"u_abs_start", vv.u_abs_start},
          {"d_gen", vv.d_gen}, {"d_abs", vv.d_abs}};
}

}  // namespace

json case_to_json(const MicrogridCase& mg) {
  json doc;
  doc["units"] = {{"power", "pu"}, {"voltage", "pu"}, {"impedance", "pu"}, {"energy", "pu"}};
  doc["system"] = {{"f_nominal", mg.system.f_nominal}, {"f_min", mg.system.f_min},
                   {"f_max", mg.system.f_max}, {"u_nominal", mg.system.u_nominal},
                   {"s_base_kva", mg.system.s_base_kva}, {"u_base_kv", mg.system.u_base_kv}};
  doc["horizon"] = {{"periods", mg.horizon.periods}, {"step_hours", mg.horizon.step_hours}};
  doc["buses"] = json::array();
  for (const auto& b : mg.buses) doc["buses"].push_back({{"id", b.id}, {"u_min", b.u_min}, {"u_max", b.u_max}});
  doc["branches"] = json::array();
  for (const auto& br : mg.branches) {
    doc["branches"].push_back({{"from", br.from}, {"to", br.to}, {"r", br.r}, {"x", br.x},
                               {"p_min", br.p_min}, {"p_max", br.p_max},
                               {"q_min", br.q_min}, {"q_max", br.q_max}});
  }
  doc["hydrogen_sources"] = json::array();
  for (const auto& hs : mg.hydrogen) {
    doc["hydrogen_sources"].push_back(
        {{"id", hs.id}, {"bus", hs.bus}, {"p_ely_max", hs.p_ely_max}, {"p_fc_max", hs.p_fc_max},
         {"f_ely_knee", hs.f_ely_knee}, {"f_fc_knee", hs.f_fc_knee}, {"d_ely", hs.d_ely},
         {"d_fc", hs.d_fc}, {"eta_ely", hs.eta_ely}, {"eta_fc", hs.eta_fc}, {"h_max", hs.h_max},
         {"h_init", hs.h_init}, {"volt_var", volt_var_json(hs.volt_var)}});
  }
  doc["renewables"] = json::array();
  for (const auto& rs : mg.renewables) {
    doc["renewables"].push_back(
        {{"id", rs.id}, {"bus", rs.bus},
         {"mode", rs.mode == ControlMode::droop ? "droop" : "constant-pq"},
         {"f_knee", rs.f_knee}, {"droop", rs.d_droop}, {"volt_var", volt_var_json(rs.volt_var)}});
  }
  doc["loads"] = json::array();
  for (const auto& ld : mg.loads) {
    doc["loads"].push_back({{"id", ld.id}, {"bus", ld.bus}, {"weight", ld.weight},
                            {"power_factor", ld.power_factor}});
  }
  return doc;
}

void save_case_file(const MicrogridCase& mg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out << case_to_json(mg).dump(2) << '\n';
}

}  // namespace h2grid
