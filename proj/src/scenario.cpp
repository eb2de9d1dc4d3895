#include "h2grid/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <thread>

#include "h2grid/error.hpp"

namespace h2grid {

using nlohmann::json;

std::size_t Forecast::require(const std::string& id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw Error(ErrorCode::invalid_argument, "forecast has no series '" + id + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

std::size_t ScenarioSet::periods() const {
  if (scenarios.empty() || scenarios.front().empty()) return 0;
  return scenarios.front().front().size();
}

std::size_t ScenarioSet::require(const std::string& id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw Error(ErrorCode::invalid_argument, "scenario set has no series '" + id + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

const std::vector<double>& ScenarioSet::series(std::size_t s, const std::string& id) const {
  return scenarios.at(s).at(require(id));
}

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

Forecast load_forecast_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  const auto where = [&](std::size_t line) { return path.string() + ":" + std::to_string(line) + ": "; };

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::parse, path.string() + ": empty forecast file");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  auto header = split_csv_line(line);
  if (header.size() < 2 || trim(header[0]) != "timestamp") {
    throw Error(ErrorCode::parse, where(1) + "header must be 'timestamp,<series-id>,...'");
  }

  Forecast fc;
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto id = trim(header[c]);
    if (id.empty()) throw Error(ErrorCode::parse, where(1) + "empty series id in column " + std::to_string(c + 1));
    if (std::find(fc.ids.begin(), fc.ids.end(), id) != fc.ids.end()) {
      throw Error(ErrorCode::parse, where(1) + "duplicate series id '" + id + "'");
    }
    fc.ids.push_back(std::move(id));
  }
  fc.series.resize(fc.ids.size());

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line) == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() > header.size()) {
      throw Error(ErrorCode::parse, where(lineno) + "too many cells (" + std::to_string(cells.size()) + ")");
    }
    fc.timestamps.push_back(trim(cells[0]));
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto cell = trim(cells[c]);
      if (cell.empty()) continue;  // gap, caught by the length check below
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::parse, where(lineno) + "malformed value '" + cell + "' for '" + fc.ids[c - 1] + "'");
      }
      if (v < 0) {
        throw Error(ErrorCode::parse, where(lineno) + "negative power for '" + fc.ids[c - 1] + "'");
      }
      if (fc.series[c - 1].size() != fc.timestamps.size() - 1) {
        throw Error(ErrorCode::parse, where(lineno) + "length mismatch: gap in series '" + fc.ids[c - 1] + "'");
      }
      fc.series[c - 1].push_back(v);
    }
  }
  if (fc.timestamps.empty()) throw Error(ErrorCode::parse, path.string() + ": forecast has no data rows");
  for (std::size_t c = 0; c < fc.ids.size(); ++c) {
    if (fc.series[c].size() != fc.timestamps.size()) {
      throw Error(ErrorCode::parse, path.string() + ": length mismatch: series '" + fc.ids[c] + "' has " +
                                        std::to_string(fc.series[c].size()) + " values for " +
                                        std::to_string(fc.timestamps.size()) + " rows");
    }
  }
  return fc;
}

Forecast to_per_unit(Forecast fc, double s_base_kva) {
  if (!(s_base_kva > 0)) throw Error(ErrorCode::invalid_argument, "power base must be positive");
  for (auto& s : fc.series) {
    for (auto& v : s) v /= s_base_kva;
  }
  return fc;
}

void check_forecast_covers(const Forecast& fc, const MicrogridCase& mg) {
  const auto T = static_cast<std::size_t>(mg.horizon.periods);
  if (fc.periods() != T) {
    throw Error(ErrorCode::invalid_argument, "forecast has " + std::to_string(fc.periods()) +
                                                 " periods, case horizon is " + std::to_string(T));
  }
  for (std::size_t k = 0; k < fc.series.size(); ++k) {
    if (fc.series[k].size() != T) {
      throw Error(ErrorCode::invalid_argument, "forecast series '" + fc.ids[k] + "' has " +
                                                   std::to_string(fc.series[k].size()) + " values, expected " +
                                                   std::to_string(T));
    }
  }
  for (const auto& r : mg.renewables) fc.require(r.id);
  for (const auto& l : mg.loads) fc.require(l.id);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1], u2 in [0, 1), both from the top 53 bits.
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Realization sample_one(const Forecast& fc, const std::vector<double>& sigma, std::uint64_t seed,
                       std::size_t index) {
  NormalStream normal(splitmix64(seed ^ splitmix64(index)));
  Realization r = fc.series;
  for (std::size_t k = 0; k < r.size(); ++k) {
    for (auto& v : r[k]) v = std::max(0.0, v + sigma[k] * normal.next());
  }
  return r;
}

}  // namespace

std::vector<Realization> sample_error_scenarios(const Forecast& fc, std::size_t n, std::uint64_t seed,
                                                unsigned jobs) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "sample count must be at least 1");
  std::vector<double> sigma;
  for (const auto& s : fc.series) {
    const double peak = s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
    sigma.push_back(kErrorSigmaFraction * peak);
  }
  std::vector<Realization> out(n);
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = sample_one(fc, sigma, seed, i);
    return out;
  }
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += jobs) out[i] = sample_one(fc, sigma, seed, i);
    });
  }
  for (auto& t : workers) t.join();
  return out;
}

double average_power(const Realization& r) {
  if (r.empty() || r.front().empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : r) {
    for (double v : s) total += v;
  }
  return total / static_cast<double>(r.front().size());
}

ScenarioSet build_scenario_set(const Forecast& fc, const std::vector<Realization>& samples) {
  if (samples.empty()) throw Error(ErrorCode::invalid_argument, "no samples to select extremes from");
  std::size_t hi = 0;
  std::size_t lo = 0;
  double hi_avg = average_power(samples[0]);
  double lo_avg = hi_avg;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double avg = average_power(samples[i]);
    if (avg > hi_avg) {
      hi = i;
      hi_avg = avg;
    }
    if (avg < lo_avg) {
      lo = i;
      lo_avg = avg;
    }
  }
  ScenarioSet set;
  set.ids = fc.ids;
  set.scenarios = {samples[hi], samples[lo], fc.series};
  set.weights = {kExtremeWeight, kExtremeWeight, kForecastWeight};
  return set;
}

json scenarios_to_json(const ScenarioSet& set) {
  json doc;
  doc["ids"] = set.ids;
  doc["weights"] = set.weights;
  doc["scenarios"] = set.scenarios;
  return doc;
}

ScenarioSet scenarios_from_json(const json& doc) {
  ScenarioSet set;
  try {
    set.ids = doc.at("ids").get<std::vector<std::string>>();
    set.weights = doc.at("weights").get<std::vector<double>>();
    set.scenarios = doc.at("scenarios").get<std::vector<Realization>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("scenario set: ") + e.what());
  }
  if (set.weights.size() != set.scenarios.size()) {
    throw Error(ErrorCode::parse, "scenario set: weight count differs from scenario count");
  }
  return set;
}

}  // namespace h2grid
