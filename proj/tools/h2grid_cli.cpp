// h2grid command-line tool. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "h2grid/h2grid.h"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kError = 1, kInfeasible = 2, kPartial = 3, kInvalid = 4 };

struct Config {
  std::string case_path;
  std::string forecast_path;
  std::uint64_t seed = 42;
  std::size_t samples = 1000;
  std::string out = "out";
  std::string solver_cmd;
  double time_limit = 600.0;
  double gap = 1e-6;
  unsigned jobs = 0;
  bool baseline = false;
  std::string sweep_kind;
};

// Owning wrappers for the C handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using CaseHandle = Handle<h2g_case, h2g_case_free>;
using ScenHandle = Handle<h2g_scenarios, h2g_scenarios_free>;
using PlanHandle = Handle<h2g_plan, h2g_plan_free>;

struct CString {
  char* p = nullptr;
  CString() = default;
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;
  ~CString() { h2g_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Failure {
  int exit_code;
};

void check(h2g_status st, const std::string& context) {
  if (st == H2G_OK) return;
  std::cerr << "h2grid: " << context << ": " << h2g_last_error() << "\n";
  throw Failure{st == H2G_ERR_INFEASIBLE ? kInfeasible : kError};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "h2grid: cannot write " << path << "\n";
    throw Failure{kError};
  }
}

std::uint64_t fnv1a64(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "h2grid: cannot read '" << path << "'\n";
    throw Failure{kError};
  }
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const Config& cfg, const std::string& command) {
  nlohmann::json m;
  m["tool"] = "h2grid";
  m["version"] = h2g_version();
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["samples"] = cfg.samples;
  m["time_limit_s"] = cfg.time_limit;
  m["mip_gap"] = cfg.gap;
  m["inputs"] = {{"case", {{"path", cfg.case_path}, {"fnv1a64", hex(fnv1a64(cfg.case_path))}}},
                 {"forecast", {{"path", cfg.forecast_path}, {"fnv1a64", hex(fnv1a64(cfg.forecast_path))}}}};
  write_file(fs::path(cfg.out) / "manifest.json", m.dump(2) + "\n");
}

void make_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "h2grid: cannot create '" << dir << "': " << ec.message() << "\n";
    throw Failure{kError};
  }
}

void load_inputs(const Config& cfg, CaseHandle& c, ScenHandle& s) {
  check(h2g_case_load(cfg.case_path.c_str(), &c.p), "case '" + cfg.case_path + "'");
  check(h2g_scenarios_generate(c.p, cfg.forecast_path.c_str(), cfg.samples, cfg.seed, cfg.jobs, &s.p),
        "forecast '" + cfg.forecast_path + "'");
}

h2g_solver_options solver_options(const Config& cfg) {
  h2g_solver_options opts;
  h2g_solver_options_init(&opts);
  opts.command = cfg.solver_cmd.empty() ? nullptr : cfg.solver_cmd.c_str();
  opts.time_limit_s = cfg.time_limit;
  opts.mip_gap = cfg.gap;
  opts.coupling = cfg.baseline ? H2G_COUPLING_DISPATCH : H2G_COUPLING_DROOP;
  return opts;
}

int cmd_validate(const Config& cfg) {
  CString issues;
  std::size_t n = 0;
  check(h2g_case_check_file(cfg.case_path.c_str(), &issues.p, &n), "case '" + cfg.case_path + "'");
  std::cout << issues.str() << "\n";
  if (n > 0) {
    std::cerr << "h2grid: " << n << " validation issue(s) in '" << cfg.case_path << "'\n";
    return kInvalid;
  }
  return kOk;
}

int cmd_gen_scenarios(const Config& cfg) {
  CaseHandle c;
  ScenHandle s;
  load_inputs(cfg, c, s);
  make_out_dir(cfg.out);
  CString json;
  check(h2g_scenarios_to_json(s.p, &json.p), "scenarios");
  write_file(fs::path(cfg.out) / "scenarios.json", json.str() + "\n");
  write_manifest(cfg, "gen-scenarios");
  return kOk;
}

int cmd_solve(const Config& cfg) {
  CaseHandle c;
  ScenHandle s;
  load_inputs(cfg, c, s);
  make_out_dir(cfg.out);
  write_manifest(cfg, cfg.baseline ? "solve --baseline" : "solve");
  const auto opts = solver_options(cfg);
  std::size_t nv = 0, nb = 0;
  check(h2g_model_write_lp(c.p, s.p, opts.coupling, (fs::path(cfg.out) / "model.lp").c_str(), &nv, &nb), "model");
  std::cerr << "h2grid: model has " << nv << " variables, " << nb << " binaries\n";
  PlanHandle plan;
  check(h2g_solve(c.p, s.p, &opts, &plan.p), "solve");
  CString plan_json, report_json, report_csv;
  check(h2g_plan_to_json(plan.p, &plan_json.p), "plan");
  check(h2g_plan_report_json(plan.p, &report_json.p), "report");
  check(h2g_plan_report_csv(plan.p, "solve", &report_csv.p), "report");
  write_file(fs::path(cfg.out) / "plan.json", plan_json.str() + "\n");
  write_file(fs::path(cfg.out) / "report.json", report_json.str() + "\n");
  write_file(fs::path(cfg.out) / "report.csv", report_csv.str());
  std::cout.precision(12);
  std::cout << "objective " << h2g_plan_objective(plan.p) << "\n";
  return kOk;
}

int cmd_sweep(const Config& cfg) {
  const h2g_sweep_kind kind = cfg.sweep_kind == "hydrogen"      ? H2G_SWEEP_HYDROGEN
                              : cfg.sweep_kind == "gridforming" ? H2G_SWEEP_GRIDFORMING
                                                                : H2G_SWEEP_BASELINE;
  CaseHandle c;
  ScenHandle s;
  load_inputs(cfg, c, s);
  make_out_dir(cfg.out);
  write_manifest(cfg, "sweep " + cfg.sweep_kind);
  const auto opts = solver_options(cfg);
  std::size_t n_cases = 0, n_failed = 0;
  const auto st = h2g_sweep_run(c.p, s.p, kind, &opts, cfg.jobs, cfg.out.c_str(), &n_cases, &n_failed);
  if (st == H2G_ERR_PARTIAL) {
    std::cerr << "h2grid: " << h2g_last_error() << "\n";
    return kPartial;
  }
  check(st, "sweep " + cfg.sweep_kind);
  std::cerr << "h2grid: " << n_cases << " case(s) solved\n";
  return kOk;
}

void add_input_flags(CLI::App* sub, Config& cfg) {
  sub->add_option("--case", cfg.case_path, "Case JSON file")->required();
  sub->add_option("--forecast", cfg.forecast_path, "Forecast CSV (kW)")->required();
  sub->add_option("--seed", cfg.seed, "Scenario sampling seed");
  sub->add_option("--samples", cfg.samples, "Number of error samples")->check(CLI::PositiveNumber);
  sub->add_option("--out", cfg.out, "Output directory");
  sub->add_option("--jobs", cfg.jobs, "Worker threads (0 = all cores)");
}

void add_solver_flags(CLI::App* sub, Config& cfg) {
  sub->add_option("--solver-cmd", cfg.solver_cmd,
                  "Solver command template with {lp} {sol} {time_limit} {gap} (default: $H2GRID_SOLVER_CMD)");
  sub->add_option("--time-limit", cfg.time_limit, "Solver time limit per solve, seconds")
      ->check(CLI::PositiveNumber);
  sub->add_option("--gap", cfg.gap, "Relative MIP gap")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resilient dispatch of islanded hydrogen microgrids"};
  app.require_subcommand(1);
  app.set_version_flag("--version", h2g_version());
  Config cfg;

  auto* validate = app.add_subcommand("validate", "Check a case file and print its validation report");
  validate->add_option("--case", cfg.case_path, "Case JSON file")->required();

  auto* gen = app.add_subcommand("gen-scenarios", "Generate the weighted scenario set");
  add_input_flags(gen, cfg);

  auto* solve = app.add_subcommand("solve", "Solve the dispatch model and write plan and report");
  add_input_flags(solve, cfg);
  add_solver_flags(solve, cfg);
  solve->add_flag("--baseline", cfg.baseline, "Solve the droop-free dispatch model instead");

  auto* sweep = app.add_subcommand("sweep", "Run an experiment sweep");
  sweep->add_option("kind", cfg.sweep_kind, "hydrogen | gridforming | baseline")
      ->required()
      ->check(CLI::IsMember({"hydrogen", "gridforming", "baseline"}));
  add_input_flags(sweep, cfg);
  add_solver_flags(sweep, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kError;
  }

  try {
    if (*validate) return cmd_validate(cfg);
    if (*gen) return cmd_gen_scenarios(cfg);
    if (*solve) return cmd_solve(cfg);
    if (*sweep) return cmd_sweep(cfg);
  } catch (const Failure& f) {
    return f.exit_code;
  }
  return kError;
}
