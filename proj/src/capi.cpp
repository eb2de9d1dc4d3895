#include "h2grid/h2grid.h"

#include <cstring>
#include <string>
#include <thread>

#include "h2grid/analysis.hpp"
#include "h2grid/case.hpp"
#include "h2grid/dispatch.hpp"
#include "h2grid/error.hpp"
#include "h2grid/scenario.hpp"
#include "h2grid/solver.hpp"

using namespace h2grid;

struct h2g_case {
  MicrogridCase grid;
};

struct h2g_scenarios {
  ScenarioSet set;
};

struct h2g_plan {
  MicrogridCase grid;
  ScenarioSet scenarios;
  OperationPlan plan;
};

namespace {

thread_local std::string g_last_error;

h2g_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return H2G_ERR_INVALID_ARGUMENT;
    case ErrorCode::io: return H2G_ERR_IO;
    case ErrorCode::parse: return H2G_ERR_PARSE;
    case ErrorCode::validation: return H2G_ERR_VALIDATION;
    case ErrorCode::infeasible: return H2G_ERR_INFEASIBLE;
    case ErrorCode::solver: return H2G_ERR_SOLVER;
    case ErrorCode::partial: return H2G_ERR_PARTIAL;
  }
  return H2G_ERR_UNKNOWN;
}

h2g_status fail(h2g_status st, std::string msg) {
  g_last_error = std::move(msg);
  return st;
}

template <class Fn>
h2g_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(H2G_ERR_UNKNOWN, "out of memory");
  } catch (const std::exception& e) {
    return fail(H2G_ERR_UNKNOWN, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ExternalSolverConfig solver_config(const h2g_solver_options* opts) {
  ExternalSolverConfig cfg;
  const auto cmd = resolve_solver_command(opts && opts->command ? opts->command : "");
  if (!cmd) {
    throw Error(ErrorCode::solver,
                std::string("no solver command configured (set ") + kSolverEnvVar + " or pass a command)");
  }
  cfg.command = *cmd;
  if (opts && opts->time_limit_s > 0.0) cfg.time_limit_s = opts->time_limit_s;
  if (opts && opts->mip_gap >= 0.0) cfg.mip_gap = opts->mip_gap;
  return cfg;
}

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

#define H2G_REQUIRE(cond, what) \
  if (!(cond)) return fail(H2G_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* h2g_version(void) { return "0.1.0"; }

const char* h2g_last_error(void) { return g_last_error.c_str(); }

const char* h2g_status_name(h2g_status status) {
  switch (status) {
    case H2G_OK: return "ok";
    case H2G_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case H2G_ERR_IO: return "io";
    case H2G_ERR_PARSE: return "parse";
    case H2G_ERR_VALIDATION: return "validation";
    case H2G_ERR_INFEASIBLE: return "infeasible";
    case H2G_ERR_SOLVER: return "solver";
    case H2G_ERR_PARTIAL: return "partial";
    case H2G_ERR_UNKNOWN: break;
  }
  return "unknown";
}

void h2g_string_free(char* s) { std::free(s); }

void h2g_solver_options_init(h2g_solver_options* opts) {
  if (!opts) return;
  opts->command = nullptr;
  opts->time_limit_s = 600.0;
  opts->mip_gap = 1e-6;
  opts->coupling = H2G_COUPLING_DROOP;
}

h2g_status h2g_case_load(const char* path, h2g_case** out) {
  H2G_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new h2g_case{load_case_file(path)};
    return H2G_OK;
  });
}

h2g_status h2g_case_check_file(const char* path, char** issues_json, size_t* n_issues) {
  H2G_REQUIRE(path && issues_json, "null argument");
  *issues_json = nullptr;
  return guarded([&] {
    const auto report = validate_case(parse_case_file(path));
    *issues_json = dup_string(report.to_json().dump(2));
    if (n_issues) *n_issues = report.issues.size();
    return H2G_OK;
  });
}

h2g_status h2g_case_to_json(const h2g_case* c, char** out) {
  H2G_REQUIRE(c && out, "null argument");
  return guarded([&] {
    *out = dup_string(case_to_json(c->grid).dump(2));
    return H2G_OK;
  });
}

void h2g_case_free(h2g_case* c) { delete c; }

h2g_status h2g_scenarios_generate(const h2g_case* c, const char* forecast_csv, size_t n, uint64_t seed,
                                  unsigned jobs, h2g_scenarios** out) {
  H2G_REQUIRE(c && forecast_csv && out, "null argument");
  H2G_REQUIRE(n >= 1, "sample count must be at least 1");
  *out = nullptr;
  return guarded([&] {
    const auto fc = to_per_unit(load_forecast_csv(forecast_csv), c->grid.system.s_base_kva);
    check_forecast_covers(fc, c->grid);
    const auto samples = sample_error_scenarios(fc, n, seed, resolve_jobs(jobs));
    *out = new h2g_scenarios{build_scenario_set(fc, samples)};
    return H2G_OK;
  });
}

h2g_status h2g_scenarios_to_json(const h2g_scenarios* s, char** out) {
  H2G_REQUIRE(s && out, "null argument");
  return guarded([&] {
    *out = dup_string(scenarios_to_json(s->set).dump(1));
    return H2G_OK;
  });
}

void h2g_scenarios_free(h2g_scenarios* s) { delete s; }

h2g_status h2g_model_write_lp(const h2g_case* c, const h2g_scenarios* s, h2g_coupling coupling, const char* path,
                              size_t* n_variables, size_t* n_binaries) {
  H2G_REQUIRE(c && s && path, "null argument");
  return guarded([&] {
    const auto dm = build_model(c->grid, s->set,
                                {coupling == H2G_COUPLING_DISPATCH ? Coupling::dispatch : Coupling::droop});
    write_lp_file(dm.milp, path);
    if (n_variables) *n_variables = dm.milp.num_variables();
    if (n_binaries) *n_binaries = dm.milp.num_binaries();
    return H2G_OK;
  });
}

h2g_status h2g_solve(const h2g_case* c, const h2g_scenarios* s, const h2g_solver_options* opts, h2g_plan** out) {
  H2G_REQUIRE(c && s && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto cfg = solver_config(opts);
    const BuildOptions build{opts && opts->coupling == H2G_COUPLING_DISPATCH ? Coupling::dispatch : Coupling::droop};
    const auto dm = build_model(c->grid, s->set, build);
    const auto res = invoke_external_solver(dm.milp, cfg);
    *out = new h2g_plan{c->grid, s->set, extract_plan(dm, res)};
    return H2G_OK;
  });
}

double h2g_plan_objective(const h2g_plan* p) { return p ? p->plan.objective : 0.0; }

h2g_status h2g_plan_to_json(const h2g_plan* p, char** out) {
  H2G_REQUIRE(p && out, "null argument");
  return guarded([&] {
    *out = dup_string(plan_to_json(p->plan).dump(1));
    return H2G_OK;
  });
}

h2g_status h2g_plan_report_json(const h2g_plan* p, char** out) {
  H2G_REQUIRE(p && out, "null argument");
  return guarded([&] {
    *out = dup_string(report_to_json(compute_resilience_report(p->plan, p->grid, p->scenarios)).dump(2));
    return H2G_OK;
  });
}

h2g_status h2g_plan_report_csv(const h2g_plan* p, const char* label, char** out) {
  H2G_REQUIRE(p && out, "null argument");
  return guarded([&] {
    *out = dup_string(report_to_csv(compute_resilience_report(p->plan, p->grid, p->scenarios), label ? label : "solve"));
    return H2G_OK;
  });
}

void h2g_plan_free(h2g_plan* p) { delete p; }

h2g_status h2g_sweep_run(const h2g_case* c, const h2g_scenarios* s, h2g_sweep_kind kind,
                         const h2g_solver_options* opts, unsigned jobs, const char* out_dir, size_t* n_cases,
                         size_t* n_failed) {
  H2G_REQUIRE(c && s && out_dir, "null argument");
  return guarded([&] {
    const auto cfg = solver_config(opts);
    const SolveFn solve = [cfg](const MilpModel& m) { return invoke_external_solver(m, cfg); };
    std::vector<CaseRun> runs;
    switch (kind) {
      case H2G_SWEEP_HYDROGEN:
        runs = run_hydrogen_sweep(c->grid, s->set, solve, default_fill_levels(), resolve_jobs(jobs));
        break;
      case H2G_SWEEP_GRIDFORMING:
        runs = run_gridforming_sweep(c->grid, s->set, solve, resolve_jobs(jobs));
        break;
      case H2G_SWEEP_BASELINE:
        runs = run_baseline_comparison(c->grid, s->set, solve, resolve_jobs(jobs));
        break;
      default:
        return fail(H2G_ERR_INVALID_ARGUMENT, "unknown sweep kind");
    }
    write_sweep_artifacts(runs, out_dir);
    std::size_t failed = 0;
    std::string first;
    for (const auto& r : runs) {
      if (r.ok) continue;
      if (failed++ == 0) first = r.label + ": " + r.message;
    }
    if (n_cases) *n_cases = runs.size();
    if (n_failed) *n_failed = failed;
    if (failed > 0) return fail(H2G_ERR_PARTIAL, std::to_string(failed) + " sub-case(s) failed; first " + first);
    return H2G_OK;
  });
}

}  // extern "C"
