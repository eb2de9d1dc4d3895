#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "h2grid/error.hpp"
#include "h2grid/solver.hpp"

namespace h2grid {

const char* status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::error: return "error";
  }
  return "error";
}

SolveStatus parse_status(const std::string& word) {
  for (auto s : {SolveStatus::optimal, SolveStatus::feasible, SolveStatus::infeasible, SolveStatus::unbounded}) {
    if (word == status_name(s)) return s;
  }
  return SolveStatus::error;
}

namespace {

std::string num(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

constexpr int kTermsPerLine = 6;

void write_terms(std::ostream& out, const std::vector<LinearTerm>& terms) {
  if (terms.empty()) {
    out << "0 v0";
    return;
  }
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const double c = terms[k].coef;
    if (k > 0) {
      out << (k % kTermsPerLine == 0 ? "\n   " : " ");
      out << (c < 0 ? "- " : "+ ") << num(std::abs(c));
    } else {
      out << num(c);
    }
    out << " v" << terms[k].var;
  }
}

}  // namespace

void write_lp(const MilpModel& model, std::ostream& out) {
  const auto& vars = model.variables();
  out << "\\ h2grid model: " << vars.size() << " variables, " << model.constraints().size() << " constraints, "
      << model.num_binaries() << " binaries\n";
  out << "Maximize\n obj: ";
  std::vector<LinearTerm> obj;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (model.objective()[j] != 0.0) obj.push_back({static_cast<int>(j), model.objective()[j]});
  }
  write_terms(out, obj);
  out << "\nSubject To\n";
  const std::string* last_tag = nullptr;
  for (std::size_t i = 0; i < model.constraints().size(); ++i) {
    const auto& row = model.constraints()[i];
    if (!last_tag || *last_tag != row.tag) {
      out << "\\ " << row.tag << '\n';
      last_tag = &row.tag;
    }
    out << " c" << i << ": ";
    write_terms(out, row.terms);
    out << (row.sense == Sense::le ? " <= " : row.sense == Sense::ge ? " >= " : " = ") << num(row.rhs) << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const auto& v = vars[j];
    const bool lo = std::isfinite(v.lb);
    const bool hi = std::isfinite(v.ub);
    out << ' ';
    if (lo && hi && v.lb == v.ub) {
      out << 'v' << j << " = " << num(v.lb);
    } else if (lo && hi) {
      out << num(v.lb) << " <= v" << j << " <= " << num(v.ub);
    } else if (lo) {
      out << 'v' << j << " >= " << num(v.lb);
    } else if (hi) {
      out << "-inf <= v" << j << " <= " << num(v.ub);
    } else {
      out << 'v' << j << " free";
    }
    out << '\n';
  }
  if (model.num_binaries() > 0) {
    out << "Binary\n";
    for (std::size_t j = 0; j < vars.size(); ++j) {
      if (vars[j].binary) out << " v" << j << '\n';
    }
  }
  out << "End\n";
}

void write_lp_file(const MilpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  write_lp(model, out);
  if (!out) throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
}

SolveResult parse_solution(std::istream& in, std::size_t num_vars) {
  SolveResult res;
  const auto fail = [&](const std::string& why) {
    SolveResult bad;
    bad.status = SolveStatus::error;
    bad.message = "unparseable solution file: " + why;
    return bad;
  };
  std::string line;
  std::string key;
  if (!std::getline(in, line)) return fail("empty");
  {
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> key >> word) || key != "status") return fail("first line must be 'status <word>'");
    res.status = parse_status(word);
    if (res.status == SolveStatus::error && word != "error") return fail("unknown status '" + word + "'");
  }
  if (!std::getline(in, line)) {
    if (res.has_solution()) return fail("missing objective line");
    return res;
  }
  {
    std::istringstream ls(line);
    if (!(ls >> key >> res.objective) || key != "objective") return fail("second line must be 'objective <float>'");
  }
  if (!res.has_solution()) return res;
  res.values.assign(num_vars, 0.0);
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string name;
    double value = 0.0;
    if (!(ls >> name)) continue;
    if (!(ls >> value) || name.size() < 2 || name[0] != 'v') {
      return fail("line " + std::to_string(lineno) + ": expected 'v<id> <float>'");
    }
    std::size_t id = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), id);
    if (ec != std::errc() || ptr != name.data() + name.size() || id >= num_vars) {
      return fail("line " + std::to_string(lineno) + ": bad variable '" + name + "'");
    }
    res.values[id] = value;
  }
  return res;
}

}  // namespace h2grid
