#include <doctest.h>

#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "h2grid/case.hpp"
#include "h2grid/error.hpp"
#include "support.hpp"

using namespace h2grid;
using h2test::data_file;
using h2test::fixture;

namespace {

std::string error_message(const std::filesystem::path& p) {
  try {
    load_case_file(p);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

// Independent radiality check: BFS from bus 0, tree iff connected with N-1 edges.
bool is_connected_tree(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  if (edges.size() + 1 != n) return false;
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

}  // namespace

TEST_SUITE("core-model") {
  TEST_CASE("13-bus fixture loads with the hydrogen source and both renewables") {
    const auto mg = load_case_file(data_file("ieee13_h2.json"));
    CHECK(mg.buses.size() == 13);
    CHECK(mg.branches.size() == 12);
    REQUIRE(mg.hydrogen.size() == 1);
    CHECK(mg.hydrogen[0].bus == "645");
    REQUIRE(mg.renewables.size() == 2);
    CHECK(mg.renewables[0].bus == "633");
    CHECK(mg.renewables[1].bus == "680");
    CHECK(mg.horizon.periods == 24);
    CHECK(mg.horizon.step_hours == doctest::Approx(0.25));
    CHECK(validate_case(mg).ok());
  }

  TEST_CASE("toy case has two periods and round-trips") {
    const auto mg = load_case_file(fixture("toy2bus.json"));
    CHECK(mg.horizon.periods == 2);
    CHECK(mg.branches.size() == 1);
    CHECK(mg.hydrogen.size() == 1);
    CHECK(mg.loads.size() == 1);
    CHECK(parse_case_json(case_to_json(mg)) == mg);

    const auto tmp = std::filesystem::temp_directory_path() / "h2grid_roundtrip.json";
    save_case_file(mg, tmp);
    CHECK(load_case_file(tmp) == mg);
    std::filesystem::remove(tmp);
  }

  TEST_CASE("fixture round-trips through serialization") {
    const auto mg = load_case_file(data_file("ieee13_h2.json"));
    CHECK(parse_case_json(case_to_json(mg)) == mg);
  }

  TEST_CASE("self-loop branch is rejected") {
    const auto msg = error_message(fixture("self_loop.json"));
    CHECK(msg.find("self-loop branch") != std::string::npos);
    CHECK_THROWS_AS(load_case_file(fixture("self_loop.json")), Error);
  }

  TEST_CASE("validation report entries") {
    CHECK(validate_case(load_case_file(fixture("toy2bus.json"))).issues.empty());

    const auto overfull = validate_case(parse_case_file(fixture("tank_overfull.json")));
    REQUIRE(overfull.issues.size() == 1);
    CHECK(overfull.has("tank-overfull"));
    CHECK(overfull.issues[0].message.find("tank overfull") != std::string::npos);

    for (const char* name : {"disconnected.json", "meshed.json"}) {
      const auto r = validate_case(parse_case_file(fixture(name)));
      CHECK(r.has("not-tree"));
      CHECK(r.issues.back().message == "network not a connected tree");
    }
  }

  TEST_CASE("validation report serializes as code/message/path objects") {
    const auto j = validate_case(parse_case_file(fixture("tank_overfull.json"))).to_json();
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 1);
    CHECK(j[0]["code"] == "tank-overfull");
    CHECK(j[0]["path"] == "hydrogen_sources[0].h_init");
    CHECK(j[0].contains("message"));
  }

  TEST_CASE("every violated invariant is listed") {
    auto mg = parse_case_file(fixture("toy2bus.json"));
    mg.hydrogen[0].h_init = mg.hydrogen[0].h_max * 2;
    mg.loads[0].weight = 1.5;
    mg.loads[0].bus = "nowhere";
    mg.system.f_min = 61.0;
    const auto r = validate_case(mg);
    CHECK(r.has("tank-overfull"));
    CHECK(r.has("load-weight"));
    CHECK(r.has("unknown-bus"));
    CHECK(r.has("frequency-bounds"));
  }

  TEST_CASE("validation is pure") {
    const auto mg = parse_case_file(fixture("meshed.json"));
    CHECK(validate_case(mg) == validate_case(mg));
  }

  TEST_CASE("knees outside the band only warn") {
    auto mg = parse_case_file(fixture("toy2bus.json"));
    mg.hydrogen[0].f_ely_knee = 61.0;
    const auto r = validate_case(mg);
    CHECK(r.ok());
    CHECK(!r.warnings.empty());
  }

  TEST_CASE("tree check agrees with an independent BFS oracle") {
    std::mt19937_64 rng(7);
    auto base = parse_case_file(fixture("toy2bus.json"));
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 7)(rng);
      const std::size_t m = std::uniform_int_distribution<std::size_t>(0, n + 1)(rng);
      auto mg = base;
      mg.buses.clear();
      for (std::size_t i = 0; i < n; ++i) mg.buses.push_back({std::to_string(i + 1), 0.95, 1.05});
      mg.branches.clear();
      std::vector<std::pair<std::size_t, std::size_t>> edges;
      for (std::size_t k = 0; k < m; ++k) {
        auto a = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        auto b = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
        if (b >= a) ++b;
        edges.emplace_back(a, b);
        Branch br = base.branches[0];
        br.from = std::to_string(a + 1);
        br.to = std::to_string(b + 1);
        mg.branches.push_back(br);
      }
      CHECK(validate_case(mg).has("not-tree") == !is_connected_tree(n, edges));
    }
  }

  TEST_CASE("per-unit normalization") {
    const auto mg = parse_case_file(fixture("toy2bus.json"));
    CHECK(per_unit_normalize(mg, 1.0, 1.0) == mg);

    MicrogridCase phys;
    phys.buses = {{"a", 0.95, 1.05}, {"b", 0.95, 1.05}};
    phys.branches = {{"a", "b", 0.1e-3, 0.2e-3, -1000, 1000, -1000, 1000}};  // kOhm
    HydrogenSource hs;
    hs.id = "h";
    hs.bus = "a";
    hs.p_fc_max = 500.0;
    hs.h_max = 100.0;
    phys.hydrogen = {hs};
    const auto pu = per_unit_normalize(phys, 1000.0, 4.16);
    CHECK(pu.hydrogen[0].p_fc_max == doctest::Approx(0.5));
    CHECK(pu.branches[0].r == doctest::Approx(0.1 * 1e6 / (4160.0 * 4160.0)));
    CHECK(pu.branches[0].x == doctest::Approx(0.2 * 1e6 / (4160.0 * 4160.0)));
    CHECK(pu.hydrogen[0].h_max == doctest::Approx(0.1));

    CHECK(per_unit_normalize(per_unit_normalize(phys, 1000.0, 4.16), 1.0, 1.0) == pu);
    CHECK_THROWS_AS(per_unit_normalize(phys, 0.0, 4.16), Error);
    CHECK_THROWS_AS(per_unit_normalize(phys, 1000.0, -1.0), Error);
  }

  TEST_CASE("fixture powers arrive in per-unit of the 1 MVA base") {
    const auto mg = load_case_file(data_file("ieee13_h2.json"));
    CHECK(mg.system.s_base_kva == doctest::Approx(1000.0));
    CHECK(mg.hydrogen[0].p_fc_max == doctest::Approx(1.5));
    CHECK(mg.hydrogen[0].h_max == doctest::Approx(3.0));
  }

  TEST_CASE("parse errors carry context") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto bad = dir / "h2grid_bad.json";
    std::ofstream(bad) << "{\n  \"buses\": [\n  oops\n}\n";
    try {
      parse_case_file(bad);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parse);
      CHECK(std::string(e.what()).find("line") != std::string::npos);
    }

    auto doc = case_to_json(load_case_file(fixture("toy2bus.json")));
    doc["hydrogen_sources"][0].erase("p_fc_max");
    try {
      parse_case_json(doc);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parse);
      CHECK(std::string(e.what()).find("p_fc_max") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_case_file(dir / "h2grid_missing_file.json"), Error);
    std::filesystem::remove(bad);
  }

  TEST_CASE("critical loads are those weighted above 0.7") {
    const auto mg = load_case_file(data_file("ieee13_h2.json"));
    std::set<std::string> critical;
    for (const auto& ld : mg.loads) {
      if (ld.critical()) critical.insert(ld.id);
      CHECK(ld.critical() == (ld.weight > 0.7));
    }
    CHECK(!critical.empty());
    CHECK(critical.size() < mg.loads.size());
  }

  TEST_CASE("reactive ratio follows the power factor") {
    LoadPoint ld;
    ld.power_factor = 0.95;
    CHECK(ld.reactive_ratio() == doctest::Approx(std::tan(std::acos(0.95))));
    ld.power_factor = 1.0;
    CHECK(ld.reactive_ratio() == doctest::Approx(0.0));
  }
}
