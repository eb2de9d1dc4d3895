#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "h2grid/device_response.hpp"

using namespace h2grid;

namespace {

HydrogenSource example_source() {
  HydrogenSource hs;
  hs.p_ely_max = 200;
  hs.d_ely = 100;
  hs.f_ely_knee = 60.1;
  hs.p_fc_max = 300;
  hs.d_fc = 150;
  hs.f_fc_knee = 59.9;
  hs.eta_ely = 0.7;
  hs.eta_fc = 0.6;
  hs.h_max = 1000;
  return hs;
}

RenewableSource example_renewable() {
  RenewableSource rs;
  rs.f_knee = 60.05;
  rs.d_droop = 250;
  return rs;
}

VoltVarCurve example_voltvar() {
  VoltVarCurve vv;
  vv.q_gen_max = vv.q_abs_max = 100;
  vv.u_gen_start = 0.98;
  vv.u_abs_start = 1.02;
  vv.d_gen = vv.d_abs = 2000;
  return vv;
}

std::vector<double> sorted_uniform(std::mt19937_64& rng, double lo, double hi, int n) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = u(rng);
  std::sort(xs.begin(), xs.end());
  return xs;
}

}  // namespace

TEST_SUITE("device-response") {
  TEST_CASE("electrolyzer examples") {
    const auto hs = example_source();
    CHECK(electrolyzer_power(60.2, hs) == doctest::Approx(200));
    CHECK(electrolyzer_power(60.0, hs) == doctest::Approx(190));
    CHECK(electrolyzer_power(58.0, hs) == 0.0);
  }

  TEST_CASE("fuel-cell examples") {
    const auto hs = example_source();
    CHECK(fuelcell_power(59.8, hs) == doctest::Approx(300));
    CHECK(fuelcell_power(60.0, hs) == doctest::Approx(285));
    CHECK(fuelcell_power(62.0, hs) == 0.0);
  }

  TEST_CASE("renewable examples") {
    const auto rs = example_renewable();
    CHECK(renewable_power(60.0, 500, rs) == doctest::Approx(500));
    CHECK(renewable_power(60.25, 500, rs) == doctest::Approx(450));
    CHECK(renewable_power(60.25, 0, rs) == 0.0);
  }

  TEST_CASE("volt-var examples") {
    const auto vv = example_voltvar();
    CHECK(voltvar_reactive_power(1.00, vv) == 0.0);
    CHECK(voltvar_reactive_power(0.96, vv) == doctest::Approx(40));
    CHECK(voltvar_reactive_power(0.90, vv) == doctest::Approx(100));
    CHECK(voltvar_reactive_power(1.05, vv) == doctest::Approx(-60));
  }

  TEST_CASE("net injection by mode") {
    CHECK(hydrogen_net_injection(HydrogenMode::fuel_cell, 0, 285) == 285);
    CHECK(hydrogen_net_injection(HydrogenMode::electrolyzer, 190, 0) == -190);
    CHECK(hydrogen_net_injection(HydrogenMode::idle, 190, 285) == 0);
  }

  TEST_CASE("tank step examples") {
    const auto hs = example_source();
    const auto ely = tank_step(500, HydrogenMode::electrolyzer, 190, 0, 0.25, hs);
    CHECK(ely.energy == doctest::Approx(533.25));
    CHECK_FALSE(ely.out_of_bounds);
    CHECK(tank_step(500, HydrogenMode::fuel_cell, 0, 285, 0.25, hs).energy == doctest::Approx(381.25));
    CHECK(tank_step(500, HydrogenMode::idle, 190, 285, 0.25, hs).energy == 500);
  }

  TEST_CASE("tank bound violations are flagged, not clamped") {
    const auto hs = example_source();
    const auto over = tank_step(990, HydrogenMode::electrolyzer, 200, 0, 0.25, hs);
    CHECK(over.out_of_bounds);
    CHECK(over.energy == doctest::Approx(1025));
    const auto under = tank_step(10, HydrogenMode::fuel_cell, 0, 300, 0.25, hs);
    CHECK(under.out_of_bounds);
    CHECK(under.energy < 0);
  }

  TEST_CASE("continuity at every knee") {
    const double eps = 1e-6;
    const auto hs = example_source();
    const auto rs = example_renewable();
    const auto vv = example_voltvar();
    const double zero_ely = hs.f_ely_knee - hs.p_ely_max / hs.d_ely;
    const double zero_fc = hs.f_fc_knee + hs.p_fc_max / hs.d_fc;
    for (double f : {zero_ely, hs.f_ely_knee}) {
      CHECK(std::abs(electrolyzer_power(f + eps, hs) - electrolyzer_power(f, hs)) <= hs.d_ely * eps + 1e-9);
      CHECK(std::abs(electrolyzer_power(f - eps, hs) - electrolyzer_power(f, hs)) <= hs.d_ely * eps + 1e-9);
    }
    for (double f : {hs.f_fc_knee, zero_fc}) {
      CHECK(std::abs(fuelcell_power(f + eps, hs) - fuelcell_power(f, hs)) <= hs.d_fc * eps + 1e-9);
      CHECK(std::abs(fuelcell_power(f - eps, hs) - fuelcell_power(f, hs)) <= hs.d_fc * eps + 1e-9);
    }
    for (double f : {rs.f_knee, rs.f_knee + 500 / rs.d_droop}) {
      CHECK(std::abs(renewable_power(f + eps, 500, rs) - renewable_power(f, 500, rs)) <= rs.d_droop * eps + 1e-9);
      CHECK(std::abs(renewable_power(f - eps, 500, rs) - renewable_power(f, 500, rs)) <= rs.d_droop * eps + 1e-9);
    }
    for (double u : {0.93, 0.98, 1.02, 1.07}) {
      CHECK(std::abs(voltvar_reactive_power(u + eps, vv) - voltvar_reactive_power(u, vv)) <= 2000 * eps + 1e-9);
      CHECK(std::abs(voltvar_reactive_power(u - eps, vv) - voltvar_reactive_power(u, vv)) <= 2000 * eps + 1e-9);
    }
  }

  TEST_CASE("monotonicity and range on random sorted inputs") {
    std::mt19937_64 rng(11);
    const auto hs = example_source();
    const auto rs = example_renewable();
    const auto vv = example_voltvar();

    const auto fs = sorted_uniform(rng, 57.0, 63.0, 1000);
    for (std::size_t k = 1; k < fs.size(); ++k) {
      CHECK(electrolyzer_power(fs[k], hs) >= electrolyzer_power(fs[k - 1], hs));
      CHECK(fuelcell_power(fs[k], hs) <= fuelcell_power(fs[k - 1], hs));
      CHECK(renewable_power(fs[k], 500, rs) <= renewable_power(fs[k - 1], 500, rs));
    }
    for (double f : fs) {
      CHECK((electrolyzer_power(f, hs) >= 0 && electrolyzer_power(f, hs) <= hs.p_ely_max));
      CHECK((fuelcell_power(f, hs) >= 0 && fuelcell_power(f, hs) <= hs.p_fc_max));
      CHECK((renewable_power(f, 500, rs) >= 0 && renewable_power(f, 500, rs) <= 500));
    }

    const auto us = sorted_uniform(rng, 0.8, 1.2, 1000);
    for (std::size_t k = 1; k < us.size(); ++k) {
      CHECK(voltvar_reactive_power(us[k], vv) <= voltvar_reactive_power(us[k - 1], vv));
    }
    for (double u : us) {
      const double q = voltvar_reactive_power(u, vv);
      CHECK((q >= -vv.q_abs_max && q <= vv.q_gen_max));
    }
  }

  TEST_CASE("tank telescoping") {
    std::mt19937_64 rng(5);
    auto hs = example_source();
    hs.h_max = 1e9;
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_real_distribution<double> power(0.0, 300.0);
    for (int trial = 0; trial < 100; ++trial) {
      const double h0 = 5e5;
      double h = h0, sum = 0.0;
      for (int k = 0; k < 96; ++k) {
        const auto mode = static_cast<HydrogenMode>(pick(rng));
        const double pe = power(rng), pf = power(rng);
        h = tank_step(h, mode, pe, pf, 0.25, hs).energy;
        if (mode == HydrogenMode::electrolyzer) sum += pe * hs.eta_ely * 0.25;
        if (mode == HydrogenMode::fuel_cell) sum -= pf / hs.eta_fc * 0.25;
      }
      CHECK(std::abs(h - (h0 + sum)) <= 1e-12 * std::abs(h));
    }
  }
}
