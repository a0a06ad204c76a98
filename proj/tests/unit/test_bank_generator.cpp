#include <cmath>

#include <doctest.h>

#include <trackmpc/bank_generator.hpp>

#include "support/fixtures.hpp"

using namespace trackmpc;

namespace {

GelDriftLaw gel_law() {
  GelDriftLaw law;
  law.kinetics.A_gel = 0.168;
  law.kinetics.B_gel = 0.03;
  law.kinetics.theta_t = 8.0;
  law.kinetics.arrhenius_t = {1e5, 6000.0};
  law.gain_strength = 0.6;
  law.pole_strength = 0.4;
  return law;
}

}  // namespace

TEST_CASE("termination reduction grows with polymer fraction") {
  const auto law = gel_law();
  double prev = -1.0;
  for (int i = 0; i <= 12; ++i) {
    const double r = termination_reduction(law, 0.05 * i);
    CHECK(r >= 0.0);
    CHECK(r < 1.0);
    CHECK(r > prev);
    prev = r;
  }
  CHECK(drift_grid_point(law, 0, 131) == 0.0);
  CHECK(drift_grid_point(law, 130, 131) == doctest::Approx(0.6));
  CHECK(drift_grid_point(law, 65, 131) == doctest::Approx(0.3));
  CHECK(drift_grid_point(law, 0, 1) == 0.0);
}

TEST_CASE("synthetic bank without drift repeats the base model") {
  BankGeneratorSpec spec;
  spec.count = 131;
  spec.base = fixtures::reactor_tf();
  const auto bank = synth_bank(spec);
  CHECK(bank.size() == 131);
  CHECK(bank.entry(130).t_start == 130 * 60.0);
  CHECK(bank.entry(77).model.num == spec.base.num);
  CHECK(bank.entry(77).model.den == spec.base.den);

  spec.count = 1;
  CHECK(synth_bank(spec).size() == 1);
}

TEST_CASE("gel drift scales gain and stretches time constants") {
  BankGeneratorSpec spec;
  spec.count = 11;
  spec.base = fixtures::reactor_tf(0.5);
  spec.drift = gel_law();
  const auto bank = synth_bank(spec);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const double r = termination_reduction(*spec.drift, drift_grid_point(*spec.drift, i, spec.count));
    const auto& tf = bank.entry(i).model;
    CHECK(tf.dc_gain() == doctest::Approx(0.5 * (1.0 + 0.6 * r)));
    // the s^4 coefficient carries time_scale^4
    CHECK(tf.den.front() / spec.base.den.front() == doctest::Approx(std::pow(1.0 + 0.4 * r, 4.0)));
    CHECK(tf.den.back() == 1.0);
  }
  CHECK(bank.entry(10).model.dc_gain() > bank.entry(0).model.dc_gain());
}

TEST_CASE("jitter is seeded and bounded") {
  BankGeneratorSpec spec;
  spec.count = 50;
  spec.base = fixtures::fast_tf(1.0);
  spec.jitter = 0.1;
  spec.seed = 5;
  const auto a = synth_bank(spec);
  const auto b = synth_bank(spec);
  spec.seed = 6;
  const auto c = synth_bank(spec);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.entry(i).model.num == b.entry(i).model.num);
    const double g = a.entry(i).model.dc_gain();
    CHECK(g >= 0.9 - 1e-12);
    CHECK(g <= 1.1 + 1e-12);
    differs = differs || a.entry(i).model.num != c.entry(i).model.num;
  }
  CHECK(differs);
}

TEST_CASE("integrator entries and invalid specs") {
  BankGeneratorSpec spec;
  spec.count = 6;
  spec.base = fixtures::fast_tf();
  spec.integrator_entries = {{2, 3}};
  const auto bank = synth_bank(spec);
  CHECK(std::isfinite(bank.entry(1).model.dc_gain()));
  CHECK(std::isinf(bank.entry(2).model.dc_gain()));
  CHECK(std::isinf(bank.entry(3).model.dc_gain()));
  CHECK(std::isfinite(bank.entry(4).model.dc_gain()));

  spec.integrator_entries = {{4, 6}};
  CHECK_THROWS_AS(synth_bank(spec), std::invalid_argument);
  spec.integrator_entries.reset();
  spec.count = 0;
  CHECK_THROWS_AS(synth_bank(spec), std::invalid_argument);
  spec.count = 3;
  spec.jitter = 1.0;
  CHECK_THROWS_AS(synth_bank(spec), std::invalid_argument);
  spec.jitter = 0.0;
  spec.base.den = {0.0, 1.0};
  CHECK_THROWS_AS(synth_bank(spec), std::invalid_argument);
}
