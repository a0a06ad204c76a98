#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include <trackmpc/kinetics.hpp>

using namespace trackmpc::kinetics;

namespace {

KineticsParams params() {
  KineticsParams p;
  p.rho_p = 1200.0;
  p.rho_m = 940.0;
  p.M0 = 2.5;
  p.f_s = 0.2;
  p.A_gel = 0.168;
  p.B_gel = 0.03;
  p.theta_p = 0.5;
  p.theta_t = 8.0;
  p.arrhenius_p = {4.9e5, 18000.0};
  p.arrhenius_t = {1e5, 6000.0};
  return p;
}

}  // namespace

TEST_CASE("shrinkage, solvent ratio and volume") {
  CHECK(shrinkage_factor(1000.0, 1000.0) == 0.0);
  CHECK(shrinkage_factor(1200.0, 940.0) == doctest::Approx(260.0 / 1200.0));
  CHECK(solvent_beta(0.5) == 1.0);
  CHECK(solvent_beta(0.0) == 0.0);
  CHECK(solvent_beta(0.2) == doctest::Approx(0.25));
  CHECK_THROWS_AS(solvent_beta(1.0), std::invalid_argument);
  CHECK_THROWS_AS(shrinkage_factor(0.0, 1.0), std::invalid_argument);

  const auto p = params();
  const double eps = shrinkage_factor(p.rho_p, p.rho_m);
  const double beta = solvent_beta(p.f_s);
  CHECK(mixture_volume(p, 0.0, eps, beta) == doctest::Approx(p.M0 / p.rho_m * (1.0 + beta)));
  // full conversion shrinks the monomer part by eps
  CHECK(mixture_volume(p, 1.0, eps, beta) == doctest::Approx(p.M0 / p.rho_m * (1.0 - eps + beta)));
  CHECK_THROWS_AS(mixture_volume(p, 1.5, eps, beta), std::invalid_argument);
}

TEST_CASE("diffusion factor") {
  CHECK(diffusion_factor(1.0, 0.168, 0.03) == 1.0);
  CHECK(diffusion_factor(0.0, 0.168, 0.03) == doctest::Approx(std::exp(1.0 / 0.198)));
  CHECK(diffusion_factor(0.4, 0.168, 0.03) == doctest::Approx(std::exp(0.6 / (0.168 + 0.018))));
  // D falls monotonically as the polymer fraction grows
  double prev = diffusion_factor(0.0, 0.168, 0.03);
  for (int i = 1; i <= 10; ++i) {
    const double d = diffusion_factor(0.1 * i, 0.168, 0.03);
    CHECK(d < prev);
    prev = d;
  }
  CHECK_THROWS_AS(diffusion_factor(0.5, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(diffusion_factor(1.1, 0.1, 0.1), std::invalid_argument);
}

TEST_CASE("diffusion-limited rate constants") {
  CHECK(effective_kp(700.0, 0.0, 1e-4, 0.01) == 700.0);
  CHECK(effective_kt(3e7, 0.0, 1e-4, 0.01) == 3e7);
  CHECK(effective_kt(3e7, 8.0, 0.0, 0.01) == 3e7);
  // 1/k = 1/k0 + theta lambda0 / D
  const double k = effective_kt(1e3, 8.0, 1e-4, 0.02);
  CHECK(1.0 / k == doctest::Approx(1e-3 + 8.0 * 1e-4 / 0.02));
  CHECK(effective_kt(1e3, 8.0, 1e-4, 0.001) < effective_kt(1e3, 8.0, 1e-4, 0.1));
  CHECK_THROWS_AS(effective_kp(700.0, 1.0, 1e-4, 0.0), std::invalid_argument);
}

TEST_CASE("arrhenius") {
  CHECK(arrhenius(5.0, 0.0, 300.0) == 5.0);
  CHECK(arrhenius(1e5, 6000.0, 343.15) == doctest::Approx(1e5 * std::exp(-6000.0 / (8.314 * 343.15))));
  CHECK(arrhenius(1e5, 6000.0, 350.0) > arrhenius(1e5, 6000.0, 340.0));
  CHECK_THROWS_AS(arrhenius(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("effective rates chain") {
  auto p = params();
  KineticsState s{0.3, 0.35, 1e-4, 343.15};
  const auto r = effective_rates(p, s);
  CHECK(r.k_p0 == doctest::Approx(arrhenius(4.9e5, 18000.0, 343.15)));
  CHECK(r.D == doctest::Approx(diffusion_factor(0.35, 0.168, 0.03)));
  CHECK(1.0 / r.k_t == doctest::Approx(1.0 / r.k_t0 + 8.0 * 1e-4 / r.D));
  CHECK(r.k_p < r.k_p0);

  p.theta_p = 0.0;
  CHECK(effective_rates(p, s).k_p == effective_rates(p, s).k_p0);

  s.T = -1.0;
  CHECK_THROWS_AS(effective_rates(p, s), std::invalid_argument);
  p.f_s = 1.0;
  s.T = 300.0;
  CHECK_THROWS_AS(effective_rates(p, s), std::invalid_argument);
}
