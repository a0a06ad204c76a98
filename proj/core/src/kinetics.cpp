#include "trackmpc/kinetics.hpp"

#include <cmath>
#include <stdexcept>

namespace trackmpc::kinetics {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

double diffusion_limited(double k0, double theta, double lambda_0, double D) {
  require(k0 > 0.0 && std::isfinite(k0), "rate constant must be positive");
  require(D > 0.0, "diffusion factor must be positive");
  require(theta >= 0.0 && lambda_0 >= 0.0, "theta and lambda_0 must be non-negative");
  return 1.0 / (1.0 / k0 + theta * lambda_0 / D);
}

}  // namespace

void KineticsParams::validate() const {
  require(rho_p > 0.0 && rho_m > 0.0, "densities must be positive");
  require(M0 > 0.0, "M0 must be positive");
  require(f_s >= 0.0 && f_s < 1.0, "f_s must be in [0, 1)");
  require(theta_p >= 0.0 && theta_t >= 0.0, "theta_p and theta_t must be non-negative");
}

void KineticsState::validate() const {
  require(std::isfinite(x) && std::isfinite(phi_p) && std::isfinite(lambda_0) && std::isfinite(T),
          "kinetics state must be finite");
  require(x >= 0.0 && x <= 1.0, "x must be in [0, 1]");
  require(phi_p >= 0.0 && phi_p <= 1.0, "phi_p must be in [0, 1]");
  require(lambda_0 >= 0.0, "lambda_0 must be non-negative");
  require(T > 0.0, "T must be positive");
}

double shrinkage_factor(double rho_p, double rho_m) {
  require(rho_p > 0.0 && rho_m > 0.0, "shrinkage_factor: densities must be positive");
  return (rho_p - rho_m) / rho_p;
}

double solvent_beta(double f_s) {
  require(f_s >= 0.0 && f_s < 1.0, "solvent_beta: f_s must be in [0, 1)");
  return f_s / (1.0 - f_s);
}

double mixture_volume(const KineticsParams& params, double x, double epsilon, double beta) {
  require(x >= 0.0 && x <= 1.0, "mixture_volume: x must be in [0, 1]");
  require(params.M0 > 0.0 && params.rho_m > 0.0, "mixture_volume: M0 and rho_m must be positive");
  return params.M0 / params.rho_m * (1.0 - epsilon * x + beta);
}

double diffusion_factor(double phi_p, double A_gel, double B_gel) {
  require(phi_p >= 0.0 && phi_p <= 1.0, "diffusion_factor: phi_p must be in [0, 1]");
  const double free = 1.0 - phi_p;
  const double denom = A_gel + B_gel * free;
  require(denom != 0.0, "diffusion_factor: A + B(1 - phi_p) vanishes");
  return std::exp(free / denom);
}

double effective_kp(double k_p0, double theta_p, double lambda_0, double D) {
  return diffusion_limited(k_p0, theta_p, lambda_0, D);
}

double effective_kt(double k_t0, double theta_t, double lambda_0, double D) {
  return diffusion_limited(k_t0, theta_t, lambda_0, D);
}

double arrhenius(double prefactor, double activation_energy, double T) {
  require(T > 0.0, "arrhenius: T must be positive");
  return prefactor * std::exp(-activation_energy / (kGasConstant * T));
}

EffectiveRates effective_rates(const KineticsParams& params, const KineticsState& state) {
  params.validate();
  state.validate();
  EffectiveRates r{};
  r.k_p0 = arrhenius(params.arrhenius_p.prefactor, params.arrhenius_p.activation_energy, state.T);
  r.k_t0 = arrhenius(params.arrhenius_t.prefactor, params.arrhenius_t.activation_energy, state.T);
  r.D = diffusion_factor(state.phi_p, params.A_gel, params.B_gel);
  r.k_p = effective_kp(r.k_p0, params.theta_p, state.lambda_0, r.D);
  r.k_t = effective_kt(r.k_t0, params.theta_t, state.lambda_0, r.D);
  return r;
}

}  // namespace trackmpc::kinetics
