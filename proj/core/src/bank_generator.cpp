#include "trackmpc/bank_generator.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace trackmpc {

double termination_reduction(const GelDriftLaw& law, double phi_p) {
  const auto& k = law.kinetics;
  const double k_t0 = kinetics::arrhenius(k.arrhenius_t.prefactor, k.arrhenius_t.activation_energy, law.temperature);
  const double D = kinetics::diffusion_factor(phi_p, k.A_gel, k.B_gel);
  const double k_t = kinetics::effective_kt(k_t0, k.theta_t, law.lambda_0, D);
  return 1.0 - k_t / k_t0;
}

double drift_grid_point(const GelDriftLaw& law, std::size_t i, std::size_t count) {
  if (count <= 1) return law.phi_p_start;
  const double frac = static_cast<double>(i) / static_cast<double>(count - 1);
  return law.phi_p_start + frac * (law.phi_p_end - law.phi_p_start);
}

ModelBank synth_bank(const BankGeneratorSpec& spec) {
  if (spec.count == 0) throw std::invalid_argument("synth_bank: count must be >= 1");
  if (!(spec.interval > 0.0)) throw std::invalid_argument("synth_bank: interval must be positive");
  if (!(spec.jitter >= 0.0 && spec.jitter < 1.0)) throw std::invalid_argument("synth_bank: jitter must be in [0, 1)");
  spec.base.validate();
  if (spec.integrator_entries) {
    const auto [lo, hi] = *spec.integrator_entries;
    if (lo > hi || hi >= spec.count) throw std::invalid_argument("synth_bank: integrator_entries out of range");
  }
  if (spec.drift) spec.drift->kinetics.validate();

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<BankEntry> entries;
  entries.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    TransferFunction tf = spec.base;
    double gain = 1.0;
    double time_scale = 1.0;
    if (spec.drift) {
      const double r = termination_reduction(*spec.drift, drift_grid_point(*spec.drift, i, spec.count));
      gain = 1.0 + spec.drift->gain_strength * r;
      time_scale = 1.0 + spec.drift->pole_strength * r;
    }
    if (spec.jitter > 0.0) gain *= 1.0 + spec.jitter * unit(rng);
    if (!(time_scale > 0.0) || !std::isfinite(gain))
      throw std::invalid_argument("synth_bank: drift produces an improper model at entry " + std::to_string(i));

    for (double& c : tf.num) c *= gain;
    // s -> time_scale * s multiplies the s^k coefficient by time_scale^k.
    const std::size_t n = tf.den.size();
    for (std::size_t k = 0; k < n; ++k) tf.den[k] *= std::pow(time_scale, static_cast<double>(n - 1 - k));
    if (spec.integrator_entries && i >= spec.integrator_entries->first && i <= spec.integrator_entries->second)
      tf.den.back() = 0.0;

    try {
      tf.validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("synth_bank: entry " + std::to_string(i) + ": " + e.what());
    }
    entries.push_back({static_cast<double>(i) * spec.interval, std::move(tf)});
  }
  return ModelBank(std::move(entries), spec.Ts);
}

}  // namespace trackmpc
