#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>

#include "trackmpc/kinetics.hpp"
#include "trackmpc/linear_models.hpp"

namespace trackmpc {

/**
 * Gel-effect drift along the batch.
 *
 * The polymer volume fraction is swept linearly from phi_p_start (first
 * entry) to phi_p_end (last entry). At each point the termination rate
 * constant is reduced by diffusion limitation; the reduction
 * r = 1 - k_t / k_t0 in [0, 1) scales the model gain by
 * (1 + gain_strength * r) and stretches its time constants by
 * (1 + pole_strength * r).
 */
struct GelDriftLaw {
  kinetics::KineticsParams kinetics;
  double phi_p_start = 0.0;
  double phi_p_end = 0.6;
  double lambda_0 = 1e-4;
  double temperature = 343.15;
  double gain_strength = 0.0;
  double pole_strength = 0.0;
};

struct BankGeneratorSpec {
  std::size_t count = 1;
  double interval = 60.0;  // seconds between entry start times
  double Ts = 30.0;
  TransferFunction base;
  std::optional<GelDriftLaw> drift;
  /// Inclusive index range of entries whose constant denominator
  /// coefficient is zeroed, placing a pole at the origin.
  std::optional<std::pair<std::size_t, std::size_t>> integrator_entries;
  /// Relative uniform jitter on each entry gain, drawn from `seed`.
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

/// Termination-rate reduction 1 - k_t/k_t0 at polymer fraction phi_p.
double termination_reduction(const GelDriftLaw& law, double phi_p);

/// Polymer volume fraction assigned to entry i of `count`.
double drift_grid_point(const GelDriftLaw& law, std::size_t i, std::size_t count);

ModelBank synth_bank(const BankGeneratorSpec& spec);

}  // namespace trackmpc
