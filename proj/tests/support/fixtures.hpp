#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <vector>

#include <trackmpc/linear_models.hpp>

namespace fixtures {

// Product of first-order factors (tau_i s + 1), highest power first.
inline std::vector<double> poly_from_taus(std::initializer_list<double> taus) {
  std::vector<double> p{1.0};
  for (double tau : taus) {
    std::vector<double> next(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      next[i] += p[i] * tau;
      next[i + 1] += p[i];
    }
    p = next;
  }
  return p;
}

// Same shape as the shipped reactor models: two zeros over four poles.
inline trackmpc::TransferFunction reactor_tf(double gain = 0.5) {
  trackmpc::TransferFunction tf;
  tf.num = poly_from_taus({40.0, 10.0});
  for (double& c : tf.num) c *= gain;
  tf.den = poly_from_taus({150.0, 60.0, 20.0, 8.0});
  return tf;
}

// Faster model that settles within a few dozen samples at Ts = 30.
inline trackmpc::TransferFunction fast_tf(double gain = 0.4) {
  trackmpc::TransferFunction tf;
  tf.num = poly_from_taus({15.0});
  for (double& c : tf.num) c *= gain;
  tf.den = poly_from_taus({45.0, 20.0, 10.0});
  return tf;
}

inline trackmpc::ModelBank single_bank(const trackmpc::TransferFunction& tf, double Ts = 30.0) {
  return trackmpc::ModelBank({{0.0, tf}}, Ts);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace fixtures
