#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace trackmpc {

/**
 * SISO rational transfer function num(s)/den(s).
 *
 * Coefficients are stored highest power first. The reactor models are
 * strictly proper (deg num < deg den); a 2nd-over-4th order model maps
 * heater power in W to reaction temperature deviation in degC.
 */
struct TransferFunction {
  std::vector<double> num;
  std::vector<double> den;

  /// Throws std::invalid_argument unless the model is strictly proper with
  /// finite coefficients and a nonzero leading denominator coefficient.
  void validate() const;

  /// Degree of the denominator.
  std::size_t order() const;

  std::complex<double> evaluate(std::complex<double> s) const;

  /// num(0)/den(0); +/-inf for a pole at the origin.
  double dc_gain() const;
};

struct ContinuousStateSpace {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;
  double D = 0.0;
};

/// x[k+1] = A x[k] + B u[k],  y[k] = C x[k] + d_ff u[k].
struct DiscreteStateSpace {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;
  double d_ff = 0.0;
  double Ts = 0.0;

  std::size_t order() const { return static_cast<std::size_t>(A.rows()); }
  void validate() const;
};

/// Controllable canonical realization (companion matrix, B = e1).
ContinuousStateSpace tf_to_ss(const TransferFunction& tf);

/// Zero-order-hold equivalent computed from the exponential of the
/// augmented matrix [A B; 0 0] * Ts.
DiscreteStateSpace discretize_zoh(const ContinuousStateSpace& css, double Ts);

/// Unit-step response samples g[1..n] from a zero initial state.
/// Element 0 of the returned vector is g[1], the output one sample after
/// the step is applied.
std::vector<double> step_response(const DiscreteStateSpace& dss, std::size_t n);

struct BankEntry {
  double t_start = 0.0;  // seconds
  TransferFunction model;
};

/**
 * Time-scheduled bank of linear models.
 *
 * Entry i is valid on [t_start_i, t_start_{i+1}); the last entry stays
 * active for all later times. Discretized realizations are computed once at
 * construction and share the bank sampling period.
 */
class ModelBank {
 public:
  ModelBank(std::vector<BankEntry> entries, double Ts);

  std::size_t size() const { return entries_.size(); }
  double Ts() const { return Ts_; }
  const std::vector<BankEntry>& entries() const { return entries_; }
  const BankEntry& entry(std::size_t i) const { return entries_.at(i); }
  const DiscreteStateSpace& discrete(std::size_t i) const { return discrete_.at(i); }

  std::size_t active_index(double t) const;

 private:
  std::vector<BankEntry> entries_;
  std::vector<DiscreteStateSpace> discrete_;
  double Ts_;
};

/// Throws std::invalid_argument for negative or non-finite t.
std::size_t active_index(const ModelBank& bank, double t);

/// Copy of the bank with every numerator scaled by gain_factor.
ModelBank with_gain_scale(const ModelBank& bank, double gain_factor);

/// Internal states of every model in a bank, all driven by the same input.
struct BankState {
  std::vector<Eigen::VectorXd> states;
  double last_u = 0.0;
};

BankState make_bank_state(const ModelBank& bank);

/// True when the state vector count and dimensions match the bank.
bool consistent(const ModelBank& bank, const BankState& state);

/// Output of model `index` at the current state (strictly proper models, so
/// the pending input does not feed through).
double bank_output(const ModelBank& bank, const BankState& state, std::size_t index);

/// Advances every model one sample with input u and returns the outputs of
/// all models at the new sample.
std::vector<double> bank_advance(const ModelBank& bank, BankState& state, double u);

// Bank text format:
//
//   # comment
//   Ts 30
//   t_start 0
//   num 0.5 25 200
//   den 72000 ...
//
// One `Ts` directive, then blocks of t_start/num/den lines.
ModelBank parse_bank(std::string_view text);
std::string format_bank(const ModelBank& bank);
ModelBank load_bank(const std::filesystem::path& path);
void save_bank(const ModelBank& bank, const std::filesystem::path& path);

}  // namespace trackmpc
