#include "trackmpc/linear_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace trackmpc {

namespace {

// Leading zeros of the numerator do not count towards its degree.
std::size_t effective_num_degree(const std::vector<double>& num) {
  auto first = std::find_if(num.begin(), num.end(), [](double c) { return c != 0.0; });
  if (first == num.end()) return 0;
  return static_cast<std::size_t>(num.end() - first) - 1;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double c) { return std::isfinite(c); });
}

}  // namespace

void TransferFunction::validate() const {
  if (num.empty()) throw std::invalid_argument("transfer function: empty numerator");
  if (den.size() < 2) throw std::invalid_argument("transfer function: denominator must have degree >= 1");
  if (!all_finite(num) || !all_finite(den))
    throw std::invalid_argument("transfer function: non-finite coefficient");
  if (den.front() == 0.0)
    throw std::invalid_argument("transfer function: zero leading denominator coefficient");
  if (effective_num_degree(num) >= den.size() - 1)
    throw std::invalid_argument("transfer function: not strictly proper (deg num >= deg den)");
}

std::size_t TransferFunction::order() const { return den.empty() ? 0 : den.size() - 1; }

std::complex<double> TransferFunction::evaluate(std::complex<double> s) const {
  auto horner = [s](const std::vector<double>& c) {
    std::complex<double> acc{0.0, 0.0};
    for (double a : c) acc = acc * s + a;
    return acc;
  };
  return horner(num) / horner(den);
}

double TransferFunction::dc_gain() const {
  const double n0 = num.back();
  const double d0 = den.back();
  if (d0 == 0.0) return std::numeric_limits<double>::infinity();
  return n0 / d0;
}

void DiscreteStateSpace::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || B.size() != n || C.size() != n)
    throw std::invalid_argument("discrete state space: inconsistent dimensions");
  if (!(Ts > 0.0) || !std::isfinite(Ts))
    throw std::invalid_argument("discrete state space: Ts must be positive");
}

ContinuousStateSpace tf_to_ss(const TransferFunction& tf) {
  tf.validate();
  const std::size_t n = tf.order();
  const double lead = tf.den.front();

  ContinuousStateSpace css;
  css.A = Eigen::MatrixXd::Zero(n, n);
  css.B = Eigen::VectorXd::Zero(n);
  css.C = Eigen::RowVectorXd::Zero(n);

  for (std::size_t j = 0; j < n; ++j) css.A(0, j) = -tf.den[j + 1] / lead;
  for (std::size_t i = 1; i < n; ++i) css.A(i, i - 1) = 1.0;
  css.B(0) = 1.0;

  // Right-align the numerator against s^{n-1} ... s^0.
  const std::size_t m = tf.num.size();
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t power = m - 1 - k;
    if (power >= n) continue;  // leading zeros, already validated
    css.C(n - 1 - power) = tf.num[k] / lead;
  }
  return css;
}

DiscreteStateSpace discretize_zoh(const ContinuousStateSpace& css, double Ts) {
  if (!(Ts > 0.0) || !std::isfinite(Ts)) throw std::invalid_argument("discretize_zoh: Ts must be positive");
  const auto n = css.A.rows();
  if (css.A.cols() != n || css.B.size() != n || css.C.size() != n)
    throw std::invalid_argument("discretize_zoh: inconsistent dimensions");

  // exp([A B; 0 0] Ts) = [Ad Bd; 0 1]
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = css.A * Ts;
  aug.topRightCorner(n, 1) = css.B * Ts;
  const Eigen::MatrixXd phi = aug.exp();

  DiscreteStateSpace dss;
  dss.A = phi.topLeftCorner(n, n);
  dss.B = phi.topRightCorner(n, 1);
  dss.C = css.C;
  dss.d_ff = css.D;
  dss.Ts = Ts;
  return dss;
}

std::vector<double> step_response(const DiscreteStateSpace& dss, std::size_t n) {
  if (n == 0) throw std::invalid_argument("step_response: n must be >= 1");
  std::vector<double> g(n);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dss.A.rows());
  for (std::size_t k = 0; k < n; ++k) {
    x = dss.A * x + dss.B;
    g[k] = dss.C.dot(x) + dss.d_ff;
  }
  return g;
}

ModelBank::ModelBank(std::vector<BankEntry> entries, double Ts) : entries_(std::move(entries)), Ts_(Ts) {
  if (entries_.empty()) throw std::invalid_argument("model bank: at least one entry required");
  if (!(Ts_ > 0.0) || !std::isfinite(Ts_)) throw std::invalid_argument("model bank: Ts must be positive");
  if (entries_.front().t_start != 0.0) throw std::invalid_argument("model bank: first t_start must be 0");
  discrete_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i > 0 && !(entries_[i].t_start > entries_[i - 1].t_start))
      throw std::invalid_argument("model bank: t_start must be strictly increasing (entry " +
                                  std::to_string(i) + ")");
    if (!std::isfinite(entries_[i].t_start))
      throw std::invalid_argument("model bank: non-finite t_start");
    discrete_.push_back(discretize_zoh(tf_to_ss(entries_[i].model), Ts_));
  }
}

std::size_t ModelBank::active_index(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("active_index: t must be finite and >= 0");
  // First entry whose start is strictly greater than t, minus one.
  auto it = std::upper_bound(entries_.begin(), entries_.end(), t,
                             [](double value, const BankEntry& e) { return value < e.t_start; });
  return static_cast<std::size_t>(it - entries_.begin()) - 1;
}

std::size_t active_index(const ModelBank& bank, double t) { return bank.active_index(t); }

ModelBank with_gain_scale(const ModelBank& bank, double gain_factor) {
  if (!std::isfinite(gain_factor)) throw std::invalid_argument("with_gain_scale: non-finite factor");
  std::vector<BankEntry> entries = bank.entries();
  for (auto& e : entries)
    for (double& c : e.model.num) c *= gain_factor;
  return ModelBank(std::move(entries), bank.Ts());
}

BankState make_bank_state(const ModelBank& bank) {
  BankState s;
  s.states.reserve(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i)
    s.states.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bank.discrete(i).order())));
  return s;
}

bool consistent(const ModelBank& bank, const BankState& state) {
  if (state.states.size() != bank.size()) return false;
  for (std::size_t i = 0; i < bank.size(); ++i)
    if (static_cast<std::size_t>(state.states[i].size()) != bank.discrete(i).order()) return false;
  return true;
}

double bank_output(const ModelBank& bank, const BankState& state, std::size_t index) {
  return bank.discrete(index).C.dot(state.states.at(index));
}

std::vector<double> bank_advance(const ModelBank& bank, BankState& state, double u) {
  if (!std::isfinite(u)) throw std::invalid_argument("bank_advance: non-finite input");
  if (!consistent(bank, state)) throw std::invalid_argument("bank_advance: state does not match bank");
  std::vector<double> outputs(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& m = bank.discrete(i);
    Eigen::VectorXd& x = state.states[i];
    x = m.A * x + m.B * u;
    outputs[i] = m.C.dot(x);
  }
  state.last_u = u;
  return outputs;
}

}  // namespace trackmpc
