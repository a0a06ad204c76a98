#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trackmpc/ga.hpp"
#include "trackmpc/linear_models.hpp"

namespace trackmpc {

struct DmcConfig {
  std::size_t P = 3;   // prediction horizon
  std::size_t M = 3;   // control horizon
  std::size_t N1 = 0;  // pure delay in samples
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd R = 0.05 * Eigen::MatrixXd::Identity(3, 3);
  double alpha = 0.1;
  double Ts = 30.0;
  double u_min = 0.0;
  double u_max = 1000.0;
  bool programmed = true;

  void validate() const;
};

/// Q = q I (P x P), R = r I (M x M).
DmcConfig make_dmc_config(std::size_t P, std::size_t M, double q, double r);

/// Everything the optimizer needs for one sampling instant.
struct PredictionContext {
  Eigen::MatrixXd G_plus;  // P x M
  Eigen::VectorXd Y_past;
  Eigen::VectorXd D;
  Eigen::VectorXd Y_D;
  double u_prev = 0.0;

  void validate() const;
  /// E = Y_D - (Y_past + D)
  Eigen::VectorXd tracking_error() const;
};

/// Programmed: y_d(t+k) = a y_d(t+k-1) + (1-a) y_sp(t+k). Otherwise every
/// element equals y_d_now.
Eigen::VectorXd desired_trajectory(double y_d_now, std::span<const double> setpoints, double alpha,
                                   bool programmed);

/// Lower-triangular Toeplitz P x M matrix; entry (i, j) = g[i - j + delay]
/// in 0-based storage, where g[0] is the first step-response sample.
Eigen::MatrixXd build_gplus(std::span<const double> g, std::size_t P, std::size_t M, std::size_t delay = 0);

/**
 * Outputs over t+delay+1 .. t+delay+P with the input held at u_prev.
 *
 * Each future sample is produced by the model scheduled for that absolute
 * time. Works on copies of the bank state.
 */
Eigen::VectorXd free_response(const ModelBank& bank, const BankState& state, double t_now, std::size_t P,
                              double u_prev, std::size_t delay = 0);

/**
 * Classical DMC past-input contribution G_- dU_- + g_N U_N.
 *
 * g holds N settled step samples g[1..N]; du_past = [du(t-1) .. du(t-N+1)];
 * u_tail = [u(t-N+1) .. u(t-N+P)]. Throws std::domain_error when
 * |g[N] - g[N-1]| exceeds settle_tol * max(1, |g[N]|).
 */
Eigen::VectorXd classical_prediction(std::span<const double> g, std::span<const double> du_past,
                                     std::span<const double> u_tail, std::size_t P, double settle_tol = 1e-9);

struct PastInputs {
  std::vector<double> du_past;
  std::vector<double> u_tail;
};

/// Builds classical_prediction inputs from u(0..t-1), assuming u = 0 before
/// the recorded history and the input held at u(t-1) afterwards.
PastInputs past_inputs_from_history(std::span<const double> u_history, std::size_t N, std::size_t P);

Eigen::VectorXd disturbance_estimate(double y_p, double y_m, std::size_t P);

/// (Y_m + D - Y_D)' Q (Y_m + D - Y_D) + dU' R dU with Y_m = G_plus dU + Y_past.
double cost(const Eigen::VectorXd& du_plus, const PredictionContext& ctx, const Eigen::MatrixXd& Q,
            const Eigen::MatrixXd& R);

/// Allocation-free evaluator of the same cost for the GA inner loop.
class QuadraticCost {
 public:
  QuadraticCost(const PredictionContext& ctx, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);
  double operator()(std::span<const double> du) const;

 private:
  std::size_t P_;
  std::size_t M_;
  std::vector<double> G_;  // row-major P x M
  std::vector<double> Q_;  // row-major P x P
  std::vector<double> R_;  // row-major M x M
  std::vector<double> E_;
};

struct ClosedFormSolution {
  Eigen::VectorXd du_plus;
  double rcond = 0.0;  // reciprocal condition estimate of G'QG + R
};

/// (G'QG + R)^-1 G'Q E via LDL^T. Throws std::domain_error when singular.
ClosedFormSolution unconstrained_solution(const Eigen::MatrixXd& G_plus, const Eigen::MatrixXd& Q,
                                          const Eigen::MatrixXd& R, const Eigen::VectorXd& E);

enum class OptimizerKind { genetic, closed_form };

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::genetic;
  ga::GaConfig ga;
};

/// Mutable controller memory carried between sampling instants.
struct ControllerState {
  double u_prev = 0.0;
  double y_d = 0.0;
  bool has_y_d = false;
  std::uint64_t step = 0;
  std::vector<double> last_plan;
};

struct StepResult {
  double u = 0.0;
  double du = 0.0;
  double J = 0.0;
  Eigen::VectorXd du_plus;
  double y_d = 0.0;
  double y_m = 0.0;
  double d = 0.0;
  std::size_t active_model = 0;
  std::size_t generations_run = 0;
  double rcond = 0.0;
  bool flagged = false;
  std::string failure;
  PredictionContext context;
  std::vector<ga::GenerationStats> ga_history;
};

/// Seed used by the GA at a given controller step.
std::uint64_t step_seed(std::uint64_t base_seed, std::uint64_t step);

/**
 * One receding-horizon iteration.
 *
 * Updates the reference filter with y_sp_now, assembles the prediction
 * context from the model bank state at t_now, optimizes, and applies only
 * the first increment: u = clamp(u_prev + du(t), u_min, u_max).
 * `future_setpoints` must hold at least N1 + P values for t+Ts onward. On an
 * optimizer failure the previous input is held and the result is flagged.
 */
StepResult control_step(const ModelBank& bank, const BankState& bank_state, double t_now, const DmcConfig& cfg,
                        const OptimizerSpec& optimizer, double y_p, double y_sp_now,
                        std::span<const double> future_setpoints, ControllerState& state);

}  // namespace trackmpc
