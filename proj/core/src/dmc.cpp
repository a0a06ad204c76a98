#include "trackmpc/dmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace trackmpc {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool symmetric_psd(const Eigen::MatrixXd& W) {
  if (W.rows() != W.cols()) return false;
  if (!W.allFinite()) return false;
  const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-12 * scale;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void DmcConfig::validate() const {
  require(P >= 1, "dmc: P must be >= 1");
  require(M >= 1 && M <= P, "dmc: M must satisfy 1 <= M <= P");
  require(alpha >= 0.0 && alpha < 1.0, "dmc: alpha must be in [0, 1)");
  require(Ts > 0.0 && std::isfinite(Ts), "dmc: Ts must be positive");
  require(u_min < u_max, "dmc: u_min must be below u_max");
  require(static_cast<std::size_t>(Q.rows()) == P && symmetric_psd(Q), "dmc: Q must be a symmetric PSD P x P matrix");
  require(static_cast<std::size_t>(R.rows()) == M && symmetric_psd(R), "dmc: R must be a symmetric PSD M x M matrix");
}

DmcConfig make_dmc_config(std::size_t P, std::size_t M, double q, double r) {
  DmcConfig cfg;
  cfg.P = P;
  cfg.M = M;
  cfg.Q = q * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
  cfg.R = r * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
  return cfg;
}

void PredictionContext::validate() const {
  const auto P = G_plus.rows();
  require(P >= 1 && G_plus.cols() >= 1 && G_plus.cols() <= P, "context: G_plus must be P x M with M <= P");
  require(Y_past.size() == P && D.size() == P && Y_D.size() == P, "context: vectors must have length P");
  require(G_plus.allFinite() && Y_past.allFinite() && D.allFinite() && Y_D.allFinite() && std::isfinite(u_prev),
          "context: non-finite entry");
}

Eigen::VectorXd PredictionContext::tracking_error() const { return Y_D - Y_past - D; }

Eigen::VectorXd desired_trajectory(double y_d_now, std::span<const double> setpoints, double alpha,
                                   bool programmed) {
  require(alpha >= 0.0 && alpha < 1.0, "desired_trajectory: alpha must be in [0, 1)");
  Eigen::VectorXd Y_D(static_cast<Eigen::Index>(setpoints.size()));
  double y = y_d_now;
  for (std::size_t k = 0; k < setpoints.size(); ++k) {
    if (programmed) y = alpha * y + (1.0 - alpha) * setpoints[k];
    Y_D(static_cast<Eigen::Index>(k)) = y;
  }
  return Y_D;
}

Eigen::MatrixXd build_gplus(std::span<const double> g, std::size_t P, std::size_t M, std::size_t delay) {
  require(M >= 1 && P >= 1, "build_gplus: P and M must be >= 1");
  require(g.size() >= P + delay, "build_gplus: not enough step-response samples");
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(M));
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = 0; j < M; ++j)
      if (i + delay >= j) G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g[i + delay - j];
  return G;
}

Eigen::VectorXd free_response(const ModelBank& bank, const BankState& state, double t_now, std::size_t P,
                              double u_prev, std::size_t delay) {
  require(consistent(bank, state), "free_response: state does not match bank");
  require(std::isfinite(u_prev), "free_response: non-finite input");
  Eigen::VectorXd Y(static_cast<Eigen::Index>(P));

  std::size_t model = bank.size();  // none yet
  Eigen::VectorXd x;
  std::size_t advanced = 0;
  for (std::size_t j = 1; j <= P; ++j) {
    const std::size_t steps = delay + j;
    const std::size_t idx = bank.active_index(t_now + static_cast<double>(steps) * bank.Ts());
    const auto& m = bank.discrete(idx);
    if (idx != model) {
      model = idx;
      x = state.states[idx];
      advanced = 0;
    }
    for (; advanced < steps; ++advanced) x = m.A * x + m.B * u_prev;
    Y(static_cast<Eigen::Index>(j - 1)) = m.C.dot(x);
  }
  return Y;
}

Eigen::VectorXd classical_prediction(std::span<const double> g, std::span<const double> du_past,
                                     std::span<const double> u_tail, std::size_t P, double settle_tol) {
  const std::size_t N = g.size();
  require(N >= 2 && N > P, "classical_prediction: need N > P step samples");
  require(du_past.size() == N - 1, "classical_prediction: du_past must have N - 1 entries");
  require(u_tail.size() == P, "classical_prediction: u_tail must have P entries");
  const double gN = g[N - 1];
  if (std::abs(gN - g[N - 2]) > settle_tol * std::max(1.0, std::abs(gN)))
    throw std::domain_error("classical_prediction: step response has not settled; the classical form needs a "
                            "stable model");

  Eigen::VectorXd Y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P));
  for (std::size_t i = 1; i <= P; ++i) {
    double acc = 0.0;
    // G_- row i: g[i + j] for i + j <= N - 1 (1-based), zero afterwards.
    for (std::size_t j = 1; i + j <= N - 1; ++j) acc += g[i + j - 1] * du_past[j - 1];
    Y(static_cast<Eigen::Index>(i - 1)) = acc + gN * u_tail[i - 1];
  }
  return Y;
}

PastInputs past_inputs_from_history(std::span<const double> u_history, std::size_t N, std::size_t P) {
  require(N >= 2, "past_inputs_from_history: N must be >= 2");
  const auto t = static_cast<long long>(u_history.size());
  auto u_at = [&](long long k) -> double {
    if (k < 0 || t == 0) return 0.0;
    if (k >= t) return u_history[static_cast<std::size_t>(t - 1)];
    return u_history[static_cast<std::size_t>(k)];
  };
  PastInputs out;
  out.du_past.resize(N - 1);
  for (std::size_t j = 1; j <= N - 1; ++j) {
    const long long k = t - static_cast<long long>(j);
    out.du_past[j - 1] = u_at(k) - u_at(k - 1);
  }
  out.u_tail.resize(P);
  for (std::size_t i = 1; i <= P; ++i) out.u_tail[i - 1] = u_at(t - static_cast<long long>(N) + static_cast<long long>(i));
  return out;
}

Eigen::VectorXd disturbance_estimate(double y_p, double y_m, std::size_t P) {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(P), y_p - y_m);
}

double cost(const Eigen::VectorXd& du_plus, const PredictionContext& ctx, const Eigen::MatrixXd& Q,
            const Eigen::MatrixXd& R) {
  require(du_plus.size() == ctx.G_plus.cols(), "cost: dU length must equal M");
  require(Q.rows() == ctx.G_plus.rows() && R.rows() == ctx.G_plus.cols(), "cost: weight dimensions");
  const Eigen::VectorXd Y_m = ctx.G_plus * du_plus + ctx.Y_past;
  const Eigen::VectorXd r = Y_m + ctx.D - ctx.Y_D;
  return r.dot(Q * r) + du_plus.dot(R * du_plus);
}

QuadraticCost::QuadraticCost(const PredictionContext& ctx, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R)
    : P_(static_cast<std::size_t>(ctx.G_plus.rows())), M_(static_cast<std::size_t>(ctx.G_plus.cols())) {
  require(static_cast<std::size_t>(Q.rows()) == P_ && static_cast<std::size_t>(R.rows()) == M_,
          "QuadraticCost: weight dimensions");
  G_.resize(P_ * M_);
  Q_.resize(P_ * P_);
  R_.resize(M_ * M_);
  E_.resize(P_);
  const Eigen::VectorXd E = ctx.tracking_error();
  for (std::size_t i = 0; i < P_; ++i) {
    E_[i] = E(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < M_; ++j) G_[i * M_ + j] = ctx.G_plus(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    for (std::size_t j = 0; j < P_; ++j) Q_[i * P_ + j] = Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  for (std::size_t i = 0; i < M_; ++i)
    for (std::size_t j = 0; j < M_; ++j) R_[i * M_ + j] = R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

double QuadraticCost::operator()(std::span<const double> du) const {
  // r = G du - E, so that r equals Y_m + D - Y_D.
  double r[64];
  std::vector<double> heap;
  double* res = r;
  if (P_ > 64) {
    heap.resize(P_);
    res = heap.data();
  }
  for (std::size_t i = 0; i < P_; ++i) {
    double acc = -E_[i];
    for (std::size_t j = 0; j < M_; ++j) acc += G_[i * M_ + j] * du[j];
    res[i] = acc;
  }
  double J = 0.0;
  for (std::size_t i = 0; i < P_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < P_; ++j) row += Q_[i * P_ + j] * res[j];
    J += res[i] * row;
  }
  for (std::size_t i = 0; i < M_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < M_; ++j) row += R_[i * M_ + j] * du[j];
    J += du[i] * row;
  }
  return J;
}

ClosedFormSolution unconstrained_solution(const Eigen::MatrixXd& G_plus, const Eigen::MatrixXd& Q,
                                          const Eigen::MatrixXd& R, const Eigen::VectorXd& E) {
  require(Q.rows() == G_plus.rows() && R.rows() == G_plus.cols() && E.size() == G_plus.rows(),
          "unconstrained_solution: dimension mismatch");
  const Eigen::MatrixXd H = G_plus.transpose() * Q * G_plus + R;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (!(rcond > 1e-14))
    throw std::domain_error("unconstrained_solution: normal matrix is singular (rcond = " + std::to_string(rcond) +
                            ")");
  ClosedFormSolution sol;
  sol.du_plus = ldlt.solve(G_plus.transpose() * (Q * E));
  sol.rcond = rcond;
  return sol;
}

std::uint64_t step_seed(std::uint64_t base_seed, std::uint64_t step) {
  return splitmix64(base_seed ^ splitmix64(step));
}

StepResult control_step(const ModelBank& bank, const BankState& bank_state, double t_now, const DmcConfig& cfg,
                        const OptimizerSpec& optimizer, double y_p, double y_sp_now,
                        std::span<const double> future_setpoints, ControllerState& state) {
  require(future_setpoints.size() >= cfg.N1 + cfg.P, "control_step: not enough future setpoints");
  StepResult res;
  res.active_model = bank.active_index(t_now);
  res.y_m = bank_output(bank, bank_state, res.active_model);

  if (!state.has_y_d) {
    state.y_d = y_p;
    state.has_y_d = true;
  }
  state.y_d = cfg.alpha * state.y_d + (1.0 - cfg.alpha) * y_sp_now;
  res.y_d = state.y_d;

  const auto M = static_cast<Eigen::Index>(cfg.M);
  try {
    auto& ctx = res.context;
    const Eigen::VectorXd full = desired_trajectory(state.y_d, future_setpoints.first(cfg.N1 + cfg.P), cfg.alpha,
                                                    cfg.programmed);
    ctx.Y_D = full.tail(static_cast<Eigen::Index>(cfg.P));
    ctx.G_plus = build_gplus(step_response(bank.discrete(res.active_model), cfg.N1 + cfg.P), cfg.P, cfg.M, cfg.N1);
    ctx.Y_past = free_response(bank, bank_state, t_now, cfg.P, state.u_prev, cfg.N1);
    ctx.D = disturbance_estimate(y_p, res.y_m, cfg.P);
    ctx.u_prev = state.u_prev;
    ctx.validate();
    res.d = ctx.D(0);

    if (optimizer.kind == OptimizerKind::closed_form) {
      const auto sol = unconstrained_solution(ctx.G_plus, cfg.Q, cfg.R, ctx.tracking_error());
      res.du_plus = sol.du_plus;
      res.rcond = sol.rcond;
      res.J = cost(res.du_plus, ctx, cfg.Q, cfg.R);
    } else {
      ga::GaConfig gcfg = optimizer.ga;
      gcfg.u_min = cfg.u_min;
      gcfg.u_max = cfg.u_max;
      gcfg.seed = step_seed(optimizer.ga.seed, state.step);
      std::vector<ga::Chromosome> seeds;
      if (gcfg.warm_start && state.last_plan.size() == cfg.M) {
        std::vector<double> shifted(cfg.M, 0.0);
        std::copy(state.last_plan.begin() + 1, state.last_plan.end(), shifted.begin());
        seeds.push_back(ga::encode(shifted, gcfg));
      }
      const QuadraticCost qc(ctx, cfg.Q, cfg.R);
      const auto out = ga::evolve([&qc](std::span<const double> du) { return qc(du); }, cfg.M, state.u_prev, gcfg,
                                  seeds);
      res.du_plus = Eigen::Map<const Eigen::VectorXd>(out.du_plus.data(), M);
      res.J = out.J;
      res.generations_run = out.generations_run;
      res.ga_history = out.history;
      if (out.non_finite_costs > 0) res.failure = "non-finite cost for some candidates";
    }
    if (!res.du_plus.allFinite() || !std::isfinite(res.J)) throw std::runtime_error("optimizer returned non-finite");

    res.u = std::clamp(state.u_prev + res.du_plus(0), cfg.u_min, cfg.u_max);
    res.du = res.u - state.u_prev;
  } catch (const std::exception& e) {
    res.flagged = true;
    res.failure = e.what();
    res.u = std::clamp(state.u_prev, cfg.u_min, cfg.u_max);
    res.du = res.u - state.u_prev;
    if (res.du_plus.size() != M) res.du_plus = Eigen::VectorXd::Zero(M);
  }

  state.u_prev = res.u;
  state.last_plan.assign(res.du_plus.data(), res.du_plus.data() + res.du_plus.size());
  ++state.step;
  return res;
}

}  // namespace trackmpc
