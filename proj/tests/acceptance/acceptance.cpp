// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any
// failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <trackmpc/bank_generator.hpp>
#include <trackmpc/dmc.hpp>
#include <trackmpc/ga.hpp>
#include <trackmpc/kinetics.hpp>
#include <trackmpc/simulation.hpp>

#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace trackmpc;

namespace {

const fs::path kData = TRACKMPC_DATA_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const cli::RunConfig& shipped() {
  static const cli::RunConfig cfg = cli::load_run_config(kData / "simulate.json");
  return cfg;
}

// Twenty random non-binding contexts built from shipped bank step responses.
Outcome ga_vs_closed_form() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& bank = shipped().bank;
  const DmcConfig dmc = make_dmc_config(3, 3, 1.0, 0.05);
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> entry(0, bank.size() - 1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  int within = 0, total = 0;
  double worst = 0.0;
  for (int attempts = 0; total < 20 && attempts < 10000; ++attempts) {
    PredictionContext ctx;
    const auto g = step_response(bank.discrete(entry(rng)), 3);
    ctx.G_plus = build_gplus(g, 3, 3);
    ctx.Y_past = Eigen::Vector3d(40.0 + 20.0 * unit(rng), 0.0, 0.0);
    ctx.Y_past(1) = ctx.Y_past(0) + 0.5 * unit(rng);
    ctx.Y_past(2) = ctx.Y_past(1) + 0.5 * unit(rng);
    ctx.D = Eigen::Vector3d::Constant(unit(rng));
    const Eigen::Vector3d E(0.5 * unit(rng), 1.5 * unit(rng), 3.0 * unit(rng));
    ctx.Y_D = ctx.Y_past + ctx.D + E;
    ctx.u_prev = 500.0 + 300.0 * unit(rng);
    const auto star = unconstrained_solution(ctx.G_plus, dmc.Q, dmc.R, ctx.tracking_error());
    ga::GaConfig gcfg;
    if (!closed_form_admissible(star.du_plus, ctx.u_prev, dmc, gcfg)) continue;
    const double J_star = cost(star.du_plus, ctx, dmc.Q, dmc.R);
    gcfg.seed = static_cast<std::uint64_t>(total + 1);
    const QuadraticCost qc(ctx, dmc.Q, dmc.R);
    const auto res = ga::evolve([&qc](std::span<const double> du) { return qc(du); }, 3, ctx.u_prev, gcfg);
    const double excess = relative_excess(res.J, J_star);
    worst = std::max(worst, excess);
    within += excess <= 0.02;
    ++total;
  }
  const double secs = seconds_since(t0);
  return {total == 20 && within >= 19 && secs < 120.0,
          fmt("%d/%d contexts within 2%% of J*, worst excess %.3g%%, %.1f s", within, total, 100.0 * worst, secs)};
}

Outcome modified_dmc_equivalence() {
  const auto& shipped_bank = shipped().bank;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> entry(0, shipped_bank.size() - 1);
  std::uniform_int_distribution<std::size_t> length(1, 600);
  std::uniform_real_distribution<double> u_dist(0.0, 1000.0);
  const std::size_t N = 400, P = 3;

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ModelBank bank({{0.0, shipped_bank.entry(entry(rng)).model}}, shipped_bank.Ts());
    std::vector<double> hist(length(rng));
    for (auto& u : hist) u = u_dist(rng);
    auto state = make_bank_state(bank);
    for (double u : hist) bank_advance(bank, state, u);
    const auto modified = free_response(bank, state, bank.Ts() * hist.size(), P, hist.back());
    const auto past = past_inputs_from_history(hist, N, P);
    const auto classical = classical_prediction(step_response(bank.discrete(0), N), past.du_past, past.u_tail, P);
    worst = std::max(worst, (modified - classical).cwiseAbs().maxCoeff());
  }

  // Integrator-bearing model: check against step-response superposition.
  BankGeneratorSpec ispec = cli::parse_generator_spec(
      cli::read_json_file(kData / "bank_integrator_spec.json", "spec"), "spec");
  const auto ibank_full = synth_bank(ispec);
  const ModelBank ibank({{0.0, ibank_full.entry(ispec.integrator_entries->first).model}}, ibank_full.Ts());
  std::vector<double> hist(300);
  for (auto& u : hist) u = u_dist(rng);
  auto state = make_bank_state(ibank);
  for (double u : hist) bank_advance(ibank, state, u);
  const auto y = free_response(ibank, state, ibank.Ts() * hist.size(), P, hist.back());
  const auto g = step_response(ibank.discrete(0), hist.size() + P);
  double integ_err = 0.0;
  for (std::size_t j = 1; j <= P; ++j) {
    const std::size_t n = hist.size() + j;  // sample index being predicted
    double acc = 0.0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const double du = hist[k] - (k ? hist[k - 1] : 0.0);
      acc += g[n - k - 1] * du;
    }
    integ_err = std::max(integ_err, std::abs(y(j - 1) - acc) / std::max(1.0, std::abs(acc)));
  }
  bool classical_refuses = false;
  try {
    const auto past = past_inputs_from_history(hist, N, P);
    classical_prediction(step_response(ibank.discrete(0), N), past.du_past, past.u_tail, P);
  } catch (const std::domain_error&) {
    classical_refuses = true;
  }
  return {worst <= 1e-6 && y.allFinite() && integ_err <= 1e-9 && classical_refuses,
          fmt("stable max |diff| %.2e over 100 histories; integrator rel err %.2e, classical form %s", worst,
              integ_err, classical_refuses ? "rejected" : "accepted")};
}

Outcome hard_constraint() {
  const auto& cfg = shipped();
  const std::vector<std::pair<const char*, Trajectory>> profiles{
      {"ramp-soak", cfg.trajectory},
      {"unreachable", Trajectory({{0.0, 20.0}, {300.0, 400.0}})},
      {"below-ambient", Trajectory({{0.0, 20.0}, {600.0, 60.0}, {1800.0, 5.0}})},
      {"zigzag", Trajectory({{0.0, 20.0}, {600.0, 150.0}, {1200.0, 25.0}, {2400.0, 160.0}, {3600.0, 20.0},
                             {5400.0, 120.0}, {7800.0, 30.0}})},
  };
  OptimizerSpec ga_spec{OptimizerKind::genetic, cfg.controller.optimizer.ga};
  ga_spec.ga.pop_size = 20;
  ga_spec.ga.generations = 60;
  const OptimizerSpec fast_ga = ga_spec;
  const OptimizerSpec closed{OptimizerKind::closed_form, {}};

  std::size_t steps = 0, violations = 0, runs = 0;
  double u_lo = std::numeric_limits<double>::infinity(), u_hi = -u_lo;
  auto account = [&](const SimTrace& tr) {
    for (const auto& r : tr.records) {
      violations += r.u < 0.0 || r.u > 1000.0;
      u_lo = std::min(u_lo, r.u);
      u_hi = std::max(u_hi, r.u);
    }
    steps += tr.records.size();
    ++runs;
  };
  for (const auto& [name, traj] : profiles) {
    for (const auto* opt : {&fast_ga, &closed}) {
      for (double mismatch : {0.7, 1.0, 1.4}) {
        for (std::uint64_t seed : {1u, 2u}) {
          SimConfig sim = cfg.sim;
          sim.plant_mismatch = mismatch;
          sim.seed = seed;
          sim.disturbance = StepDisturbance{3900.0, seed == 1 ? 2.0 : -2.0};
          account(run_closed_loop(cfg.bank, cfg.controller.dmc, *opt, traj, sim));
        }
      }
    }
  }
  account(run_closed_loop(cfg.bank, cfg.controller.dmc, cfg.controller.optimizer, profiles[1].second, cfg.sim));
  return {violations == 0 && steps >= 10000,
          fmt("%zu steps over %zu runs, %zu violations, u in [%g, %g] W", steps, runs, violations, u_lo, u_hi)};
}

Outcome integral_action() {
  const auto& full = shipped().bank;
  const ModelBank bank({{0.0, full.entry(0).model}}, full.Ts());
  SimConfig sim;
  sim.duration = 12000.0;
  sim.ambient = 20.0;
  sim.disturbance = StepDisturbance{6000.0, 1.0};
  const Trajectory traj({{0.0, 20.0}, {600.0, 60.0}});
  const auto trace = run_closed_loop(bank, DmcConfig{}, {OptimizerKind::closed_form, {}}, traj, sim);
  const auto m = compute_metrics(trace, 0.0, 1000.0, sim.disturbance, 0.05);
  double peak = 0.0, final_err = std::abs(trace.records.back().y_d - trace.records.back().y_true);
  for (const auto& r : trace.records)
    if (r.t >= 6000.0) peak = std::max(peak, std::abs(r.y_d - r.y_true));
  const double limit = 50 * sim.Ts;
  const bool ok = m.settle_time_after_disturbance && *m.settle_time_after_disturbance <= limit;
  return {ok, fmt("+1 degC step: peak |e| %.3f, |e| < 0.05 after %s s (limit %.0f s), final |e| %.2e", peak,
                  m.settle_time_after_disturbance ? fmt("%.0f", *m.settle_time_after_disturbance).c_str() : "never",
                  limit, final_err)};
}

Outcome closed_loop_tracking() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cfg = shipped();
  const auto& dmc = cfg.controller.dmc;
  const auto ga_trace = run_closed_loop(cfg.bank, dmc, cfg.controller.optimizer, cfg.trajectory, cfg.sim);
  const auto cf_trace = run_closed_loop(cfg.bank, dmc, {OptimizerKind::closed_form, {}}, cfg.trajectory, cfg.sim);
  const auto ga_m = compute_metrics(ga_trace, dmc.u_min, dmc.u_max);
  const auto cf_m = compute_metrics(cf_trace, dmc.u_min, dmc.u_max);
  const double secs = seconds_since(t0);
  const bool ok = ga_m.avg_abs_error <= 2.0 * cf_m.avg_abs_error && ga_m.avg_abs_error <= 0.5 &&
                  cf_m.avg_abs_error <= 0.5 && secs < 600.0;
  return {ok, fmt("avg |e| GA %.4f, closed form %.4f degC (ratio %.3f), %zu models, noise var %.2g, %.1f s",
                  ga_m.avg_abs_error, cf_m.avg_abs_error, ga_m.avg_abs_error / cf_m.avg_abs_error, cfg.bank.size(),
                  cfg.sim.noise_variance, secs)};
}

Outcome budget_saturation() {
  const auto& cfg = shipped();
  const auto grid_json = cli::read_json_file(kData / "study_grid.json", "grid");
  const auto pops = grid_json.at("pop_sizes").get<std::vector<std::size_t>>();
  const auto gens = grid_json.at("generations").get<std::vector<std::size_t>>();
  std::vector<StudyPoint> grid;
  for (auto p : pops)
    for (auto g : gens) grid.push_back({p, g});
  const auto rows = convergence_study(cfg.bank, grid, cfg.controller.dmc, cfg.controller.optimizer.ga,
                                      cfg.trajectory, cfg.sim, 0);
  auto err = [&](std::size_t pi, std::size_t gi) { return rows[pi * gens.size() + gi].metrics.avg_abs_error; };
  const double tol = 1.10;
  bool monotone = true;
  for (std::size_t pi = 0; pi < pops.size(); ++pi)
    for (std::size_t gi = 1; gi < gens.size(); ++gi) monotone = monotone && err(pi, gi) <= tol * err(pi, gi - 1);
  for (std::size_t gi = 0; gi < gens.size(); ++gi)
    for (std::size_t pi = 1; pi < pops.size(); ++pi) monotone = monotone && err(pi, gi) <= tol * err(pi - 1, gi);
  const std::size_t P = pops.size() - 1, G = gens.size() - 1;
  const double top = err(P, G);
  const bool saturated = std::abs(top - err(P - 1, G)) <= 0.1 * err(P - 1, G) &&
                         std::abs(top - err(P, G - 1)) <= 0.1 * err(P, G - 1);
  std::string table;
  for (std::size_t pi = 0; pi < pops.size(); ++pi) {
    table += fmt(" pop%zu:", pops[pi]);
    for (std::size_t gi = 0; gi < gens.size(); ++gi) table += fmt("%s%.3f", gi ? "/" : "", err(pi, gi));
  }
  return {monotone && saturated, fmt("monotone(10%%)=%s saturated=%s;%s", monotone ? "yes" : "no",
                                     saturated ? "yes" : "no", table.c_str())};
}

Outcome ga_properties() {
  auto bowl = [](std::span<const double> du) {
    double j = 0.0;
    for (std::size_t i = 0; i < du.size(); ++i) j += (du[i] - 17.0 * (i + 1.0)) * (du[i] - 17.0 * (i + 1.0));
    return j;
  };
  bool elitist = true, constant_size = true;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ga::GaConfig cfg;
    cfg.pop_size = 30;
    cfg.generations = 100;
    cfg.seed = seed;
    const auto res = ga::evolve(bowl, 3, 500.0, cfg);
    for (std::size_t g = 1; g < res.history.size(); ++g)
      elitist = elitist && res.history[g].best_fitness >= res.history[g - 1].best_fitness;
    for (auto n : res.population_sizes) constant_size = constant_size && n == cfg.pop_size;
  }

  bool round_trip = true;
  for (auto coding : {ga::GeneCoding::binary, ga::GeneCoding::gray}) {
    ga::GaConfig cfg;
    cfg.coding = coding;
    for (std::uint64_t v = 0; v < 4096; ++v) {
      const std::vector<double> du{cfg.du_lo + static_cast<double>(v) / 4095.0 * (cfg.du_hi - cfg.du_lo)};
      round_trip = round_trip && ga::decode(ga::encode(du, cfg), cfg, 1)[0] == du[0];
    }
  }

  ga::Rng rng(5);
  const ga::Chromosome base{std::vector<std::uint8_t>(36, 0), {}};
  int flips = 0;
  for (int i = 0; i < 100000; ++i) flips += ga::mutate(base, 0.6, rng) != base;
  const double freq = flips / 100000.0;

  ga::GaConfig cfg;
  auto rugged = [](std::span<const double> du) {
    return (du[0] + 61.7) * (du[0] + 61.7) / 50.0 + 10.0 + 4.0 * std::cos(du[0] / 5.0);
  };
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t v = 0; v < 4096; ++v) best = std::min(best, rugged(std::vector<double>{cfg.du_lo + v * cfg.quantum()}));
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.seed = seed;
    worst_ratio = std::max(worst_ratio, ga::evolve(rugged, 1, 500.0, cfg).J / best);
  }

  const bool ok = elitist && constant_size && round_trip && std::abs(freq - 0.6) <= 0.01 && worst_ratio <= 1.01;
  return {ok, fmt("elitism %s, size %s, round-trip %s, flip freq %.4f, enumeration ratio %.5f",
                  elitist ? "monotone" : "BROKEN", constant_size ? "constant" : "VARIES",
                  round_trip ? "exact" : "INEXACT", freq, worst_ratio)};
}

Outcome numerics() {
  double zoh_err = 0.0;
  for (double tau : {5.0, 60.0, 150.0, 900.0}) {
    const double K = 0.7, Ts = 30.0;
    const auto d = discretize_zoh(tf_to_ss({{K}, {tau, 1.0}}), Ts);
    const double a = std::exp(-Ts / tau);
    zoh_err = std::max({zoh_err, std::abs(d.A(0, 0) - a), std::abs(d.B(0) / tau - (1.0 - a)),
                        std::abs(d.C(0) * tau - K)});
  }

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double cost_err = 0.0, grad_err = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const int P = 1 + static_cast<int>(rng() % 8);
    const int M = 1 + static_cast<int>(rng() % P);
    PredictionContext c;
    c.G_plus = Eigen::MatrixXd::NullaryExpr(P, M, [&] { return unit(rng); });
    c.Y_past = Eigen::VectorXd::NullaryExpr(P, [&] { return 50.0 + 10.0 * unit(rng); });
    c.D = Eigen::VectorXd::NullaryExpr(P, [&] { return unit(rng); });
    c.Y_D = Eigen::VectorXd::NullaryExpr(P, [&] { return 50.0 + 10.0 * unit(rng); });
    const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(P, P, [&] { return unit(rng); });
    const Eigen::MatrixXd Q = A.transpose() * A + 0.1 * Eigen::MatrixXd::Identity(P, P);
    const Eigen::MatrixXd R = Eigen::VectorXd::NullaryExpr(M, [&] { return 0.01 + std::abs(unit(rng)); }).asDiagonal();
    const Eigen::VectorXd du = Eigen::VectorXd::NullaryExpr(M, [&] { return 50.0 * unit(rng); });
    double expected = 0.0;
    for (int i = 0; i < P; ++i) {
      double ri = c.Y_past(i) + c.D(i) - c.Y_D(i);
      for (int j = 0; j < M; ++j) ri += c.G_plus(i, j) * du(j);
      for (int k = 0; k < P; ++k) {
        double rk = c.Y_past(k) + c.D(k) - c.Y_D(k);
        for (int j = 0; j < M; ++j) rk += c.G_plus(k, j) * du(j);
        expected += ri * Q(i, k) * rk;
      }
    }
    for (int i = 0; i < M; ++i)
      for (int k = 0; k < M; ++k) expected += du(i) * R(i, k) * du(k);
    cost_err = std::max(cost_err, std::abs(cost(du, c, Q, R) - expected) / std::max(1.0, std::abs(expected)));

    const auto star = unconstrained_solution(c.G_plus, Q, R, c.tracking_error());
    for (int j = 0; j < M; ++j) {
      Eigen::VectorXd up = star.du_plus, dn = star.du_plus;
      const double h = 1e-3;
      up(j) += h;
      dn(j) -= h;
      grad_err = std::max(grad_err, std::abs(cost(up, c, Q, R) - cost(dn, c, Q, R)) / (2 * h));
    }
  }
  return {zoh_err <= 1e-12 && cost_err <= 1e-9 && grad_err <= 1e-6,
          fmt("ZOH max err %.2e, cost rel err %.2e (1000 instances), |grad J| at closed form %.2e", zoh_err, cost_err,
              grad_err)};
}

Outcome kinetics_identities() {
  using namespace trackmpc::kinetics;
  const bool eps = shrinkage_factor(1180.0, 1180.0) == 0.0;
  const bool d_one = diffusion_factor(1.0, 0.168, 0.03) == 1.0 && diffusion_factor(1.0, 2.5, -1.0) == 1.0;
  const bool kp = effective_kp(712.5, 0.0, 3e-4, 0.02) == 712.5;
  const bool beta = solvent_beta(0.5) == 1.0;
  return {eps && d_one && kp && beta, fmt("eps(rho,rho)=0 %s, D(1)=1 %s, k_p(theta_p=0)=k_p0 %s, beta(0.5)=1 %s",
                                          eps ? "yes" : "no", d_one ? "yes" : "no", kp ? "yes" : "no",
                                          beta ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"ga-vs-closed-form", ga_vs_closed_form},
      {"modified-dmc-equivalence", modified_dmc_equivalence},
      {"hard-input-constraint", hard_constraint},
      {"integral-action", integral_action},
      {"closed-loop-tracking", closed_loop_tracking},
      {"budget-saturation", budget_saturation},
      {"ga-unit-properties", ga_properties},
      {"numerics", numerics},
      {"kinetics-identities", kinetics_identities},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %-26s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
