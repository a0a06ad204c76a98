#include <vector>

#include <benchmark/benchmark.h>

#include <trackmpc/bank_generator.hpp>
#include <trackmpc/dmc.hpp>
#include <trackmpc/ga.hpp>

using namespace trackmpc;

namespace {

std::vector<double> taus_poly(std::initializer_list<double> taus) {
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

ModelBank reactor_bank(std::size_t count) {
  BankGeneratorSpec spec;
  spec.count = count;
  spec.base.num = {200.0, 25.0, 0.5};
  spec.base.den = taus_poly({150.0, 60.0, 20.0, 8.0});
  spec.jitter = 0.1;
  spec.seed = 1;
  return synth_bank(spec);
}

PredictionContext sample_context(const ModelBank& bank) {
  PredictionContext ctx;
  ctx.G_plus = build_gplus(step_response(bank.discrete(0), 3), 3, 3);
  ctx.Y_past = Eigen::Vector3d(40.0, 40.3, 40.6);
  ctx.D = Eigen::Vector3d::Constant(0.2);
  ctx.Y_D = Eigen::Vector3d(41.0, 42.0, 43.0);
  ctx.u_prev = 450.0;
  return ctx;
}

void BM_Evolve(benchmark::State& state) {
  const auto bank = reactor_bank(1);
  const auto ctx = sample_context(bank);
  const DmcConfig dmc;
  const QuadraticCost qc(ctx, dmc.Q, dmc.R);
  ga::GaConfig cfg;
  cfg.pop_size = static_cast<std::size_t>(state.range(0));
  cfg.generations = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    auto res = ga::evolve([&qc](std::span<const double> du) { return qc(du); }, 3, ctx.u_prev, cfg);
    benchmark::DoNotOptimize(res.J);
    ++cfg.seed;
  }
}
BENCHMARK(BM_Evolve)->Args({50, 750})->Args({10, 50})->Args({100, 750})->Unit(benchmark::kMillisecond);

void BM_QuadraticCost(benchmark::State& state) {
  const auto bank = reactor_bank(1);
  const auto ctx = sample_context(bank);
  const DmcConfig dmc;
  const QuadraticCost qc(ctx, dmc.Q, dmc.R);
  std::vector<double> du{10.0, -5.0, 2.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(qc(du));
    du[0] += 1e-9;
  }
}
BENCHMARK(BM_QuadraticCost);

void BM_BankAdvance(benchmark::State& state) {
  const auto bank = reactor_bank(static_cast<std::size_t>(state.range(0)));
  auto bs = make_bank_state(bank);
  double u = 300.0;
  for (auto _ : state) {
    auto y = bank_advance(bank, bs, u);
    benchmark::DoNotOptimize(y.data());
    u = 300.0 + 1e-3 * y[0];
  }
}
BENCHMARK(BM_BankAdvance)->Arg(1)->Arg(131);

void BM_ClosedFormStep(benchmark::State& state) {
  const auto bank = reactor_bank(131);
  auto bs = make_bank_state(bank);
  for (int k = 0; k < 50; ++k) bank_advance(bank, bs, 400.0);
  const DmcConfig dmc;
  const OptimizerSpec opt{OptimizerKind::closed_form, {}};
  const std::vector<double> sp(3, 50.0);
  ControllerState cs;
  cs.u_prev = 400.0;
  for (auto _ : state) {
    auto res = control_step(bank, bs, 1500.0, dmc, opt, 30.0, 50.0, sp, cs);
    benchmark::DoNotOptimize(res.u);
  }
}
BENCHMARK(BM_ClosedFormStep);

}  // namespace
BENCHMARK_MAIN();
