#include "trackmpc/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "trackmpc/errors.hpp"

namespace trackmpc {

void SimConfig::validate() const {
  if (!(Ts > 0.0) || !std::isfinite(Ts)) throw std::invalid_argument("sim: Ts must be positive");
  if (!(duration >= Ts) || !std::isfinite(duration)) throw std::invalid_argument("sim: duration must be >= Ts");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw std::invalid_argument("sim: noise_variance must be >= 0");
  if (!(plant_mismatch > 0.0) || !std::isfinite(plant_mismatch))
    throw std::invalid_argument("sim: plant_mismatch must be positive");
  if (!std::isfinite(ambient)) throw std::invalid_argument("sim: ambient must be finite");
  if (disturbance && (!std::isfinite(disturbance->t_step) || !std::isfinite(disturbance->magnitude)))
    throw std::invalid_argument("sim: disturbance must be finite");
}

std::size_t SimConfig::steps() const { return static_cast<std::size_t>(std::floor(duration / Ts + 1e-9)); }

double gaussian_noise(ga::Rng& rng, double variance) {
  if (!(variance >= 0.0)) throw std::invalid_argument("gaussian_noise: variance must be >= 0");
  if (variance == 0.0) return 0.0;
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  return normal(rng);
}

double step_disturbance(double t, const std::optional<StepDisturbance>& spec) {
  if (!spec) return 0.0;
  return t >= spec->t_step ? spec->magnitude : 0.0;
}

SimTrace run_closed_loop(const ModelBank& bank, const DmcConfig& dmc, const OptimizerSpec& optimizer,
                         const Trajectory& trajectory, const SimConfig& sim, bool keep_ga_stats,
                         const StepObserver& observer) {
  sim.validate();
  dmc.validate();
  if (optimizer.kind == OptimizerKind::genetic) optimizer.ga.validate();
  if (std::abs(bank.Ts() - sim.Ts) > 1e-9 * sim.Ts || std::abs(dmc.Ts - sim.Ts) > 1e-9 * sim.Ts)
    throw std::invalid_argument("run_closed_loop: bank, controller and simulation Ts must agree");

  const ModelBank plant = sim.plant_mismatch == 1.0 ? bank : with_gain_scale(bank, sim.plant_mismatch);
  BankState plant_state = make_bank_state(plant);
  BankState model_state = make_bank_state(bank);
  ControllerState ctrl;
  ga::Rng noise_rng(sim.seed);

  const std::size_t n = sim.steps();
  const std::size_t lookahead = dmc.N1 + dmc.P;
  std::vector<double> future(lookahead);

  SimTrace trace;
  trace.records.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * sim.Ts;
    const std::size_t idx = plant.active_index(t);
    const double y_true = sim.ambient + bank_output(plant, plant_state, idx) + step_disturbance(t, sim.disturbance);
    const double y_p = y_true + gaussian_noise(noise_rng, sim.noise_variance);
    const double y_sp = trajectory.at(t);
    for (std::size_t i = 0; i < lookahead; ++i)
      future[i] = trajectory.at(t + static_cast<double>(i + 1) * sim.Ts) - sim.ambient;

    const StepResult res = control_step(bank, model_state, t, dmc, optimizer, y_p - sim.ambient,
                                        y_sp - sim.ambient, future, ctrl);

    TraceRecord rec;
    rec.t = t;
    rec.y_sp = y_sp;
    rec.y_d = res.y_d + sim.ambient;
    rec.y_p = y_p;
    rec.y_true = y_true;
    rec.y_m = res.y_m + sim.ambient;
    rec.d = y_p - rec.y_m;
    rec.u = res.u;
    rec.du = res.du;
    rec.J = res.J;
    rec.active_model = res.active_model;
    rec.ga_generations = res.generations_run;
    rec.flagged = res.flagged;
    trace.records.push_back(rec);

    if (keep_ga_stats)
      for (const auto& g : res.ga_history) trace.ga_stats.push_back({k, g});
    if (observer) observer(k, res);

    bank_advance(plant, plant_state, res.u);
    bank_advance(bank, model_state, res.u);
  }
  return trace;
}

Metrics compute_metrics(const SimTrace& trace, double u_min, double u_max,
                        const std::optional<StepDisturbance>& disturbance, double settle_band) {
  if (trace.records.empty()) throw std::invalid_argument("compute_metrics: empty trace");
  Metrics m;
  m.steps = trace.records.size();
  double sum = 0.0;
  for (const auto& r : trace.records) {
    const double e = std::abs(r.y_d - r.y_true);
    sum += e;
    m.max_abs_error = std::max(m.max_abs_error, e);
    if (r.u < u_min || r.u > u_max) ++m.constraint_violations;
    if (r.flagged) ++m.flagged_steps;
  }
  m.avg_abs_error = sum / static_cast<double>(m.steps);

  if (disturbance) {
    const auto& recs = trace.records;
    auto first = std::find_if(recs.begin(), recs.end(), [&](const TraceRecord& r) { return r.t >= disturbance->t_step; });
    if (first != recs.end()) {
      // Settled from the record after the last excursion outside the band.
      auto last_out = recs.end();
      for (auto it = first; it != recs.end(); ++it)
        if (std::abs(it->y_d - it->y_true) >= settle_band) last_out = it;
      if (last_out == recs.end())
        m.settle_time_after_disturbance = 0.0;
      else if (last_out + 1 != recs.end())
        m.settle_time_after_disturbance = (last_out + 1)->t - disturbance->t_step;
    }
  }
  return m;
}

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto c = line.find(',', start);
    out.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view s, std::size_t line, const char* field) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError(line, field, "malformed value");
  return value;
}

}  // namespace

std::string trace_csv(const SimTrace& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& r : trace.records) {
    for (double v : {r.t, r.y_sp, r.y_d, r.y_p, r.y_true, r.y_m, r.d, r.u, r.du, r.J}) {
      append_number(out, v);
      out += ',';
    }
    out += std::to_string(r.active_model);
    out += ',';
    out += std::to_string(r.ga_generations);
    out += ',';
    out += r.flagged ? '1' : '0';
    out += '\n';
  }
  return out;
}

SimTrace read_trace_csv(std::string_view text) {
  SimTrace trace;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  static constexpr const char* kFields[] = {"t", "y_sp", "y_d", "y_p", "y_true", "y_m", "d", "u", "du", "J"};
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line_no == 1) {
      if (line.substr(0, kTraceHeader.size()) != kTraceHeader) throw ParseError(1, "header", "unexpected trace header");
      continue;
    }
    const auto cols = split_commas(line);
    if (cols.size() != 13) throw ParseError(line_no, "row", "expected 13 columns");
    TraceRecord r;
    double* targets[] = {&r.t, &r.y_sp, &r.y_d, &r.y_p, &r.y_true, &r.y_m, &r.d, &r.u, &r.du, &r.J};
    for (std::size_t i = 0; i < 10; ++i) *targets[i] = parse_field<double>(cols[i], line_no, kFields[i]);
    r.active_model = parse_field<std::size_t>(cols[10], line_no, "active_model");
    r.ga_generations = parse_field<std::size_t>(cols[11], line_no, "ga_generations");
    r.flagged = parse_field<int>(cols[12], line_no, "flagged") != 0;
    trace.records.push_back(r);
  }
  return trace;
}

std::string ga_stats_csv(const SimTrace& trace, std::size_t stride) {
  if (stride == 0) stride = 1;
  std::string out = "step,generation,best_fitness,mean_fitness,best_J\n";
  for (std::size_t i = 0; i < trace.ga_stats.size(); ++i) {
    const auto& row = trace.ga_stats[i];
    const bool last_of_step = i + 1 == trace.ga_stats.size() || trace.ga_stats[i + 1].step != row.step;
    if (row.stats.generation % stride != 0 && !last_of_step) continue;
    out += std::to_string(row.step);
    out += ',';
    out += std::to_string(row.stats.generation);
    for (double v : {row.stats.best_fitness, row.stats.mean_fitness, row.stats.best_J}) {
      out += ',';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

std::vector<StudyRow> convergence_study(const ModelBank& bank, std::span<const StudyPoint> grid,
                                        const DmcConfig& dmc, const ga::GaConfig& base_ga,
                                        const Trajectory& trajectory, const SimConfig& sim, std::size_t workers) {
  if (grid.empty()) throw std::invalid_argument("convergence_study: empty grid");
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<StudyRow> rows(grid.size());
  auto run_point = [&](std::size_t i) {
    OptimizerSpec opt{OptimizerKind::genetic, base_ga};
    opt.ga.pop_size = grid[i].pop_size;
    opt.ga.generations = grid[i].generations;
    const auto start = std::chrono::steady_clock::now();
    const auto trace = run_closed_loop(bank, dmc, opt, trajectory, sim);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    rows[i] = {grid[i], compute_metrics(trace, dmc.u_min, dmc.u_max, sim.disturbance, sim.settle_band),
               elapsed.count()};
  };
  // Each run owns its RNG streams, so the rows do not depend on scheduling.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        run_point(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < std::min(workers, grid.size()); ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

double relative_excess(double J, double J_star, double floor) { return (J - J_star) / std::max(J_star, floor); }

bool closed_form_admissible(const Eigen::VectorXd& du_star, double u_prev, const DmcConfig& dmc,
                            const ga::GaConfig& ga) {
  double u = u_prev;
  for (Eigen::Index i = 0; i < du_star.size(); ++i) {
    const double du = du_star(i);
    if (du < ga.du_lo || du > ga.du_hi) return false;
    u += du;
    if (u < dmc.u_min || u > dmc.u_max) return false;
  }
  return true;
}

OptimizerComparison compare_optimizers(const ModelBank& bank, const DmcConfig& dmc, const ga::GaConfig& ga,
                                       const Trajectory& trajectory, const SimConfig& sim) {
  OptimizerComparison report;
  const OptimizerSpec opt{OptimizerKind::genetic, ga};
  run_closed_loop(bank, dmc, opt, trajectory, sim, false, [&](std::size_t step, const StepResult& res) {
    ComparisonRow row;
    row.step = step;
    row.J_ga = res.J;
    if (!res.flagged) {
      try {
        const auto star = unconstrained_solution(res.context.G_plus, dmc.Q, dmc.R, res.context.tracking_error());
        row.J_star = cost(star.du_plus, res.context, dmc.Q, dmc.R);
        row.comparable = closed_form_admissible(star.du_plus, res.context.u_prev, dmc, ga);
        row.relative_excess = relative_excess(row.J_ga, row.J_star);
      } catch (const std::domain_error&) {
        row.comparable = false;
      }
    }
    report.rows.push_back(row);
  });

  std::vector<double> excess;
  for (const auto& r : report.rows)
    if (r.comparable) excess.push_back(r.relative_excess);
  report.compared = excess.size();
  report.excluded = report.rows.size() - excess.size();
  if (!excess.empty()) {
    std::sort(excess.begin(), excess.end());
    const std::size_t n = excess.size();
    report.median_excess = n % 2 ? excess[n / 2] : 0.5 * (excess[n / 2 - 1] + excess[n / 2]);
    double sum = 0.0;
    for (double e : excess) sum += e;
    report.mean_excess = sum / static_cast<double>(n);
    report.max_excess = excess.back();
  }
  return report;
}

}  // namespace trackmpc
