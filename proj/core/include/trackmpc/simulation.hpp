#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trackmpc/dmc.hpp"
#include "trackmpc/ga.hpp"
#include "trackmpc/linear_models.hpp"

namespace trackmpc {

/// Setpoint profile from (time, setpoint) knots, linearly interpolated and
/// held constant outside the knot range.
class Trajectory {
 public:
  explicit Trajectory(std::vector<std::pair<double, double>> knots);

  double at(double t) const;
  double t_end() const { return knots_.back().first; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

 private:
  std::vector<std::pair<double, double>> knots_;
};

/// Two-column CSV (time, setpoint). An optional non-numeric header line and
/// `#` comments are skipped.
Trajectory parse_trajectory_csv(std::string_view text);
Trajectory load_trajectory(const std::filesystem::path& path);

struct StepDisturbance {
  double t_step = 0.0;
  double magnitude = 0.0;  // degC added to the plant output
};

struct SimConfig {
  double duration = 0.0;
  double Ts = 30.0;
  double noise_variance = 0.0;  // degC^2, measurement noise
  std::optional<StepDisturbance> disturbance;
  std::uint64_t seed = 0;
  /// Multiplies every plant model gain; 1 means the controller model is exact.
  double plant_mismatch = 1.0;
  /// Temperature at zero model output. Plant and controller both work in
  /// deviations from it.
  double ambient = 0.0;
  /// |e| band used for settle time after the disturbance.
  double settle_band = 0.05;

  void validate() const;
  std::size_t steps() const;
};

struct TraceRecord {
  double t = 0.0;
  double y_sp = 0.0;
  double y_d = 0.0;
  double y_p = 0.0;     // measured (noisy) output
  double y_true = 0.0;  // plant output including disturbance, before noise
  double y_m = 0.0;
  double d = 0.0;
  double u = 0.0;
  double du = 0.0;
  double J = 0.0;
  std::size_t active_model = 0;
  std::size_t ga_generations = 0;
  bool flagged = false;
};

struct GaStatsRow {
  std::size_t step = 0;
  ga::GenerationStats stats;
};

struct SimTrace {
  std::vector<TraceRecord> records;
  std::vector<GaStatsRow> ga_stats;
};

/// Column header shared by write_trace_csv and read_trace_csv.
inline constexpr std::string_view kTraceHeader =
    "t,y_sp,y_d,y_p,y_true,y_m,d,u,du,J,active_model,ga_generations,flagged";

std::string trace_csv(const SimTrace& trace);
SimTrace read_trace_csv(std::string_view text);
/// `stride` keeps every stride-th generation plus the last one of each step.
std::string ga_stats_csv(const SimTrace& trace, std::size_t stride = 1);

/// Zero-mean normal draw; exactly zero (and no draw) when variance is 0.
double gaussian_noise(ga::Rng& rng, double variance);

/// Magnitude from t_step on (inclusive), zero before or without a spec.
double step_disturbance(double t, const std::optional<StepDisturbance>& spec);

using StepObserver = std::function<void(std::size_t step, const StepResult& result)>;

/**
 * Closed loop over duration/Ts samples.
 *
 * Each sample: plant output from the scheduled plant bank plus disturbance,
 * measurement noise added; model output from the noiseless controller bank;
 * control_step produces u; both banks advance with the applied u.
 * `keep_ga_stats` retains per-generation GA history in the trace.
 */
SimTrace run_closed_loop(const ModelBank& bank, const DmcConfig& dmc, const OptimizerSpec& optimizer,
                         const Trajectory& trajectory, const SimConfig& sim, bool keep_ga_stats = false,
                         const StepObserver& observer = {});

struct Metrics {
  double avg_abs_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t constraint_violations = 0;
  std::optional<double> settle_time_after_disturbance;
  std::size_t steps = 0;
  std::size_t flagged_steps = 0;
};

/// Tracking error is y_d - y_true per record.
Metrics compute_metrics(const SimTrace& trace, double u_min, double u_max,
                        const std::optional<StepDisturbance>& disturbance = std::nullopt,
                        double settle_band = 0.05);

struct StudyPoint {
  std::size_t pop_size = 0;
  std::size_t generations = 0;
};

struct StudyRow {
  StudyPoint point;
  Metrics metrics;
  double seconds = 0.0;
};

/// One fixed-seed closed-loop GA run per grid point, rows in grid order.
/// Up to `workers` runs execute concurrently; 0 uses every hardware thread.
std::vector<StudyRow> convergence_study(const ModelBank& bank, std::span<const StudyPoint> grid,
                                        const DmcConfig& dmc, const ga::GaConfig& base_ga,
                                        const Trajectory& trajectory, const SimConfig& sim,
                                        std::size_t workers = 1);

struct ComparisonRow {
  std::size_t step = 0;
  double J_ga = 0.0;
  double J_star = 0.0;
  double relative_excess = 0.0;
  bool comparable = false;  // closed-form plan is feasible and inside the decode range
};

struct OptimizerComparison {
  std::vector<ComparisonRow> rows;
  std::size_t compared = 0;
  std::size_t excluded = 0;
  double median_excess = 0.0;
  double mean_excess = 0.0;
  double max_excess = 0.0;
};

/// (J - J*) / max(J*, floor)
double relative_excess(double J, double J_star, double floor = 1e-9);

/// True when the closed-form plan lies inside the decode range and needs no
/// repair against the actuator bounds.
bool closed_form_admissible(const Eigen::VectorXd& du_star, double u_prev, const DmcConfig& dmc,
                            const ga::GaConfig& ga);

/// Runs the GA closed loop and scores every step against the closed form
/// solved on the same prediction context.
OptimizerComparison compare_optimizers(const ModelBank& bank, const DmcConfig& dmc, const ga::GaConfig& ga,
                                       const Trajectory& trajectory, const SimConfig& sim);

}  // namespace trackmpc
