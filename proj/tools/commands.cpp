#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "run_config.hpp"
#include "trackmpc/errors.hpp"

namespace trackmpc::cli {

using nlohmann::json;

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json metrics_json(const Metrics& m) {
  json j = {{"avg_abs_error", m.avg_abs_error},
            {"max_abs_error", m.max_abs_error},
            {"constraint_violations", m.constraint_violations},
            {"steps", m.steps},
            {"flagged_steps", m.flagged_steps}};
  j["settle_time_after_disturbance"] =
      m.settle_time_after_disturbance ? json(*m.settle_time_after_disturbance) : json(nullptr);
  return j;
}

std::filesystem::path pick_output_dir(const std::filesystem::path& flag, const std::filesystem::path& configured) {
  const auto dir = flag.empty() ? configured : flag;
  if (dir.empty()) throw ConfigError("output_dir", "no output directory configured; pass --out");
  return dir;
}

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> cfg;
  std::filesystem::path out_dir;
  try {
    cfg.emplace(load_run_config(opts.config));
    auto& ga = cfg->controller.optimizer.ga;
    if (opts.seed) {
      cfg->sim.seed = *opts.seed;
      ga.seed = *opts.seed;
    }
    if (opts.closed_form) cfg->controller.optimizer.kind = OptimizerKind::closed_form;
    if (opts.pop_size) ga.pop_size = *opts.pop_size;
    if (opts.generations) ga.generations = *opts.generations;
    try {
      ga.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("ga", e.what());
    }
    out_dir = pick_output_dir(opts.out, cfg->output_dir);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    std::filesystem::create_directories(out_dir);
    const auto& ctrl = cfg->controller;
    StepObserver observer;
    if (opts.dump_context_step) {
      observer = [&](std::size_t step, const StepResult& res) {
        if (step == *opts.dump_context_step)
          write_file(out_dir / ("context_" + std::to_string(step) + ".json"), context_to_json(res.context).dump(2));
      };
    }
    const auto start = std::chrono::steady_clock::now();
    const SimTrace trace =
        run_closed_loop(cfg->bank, ctrl.dmc, ctrl.optimizer, cfg->trajectory, cfg->sim, true, observer);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    const Metrics m = compute_metrics(trace, ctrl.dmc.u_min, ctrl.dmc.u_max, cfg->sim.disturbance, cfg->sim.settle_band);

    write_file(out_dir / "trace.csv", trace_csv(trace));
    write_file(out_dir / "ga_stats.csv", ga_stats_csv(trace, ctrl.ga_stats_stride));
    json metrics = metrics_json(m);
    metrics["optimizer"] = ctrl.optimizer.kind == OptimizerKind::genetic ? "ga" : "closed_form";
    metrics["runtime_seconds"] = elapsed.count();
    write_file(out_dir / "metrics.json", metrics.dump(2) + "\n");

    out << "steps " << m.steps << ", avg |e| " << m.avg_abs_error << " degC, max |e| " << m.max_abs_error
        << " degC, violations " << m.constraint_violations << ", flagged " << m.flagged_steps << '\n';
    out << "wrote " << (out_dir / "trace.csv").string() << ", metrics.json, ga_stats.csv\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int cmd_bank_gen(const std::filesystem::path& spec_path, const std::filesystem::path& out_path, std::ostream& out,
                 std::ostream& err) {
  std::optional<ModelBank> bank;
  try {
    const auto spec = parse_generator_spec(read_json_file(spec_path, "spec"), "spec");
    bank.emplace(synth_bank(spec));
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    save_bank(*bank, out_path);
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
  out << "wrote " << bank->size() << " entries to " << out_path.string() << '\n';
  return kOk;
}

int cmd_step_response(const std::filesystem::path& bank_path, long long entry, long long n, std::ostream& out,
                      std::ostream& err) {
  try {
    if (n < 1) throw ConfigError("n", "must be >= 1");
    const ModelBank bank = load_bank(bank_path);
    if (entry < 0 || static_cast<std::size_t>(entry) >= bank.size())
      throw ConfigError("entry", "index " + std::to_string(entry) + " outside [0, " + std::to_string(bank.size()) + ")");
    const auto g = step_response(bank.discrete(static_cast<std::size_t>(entry)), static_cast<std::size_t>(n));
    out << "k,t,g\n";
    for (std::size_t k = 0; k < g.size(); ++k)
      out << (k + 1) << ',' << fmt17(static_cast<double>(k + 1) * bank.Ts()) << ',' << fmt17(g[k]) << '\n';
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

int cmd_optimize_once(const std::filesystem::path& config, const std::filesystem::path& context_path,
                      std::ostream& out, std::ostream& err) {
  ControllerSections ctrl;
  PredictionContext ctx;
  try {
    ctrl = parse_controller(read_json_file(config, "config"));
    ctx = parse_context(read_json_file(context_path, "context"));
    if (static_cast<std::size_t>(ctx.G_plus.rows()) != ctrl.dmc.P ||
        static_cast<std::size_t>(ctx.G_plus.cols()) != ctrl.dmc.M)
      throw ConfigError("context.G_plus", "dimensions do not match dmc.P x dmc.M");
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    const auto& dmc = ctrl.dmc;
    const QuadraticCost qc(ctx, dmc.Q, dmc.R);
    const auto res =
        ga::evolve([&qc](std::span<const double> du) { return qc(du); }, dmc.M, ctx.u_prev, ctrl.optimizer.ga);
    json report;
    report["ga"] = {{"du_plus", res.du_plus}, {"J", res.J}, {"generations", res.generations_run}};
    try {
      const auto star = unconstrained_solution(ctx.G_plus, dmc.Q, dmc.R, ctx.tracking_error());
      const double J_star = cost(star.du_plus, ctx, dmc.Q, dmc.R);
      const bool applicable = closed_form_admissible(star.du_plus, ctx.u_prev, dmc, ctrl.optimizer.ga);
      report["closed_form"] = {{"du_plus", as_vector(star.du_plus)}, {"J", J_star}, {"rcond", star.rcond}};
      report["oracle_applicable"] = applicable;
      report["relative_excess"] = applicable ? json(relative_excess(res.J, J_star)) : json(nullptr);
    } catch (const std::domain_error& e) {
      report["closed_form"] = nullptr;
      report["oracle_applicable"] = false;
      report["relative_excess"] = nullptr;
      report["note"] = e.what();
    }
    out << report.dump(2) << '\n';
    return kOk;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int cmd_study(const std::filesystem::path& config, const std::filesystem::path& grid_path,
              const std::filesystem::path& out_flag, std::size_t workers, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> cfg;
  std::vector<StudyPoint> grid;
  std::filesystem::path out_dir;
  try {
    cfg.emplace(load_run_config(config));
    const json g = read_json_file(grid_path, "grid");
    if (g.contains("points")) {
      for (const auto& p : g.at("points")) {
        if (!p.is_array() || p.size() != 2) throw ConfigError("grid.points", "expected [pop_size, generations] pairs");
        grid.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
      }
    } else {
      if (!g.contains("pop_sizes") || !g.contains("generations"))
        throw ConfigError("grid", "expected 'pop_sizes' and 'generations' arrays, or 'points'");
      for (const auto& pop : g.at("pop_sizes"))
        for (const auto& gen : g.at("generations")) grid.push_back({pop.get<std::size_t>(), gen.get<std::size_t>()});
    }
    if (grid.empty()) throw ConfigError("grid", "no grid points");
    for (const auto& p : grid) {
      ga::GaConfig check = cfg->controller.optimizer.ga;
      check.pop_size = p.pop_size;
      check.generations = p.generations;
      try {
        check.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("grid", e.what());
      }
    }
    out_dir = pick_output_dir(out_flag, cfg->output_dir);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    std::filesystem::create_directories(out_dir);
    const auto& ctrl = cfg->controller;
    const auto rows =
        convergence_study(cfg->bank, grid, ctrl.dmc, ctrl.optimizer.ga, cfg->trajectory, cfg->sim, workers);
    std::string csv = "pop_size,generations,avg_abs_error,max_abs_error,constraint_violations,seconds\n";
    json report = json::array();
    out << std::setw(8) << "pop" << std::setw(8) << "gen" << std::setw(16) << "avg |e|" << std::setw(16) << "max |e|"
        << std::setw(10) << "seconds" << '\n';
    for (const auto& r : rows) {
      csv += std::to_string(r.point.pop_size) + ',' + std::to_string(r.point.generations) + ',' +
             fmt17(r.metrics.avg_abs_error) + ',' + fmt17(r.metrics.max_abs_error) + ',' +
             std::to_string(r.metrics.constraint_violations) + ',' + fmt17(r.seconds) + '\n';
      json row = metrics_json(r.metrics);
      row["pop_size"] = r.point.pop_size;
      row["generations"] = r.point.generations;
      row["seconds"] = r.seconds;
      report.push_back(row);
      out << std::setw(8) << r.point.pop_size << std::setw(8) << r.point.generations << std::setw(16)
          << r.metrics.avg_abs_error << std::setw(16) << r.metrics.max_abs_error << std::setw(10) << std::fixed
          << std::setprecision(2) << r.seconds << std::defaultfloat << std::setprecision(6) << '\n';
    }
    write_file(out_dir / "study.csv", csv);
    write_file(out_dir / "study.json", report.dump(2) + "\n");
    return kOk;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int cmd_compare(const std::filesystem::path& config, const std::filesystem::path& out_flag, std::ostream& out,
                std::ostream& err) {
  std::optional<RunConfig> cfg;
  std::filesystem::path out_dir;
  try {
    cfg.emplace(load_run_config(config));
    out_dir = pick_output_dir(out_flag, cfg->output_dir);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    std::filesystem::create_directories(out_dir);
    const auto& ctrl = cfg->controller;
    const auto rep = compare_optimizers(cfg->bank, ctrl.dmc, ctrl.optimizer.ga, cfg->trajectory, cfg->sim);
    std::string csv = "step,J_ga,J_star,relative_excess,comparable\n";
    for (const auto& r : rep.rows)
      csv += std::to_string(r.step) + ',' + fmt17(r.J_ga) + ',' + fmt17(r.J_star) + ',' + fmt17(r.relative_excess) +
             ',' + (r.comparable ? "1" : "0") + '\n';
    write_file(out_dir / "comparison.csv", csv);
    const json summary = {{"compared", rep.compared},         {"excluded", rep.excluded},
                          {"median_excess", rep.median_excess}, {"mean_excess", rep.mean_excess},
                          {"max_excess", rep.max_excess}};
    write_file(out_dir / "comparison.json", summary.dump(2) + "\n");
    out << summary.dump(2) << '\n';
    return kOk;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trajectory-tracking DMC with a genetic-algorithm optimizer", "trackmpc"};
  app.require_subcommand(1);

  SimulateOptions sim_opts;
  std::uint64_t seed = 0;
  std::size_t pop_size = 0;
  std::size_t generations = 0;
  std::size_t dump_step = 0;
  auto* simulate = app.add_subcommand("simulate", "Run a closed-loop simulation");
  simulate->add_option("--config", sim_opts.config, "Run configuration (JSON)")->required();
  simulate->add_option("--out", sim_opts.out, "Output directory (overrides output_dir)");
  auto* seed_opt = simulate->add_option("--seed", seed, "Seed for noise and GA");
  simulate->add_flag("--closed-form", sim_opts.closed_form, "Use the unconstrained closed-form optimizer");
  auto* pop_opt = simulate->add_option("--pop-size", pop_size, "Override ga.pop_size");
  auto* gen_opt = simulate->add_option("--generations", generations, "Override ga.generations");
  auto* dump_opt = simulate->add_option("--dump-context", dump_step, "Write the prediction context of this step");

  std::filesystem::path spec_path, bank_out;
  auto* bank_gen = app.add_subcommand("bank-gen", "Generate a synthetic model bank");
  bank_gen->add_option("--spec", spec_path, "Generator spec (JSON)")->required();
  bank_gen->add_option("--out", bank_out, "Bank file to write")->required();

  std::filesystem::path bank_path;
  long long entry = 0;
  long long n = 0;
  auto* step = app.add_subcommand("step-response", "Print step-response samples of one bank entry");
  step->add_option("--bank", bank_path, "Bank file")->required();
  step->add_option("--entry", entry, "Entry index (0-based)")->required();
  step->add_option("--n", n, "Number of samples")->required();

  std::filesystem::path once_config, context_path;
  auto* once = app.add_subcommand("optimize-once", "Solve one prediction context with the GA and the closed form");
  once->add_option("--config", once_config, "Run configuration (JSON)")->required();
  once->add_option("--context", context_path, "Prediction context (JSON)")->required();

  std::filesystem::path study_config, grid_path, study_out;
  auto* study = app.add_subcommand("study", "Population size / generation count grid study");
  study->add_option("--config", study_config, "Run configuration (JSON)")->required();
  study->add_option("--grid", grid_path, "Grid definition (JSON)")->required();
  study->add_option("--out", study_out, "Output directory (overrides output_dir)");
  std::size_t study_jobs = 0;
  study->add_option("--jobs", study_jobs, "Concurrent runs (0 = all hardware threads)");

  std::filesystem::path cmp_config, cmp_out;
  auto* compare = app.add_subcommand("compare", "Score GA steps against the closed-form optimum");
  compare->add_option("--config", cmp_config, "Run configuration (JSON)")->required();
  compare->add_option("--out", cmp_out, "Output directory (overrides output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  if (*simulate) {
    if (*seed_opt) sim_opts.seed = seed;
    if (*pop_opt) sim_opts.pop_size = pop_size;
    if (*gen_opt) sim_opts.generations = generations;
    if (*dump_opt) sim_opts.dump_context_step = dump_step;
    return cmd_simulate(sim_opts, out, err);
  }
  if (*bank_gen) return cmd_bank_gen(spec_path, bank_out, out, err);
  if (*step) return cmd_step_response(bank_path, entry, n, out, err);
  if (*once) return cmd_optimize_once(once_config, context_path, out, err);
  if (*study) return cmd_study(study_config, grid_path, study_out, study_jobs, out, err);
  if (*compare) return cmd_compare(cmp_config, cmp_out, out, err);
  return kConfigError;
}

}  // namespace trackmpc::cli
