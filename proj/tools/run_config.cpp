#include "run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

namespace trackmpc::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// Typed access to one JSON object with unknown-key rejection.
class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : j_.items())
      if (!keys.count(item.key())) throw ConfigError(join(path_, item.key()), "unknown key");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const std::string& key) const {
    if (!has(key)) throw ConfigError(field(key), "missing required value");
    return j_.at(key);
  }
  std::string field(const std::string& key) const { return join(path_, key); }

  template <typename T>
  T get(const std::string& key) const {
    try {
      return at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), std::string("wrong type: ") + e.what());
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

 private:
  const json& j_;
  std::string path_;
};

std::vector<double> number_list(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(field, "expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Eigen::MatrixXd weight_matrix(const json& j, std::size_t n, const std::string& field) {
  const auto dim = static_cast<Eigen::Index>(n);
  if (j.is_number()) return j.get<double>() * Eigen::MatrixXd::Identity(dim, dim);
  if (!j.is_array() || j.size() != n) throw ConfigError(field, "expected a scalar, a diagonal of length " +
                                                                    std::to_string(n) + ", or an n x n matrix");
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(dim, dim);
  if (j.front().is_number()) {
    const auto diag = number_list(j, field);
    for (std::size_t i = 0; i < n; ++i) W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag[i];
    return W;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = number_list(j[i], field);
    if (row.size() != n) throw ConfigError(field, "matrix rows must have length " + std::to_string(n));
    for (std::size_t k = 0; k < n; ++k) W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
  }
  return W;
}

kinetics::ArrheniusPair parse_arrhenius(const json& j, const std::string& field) {
  Section s(j, field, {"prefactor", "activation_energy"});
  return {s.get<double>("prefactor"), s.get<double>("activation_energy")};
}

std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

}  // namespace

json read_json_file(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, "invalid JSON in " + path.string() + ": " + e.what());
  }
}

kinetics::KineticsParams parse_kinetics(const json& j, const std::string& field) {
  Section s(j, field,
            {"rho_p", "rho_m", "M0", "f_s", "A_gel", "B_gel", "theta_p", "theta_t", "arrhenius_p", "arrhenius_t"});
  kinetics::KineticsParams k;
  k.rho_p = s.get<double>("rho_p", k.rho_p);
  k.rho_m = s.get<double>("rho_m", k.rho_m);
  k.M0 = s.get<double>("M0", k.M0);
  k.f_s = s.get<double>("f_s", k.f_s);
  k.A_gel = s.get<double>("A_gel");
  k.B_gel = s.get<double>("B_gel");
  k.theta_p = s.get<double>("theta_p", k.theta_p);
  k.theta_t = s.get<double>("theta_t");
  if (s.has("arrhenius_p")) k.arrhenius_p = parse_arrhenius(s.at("arrhenius_p"), s.field("arrhenius_p"));
  k.arrhenius_t = parse_arrhenius(s.at("arrhenius_t"), s.field("arrhenius_t"));
  try {
    k.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
  return k;
}

BankGeneratorSpec parse_generator_spec(const json& j, const std::string& field, const json* fallback_kinetics) {
  Section s(j, field, {"count", "interval", "Ts", "base", "drift", "integrator_entries", "jitter", "seed", "kinetics"});
  BankGeneratorSpec spec;
  spec.count = s.get<std::size_t>("count");
  spec.interval = s.get<double>("interval", spec.interval);
  spec.Ts = s.get<double>("Ts", spec.Ts);
  {
    Section base(s.at("base"), s.field("base"), {"num", "den"});
    spec.base.num = number_list(base.at("num"), base.field("num"));
    spec.base.den = number_list(base.at("den"), base.field("den"));
    try {
      spec.base.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(s.field("base"), e.what());
    }
  }
  if (s.has("drift")) {
    Section d(s.at("drift"), s.field("drift"),
              {"law", "phi_p", "lambda_0", "temperature", "gain_strength", "pole_strength", "kinetics"});
    const auto law_name = d.get<std::string>("law", "gel_effect");
    if (law_name != "gel_effect") throw ConfigError(d.field("law"), "only 'gel_effect' is supported");
    GelDriftLaw law;
    if (d.has("phi_p")) {
      const auto range = number_list(d.at("phi_p"), d.field("phi_p"));
      if (range.size() != 2) throw ConfigError(d.field("phi_p"), "expected [start, end]");
      law.phi_p_start = range[0];
      law.phi_p_end = range[1];
    }
    law.lambda_0 = d.get<double>("lambda_0", law.lambda_0);
    law.temperature = d.get<double>("temperature", law.temperature);
    law.gain_strength = d.get<double>("gain_strength", law.gain_strength);
    law.pole_strength = d.get<double>("pole_strength", law.pole_strength);
    if (d.has("kinetics"))
      law.kinetics = parse_kinetics(d.at("kinetics"), d.field("kinetics"));
    else if (s.has("kinetics"))
      law.kinetics = parse_kinetics(s.at("kinetics"), s.field("kinetics"));
    else if (fallback_kinetics)
      law.kinetics = parse_kinetics(*fallback_kinetics, "kinetics");
    else
      throw ConfigError(d.field("kinetics"), "gel_effect drift needs a kinetics section");
    spec.drift = law;
  }
  if (s.has("integrator_entries")) {
    const auto r = number_list(s.at("integrator_entries"), s.field("integrator_entries"));
    if (r.size() != 2 || r[0] < 0 || r[1] < r[0])
      throw ConfigError(s.field("integrator_entries"), "expected [first, last] entry indices");
    spec.integrator_entries = {static_cast<std::size_t>(r[0]), static_cast<std::size_t>(r[1])};
  }
  spec.jitter = s.get<double>("jitter", spec.jitter);
  spec.seed = s.get<std::uint64_t>("seed", spec.seed);
  return spec;
}

ControllerSections parse_controller(const json& root) {
  ControllerSections out;
  auto& dmc = out.dmc;
  if (root.contains("sim") && root["sim"].is_object() && root["sim"].contains("Ts"))
    dmc.Ts = root["sim"]["Ts"].get<double>();

  if (root.contains("dmc")) {
    Section s(root.at("dmc"), "dmc", {"P", "M", "N1", "Q", "R", "alpha", "u_min", "u_max", "programmed"});
    dmc.P = s.get<std::size_t>("P", dmc.P);
    dmc.M = s.get<std::size_t>("M", dmc.M);
    dmc.N1 = s.get<std::size_t>("N1", dmc.N1);
    if (dmc.P < 1) throw ConfigError("dmc.P", "must be >= 1");
    if (dmc.M < 1 || dmc.M > dmc.P) throw ConfigError("dmc.M", "must satisfy 1 <= M <= P");
    dmc.Q = s.has("Q") ? weight_matrix(s.at("Q"), dmc.P, "dmc.Q")
                       : Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dmc.P), static_cast<Eigen::Index>(dmc.P));
    dmc.R = s.has("R") ? weight_matrix(s.at("R"), dmc.M, "dmc.R")
                       : 0.05 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dmc.M),
                                                          static_cast<Eigen::Index>(dmc.M));
    dmc.alpha = s.get<double>("alpha", dmc.alpha);
    dmc.u_min = s.get<double>("u_min", dmc.u_min);
    dmc.u_max = s.get<double>("u_max", dmc.u_max);
    dmc.programmed = s.get<bool>("programmed", dmc.programmed);
  }
  try {
    dmc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("dmc", e.what());
  }

  const auto kind = root.value("optimizer", std::string("ga"));
  if (kind == "ga")
    out.optimizer.kind = OptimizerKind::genetic;
  else if (kind == "closed_form")
    out.optimizer.kind = OptimizerKind::closed_form;
  else
    throw ConfigError("optimizer", "expected 'ga' or 'closed_form'");

  auto& ga = out.optimizer.ga;
  if (root.contains("ga")) {
    Section s(root.at("ga"), "ga",
              {"pop_size", "generations", "p_mutation", "bits_per_gene", "delta_u_range", "seed", "threads",
               "stagnation_generations", "warm_start", "coding", "stats_stride"});
    ga.pop_size = s.get<std::size_t>("pop_size", ga.pop_size);
    ga.generations = s.get<std::size_t>("generations", ga.generations);
    ga.p_mutation = s.get<double>("p_mutation", ga.p_mutation);
    ga.bits_per_gene = s.get<std::size_t>("bits_per_gene", ga.bits_per_gene);
    if (s.has("delta_u_range")) {
      const auto r = number_list(s.at("delta_u_range"), "ga.delta_u_range");
      if (r.size() != 2) throw ConfigError("ga.delta_u_range", "expected [lo, hi]");
      ga.du_lo = r[0];
      ga.du_hi = r[1];
    }
    ga.seed = s.get<std::uint64_t>("seed", ga.seed);
    ga.threads = s.get<std::size_t>("threads", ga.threads);
    ga.stagnation_generations = s.get<std::size_t>("stagnation_generations", ga.stagnation_generations);
    ga.warm_start = s.get<bool>("warm_start", ga.warm_start);
    const auto coding = s.get<std::string>("coding", "gray");
    if (coding == "gray")
      ga.coding = ga::GeneCoding::gray;
    else if (coding == "binary")
      ga.coding = ga::GeneCoding::binary;
    else
      throw ConfigError("ga.coding", "expected 'gray' or 'binary'");
    out.ga_stats_stride = s.get<std::size_t>("stats_stride", out.ga_stats_stride);
  }
  ga.u_min = dmc.u_min;
  ga.u_max = dmc.u_max;
  try {
    ga.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("ga", e.what());
  }
  return out;
}

SimConfig parse_sim(const json& j, const std::string& field) {
  Section s(j, field,
            {"duration", "Ts", "noise_variance", "disturbance", "seed", "plant_mismatch", "ambient", "settle_band"});
  SimConfig sim;
  sim.duration = s.get<double>("duration");
  sim.Ts = s.get<double>("Ts", sim.Ts);
  sim.noise_variance = s.get<double>("noise_variance", sim.noise_variance);
  if (s.has("disturbance")) {
    Section d(s.at("disturbance"), s.field("disturbance"), {"t_step", "magnitude"});
    sim.disturbance = StepDisturbance{d.get<double>("t_step"), d.get<double>("magnitude")};
  }
  sim.seed = s.get<std::uint64_t>("seed", sim.seed);
  sim.plant_mismatch = s.get<double>("plant_mismatch", sim.plant_mismatch);
  sim.ambient = s.get<double>("ambient", sim.ambient);
  sim.settle_band = s.get<double>("settle_band", sim.settle_band);
  try {
    sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
  return sim;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const json root = read_json_file(path, "config");
  Section top(root, "",
              {"bank", "kinetics", "dmc", "optimizer", "ga", "sim", "trajectory", "output_dir", "description"});
  const auto base_dir = path.parent_path();

  const SimConfig sim = parse_sim(top.at("sim"), "sim");
  ControllerSections controller = parse_controller(root);

  Section bank_sec(top.at("bank"), "bank", {"path", "synth"});
  if (bank_sec.has("path") == bank_sec.has("synth")) throw ConfigError("bank", "give exactly one of 'path' or 'synth'");
  const json* kinetics = top.has("kinetics") ? &top.at("kinetics") : nullptr;

  auto build_bank = [&]() -> ModelBank {
    if (bank_sec.has("path")) {
      const auto p = resolve(base_dir, bank_sec.get<std::string>("path"));
      if (!std::filesystem::exists(p)) throw ConfigError("bank.path", "file not found: " + p.string());
      try {
        return load_bank(p);
      } catch (const std::exception& e) {
        throw ConfigError("bank.path", e.what());
      }
    }
    const json& synth = bank_sec.at("synth");
    BankGeneratorSpec spec;
    if (synth.is_string()) {
      const auto p = resolve(base_dir, synth.get<std::string>());
      if (!std::filesystem::exists(p)) throw ConfigError("bank.synth", "file not found: " + p.string());
      spec = parse_generator_spec(read_json_file(p, "bank.synth"), "bank.synth", kinetics);
    } else {
      spec = parse_generator_spec(synth, "bank.synth", kinetics);
    }
    try {
      return synth_bank(spec);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("bank.synth", e.what());
    }
  };
  ModelBank bank = build_bank();
  if (std::abs(bank.Ts() - sim.Ts) > 1e-9 * sim.Ts)
    throw ConfigError("sim.Ts", "bank sampling period " + std::to_string(bank.Ts()) + " differs from sim.Ts");

  const auto traj_path = resolve(base_dir, top.get<std::string>("trajectory"));
  if (!std::filesystem::exists(traj_path)) throw ConfigError("trajectory", "file not found: " + traj_path.string());
  std::optional<Trajectory> trajectory;
  try {
    trajectory = load_trajectory(traj_path);
  } catch (const std::exception& e) {
    throw ConfigError("trajectory", e.what());
  }

  std::filesystem::path out_dir;
  if (top.has("output_dir")) out_dir = resolve(base_dir, top.get<std::string>("output_dir"));

  return RunConfig{path, std::move(bank), std::move(controller), sim, traj_path, std::move(*trajectory), out_dir};
}

PredictionContext parse_context(const json& j) {
  Section s(j, "context", {"G_plus", "Y_past", "D", "Y_D", "u_prev"});
  PredictionContext ctx;
  const json& g = s.at("G_plus");
  if (!g.is_array() || g.empty()) throw ConfigError("context.G_plus", "expected a P x M array");
  const auto rows = g.size();
  const auto cols = number_list(g.front(), "context.G_plus").size();
  ctx.G_plus.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = number_list(g[i], "context.G_plus");
    if (row.size() != cols) throw ConfigError("context.G_plus", "ragged rows");
    for (std::size_t k = 0; k < cols; ++k) ctx.G_plus(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
  }
  auto vec = [&](const char* key) {
    const auto v = number_list(s.at(key), s.field(key));
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  ctx.Y_past = vec("Y_past");
  ctx.D = vec("D");
  ctx.Y_D = vec("Y_D");
  ctx.u_prev = s.get<double>("u_prev");
  try {
    ctx.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("context", e.what());
  }
  return ctx;
}

json context_to_json(const PredictionContext& ctx) {
  json g = json::array();
  for (Eigen::Index i = 0; i < ctx.G_plus.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < ctx.G_plus.cols(); ++k) row.push_back(ctx.G_plus(i, k));
    g.push_back(row);
  }
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"G_plus", g}, {"Y_past", vec(ctx.Y_past)}, {"D", vec(ctx.D)}, {"Y_D", vec(ctx.Y_D)}, {"u_prev", ctx.u_prev}};
}

}  // namespace trackmpc::cli
