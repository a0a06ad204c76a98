#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "trackmpc/bank_generator.hpp"
#include "trackmpc/dmc.hpp"
#include "trackmpc/simulation.hpp"

namespace trackmpc::cli {

/// Invalid configuration; `field` is the dotted JSON path at fault.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error("field '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ControllerSections {
  DmcConfig dmc;
  OptimizerSpec optimizer;
  std::size_t ga_stats_stride = 10;
};

struct RunConfig {
  std::filesystem::path config_path;
  ModelBank bank;
  ControllerSections controller;
  SimConfig sim;
  std::filesystem::path trajectory_path;
  Trajectory trajectory;
  std::filesystem::path output_dir;  // empty when unset
};

nlohmann::json read_json_file(const std::filesystem::path& path, const std::string& field);

kinetics::KineticsParams parse_kinetics(const nlohmann::json& j, const std::string& field);

/// `fallback_kinetics` is used when the drift block has no kinetics of its own.
BankGeneratorSpec parse_generator_spec(const nlohmann::json& j, const std::string& field,
                                       const nlohmann::json* fallback_kinetics = nullptr);

/// The `dmc`, `optimizer` and `ga` sections, with Ts taken from `sim.Ts`
/// when present.
ControllerSections parse_controller(const nlohmann::json& root);

SimConfig parse_sim(const nlohmann::json& j, const std::string& field);

/// Loads and cross-checks a full run configuration. Relative paths resolve
/// against the config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

PredictionContext parse_context(const nlohmann::json& j);
nlohmann::json context_to_json(const PredictionContext& ctx);

}  // namespace trackmpc::cli
