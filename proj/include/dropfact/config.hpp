#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dropfact/core.hpp"
#include "dropfact/experiments.hpp"
#include "dropfact/trainers.hpp"

namespace dropfact {

/// Invalid configuration document. what() names the line of the offending key
/// when it can be located in the source text.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses a JSON document, unwrapping a run manifest's embedded "config".
nlohmann::json load_config_document(std::string_view text);

/// Applies the study fields of `text` on top of `base` and validates.
/// Recognized keys: m, n, true_d, factor_std, noise_std, seed, theta_grid,
/// theta_bar, d_grid, iterations, step0, step_tau, scale, rank_tol,
/// burn_in_fraction, width_matched_data.
StudyConfig parse_study_config(std::string_view text, const StudyConfig& base);

/// Inputs of a single training run.
struct TrainConfig {
  SynthSpec data;
  std::optional<std::filesystem::path> data_path;
  std::size_t d = 8;
  DropoutConfig dropout;
  /// Regularization weight for deterministic mode; derived from the rate
  /// policy when absent.
  std::optional<double> lambda;

  void validate() const;
  /// Weight used by the deterministic trainer.
  double effective_lambda() const;
};

/// Keys: m, n, true_d, factor_std, noise_std, seed, data_path, d, theta |
/// theta_bar, iterations, step0, step_tau, lambda.
TrainConfig parse_train_config(std::string_view text);

enum class TrainMode { stochastic, deterministic };

/// "stochastic" or "deterministic"; throws ConfigError otherwise.
TrainMode parse_train_mode(std::string_view text);
std::string_view train_mode_name(TrainMode mode);

struct TrainRun {
  DenseMatrix x;
  TrainTrace trace;
  /// Retain probability (stochastic) or regularization weight (deterministic).
  double rate_parameter;
  /// Seed of the trainer stream, derived from the config seed so that data
  /// generation and factor initialization never share draws.
  std::uint64_t trainer_seed;
};

/// Loads or generates X and runs the requested trainer.
TrainRun run_train(const TrainConfig& config, TrainMode mode);

std::optional<Scale> scale_from_document(std::string_view text);
Scale parse_scale(std::string_view text);
std::string_view scale_name(Scale scale);

nlohmann::json to_json(const StudyConfig& config);
nlohmann::json to_json(const TrainConfig& config);

}  // namespace dropfact
