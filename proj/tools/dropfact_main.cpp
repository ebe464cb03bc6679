// dropfact command-line front end.
//
// Exit codes: 0 success, 1 verification or numerical failure,
// 2 usage, configuration or input error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dropfact/checks.hpp"
#include "dropfact/config.hpp"
#include "dropfact/errors.hpp"
#include "dropfact/experiments.hpp"
#include "dropfact/io.hpp"
#include "dropfact/kernels.hpp"
#include "dropfact/solvers.hpp"
#include "dropfact/trainers.hpp"

#ifndef DROPFACT_VERSION
#define DROPFACT_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dropfact;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Collects outputs of one command and writes its manifest last.
class RunRecorder {
 public:
  RunRecorder(std::string command, fs::path out_dir)
      : command_(std::move(command)), out_(std::move(out_dir)),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_);
  }

  const fs::path& dir() const { return out_; }

  void write(const std::string& name, const std::string& contents) {
    write_file_atomic(out_ / name, contents);
    outputs_.push_back(name);
  }

  void finish(json args, json config, json seeds, json extra = json::object()) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                            .count();
    json m;
    m["command"] = command_;
    m["args"] = std::move(args);
    m["config"] = std::move(config);
    m["version"] = DROPFACT_VERSION;
    m["kernel_isa"] = std::string(kernels::name(kernels::active_isa()));
    m["seeds"] = std::move(seeds);
    m["outputs"] = outputs_;
    m["timings"] = {{"wall_seconds", wall}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_file_atomic(out_ / "manifest.json", m.dump(2) + "\n");
    std::cout << "wrote " << outputs_.size() << " file(s) and manifest.json to " << out_.string()
              << "\n";
  }

 private:
  std::string command_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
};

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

// ---- check ----------------------------------------------------------------

int cmd_check(std::uint64_t seed, std::optional<double> fault) {
  CheckOptions opt;
  opt.seed = seed;
  if (fault) opt.omega_fault = *fault;
  std::cout << "kernels: " << kernels::name(kernels::active_isa()) << "\n";
  bool all = true;
  for (const auto& r : run_checks(opt)) {
    all = all && r.passed;
    char line[256];
    std::snprintf(line, sizeof line, "%s  %-32s max_error=%.3e  tol=%.1e  ",
                  r.passed ? "PASS" : "FAIL", r.name.c_str(), r.max_error, r.tolerance);
    std::cout << line << r.detail << "\n";
  }
  std::cout << (all ? "all suites passed" : "verification FAILED") << "\n";
  return all ? kExitOk : kExitFailure;
}

// ---- train ----------------------------------------------------------------

int run_train_command(const std::string& config_text, const fs::path& config_dir, TrainMode mode,
                      const fs::path& out, std::optional<std::uint64_t> seed,
                      std::optional<double> lambda) {
  TrainConfig config = parse_train_config(config_text);
  // Data paths are relative to the config file; the manifest records them absolute.
  if (config.data_path && config.data_path->is_relative()) {
    config.data_path = fs::absolute(config_dir / *config.data_path).lexically_normal();
  }
  if (seed) config.data.seed = config.dropout.seed = *seed;
  if (lambda) {
    if (!(*lambda >= 0.0)) throw ParameterError("--lambda must be nonnegative");
    config.lambda = *lambda;
  }
  config.validate();

  RunRecorder rec("train", out);
  const TrainRun run = run_train(config, mode);
  rec.write("trace.csv", render([&](std::ostream& o) { write_trace_csv(o, run.trace); }));
  rec.write("u.csv", render([&](std::ostream& o) { write_matrix_csv(o, run.trace.final_factors.u()); }));
  rec.write("v.csv", render([&](std::ostream& o) { write_matrix_csv(o, run.trace.final_factors.v()); }));

  const auto& last = run.trace.records.back();
  std::cout << train_mode_name(mode) << " run: " << run.trace.records.size()
            << " iterations, final deterministic objective "
            << format_double(last.deterministic_obj) << "\n";
  json seeds = {{"config_seed", config.dropout.seed}, {"trainer_seed", run.trainer_seed}};
  json args = {{"mode", std::string(train_mode_name(mode))}};
  if (mode == TrainMode::stochastic) {
    args["theta"] = run.rate_parameter;
  } else {
    args["lambda"] = run.rate_parameter;
  }
  rec.finish(args, to_json(config), seeds);
  return kExitOk;
}

// ---- experiment -----------------------------------------------------------

StudyConfig resolve_study(const std::string& name, const std::optional<std::string>& config_text,
                          std::optional<Scale> scale_flag, std::optional<std::uint64_t> seed) {
  std::optional<Scale> scale = scale_flag;
  if (!scale && config_text) scale = scale_from_document(*config_text);
  const Scale s = scale.value_or(Scale::desk);
  StudyConfig base = name == "fig1" ? equivalence_preset(s) : spectrum_preset(s);
  StudyConfig config = config_text ? parse_study_config(*config_text, base) : base;
  config.scale = s;
  if (seed) config.data.seed = *seed;
  config.validate();
  return config;
}

int run_fig1(const StudyConfig& config, RunRecorder& rec) {
  const auto cells = run_equivalence_study(config);
  for (const auto& cell : cells) {
    rec.write(trace_file_stem(cell.theta, cell.d, "stochastic") + ".csv",
              render([&](std::ostream& o) { write_trace_csv(o, cell.stochastic); }));
    rec.write(trace_file_stem(cell.theta, cell.d, "deterministic") + ".csv",
              render([&](std::ostream& o) { write_trace_csv(o, cell.deterministic); }));
    char line[200];
    std::snprintf(line, sizeof line,
                  "theta=%g d=%zu  EMA deviation after burn-in: max %.4f, mean %.4f, "
                  "window-mean %.4f\n",
                  cell.theta, cell.d, cell.tracking.max_rel_dev, cell.tracking.mean_rel_dev,
                  cell.tracking.window_mean_rel_dev);
    std::cout << line;
  }
  rec.write("summary.csv",
            render([&](std::ostream& o) { write_equivalence_summary_csv(o, cells); }));
  return kExitOk;
}

int run_fig2(const StudyConfig& config, RunRecorder& rec) {
  const auto study = run_spectrum_study(config);
  rec.write("spectra.csv", render([&](std::ostream& o) { write_spectra_csv(o, study); }));
  rec.write("summary.csv",
            render([&](std::ostream& o) { write_spectrum_summary_csv(o, study); }));
  for (const auto& r : study.reports) {
    std::cout << r.method << " d=" << r.d << "  numerical rank " << r.numerical_rank;
    if (r.rel_frob_dist_to_closed_form) {
      std::cout << "  rel. distance to closed form "
                << format_double(*r.rel_frob_dist_to_closed_form);
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int run_experiment_command(const std::string& name, const std::optional<std::string>& config_text,
                           std::optional<Scale> scale, const fs::path& out,
                           std::optional<std::uint64_t> seed) {
  if (name != "fig1" && name != "fig2") {
    std::cerr << "error: unknown experiment '" << name << "' (expected fig1 or fig2)\n";
    return kExitUsage;
  }
  const StudyConfig config = resolve_study(name, config_text, scale, seed);
  RunRecorder rec("experiment", out);
  const int code = name == "fig1" ? run_fig1(config, rec) : run_fig2(config, rec);
  rec.finish({{"name", name}, {"scale", std::string(scale_name(config.scale))}},
             to_json(config), {{"master_seed", config.data.seed}});
  return code;
}

// ---- solve ----------------------------------------------------------------

int run_solve_command(const std::string& input_text, const std::string& input_label,
                      double lambda, const fs::path& out) {
  if (!(lambda > 0.0)) {
    throw ParameterError("--lambda must be positive, got " + format_double(lambda));
  }
  const DenseMatrix x = parse_matrix_csv(input_text);
  RunRecorder rec("solve", out);
  const DenseMatrix y = nuclear_squared_solve(x, lambda);
  const auto in_s = svd(x).singulars;
  const auto out_s = svd(y).singulars;
  rec.write("solution.csv", render([&](std::ostream& o) { write_matrix_csv(o, y); }));
  rec.write("spectrum.csv", render([&](std::ostream& o) {
              o << "index,input_sigma,solution_sigma\n";
              for (std::size_t i = 0; i < in_s.size(); ++i) {
                o << i << ',' << format_double(in_s[i]) << ',' << format_double(out_s[i]) << '\n';
              }
            }));
  std::cout << "objective " << format_double(objective_nuclear_squared(x, y, lambda)) << "\n";
  rec.finish({{"lambda", lambda}, {"input", input_label}}, json::object(), json::object(),
             {{"input_csv", input_text}});
  return kExitOk;
}

// ---- rerun ----------------------------------------------------------------

int run_rerun_command(const fs::path& manifest_path, const fs::path& out) {
  json m;
  try {
    m = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what(), 0);
  }
  if (!m.is_object() || !m.contains("command") || !m.contains("args")) {
    throw ConfigError("not a run manifest (missing 'command' or 'args')", 0);
  }
  if (m.contains("kernel_isa")) {
    const auto isa = kernels::parse_isa(m["kernel_isa"].get<std::string>());
    if (!kernels::supported(isa)) {
      throw ParameterError("manifest was produced with kernels '" +
                           m["kernel_isa"].get<std::string>() +
                           "', which this CPU does not support");
    }
    kernels::select(isa);
  }
  const std::string command = m["command"].get<std::string>();
  const json& args = m["args"];
  try {
    if (command == "train") {
      return run_train_command(m.at("config").dump(), manifest_path.parent_path(),
                               parse_train_mode(args.at("mode").get<std::string>()), out,
                               std::nullopt, std::nullopt);
    }
    if (command == "experiment") {
      return run_experiment_command(args.at("name").get<std::string>(), m.at("config").dump(),
                                    parse_scale(args.at("scale").get<std::string>()), out,
                                    std::nullopt);
    }
    if (command == "solve") {
      return run_solve_command(m.at("input_csv").get<std::string>(),
                               args.at("input").get<std::string>(),
                               args.at("lambda").get<double>(), out);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what(), 0);
  }
  throw ConfigError("manifest command '" + command + "' cannot be rerun", 0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dropout for matrix factorization: trainers, solvers and studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DROPFACT_VERSION);

  // check
  auto* check = app.add_subcommand("check", "Run the built-in verification suites");
  std::uint64_t check_seed = CheckOptions{}.seed;
  std::optional<double> fault;
  check->add_option("--seed", check_seed, "Seed for the randomized suites");
  check->add_option("--inject-omega-fault", fault,
                    "Perturb Omega by this relative amount (negative control, e.g. 1e-3)");

  // train
  auto* train = app.add_subcommand("train", "Train a factorization from a JSON config");
  std::string train_config;
  std::string mode_text = "stochastic";
  fs::path train_out;
  std::optional<std::uint64_t> train_seed;
  std::optional<double> train_lambda;
  train->add_option("--config", train_config, "Config JSON (or a run manifest)")->required();
  train->add_option("--mode", mode_text, "stochastic|deterministic")
      ->check(CLI::IsMember({"stochastic", "deterministic"}));
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--seed", train_seed, "Override the config seed");
  train->add_option("--lambda", train_lambda, "Regularization weight (deterministic mode)");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run the fig1 (equivalence) or fig2 (spectrum) study");
  std::string exp_name;
  std::optional<std::string> exp_config;
  std::optional<std::string> scale_text;
  fs::path exp_out;
  std::optional<std::uint64_t> exp_seed;
  exp->add_option("name", exp_name, "fig1 or fig2")->required();
  exp->add_option("--config", exp_config, "Study config JSON overriding the preset");
  exp->add_option("--scale", scale_text, "desk|paper (default: config's scale, else desk)")
      ->check(CLI::IsMember({"desk", "paper"}));
  exp->add_option("--out", exp_out, "Output directory")->required();
  exp->add_option("--seed", exp_seed, "Override the master seed");

  // solve
  auto* solve = app.add_subcommand("solve", "Closed-form squared-nuclear-norm solution");
  fs::path solve_input;
  double solve_lambda = 0.0;
  fs::path solve_out;
  solve->add_option("--input", solve_input, "Matrix CSV")->required();
  solve->add_option("--lambda", solve_lambda, "Regularization weight (> 0)")->required();
  solve->add_option("--out", solve_out, "Output directory")->required();

  // rerun
  auto* rerun = app.add_subcommand("rerun", "Reproduce a run from its manifest.json");
  fs::path manifest_path;
  fs::path rerun_out;
  rerun->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
  rerun->add_option("--out", rerun_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (check->parsed()) return cmd_check(check_seed, fault);
    if (train->parsed()) {
      return run_train_command(read_file(train_config), fs::path(train_config).parent_path(),
                               parse_train_mode(mode_text), train_out, train_seed, train_lambda);
    }
    if (exp->parsed()) {
      std::optional<std::string> text;
      if (exp_config) text = read_file(*exp_config);
      std::optional<Scale> scale;
      if (scale_text) scale = parse_scale(*scale_text);
      return run_experiment_command(exp_name, text, scale, exp_out, exp_seed);
    }
    if (solve->parsed()) {
      return run_solve_command(read_file(solve_input), solve_input.string(), solve_lambda,
                               solve_out);
    }
    if (rerun->parsed()) return run_rerun_command(manifest_path, rerun_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::length_error& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
