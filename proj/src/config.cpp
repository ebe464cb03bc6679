#include "dropfact/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dropfact/io.hpp"

namespace dropfact {
namespace {

using nlohmann::json;

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

// 1-based line of the first occurrence of "key" in the source, 0 if absent.
std::size_t line_of_key(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const auto pos = text.find(quoted);
  return pos == std::string_view::npos ? 0 : line_of_offset(text, pos);
}

class Reader {
 public:
  Reader(std::string_view text, const json& doc) : text_(text), doc_(doc) {
    if (!doc_.is_object()) throw ConfigError("configuration must be a JSON object", 1);
  }

  bool has(const char* key) const { return doc_.contains(key); }

  [[noreturn]] void fail(const char* key, const std::string& message) const {
    throw ConfigError(std::string(key) + ": " + message, line_of_key(text_, key));
  }

  double real(const char* key) const {
    const auto& v = doc_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double out = v.get<double>();
    if (!std::isfinite(out)) fail(key, "expected a finite number");
    return out;
  }

  double positive(const char* key) const {
    const double v = real(key);
    if (!(v > 0.0)) fail(key, "must be positive, got " + std::to_string(v));
    return v;
  }

  double nonnegative(const char* key) const {
    const double v = real(key);
    if (!(v >= 0.0)) fail(key, "must be nonnegative, got " + std::to_string(v));
    return v;
  }

  double open_unit(const char* key) const { return open_unit_value(key, real(key)); }

  double open_unit_value(const char* key, double v) const {
    if (!(v > 0.0 && v < 1.0)) {
      fail(key, "value " + format(v) + " is outside the valid range (0,1)");
    }
    return v;
  }

  std::uint64_t count(const char* key) const {
    const auto& v = doc_.at(key);
    if (!v.is_number_integer()) fail(key, "expected a nonnegative integer");
    if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
      fail(key, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::size_t positive_count(const char* key) const {
    const auto c = count(key);
    if (c == 0) fail(key, "must be at least 1");
    return static_cast<std::size_t>(c);
  }

  std::string string(const char* key) const {
    const auto& v = doc_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key) const {
    const auto& v = doc_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  const json& array(const char* key) const {
    const auto& v = doc_.at(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a nonempty array");
    return v;
  }

  void reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [key, value] : doc_.items()) {
      if (!known.count(key)) {
        throw ConfigError("unknown key '" + key + "'", line_of_key(text_, key));
      }
    }
  }

  static std::string format(double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

 private:
  std::string_view text_;
  const json& doc_;
};

void read_synth(const Reader& r, SynthSpec& data) {
  if (r.has("m")) data.m = r.positive_count("m");
  if (r.has("n")) data.n = r.positive_count("n");
  if (r.has("true_d")) data.true_d = r.positive_count("true_d");
  if (r.has("factor_std")) data.factor_std = r.positive("factor_std");
  if (r.has("noise_std")) data.noise_std = r.nonnegative("noise_std");
  if (r.has("seed")) data.seed = r.count("seed");
}

template <class Fn>
void revalidate(std::string_view text, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    // Cross-field failures: point at the most likely key.
    const std::string what = e.what();
    std::size_t line = 0;
    for (const char* key : {"true_d", "theta_bar", "theta_grid", "theta", "d_grid", "m", "n"}) {
      if (what.find(key) != std::string::npos && (line = line_of_key(text, key)) != 0) break;
    }
    throw ConfigError(what, line);
  }
}

}  // namespace

json load_config_document(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(),
                      line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  if (doc.is_object() && doc.contains("config") && doc.contains("command") &&
      doc["config"].is_object()) {
    return doc["config"];
  }
  return doc;
}

Scale parse_scale(std::string_view text) {
  if (text == "desk") return Scale::desk;
  if (text == "paper") return Scale::paper;
  throw ConfigError("scale must be \"desk\" or \"paper\", got \"" + std::string(text) + "\"", 0);
}

std::string_view scale_name(Scale scale) { return scale == Scale::desk ? "desk" : "paper"; }

std::optional<Scale> scale_from_document(std::string_view text) {
  const json doc = load_config_document(text);
  if (!doc.is_object() || !doc.contains("scale")) return std::nullopt;
  const Reader r(text, doc);
  try {
    return parse_scale(r.string("scale"));
  } catch (const ConfigError& e) {
    r.fail("scale", e.what());
  }
}

StudyConfig parse_study_config(std::string_view text, const StudyConfig& base) {
  const json doc = load_config_document(text);
  const Reader r(text, doc);
  r.reject_unknown({"m", "n", "true_d", "factor_std", "noise_std", "seed", "theta_grid",
                    "theta_bar", "d_grid", "iterations", "step0", "step_tau", "scale",
                    "rank_tol", "burn_in_fraction", "width_matched_data"});
  StudyConfig c = base;
  read_synth(r, c.data);
  if (r.has("true_d")) c.width_matched_data = false;
  if (r.has("width_matched_data")) c.width_matched_data = r.boolean("width_matched_data");
  if (r.has("theta_grid")) {
    c.theta_grid.clear();
    for (const auto& v : r.array("theta_grid")) {
      if (!v.is_number()) r.fail("theta_grid", "entries must be numbers");
      c.theta_grid.push_back(r.open_unit_value("theta_grid", v.get<double>()));
    }
  }
  if (r.has("theta_bar")) c.theta_bar = r.open_unit("theta_bar");
  if (r.has("d_grid")) {
    c.d_grid.clear();
    for (const auto& v : r.array("d_grid")) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        r.fail("d_grid", "entries must be positive integers");
      }
      c.d_grid.push_back(v.get<std::size_t>());
    }
  }
  if (r.has("iterations")) c.iterations = r.positive_count("iterations");
  if (r.has("step0")) c.step0 = r.positive("step0");
  if (r.has("step_tau")) c.step_tau = r.positive("step_tau");
  if (r.has("scale")) {
    try {
      c.scale = parse_scale(r.string("scale"));
    } catch (const ConfigError& e) {
      r.fail("scale", e.what());
    }
  }
  if (r.has("rank_tol")) c.rank_tol = r.open_unit("rank_tol");
  if (r.has("burn_in_fraction")) c.burn_in_fraction = r.nonnegative("burn_in_fraction");
  revalidate(text, [&] { c.validate(); });
  return c;
}

void TrainConfig::validate() const {
  if (!data_path) data.validate();
  if (d == 0) throw ParameterError("d must be at least 1");
  dropout.validate();
  if (lambda && !(*lambda >= 0.0)) throw ParameterError("lambda must be nonnegative");
}

double TrainConfig::effective_lambda() const {
  if (lambda) return *lambda;
  if (const auto* fixed = std::get_if<FixedRate>(&dropout.rate_policy)) {
    return dropout_weight(fixed->theta);
  }
  return lambda_d(d, std::get<AdaptiveRate>(dropout.rate_policy).theta_bar);
}

TrainConfig parse_train_config(std::string_view text) {
  const json doc = load_config_document(text);
  const Reader r(text, doc);
  r.reject_unknown({"m", "n", "true_d", "factor_std", "noise_std", "seed", "data_path", "d",
                    "theta", "theta_bar", "iterations", "step0", "step_tau", "lambda"});
  TrainConfig c;
  read_synth(r, c.data);
  c.dropout.seed = c.data.seed;
  if (r.has("data_path")) c.data_path = r.string("data_path");
  if (r.has("d")) c.d = r.positive_count("d");
  if (r.has("theta") && r.has("theta_bar")) r.fail("theta_bar", "give either theta or theta_bar");
  if (r.has("theta")) {
    c.dropout.rate_policy = FixedRate{r.open_unit("theta")};
  } else if (r.has("theta_bar")) {
    c.dropout.rate_policy = AdaptiveRate{r.open_unit("theta_bar")};
  } else {
    throw ConfigError("one of 'theta' (fixed rate) or 'theta_bar' (adaptive rate) is required",
                      1);
  }
  if (r.has("iterations")) c.dropout.iterations = r.positive_count("iterations");
  if (r.has("step0")) c.dropout.step0 = r.positive("step0");
  if (r.has("step_tau")) c.dropout.step_tau = r.positive("step_tau");
  if (r.has("lambda")) c.lambda = r.nonnegative("lambda");
  revalidate(text, [&] { c.validate(); });
  return c;
}

TrainMode parse_train_mode(std::string_view text) {
  if (text == "stochastic") return TrainMode::stochastic;
  if (text == "deterministic") return TrainMode::deterministic;
  throw ConfigError("mode must be \"stochastic\" or \"deterministic\", got \"" +
                        std::string(text) + "\"",
                    0);
}

std::string_view train_mode_name(TrainMode mode) {
  return mode == TrainMode::stochastic ? "stochastic" : "deterministic";
}

TrainRun run_train(const TrainConfig& config, TrainMode mode) {
  config.validate();
  DenseMatrix x = config.data_path ? read_matrix_csv(*config.data_path)
                                   : gen_synthetic(config.data).x;
  DropoutConfig trainer = config.dropout;
  trainer.seed = splitmix64(config.dropout.seed ^ 0x747261696e000000ULL);
  if (mode == TrainMode::stochastic) {
    const double theta = trainer.retain_prob(config.d);
    TrainTrace trace = train_stochastic(x, config.d, trainer);
    return {std::move(x), std::move(trace), theta, trainer.seed};
  }
  const double lambda = config.effective_lambda();
  TrainTrace trace = train_deterministic(x, config.d, lambda, trainer);
  return {std::move(x), std::move(trace), lambda, trainer.seed};
}

nlohmann::json to_json(const StudyConfig& c) {
  json j;
  j["m"] = c.data.m;
  j["n"] = c.data.n;
  j["true_d"] = c.data.true_d;
  j["factor_std"] = c.data.factor_std;
  j["noise_std"] = c.data.noise_std;
  j["seed"] = c.data.seed;
  j["width_matched_data"] = c.width_matched_data;
  if (!c.theta_grid.empty()) j["theta_grid"] = c.theta_grid;
  j["theta_bar"] = c.theta_bar;
  if (!c.d_grid.empty()) j["d_grid"] = c.d_grid;
  j["iterations"] = c.iterations;
  if (c.step0) j["step0"] = *c.step0;
  j["step_tau"] = c.step_tau;
  j["scale"] = std::string(scale_name(c.scale));
  j["rank_tol"] = c.rank_tol;
  j["burn_in_fraction"] = c.burn_in_fraction;
  return j;
}

nlohmann::json to_json(const TrainConfig& c) {
  json j;
  j["m"] = c.data.m;
  j["n"] = c.data.n;
  j["true_d"] = c.data.true_d;
  j["factor_std"] = c.data.factor_std;
  j["noise_std"] = c.data.noise_std;
  j["seed"] = c.dropout.seed;
  if (c.data_path) j["data_path"] = c.data_path->string();
  j["d"] = c.d;
  if (const auto* fixed = std::get_if<FixedRate>(&c.dropout.rate_policy)) {
    j["theta"] = fixed->theta;
  } else {
    j["theta_bar"] = std::get<AdaptiveRate>(c.dropout.rate_policy).theta_bar;
  }
  j["iterations"] = c.dropout.iterations;
  if (c.dropout.step0) j["step0"] = *c.dropout.step0;
  j["step_tau"] = c.dropout.step_tau;
  if (c.lambda) j["lambda"] = *c.lambda;
  return j;
}

}  // namespace dropfact
