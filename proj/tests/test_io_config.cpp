#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "dropfact/config.hpp"
#include "dropfact/io.hpp"

using namespace dropfact;

TEST_CASE("matrix csv round trip") {
  const DenseMatrix m(2, 3, {1.5, -2, 1e-300, 0.1, 3, 1.0 / 3});
  std::ostringstream out;
  write_matrix_csv(out, m);
  CHECK(parse_matrix_csv(out.str()) == m);
  CHECK(parse_matrix_csv("1,2\n\n3,4\n") == DenseMatrix(2, 2, {1, 2, 3, 4}));
  CHECK(parse_matrix_csv(" 1 , 2\r\n3,4") == DenseMatrix(2, 2, {1, 2, 3, 4}));
}

TEST_CASE("matrix csv errors carry positions") {
  auto position = [](const char* text) {
    try {
      parse_matrix_csv(text);
    } catch (const ParseError& e) {
      return std::make_pair(e.line(), e.column());
    }
    return std::make_pair<std::size_t, std::size_t>(0, 0);
  };
  CHECK(position("1,2\n3,x\n") == std::make_pair<std::size_t, std::size_t>(2, 2));
  CHECK(position("1,2\n3\n").first == 2);
  CHECK(position("nan,1\n") == std::make_pair<std::size_t, std::size_t>(1, 1));
  CHECK(position("1,,2\n") == std::make_pair<std::size_t, std::size_t>(1, 2));
  CHECK(position("").first == 1);
}

TEST_CASE("atomic writes") {
  const auto dir = std::filesystem::temp_directory_path() / "dropfact_io_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "a.txt", "hello");
  CHECK(read_file(dir / "a.txt") == "hello");
  CHECK_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
  CHECK_THROWS_AS(read_file(dir / "missing.txt"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("train config parsing") {
  const auto c = parse_train_config(R"({"m": 10, "n": 12, "true_d": 2, "d": 4,
    "theta": 0.25, "seed": 5, "iterations": 30})");
  CHECK(c.data.m == 10);
  CHECK(c.d == 4);
  CHECK(std::get<FixedRate>(c.dropout.rate_policy).theta == 0.25);
  CHECK(c.dropout.iterations == 30);
  CHECK(c.effective_lambda() == doctest::Approx(3.0));
  const auto a = parse_train_config(R"({"theta_bar": 0.9, "d": 3, "true_d": 2})");
  CHECK(a.effective_lambda() == doctest::Approx(3 * (0.1 / 0.9)));
  // to_json round trip
  CHECK(to_json(parse_train_config(to_json(c).dump())) == to_json(c));
}

TEST_CASE("train config errors name the line") {
  auto message = [](const char* text) {
    try {
      parse_train_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("{\n\"theta\": 1\n}") == "line 2: theta: value 1 is outside the valid range (0,1)");
  CHECK(message("{\n\"theta\": 0.5,\n\"bogus\": 1\n}").rfind("line 3: unknown key 'bogus'", 0) == 0);
  CHECK(message("{\n\"theta\": 0.5,\n\"d\": -1\n}").rfind("line 3: d:", 0) == 0);
  CHECK(message("{\"d\": 3}").find("theta") != std::string::npos);
  CHECK(message("{\n\"theta\": 0.5,\n\"theta_bar\": 0.5\n}").rfind("line 3", 0) == 0);
  CHECK(message("{\n\"theta\": 0.5,\n\"m\": 3, \"n\": 3, \"true_d\": 4\n}").rfind("line 3", 0) == 0);
  CHECK(message("{\n\"theta\": 0.5,\n").rfind("line ", 0) == 0);
  CHECK(message("[1,2]").find("object") != std::string::npos);
}

TEST_CASE("study config parsing") {
  const auto base = spectrum_preset(Scale::desk);
  const auto c = parse_study_config(R"({"d_grid": [3, 6], "theta_bar": 0.8, "iterations": 10})", base);
  CHECK(c.d_grid == std::vector<std::size_t>{3, 6});
  CHECK(c.theta_bar == 0.8);
  CHECK(c.data.m == base.data.m);
  CHECK_THROWS_AS(parse_study_config(R"({"theta_grid": [0.5, 1.0]})", base), ConfigError);
  CHECK_THROWS_AS(parse_study_config(R"({"d_grid": []})", base), ConfigError);
  CHECK_THROWS_AS(parse_study_config(R"({"scale": "huge"})", base), ConfigError);
  CHECK(scale_from_document(R"({"scale": "paper"})") == Scale::paper);
  CHECK_FALSE(scale_from_document("{}").has_value());
  const auto eq = parse_study_config(R"({"true_d": 3})", equivalence_preset(Scale::desk));
  CHECK_FALSE(eq.width_matched_data);
  CHECK(to_json(parse_study_config(to_json(c).dump(), base)) == to_json(c));
}

TEST_CASE("manifests unwrap to their config") {
  const auto c = parse_train_config(R"({"command": "train", "args": {},
    "config": {"theta": 0.4, "d": 2, "true_d": 2}})");
  CHECK(std::get<FixedRate>(c.dropout.rate_policy).theta == 0.4);
}

TEST_CASE("run_train separates data and trainer streams") {
  TrainConfig c = parse_train_config(R"({"m": 6, "n": 6, "true_d": 2, "d": 3, "theta": 0.5,
    "seed": 1, "iterations": 5})");
  const auto run = run_train(c, TrainMode::stochastic);
  CHECK(run.trainer_seed != c.dropout.seed);
  CHECK(run.rate_parameter == 0.5);
  CHECK(run.trace.records.size() == 5);
  const auto det = run_train(c, TrainMode::deterministic);
  CHECK(det.rate_parameter == doctest::Approx(1.0));
  CHECK(parse_train_mode("deterministic") == TrainMode::deterministic);
  CHECK_THROWS_AS(parse_train_mode("other"), ConfigError);
}
