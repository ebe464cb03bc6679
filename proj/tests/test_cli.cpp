// Drives the dropfact executable end to end.
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "dropfact/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string output;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "dropfact_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Result run(const std::string& args) {
  const std::string cmd = std::string(DROPFACT_CLI) + " " + args + " 2>&1";
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

void write(const fs::path& p, const std::string& s) { dropfact::write_file_atomic(p, s); }

std::string slurp(const fs::path& p) { return dropfact::read_file(p); }

}  // namespace

TEST_CASE("check: passes, reports suites, fails under the injected fault") {
  const auto ok = run("check");
  CHECK(ok.code == 0);
  std::size_t suites = 0;
  for (std::size_t pos = 0; (pos = ok.output.find("PASS", pos)) != std::string::npos; ++pos) ++suites;
  CHECK(suites >= 4);
  const auto bad = run("check --inject-omega-fault 1e-3");
  CHECK(bad.code == 1);
  CHECK(bad.output.find("FAIL") != std::string::npos);
}

TEST_CASE("train: rows, determinism, manifest rerun") {
  const auto dir = scratch("train");
  write(dir / "cfg.json", R"({"m": 12, "n": 10, "true_d": 3, "d": 4, "theta": 0.5,
  "seed": 2, "iterations": 250})");
  const auto a = run("train --config " + (dir / "cfg.json").string() + " --out " + (dir / "a").string());
  REQUIRE(a.code == 0);
  const std::string trace = slurp(dir / "a/trace.csv");
  std::size_t lines = 0;
  for (char c : trace) lines += c == '\n';
  CHECK(lines == 251);
  CHECK(run("train --config " + (dir / "cfg.json").string() + " --out " + (dir / "b").string()).code == 0);
  CHECK(slurp(dir / "b/trace.csv") == trace);
  CHECK(run("rerun --manifest " + (dir / "a/manifest.json").string() + " --out " + (dir / "c").string()).code == 0);
  CHECK(slurp(dir / "c/trace.csv") == trace);
  CHECK(slurp(dir / "c/u.csv") == slurp(dir / "a/u.csv"));
  // A manifest is also accepted as a config.
  CHECK(run("train --config " + (dir / "a/manifest.json").string() + " --out " + (dir / "d").string()).code == 0);
  CHECK(slurp(dir / "d/trace.csv") == trace);

  const auto manifest = nlohmann::json::parse(slurp(dir / "a/manifest.json"));
  CHECK(manifest["command"] == "train");
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("seeds"));
  CHECK(manifest.contains("timings"));
  CHECK(manifest["outputs"].size() == 3);

  const auto det = run("train --mode deterministic --lambda 0.5 --config " + (dir / "cfg.json").string() +
                       " --out " + (dir / "e").string());
  CHECK(det.code == 0);
  CHECK(slurp(dir / "e/trace.csv").find("\n0,,") != std::string::npos);
  const auto seeded = run("train --seed 99 --config " + (dir / "cfg.json").string() + " --out " + (dir / "f").string());
  CHECK(seeded.code == 0);
  CHECK(slurp(dir / "f/trace.csv") != trace);
}

TEST_CASE("train: data file path relative to the config") {
  const auto dir = scratch("train_data");
  write(dir / "x.csv", "1,2,0\n0,1,3\n2,0,1\n1,1,1\n");
  write(dir / "cfg.json", R"({"data_path": "x.csv", "d": 2, "theta_bar": 0.8, "iterations": 20})");
  const auto r = run("train --config " + (dir / "cfg.json").string() + " --out " + (dir / "o").string());
  CHECK(r.code == 0);
  CHECK(slurp(dir / "o/u.csv").find('\n') != std::string::npos);
}

TEST_CASE("train: invalid configs exit 2 with a line-precise message") {
  const auto dir = scratch("train_bad");
  write(dir / "theta.json", "{\n  \"m\": 10,\n  \"theta\": 1\n}\n");
  const auto r = run("train --config " + (dir / "theta.json").string() + " --out " + (dir / "o").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("line 3") != std::string::npos);
  CHECK(r.output.find("(0,1)") != std::string::npos);
  write(dir / "broken.json", "{\n  \"theta\": 0.5,\n  \"d\": \n}\n");
  const auto b = run("train --config " + (dir / "broken.json").string() + " --out " + (dir / "o").string());
  CHECK(b.code == 2);
  CHECK(b.output.find("line ") != std::string::npos);
  CHECK(run("train --config " + (dir / "missing.json").string() + " --out " + (dir / "o").string()).code == 2);
  CHECK(run("train --out x").code == 2);
  CHECK(run("").code == 2);
}

TEST_CASE("experiment: schemas, unknown names, rerun") {
  const auto dir = scratch("experiment");
  write(dir / "fig1.json", R"({"theta_grid": [0.5], "d_grid": [3], "iterations": 200})");
  const auto f1 = run("experiment fig1 --config " + (dir / "fig1.json").string() + " --out " + (dir / "f1").string());
  REQUIRE(f1.code == 0);
  CHECK(fs::exists(dir / "f1/trace_theta0.5_d3_stochastic.csv"));
  CHECK(fs::exists(dir / "f1/trace_theta0.5_d3_deterministic.csv"));
  CHECK(slurp(dir / "f1/summary.csv").rfind("theta,d,", 0) == 0);

  write(dir / "fig2.json", R"({"m": 12, "n": 12, "true_d": 2, "d_grid": [4], "iterations": 300})");
  const auto f2 = run("experiment fig2 --config " + (dir / "fig2.json").string() + " --out " + (dir / "f2").string());
  REQUIRE(f2.code == 0);
  CHECK(slurp(dir / "f2/spectra.csv").rfind("method,d,index,sigma\n", 0) == 0);
  CHECK(slurp(dir / "f2/summary.csv").rfind("method,d,numerical_rank,rel_frob_dist_to_closed_form\n", 0) == 0);
  CHECK(run("rerun --manifest " + (dir / "f2/manifest.json").string() + " --out " + (dir / "f2b").string()).code == 0);
  CHECK(slurp(dir / "f2b/spectra.csv") == slurp(dir / "f2/spectra.csv"));
  CHECK(slurp(dir / "f2b/summary.csv") == slurp(dir / "f2/summary.csv"));

  CHECK(run("experiment fig9 --out " + (dir / "x").string()).code == 2);
  CHECK(run("experiment fig1 --scale galactic --out " + (dir / "x").string()).code == 2);
  const auto m = nlohmann::json::parse(slurp(dir / "f2/manifest.json"));
  CHECK(m["args"]["scale"] == "desk");
  CHECK(m["config"]["d_grid"] == nlohmann::json::array({4}));
}

TEST_CASE("solve: closed form, tiny lambda, errors") {
  const auto dir = scratch("solve");
  write(dir / "diag.csv", "3,0,0\n0,2,0\n0,0,1\n");
  const auto r = run("solve --input " + (dir / "diag.csv").string() + " --lambda 1 --out " + (dir / "o").string());
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "o/solution.csv") == "1.3333333333333335,0,0\n0,0.3333333333333335,0\n0,0,0\n");
  CHECK(slurp(dir / "o/spectrum.csv").rfind("index,input_sigma,solution_sigma\n", 0) == 0);
  CHECK(run("rerun --manifest " + (dir / "o/manifest.json").string() + " --out " + (dir / "p").string()).code == 0);
  CHECK(slurp(dir / "p/solution.csv") == slurp(dir / "o/solution.csv"));

  write(dir / "x.csv", "1.5,2\n-3,4\n");
  CHECK(run("solve --input " + (dir / "x.csv").string() + " --lambda 1e-9 --out " + (dir / "t").string()).code == 0);
  const auto y = dropfact::parse_matrix_csv(slurp(dir / "t/solution.csv"));
  const auto x = dropfact::parse_matrix_csv(slurp(dir / "x.csv"));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y.data()[i] - x.data()[i]) <= 1e-6 * 5.4);

  CHECK(run("solve --input " + (dir / "x.csv").string() + " --lambda 0 --out " + (dir / "z").string()).code == 2);
  CHECK(run("solve --input " + (dir / "x.csv").string() + " --lambda -1 --out " + (dir / "z").string()).code == 2);
  write(dir / "bad.csv", "1,2\n3,oops\n");
  const auto bad = run("solve --input " + (dir / "bad.csv").string() + " --lambda 1 --out " + (dir / "z").string());
  CHECK(bad.code == 2);
  CHECK(bad.output.find("row 2, column 2") != std::string::npos);
}

TEST_CASE("rerun rejects non-manifests") {
  const auto dir = scratch("rerun");
  write(dir / "m.json", R"({"theta": 0.5})");
  CHECK(run("rerun --manifest " + (dir / "m.json").string() + " --out " + (dir / "o").string()).code == 2);
  write(dir / "n.json", "not json");
  CHECK(run("rerun --manifest " + (dir / "n.json").string() + " --out " + (dir / "o").string()).code == 2);
}
