#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlgd/cli.hpp"

namespace fs = std::filesystem;

namespace {

double value_of(const std::string& text, const std::string& key) {
  const auto at = text.find(key + " = ");
  REQUIRE(at != std::string::npos);
  return std::stod(text.substr(at + key.size() + 3));
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = nlgd::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("nlgd_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string write(const std::string& file, const std::string& text) const {
    std::ofstream(dir / file) << text;
    return (dir / file).string();
  }
  std::string path(const std::string& file) const { return (dir / file).string(); }
};

const char* kQuadratic = R"({"seed": 1,
  "problem": {"family": "quadratic", "m": 2, "n": 1, "demand": [1],
              "agents": [{"a": 1, "c": [0]}, {"a": 1, "c": [0]}]},
  "network": {"type": "path"},
  "initial": {"point": [1, 0]},
  "run": {"algorithm": "LGD", "step_size": 0.1, "max_iters": 200, "record_every": 10}})";

const char* kSmartGrid = R"({"seed": 4,
  "problem": {"family": "smart_grid", "m": 2, "n": 1, "demand": [0],
              "agents": [{"a": 1, "b": 2}, {"a": 1, "b": 2}]},
  "network": {"type": "path"},
  "initial": {"point": [0, 0]},
  "run": {"algorithm": "NLGD", "step_size": 0.01, "noise_std": 0.05, "max_iters": 500, "record_every": 50}})";

}  // namespace

TEST_CASE("run writes a trace and a report") {
  Workspace ws("run");
  const auto cfg = ws.write("c.json", kSmartGrid);
  const auto r = invoke({"run", "--config", cfg, "--out", ws.path("out")});
  CHECK(r.code == 0);
  CHECK(fs::exists(ws.path("out/trace.csv")));
  CHECK(fs::exists(ws.path("out/manifest.json")));
  CHECK(r.out.find("classification = ") != std::string::npos);

  // Identical inputs give identical files.
  CHECK(invoke({"run", "--config", cfg, "--out", ws.path("again")}).code == 0);
  std::ifstream a(ws.path("out/trace.csv")), b(ws.path("again/trace.csv"));
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("run input errors") {
  Workspace ws("run_errors");
  std::string missing = kQuadratic;
  missing.replace(missing.find("\"step_size\": 0.1, "), 18, "");
  const auto r = invoke({"run", "--config", ws.write("m.json", missing), "--out", ws.path("o")});
  CHECK(r.code == 2);
  CHECK(r.err.find("step_size") != std::string::npos);

  std::string infeasible = kQuadratic;
  infeasible.replace(infeasible.find("[1, 0]"), 6, "[1, 1]");
  const auto inf = invoke({"run", "--config", ws.write("i.json", infeasible), "--out", ws.path("o")});
  CHECK(inf.code == 3);
  CHECK(inf.err.find("feasib") != std::string::npos);

  std::string diverging = kQuadratic;
  diverging.replace(diverging.find("0.1"), 3, "5.0");
  diverging.replace(diverging.find("200"), 3, "5000");
  CHECK(invoke({"run", "--config", ws.write("d.json", diverging), "--out", ws.path("o")}).code == 3);

  CHECK(invoke({"run", "--config", ws.path("nope.json")}).code == 2);
  CHECK(invoke({"run"}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
}

TEST_CASE("seed override is accepted before or after the subcommand") {
  Workspace ws("seed");
  const auto cfg = ws.write("c.json", kSmartGrid);
  CHECK(invoke({"--seed", "9", "run", "--config", cfg, "--out", ws.path("a")}).code == 0);
  CHECK(invoke({"run", "--config", cfg, "--seed", "9", "--out", ws.path("b")}).code == 0);
  CHECK(invoke({"run", "--config", cfg, "--out", ws.path("c")}).code == 0);
  std::ifstream a(ws.path("a/trace.csv")), b(ws.path("b/trace.csv")), c(ws.path("c/trace.csv"));
  std::stringstream sa, sb, sc;
  sa << a.rdbuf();
  sb << b.rdbuf();
  sc << c.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != sc.str());
}

TEST_CASE("output directory defaults to the environment variable") {
  Workspace ws("env");
  const auto cfg = ws.write("c.json", kQuadratic);
  ::setenv(nlgd::cli::kOutputDirEnv, ws.path("from_env").c_str(), 1);
  const auto r = invoke({"run", "--config", cfg});
  ::unsetenv(nlgd::cli::kOutputDirEnv);
  CHECK(r.code == 0);
  CHECK(fs::exists(ws.path("from_env/trace.csv")));
}

TEST_CASE("compare and sweep") {
  Workspace ws("batch");
  auto r = invoke({"compare", "smart_grid", "--seeds", "3", "--iters", "500", "--threads", "1", "--out",
                   ws.path("cmp")});
  CHECK(r.code == 0);
  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(ws.path("cmp"))) {
    if (e.path().filename().string().rfind("trace_", 0) == 0) ++traces;
  }
  CHECK(traces == 6);
  CHECK(r.out.find("NLGD") != std::string::npos);

  r = invoke({"sweep", "portfolio", "--sigmas", "0.1,0.5,1", "--seeds", "2", "--iters", "200", "--out",
              ws.path("sw")});
  CHECK(r.code == 0);
  traces = 0;
  for (const auto& e : fs::directory_iterator(ws.path("sw"))) {
    if (e.path().filename().string().rfind("trace_", 0) == 0) ++traces;
  }
  CHECK(traces == 8);

  r = invoke({"compare", "--manifest", ws.path("cmp/manifest.json"), "--out", ws.path("replay")});
  CHECK(r.code == 0);
  std::ifstream a(ws.path("cmp/summary.csv")), b(ws.path("replay/summary.csv"));
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());

  CHECK(invoke({"compare", "wind_farm", "--out", ws.path("x")}).code == 2);
  CHECK(invoke({"sweep", "portfolio", "--sigmas", "0.1,abc", "--out", ws.path("x")}).code == 2);
}

TEST_CASE("compare with a single-run config pairs lgd and nlgd") {
  Workspace ws("pair");
  const auto cfg = ws.write("c.json", kSmartGrid);
  const auto r = invoke({"compare", cfg, "--seeds", "2", "--out", ws.path("o")});
  CHECK(r.code == 0);
  CHECK(fs::exists(ws.path("o/trace_LGD_seed1.csv")));
  CHECK(fs::exists(ws.path("o/trace_NLGD_seed2.csv")));
}

TEST_CASE("check exit codes") {
  Workspace ws("check");
  const auto quad = ws.write("q.json", kQuadratic);
  const auto sg = ws.write("s.json", kSmartGrid);
  const auto opt = ws.write("opt.txt", "0.5 0.5\n");
  const auto saddle = ws.write("zero.txt", "0 0\n");
  const auto short_state = ws.write("short.txt", "0.5\n");

  auto r = invoke({"check", "--state", opt, "--config", quad, "--eps", "1e-6", "--gamma", "1e-6"});
  CHECK(r.code == 0);
  CHECK(r.out.find("SECOND_ORDER") != std::string::npos);
  r = invoke({"check", "--state", saddle, "--config", sg, "--eps", "1e-6", "--gamma", "1"});
  CHECK(r.code == 1);
  CHECK(r.out.find("FIRST_ORDER_ONLY") != std::string::npos);
  CHECK(invoke({"check", "--state", short_state, "--config", quad, "--eps", "1e-6", "--gamma", "1e-6"}).code == 2);
  CHECK(invoke({"check", "--state", opt, "--config", quad, "--eps", "0", "--gamma", "1e-6"}).code == 2);
}

TEST_CASE("params") {
  Workspace ws("params");
  const auto quad = ws.write("q.json", kQuadratic);
  auto r = invoke({"params", "--eps-g", "0.1", "--p", "0.36787944117144233", "--config", quad});
  CHECK(r.code == 0);
  // min{1/(2 L), 2/(2 L)} with L = 1.
  CHECK(value_of(r.out, "alpha_bar") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(value_of(r.out, "eps_h") == 0.0);
  CHECK(value_of(r.out, "sigma_sq") == doctest::Approx(0.01 / 24).epsilon(1e-15));
  CHECK(r.out.find("K = ") != std::string::npos);
  CHECK(invoke({"params", "--eps-g", "0.1", "--p", "1.5", "--config", quad}).code == 2);
  CHECK(invoke({"params", "--eps-g", "0.1", "--p", "0", "--config", quad}).code == 2);
}

TEST_CASE("spectrum") {
  Workspace ws("spectrum");
  auto r = invoke({"spectrum", ws.write("p2.txt", "2\n0 1\n")});
  CHECK(r.code == 0);
  CHECK(value_of(r.out, "lambda_min_plus") == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(value_of(r.out, "lambda_max") == doctest::Approx(2.0).epsilon(1e-12));
  r = invoke({"spectrum", ws.write("tri.txt", "3\n0 1\n1 2\n0 2\n")});
  CHECK(r.code == 0);
  CHECK(value_of(r.out, "lambda_min_plus") == doctest::Approx(3.0).epsilon(1e-12));
  r = invoke({"spectrum", ws.write("split.txt", "4\n0 1\n2 3\n")});
  CHECK(r.code == 1);
  CHECK((r.out + r.err).find("disconnected") != std::string::npos);
  CHECK(invoke({"spectrum", ws.path("none.txt")}).code == 2);
  CHECK(invoke({"spectrum", ws.write("junk.txt", "3\n0 q\n")}).code == 2);
}

TEST_CASE("help documents every subcommand") {
  const auto r = invoke({"--help"});
  CHECK(r.code == 0);
  for (const char* sub : {"run", "compare", "sweep", "check", "spectrum", "params"}) {
    CHECK(r.out.find(sub) != std::string::npos);
  }
  const auto sub = invoke({"sweep", "--help"});
  CHECK(sub.code == 0);
  CHECK(sub.out.find("--sigmas") != std::string::npos);
}
