#include "nlgd/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "nlgd/config.hpp"
#include "nlgd/experiments.hpp"
#include "nlgd/optimizer.hpp"
#include "nlgd/stationarity.hpp"

namespace nlgd::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  int verbosity = 0;
  std::optional<std::uint64_t> seed;

  // run / check / params
  std::string config_path;
  std::string out_dir;

  // compare / sweep
  std::string target;
  std::string manifest;
  int seed_count = 20;
  std::uint64_t seed_base = 1;
  std::optional<std::int64_t> iters;
  std::string sigmas = "0.1,0.5,1";
  unsigned threads = 0;

  // check
  std::string state_path;
  double eps = 0.0;
  double gamma = 0.0;

  // params
  double eps_g = 0.0;
  double confidence = 0.0;

  // spectrum
  std::string graph_path;
};

void print_kv(std::ostream& out, const std::string& key, double value) {
  out << key << " = " << format_number(value) << '\n';
}

fs::path output_dir(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "nlgd_out";
}

std::vector<std::uint64_t> seed_list(const Options& o) {
  if (o.seed_count < 1) throw InvalidArgument("--seeds must be at least 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < o.seed_count; ++i) seeds.push_back(o.seed_base + static_cast<std::uint64_t>(i));
  return seeds;
}

std::vector<double> parse_sigmas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidArgument("--sigmas: '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("--sigmas: empty list");
  return out;
}

Scenario resolve_target(const Options& o) {
  if (o.target == "smart_grid" || o.target == "portfolio") {
    return build_named_scenario(o.target, o.seed.value_or(0));
  }
  if (fs::is_regular_file(o.target)) {
    Scenario s = load_scenario(o.target, o.seed);
    // A single run template becomes an LGD / NLGD pair.
    if (s.variants.size() == 1) {
      RunConfig lgd = s.variants.front().config;
      lgd.algorithm = Algorithm::kLgd;
      lgd.noise_variance = 0.0;
      RunConfig nlgd = s.variants.front().config;
      nlgd.algorithm = Algorithm::kNlgd;
      s.variants = {{"LGD", lgd}, {"NLGD", nlgd}};
    }
    if (s.variants.empty()) throw ConfigError("run", "config has no 'run' or 'variants' section");
    return s;
  }
  throw InvalidArgument("unknown scenario '" + o.target + "' (expected smart_grid, portfolio or a config file)");
}

void apply_iteration_override(Scenario& s, const Options& o) {
  if (!o.iters) return;
  for (auto& v : s.variants) v.config.max_iters = *o.iters;
}

void print_batch_summary(std::ostream& out, const BatchResult& batch) {
  out << std::left << std::setw(18) << "label" << std::setw(6) << "runs" << std::setw(9) << "escaped"
      << std::setw(14) << "mean_escape" << std::setw(24) << "mean_final_f" << "mean_final_curvature\n";
  for (const auto& s : batch.summaries) {
    out << std::left << std::setw(18) << s.label << std::setw(6) << s.runs << std::setw(9) << s.escaped
        << std::setw(14) << (s.mean_escape_iteration ? format_number(*s.mean_escape_iteration) : "-")
        << std::setw(24) << format_number(s.mean_final_f) << format_number(s.mean_final_curvature) << '\n';
  }
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  Scenario s = load_scenario(o.config_path, o.seed);
  if (s.variants.empty()) throw ConfigError("run", "missing required field 'run'");
  RunConfig config = s.variants.front().config;
  config.seed = derive_seed(s.seed, Stream::kNoise);
  if (!config.reference) config.reference = s.reference;

  const fs::path dir = output_dir(o);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());

  // Manifest first: a diverged run still leaves a replayable record.
  {
    Scenario recorded = s;
    recorded.variants = {s.variants.front()};
    Json manifest;
    manifest["format"] = "nlgd-batch-manifest";
    manifest["version"] = 1;
    manifest["seeds"] = Json::array({s.seed});
    manifest["scenario"] = scenario_to_json(recorded);
    std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!mf) throw IoError("cannot write " + (dir / "manifest.json").string());
    mf << manifest.dump(2) << '\n';
  }

  Trace trace;
  try {
    trace = run(s.problem, s.net, s.theta0(), config);
  } catch (const Divergence& d) {
    write_trace_csv(d.partial_trace(), dir / "trace.csv");
    err << "error: " << d.what() << " (partial trace written to " << (dir / "trace.csv").string() << ")\n";
    return kRuntimeError;
  }
  write_trace_csv(trace, dir / "trace.csv");
  if (o.verbosity > 0) err << "wrote " << (dir / "trace.csv").string() << '\n';

  const FinalCertificate cert = certify_iterate(s.problem, s.net, trace.final_state.theta);
  out << "algorithm = " << to_string(config.algorithm) << '\n';
  out << "iterations = " << trace.iterations_run << '\n';
  if (trace.escape_iteration) out << "escape_iteration = " << *trace.escape_iteration << '\n';
  if (trace.certified_iteration) out << "certified_iteration = " << *trace.certified_iteration << '\n';
  if (config.monitor_descent) out << "descent_violations = " << trace.descent_violations << '\n';
  if (trace.final_state.aux_x) print_kv(out, "max_coupling_error", trace.max_coupling_error);
  print_kv(out, "final_f", s.problem.value(trace.final_state.theta));
  out << format_report(cert.report);
  out << "trace = " << (dir / "trace.csv").string() << '\n';
  return kSuccess;
}

int cmd_batch(const Options& o, bool sweep, std::ostream& out, std::ostream& err) {
  BatchResult batch;
  if (!o.manifest.empty()) {
    batch = replay_manifest(o.manifest, o.threads);
  } else {
    if (o.target.empty()) throw InvalidArgument("a scenario name, config file or --manifest is required");
    Scenario s = resolve_target(o);
    apply_iteration_override(s, o);
    if (sweep) s = with_sigma_variants(s, parse_sigmas(o.sigmas), true);
    if (o.verbosity > 0) {
      err << "running " << s.variants.size() << " variants x " << o.seed_count << " seeds\n";
    }
    batch = run_comparison(s, seed_list(o), o.threads);
  }
  const fs::path dir = output_dir(o);
  export_traces(batch, dir);
  print_batch_summary(out, batch);
  std::size_t diverged = 0;
  for (const auto& r : batch.runs) diverged += r.diverged ? 1 : 0;
  out << "traces = " << batch.runs.size() << '\n' << "output = " << dir.string() << '\n';
  if (diverged > 0) {
    err << "error: " << diverged << " run(s) diverged\n";
    return kRuntimeError;
  }
  return kSuccess;
}

int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
  const Scenario s = load_scenario(o.config_path, o.seed);
  const Vector theta = read_vector_file(o.state_path);
  if (theta.size() != s.problem.stacked_size()) {
    err << "error: state has " << theta.size() << " entries, expected m*n = " << s.problem.stacked_size() << '\n';
    return kInputError;
  }
  const StationarityReport report = classify(theta, s.problem, s.net, o.eps, o.gamma);
  out << format_report(report);
  return report.classification == Classification::kSecondOrder ? kSuccess : kNegative;
}

int cmd_params(const Options& o, std::ostream& out, std::ostream&) {
  if (!(o.confidence > 0.0 && o.confidence < 1.0)) throw InvalidArgument("--p must lie in (0, 1)");
  if (!(o.eps_g > 0.0)) throw InvalidArgument("--eps-g must be positive");
  const Scenario s = load_scenario(o.config_path, o.seed);
  const LipschitzConstants lip = lipschitz_constants(s.problem);
  const PsiLipschitz psi = psi_lipschitz(lip, s.net);
  const int m = s.problem.agent_count();
  const int n = s.problem.agent_dim();
  const double alpha_bar = theoretical_step_bound(o.confidence, lip.grad, s.net.sqrt_norm_sq());
  const double sigma_sq = variance_for_tolerance(o.eps_g, m, n);
  const double eps_h = second_order_tolerance(o.eps_g, s.net.sqrt_norm_sq(), lip.hess);

  out << "m = " << m << '\n' << "n = " << n << '\n';
  print_kv(out, "lip_grad_f", lip.grad);
  print_kv(out, "lip_hess_f", lip.hess);
  print_kv(out, "sqrt_norm_sq", s.net.sqrt_norm_sq());
  print_kv(out, "lambda_min_plus", s.net.lambda_min_plus());
  print_kv(out, "lip_grad_psi", psi.grad);
  print_kv(out, "lip_hess_psi", psi.hess);
  print_kv(out, "alpha_bar", alpha_bar);
  print_kv(out, "sigma_sq", sigma_sq);
  print_kv(out, "sigma", std::sqrt(sigma_sq));
  print_kv(out, "eps_h", eps_h);
  print_kv(out, "gamma_original", eps_h / s.net.lambda_min_plus());

  const Vector theta0 = s.theta0();
  const double psi0 = s.problem.value(theta0);
  const auto f_star = s.problem.global_min_sum();
  print_kv(out, "psi_x0", psi0);
  if (f_star) {
    print_kv(out, "sum_f_star", *f_star);
    out << "K = " << iteration_budget(psi0, *f_star, psi.grad, o.eps_g, alpha_bar) << '\n';
    if (!s.variants.empty()) {
      const double alpha = s.variants.front().config.step_size;
      out << "K_at_config_step = " << iteration_budget(psi0, *f_star, psi.grad, o.eps_g, alpha) << '\n';
    }
  } else {
    out << "K = unavailable (no lower bound for sum f_i^*)\n";
  }
  return kSuccess;
}

int cmd_spectrum(const Options& o, std::ostream& out, std::ostream& err) {
  const Graph g = read_edge_list(fs::path(o.graph_path));
  out << "m = " << g.node_count() << '\n' << "edges = " << g.edge_count() << '\n';
  const std::size_t components = g.component_count();
  if (components != 1) {
    out << "connected = false\n" << "components = " << components << '\n';
    err << "graph is disconnected (" << components << " components)\n";
    return kNegative;
  }
  const NetworkOperator net = NetworkOperator::from_graph(g);
  out << "connected = true\n";
  print_kv(out, "lambda_min_plus", net.lambda_min_plus());
  print_kv(out, "lambda_max", net.lambda_max());
  print_kv(out, "sqrt_norm_sq", net.sqrt_norm_sq());
  print_kv(out, "sqrt_residual", net.sqrt_residual());
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Laplacian-weighted gradient descent (LGD) and its noisy variant (NLGD) for distributed "
               "resource allocation"};
  app.name("nlgd");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("-v,--verbose", o.verbosity, "Print progress to stderr");
  app.add_option("--seed", o.seed, "Override the master seed of the config or scenario");

  auto* run_cmd = app.add_subcommand("run", "Execute one run from a config file");
  run_cmd->add_option("-c,--config", o.config_path, "Config file (JSON)")->required();
  run_cmd->add_option("-o,--out", o.out_dir, std::string("Output directory (default $") + kOutputDirEnv + " or ./nlgd_out)");

  auto add_batch = [&](CLI::App* cmd) {
    cmd->add_option("scenario", o.target, "smart_grid, portfolio, or a config file");
    cmd->add_option("--manifest", o.manifest, "Replay the batch recorded in a manifest.json");
    cmd->add_option("--seeds", o.seed_count, "Number of run seeds")->capture_default_str();
    cmd->add_option("--seed-base", o.seed_base, "First run seed; seeds are consecutive")->capture_default_str();
    cmd->add_option("--iters", o.iters, "Override the iteration budget of every variant");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    cmd->add_option("-o,--out", o.out_dir, std::string("Output directory (default $") + kOutputDirEnv + " or ./nlgd_out)");
  };
  auto* compare_cmd = app.add_subcommand("compare", "Run every scenario variant (LGD, NLGD, ...) over a seed batch");
  add_batch(compare_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "Run NLGD over a list of noise levels plus an LGD baseline");
  add_batch(sweep_cmd);
  sweep_cmd->add_option("--sigmas", o.sigmas, "Comma separated noise standard deviations")->capture_default_str();

  auto* check_cmd = app.add_subcommand("check", "Classify a stacked iterate against (eps, gamma) optimality");
  check_cmd->add_option("-s,--state", o.state_path, "File with the stacked theta (whitespace separated)")->required();
  check_cmd->add_option("-c,--config", o.config_path, "Config file defining the problem and network")->required();
  check_cmd->add_option("--eps", o.eps, "Projected gradient tolerance")->required();
  check_cmd->add_option("--gamma", o.gamma, "Tangent curvature tolerance")->required();

  auto* spectrum_cmd = app.add_subcommand("spectrum", "Spectral summary of an edge-list graph");
  spectrum_cmd->add_option("graph", o.graph_path, "Edge-list file: first line m, then 'i j' per edge")->required();

  auto* params_cmd = app.add_subcommand("params", "Step bound, noise variance, eps_H and iteration budget");
  params_cmd->add_option("--eps-g", o.eps_g, "Gradient tolerance eps_g")->required();
  params_cmd->add_option("--p", o.confidence, "Failure probability p in (0, 1)")->required();
  params_cmd->add_option("-c,--config", o.config_path, "Config file defining the problem and network")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (*run_cmd) return cmd_run(o, out, err);
    if (*compare_cmd) return cmd_batch(o, false, out, err);
    if (*sweep_cmd) return cmd_batch(o, true, out, err);
    if (*check_cmd) return cmd_check(o, out, err);
    if (*spectrum_cmd) return cmd_spectrum(o, out, err);
    if (*params_cmd) return cmd_params(o, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what();
    if (!e.field().empty()) err << " [field: " << e.field() << "]";
    err << '\n';
    return kInputError;
  } catch (const InfeasibleStart& e) {
    err << "error: " << e.what() << " (the initial point must satisfy the coupling constraint)\n";
    return kRuntimeError;
  } catch (const Divergence& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const DisconnectedGraph& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kInputError;
}

}  // namespace nlgd::cli
