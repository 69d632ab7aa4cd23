#include "nlgd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "nlgd/config.hpp"

namespace nlgd {

namespace {

constexpr double kDefaultPerturbation = 1e-3;
constexpr int kWattsStrogatzK = 4;
constexpr double kWattsStrogatzP = 0.2;
constexpr int kScenarioAgents = 20;

std::string format_double(double v) { return format_number(v); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

FinalCertificate certify_iterate(const ProblemInstance& problem, const NetworkOperator& net, const Vector& theta) {
  const LipschitzConstants lip = lipschitz_constants(problem);
  const double eps = projected_grad_norm(theta, problem, net);
  const double eps_h = second_order_tolerance(eps, net.sqrt_norm_sq(), lip.hess);
  FinalCertificate out;
  out.curvature_tolerance = eps_h / net.lambda_min_plus();
  constexpr double tiny = std::numeric_limits<double>::min();
  out.report = classify(theta, problem, net, std::max(eps, tiny), std::max(out.curvature_tolerance, tiny));
  out.report.epsilon = eps;
  out.report.gamma = out.curvature_tolerance;
  return out;
}

namespace {

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("nan");
}

RunConfig scenario_run(Algorithm algorithm, double step_size, double sigma, std::int64_t iters) {
  RunConfig c;
  c.algorithm = algorithm;
  c.step_size = step_size;
  c.noise_variance = sigma * sigma;
  c.max_iters = iters;
  c.record_every = 100;
  c.record_curvature = true;
  return c;
}

std::string sigma_label(double sigma) { return "NLGD_sigma" + format_double(sigma); }

RunOutcome execute(const Scenario& scenario, std::size_t variant_index, std::uint64_t seed) {
  const RunVariant& variant = scenario.variants[variant_index];
  RunOutcome out;
  out.seed = seed;
  out.variant_index = variant_index;
  out.label = variant.label;
  out.config = variant.config;
  out.config.seed = derive_seed(seed, Stream::kNoise);
  if (!out.config.reference) out.config.reference = scenario.reference;
  try {
    out.trace = run(scenario.problem, scenario.net, scenario.initial_point(seed), out.config);
  } catch (const Divergence& d) {
    out.trace = d.partial_trace();
    out.diverged = true;
  }
  const FinalCertificate cert = certify_iterate(scenario.problem, scenario.net, out.trace.final_state.theta);
  out.final_report = cert.report;
  out.curvature_tolerance = cert.curvature_tolerance;
  return out;
}

std::vector<VariantSummary> summarize(const Scenario& scenario, const std::vector<RunOutcome>& runs) {
  std::vector<VariantSummary> out;
  for (std::size_t v = 0; v < scenario.variants.size(); ++v) {
    VariantSummary s;
    s.label = scenario.variants[v].label;
    double escape_sum = 0.0;
    for (const auto& r : runs) {
      if (r.variant_index != v) continue;
      ++s.runs;
      if (r.trace.escape_iteration) {
        ++s.escaped;
        escape_sum += static_cast<double>(*r.trace.escape_iteration);
      }
      s.mean_final_f += r.trace.records.empty() ? 0.0 : r.trace.records.back().f_value;
      s.mean_final_curvature += r.final_report.tangent_min_curvature;
      s.max_final_feasibility = std::max(s.max_final_feasibility, r.final_report.feasibility_residual);
    }
    if (s.runs > 0) {
      s.mean_final_f /= static_cast<double>(s.runs);
      s.mean_final_curvature /= static_cast<double>(s.runs);
    }
    if (s.escaped > 0) s.mean_escape_iteration = escape_sum / static_cast<double>(s.escaped);
    out.push_back(s);
  }
  return out;
}

std::string sanitize(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

Vector tangent_perturbation(int m, int n, double norm, Rng& rng) {
  Vector d = rng.normal_vector(static_cast<Eigen::Index>(m) * n);
  const Vector mean = block_sum(d, n) / static_cast<double>(m);
  for (int i = 0; i < m; ++i) d.segment(static_cast<Eigen::Index>(i) * n, n) -= mean;
  const double len = d.norm();
  if (len == 0.0 || norm == 0.0) return Vector::Zero(d.size());
  return d * (norm / len);
}

double default_escape_margin(double f_reference) { return 1e-4 * (1.0 + std::abs(f_reference)); }

Vector Scenario::initial_point(std::uint64_t run_seed) const {
  if (perturbation_norm == 0.0) return base_point;
  Rng rng(derive_seed(run_seed, Stream::kInitialPoint));
  return base_point + tangent_perturbation(problem.agent_count(), problem.agent_dim(), perturbation_norm, rng);
}

Scenario build_smart_grid_scenario(std::uint64_t seed) {
  constexpr int n = 1;
  Graph graph = watts_strogatz(kScenarioAgents, kWattsStrogatzK, kWattsStrogatzP, derive_seed(seed, Stream::kGraph));
  NetworkOperator net = NetworkOperator::from_graph(graph, n);
  Rng params(derive_seed(seed, Stream::kParameters));
  ProblemInstance problem(sample_smart_grid_agents(kScenarioAgents, n, params), Vector::Zero(n));
  const Vector zero = Vector::Zero(problem.stacked_size());
  constexpr double alpha = 0.001;
  constexpr double sigma = 0.05;
  constexpr std::int64_t iters = 200000;
  std::vector<RunVariant> variants{
      {"LGD", scenario_run(Algorithm::kLgd, alpha, 0.0, iters)},
      {"NLGD", scenario_run(Algorithm::kNlgd, alpha, sigma, iters)},
  };
  return Scenario{"smart_grid", seed, "smart_grid", std::move(problem), std::move(graph), std::move(net),
                  zero, kDefaultPerturbation, zero, std::move(variants)};
}

Scenario build_portfolio_scenario(std::uint64_t seed) {
  constexpr int n = 5;
  Graph graph = watts_strogatz(kScenarioAgents, kWattsStrogatzK, kWattsStrogatzP, derive_seed(seed, Stream::kGraph));
  NetworkOperator net = NetworkOperator::from_graph(graph, n);
  Rng params(derive_seed(seed, Stream::kParameters));
  const Vector demand = Vector::Ones(n);
  ProblemInstance problem(sample_portfolio_agents(kScenarioAgents, n, params), demand);
  Vector split(problem.stacked_size());
  for (int i = 0; i < kScenarioAgents; ++i) split.segment(i * n, n) = demand / static_cast<double>(kScenarioAgents);
  constexpr double alpha = 0.005;
  constexpr std::int64_t iters = 100000;
  std::vector<RunVariant> variants{{"LGD", scenario_run(Algorithm::kLgd, alpha, 0.0, iters)}};
  for (double sigma : {0.1, 0.5, 1.0}) {
    variants.push_back({sigma_label(sigma), scenario_run(Algorithm::kNlgd, alpha, sigma, iters)});
  }
  return Scenario{"portfolio", seed, "portfolio", std::move(problem), std::move(graph), std::move(net),
                  split, kDefaultPerturbation, split, std::move(variants)};
}

Scenario build_named_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "smart_grid") return build_smart_grid_scenario(seed);
  if (name == "portfolio") return build_portfolio_scenario(seed);
  throw InvalidArgument("unknown scenario '" + name + "' (expected smart_grid or portfolio)");
}

const RunOutcome* BatchResult::find(std::uint64_t seed, const std::string& label) const {
  for (const auto& r : runs) {
    if (r.seed == seed && r.label == label) return &r;
  }
  return nullptr;
}

BatchResult run_comparison(const Scenario& scenario, const std::vector<std::uint64_t>& seeds, unsigned threads) {
  if (seeds.empty()) throw InvalidArgument("run_comparison: at least one seed is required");
  for (const auto& v : scenario.variants) v.config.validate();
  lipschitz_constants(scenario.problem);  // fail before spawning work

  struct Job {
    std::uint64_t seed;
    std::size_t variant;
  };
  std::vector<Job> jobs;
  std::vector<std::uint64_t> ordered = seeds;
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
  for (auto s : ordered)
    for (std::size_t v = 0; v < scenario.variants.size(); ++v) jobs.push_back({s, v});

  std::vector<RunOutcome> results(jobs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      results[j] = execute(scenario, jobs[j].variant, jobs[j].seed);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::future<void>> pool;
    for (unsigned t = 0; t < threads; ++t) pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
  }

  BatchResult batch;
  batch.scenario = scenario;
  batch.seeds = ordered;
  batch.runs = std::move(results);
  batch.summaries = summarize(scenario, batch.runs);
  return batch;
}

Scenario with_sigma_variants(const Scenario& scenario, const std::vector<double>& sigmas, bool include_baseline) {
  if (sigmas.empty()) throw InvalidArgument("sweep_sigma: sigma list is empty");
  if (scenario.variants.empty()) throw InvalidArgument("sweep_sigma: scenario has no run template");
  RunConfig base = scenario.variants.front().config;
  Scenario out = scenario;
  out.variants.clear();
  if (include_baseline) {
    RunConfig lgd = base;
    lgd.algorithm = Algorithm::kLgd;
    lgd.noise_variance = 0.0;
    out.variants.push_back({"LGD", lgd});
  }
  for (double sigma : sigmas) {
    if (!(sigma >= 0.0)) throw InvalidArgument("sweep_sigma: sigma must be non-negative");
    RunConfig c = base;
    c.algorithm = Algorithm::kNlgd;
    c.noise_variance = sigma * sigma;
    out.variants.push_back({sigma_label(sigma), c});
  }
  return out;
}

BatchResult sweep_sigma(const Scenario& scenario, const std::vector<double>& sigmas,
                        const std::vector<std::uint64_t>& seeds, bool include_baseline, unsigned threads) {
  return run_comparison(with_sigma_variants(scenario, sigmas, include_baseline), seeds, threads);
}

std::string variant_file_stem(const std::string& label, std::uint64_t seed) {
  return "trace_" + sanitize(label) + "_seed" + std::to_string(seed);
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "iter,f_value,feas_residual,proj_grad_norm,tangent_curvature,dist_to_ref\n";
  for (const auto& r : trace.records) {
    out << r.iter << ',' << format_double(r.f_value) << ',' << format_double(r.feas_residual) << ','
        << format_double(r.proj_grad_norm) << ',' << format_optional(r.tangent_curvature) << ','
        << format_optional(r.dist_to_ref) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void export_traces(const BatchResult& batch, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  for (const auto& r : batch.runs) write_trace_csv(r.trace, dir / (variant_file_stem(r.label, r.seed) + ".csv"));

  {
    const auto path = dir / "summary.csv";
    auto out = open_for_write(path);
    out << "seed,label,algorithm,noise_variance,iterations,escape_iteration,final_f,final_feas_residual,"
           "final_proj_grad_norm,final_tangent_curvature,curvature_tolerance,classification,diverged\n";
    for (const auto& r : batch.runs) {
      const auto& rep = r.final_report;
      out << r.seed << ',' << r.label << ',' << to_string(r.config.algorithm) << ','
          << format_double(r.config.noise_variance) << ',' << r.trace.iterations_run << ','
          << (r.trace.escape_iteration ? std::to_string(*r.trace.escape_iteration) : std::string()) << ','
          << format_double(r.trace.records.empty() ? std::nan("") : r.trace.records.back().f_value) << ','
          << format_double(rep.feasibility_residual) << ',' << format_double(rep.projected_grad_norm) << ','
          << format_double(rep.tangent_min_curvature) << ',' << format_double(r.curvature_tolerance) << ','
          << to_string(rep.classification) << ',' << (r.diverged ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
  }

  {
    Json manifest;
    manifest["format"] = "nlgd-batch-manifest";
    manifest["version"] = 1;
    Json seeds = Json::array();
    for (auto s : batch.seeds) seeds.push_back(s);
    manifest["seeds"] = seeds;
    manifest["scenario"] = batch.scenario ? scenario_to_json(*batch.scenario) : Json();
    const auto path = dir / "manifest.json";
    auto out = open_for_write(path);
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
  }
}

BatchResult replay_manifest(const std::filesystem::path& manifest, unsigned threads) {
  const Json j = read_json_file(manifest);
  if (!j.contains("scenario") || j["scenario"].is_null()) {
    throw ConfigError("scenario", "manifest " + manifest.string() + " records no scenario");
  }
  if (!j.contains("seeds") || !j["seeds"].is_array()) throw ConfigError("seeds", "manifest lists no seeds");
  std::vector<std::uint64_t> seeds;
  for (const auto& s : j["seeds"]) seeds.push_back(s.get<std::uint64_t>());
  const Scenario scenario = scenario_from_json(j["scenario"], std::nullopt, manifest.parent_path());
  return run_comparison(scenario, seeds, threads);
}

}  // namespace nlgd
