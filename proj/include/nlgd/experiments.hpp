#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlgd/network.hpp"
#include "nlgd/objectives.hpp"
#include "nlgd/optimizer.hpp"
#include "nlgd/stationarity.hpp"

namespace nlgd {

struct RunVariant {
  std::string label;
  RunConfig config;
};

// A problem on a network plus the algorithm variants to compare on it.
// Run seeds only move the initial perturbation and the noise stream; the
// problem and graph are fixed by the scenario seed.
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  std::string family;
  ProblemInstance problem;
  Graph graph;
  NetworkOperator net;
  // Feasible unperturbed start; initial points add a tangent perturbation of
  // norm perturbation_norm to it.
  Vector base_point;
  double perturbation_norm = 0.0;
  Vector reference;
  std::vector<RunVariant> variants;

  // Shared by every variant run with this seed.
  Vector initial_point(std::uint64_t run_seed) const;
  // Initial point for the scenario seed itself.
  Vector theta0() const { return initial_point(seed); }
};

// Gaussian direction projected onto {d : sum_i d_i = 0}, scaled to `norm`.
Vector tangent_perturbation(int m, int n, double norm, Rng& rng);

// Escape margin used when a variant does not set its own.
double default_escape_margin(double f_reference);

// m = 20, n = 1, Watts-Strogatz(20, 4, 0.2), smart grid agents, r = 0,
// start within 1e-3 of the saddle at 0, alpha = 0.001, sigma = 0.05,
// 2e5 iterations recorded every 100. Variants LGD and NLGD.
Scenario build_smart_grid_scenario(std::uint64_t seed);

// m = 20, n = 5, same graph family, portfolio agents, r = 1_n, start at the
// uniform split r/m plus a 1e-3 perturbation, alpha = 0.005, 1e5 iterations.
// Variants: LGD baseline and NLGD with sigma in {0.1, 0.5, 1}.
Scenario build_portfolio_scenario(std::uint64_t seed);

// Named builders: "smart_grid" and "portfolio".
Scenario build_named_scenario(const std::string& name, std::uint64_t seed);

struct FinalCertificate {
  StationarityReport report;
  double curvature_tolerance = 0.0;
};

// Certifies an end-of-run iterate at its own tolerances: epsilon is the
// projected gradient norm at theta and gamma = eps_H / lambda_min_plus with
// eps_H = sqrt(epsilon ||sqrt L||^3 L^H_F).
FinalCertificate certify_iterate(const ProblemInstance& problem, const NetworkOperator& net, const Vector& theta);

// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
std::string format_number(double v);

struct RunOutcome {
  std::uint64_t seed = 0;
  std::size_t variant_index = 0;
  std::string label;
  RunConfig config;
  Trace trace;
  bool diverged = false;
  // certify_iterate at the last iterate.
  StationarityReport final_report;
  double curvature_tolerance = 0.0;
};

struct VariantSummary {
  std::string label;
  std::size_t runs = 0;
  std::size_t escaped = 0;
  std::optional<double> mean_escape_iteration;
  double mean_final_f = 0.0;
  double mean_final_curvature = 0.0;
  double max_final_feasibility = 0.0;
};

struct BatchResult {
  std::optional<Scenario> scenario;
  std::vector<std::uint64_t> seeds;
  // Sorted by (seed, variant index).
  std::vector<RunOutcome> runs;
  std::vector<VariantSummary> summaries;

  const RunOutcome* find(std::uint64_t seed, const std::string& label) const;
};

// Runs every scenario variant for every seed. threads == 0 picks the hardware
// concurrency.
BatchResult run_comparison(const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
                           unsigned threads = 0);

// NLGD at each sigma (standard deviation) for every seed. The step size,
// budget and stride come from the scenario's first variant.
BatchResult sweep_sigma(const Scenario& scenario, const std::vector<double>& sigmas,
                        const std::vector<std::uint64_t>& seeds, bool include_baseline = false,
                        unsigned threads = 0);

// Scenario with its variants replaced by the sweep variants.
Scenario with_sigma_variants(const Scenario& scenario, const std::vector<double>& sigmas, bool include_baseline);

std::string variant_file_stem(const std::string& label, std::uint64_t seed);

// Writes trace_<label>_seed<seed>.csv per run, summary.csv and manifest.json
// into `dir` (created if missing).
void export_traces(const BatchResult& batch, const std::filesystem::path& dir);

// Writes one trace as CSV with the header
// iter,f_value,feas_residual,proj_grad_norm,tangent_curvature,dist_to_ref
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);

// Re-runs the batch recorded in a manifest.
BatchResult replay_manifest(const std::filesystem::path& manifest, unsigned threads = 0);

}  // namespace nlgd
