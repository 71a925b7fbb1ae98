#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gendyn::harness {

inline constexpr const char* kVersion = "0.1.0";

struct ConfigParse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownFigure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunManifest {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  double wall_time_s = 0;
  std::vector<std::string> outputs;
};

/// Writes <path> atomically as JSON.
void write_manifest(const std::string& path, const RunManifest& manifest);

/// Analytic learning curves from a JSON config; writes a CSV (and .svg next
/// to it) with columns t_over_tau, eps_train, eps_test.
RunManifest run_theory(const nlohmann::json& config, const std::string& out_csv);

/// One seeded simulation run from a JSON config; writes the trace CSV.
RunManifest run_simulate(const nlohmann::json& config, std::uint64_t seed,
                         const std::string& out_csv);

/// Shrinkage denoising of a matrix CSV.
RunManifest run_shrink(const std::string& input_csv, double aspect, double margin,
                       const std::string& out_csv, const std::string& report_csv);

/// Transfer benefit at one (q, snr_a, snr_b) cell or over the canonical grid;
/// CSV columns q, snr_a, snr_b, T_theory, T_sim, ci.
RunManifest run_transfer(double snr_a, double snr_b, double q, bool grid,
                         int n_seeds, std::uint64_t seed, const std::string& out_csv);

/// Canonical figure recipes; figure_id is one of fig1, fig2, fig3, fig_deep,
/// fig5, fig6, fig_alignment, fig_P, fig_rank, fig_shrink.
RunManifest reproduce(const std::string& figure_id, const std::string& outdir,
                      std::uint64_t seed = 1);

const std::vector<std::string>& reproduce_targets();

}  // namespace gendyn::harness
