#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gendyn/harness.hpp"
#include "gendyn/simulator.hpp"
#include "gendyn/theory.hpp"

namespace {

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gendyn::harness::ConfigParse("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw gendyn::harness::ConfigParse(std::string("config parse error: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generalization and transfer dynamics of deep linear networks"};
  app.require_subcommand(1);

  std::string config_path, out_path, input_path, report_path, outdir, figure;
  std::uint64_t seed = 1;
  double aspect = 1.0, margin = 0.02;
  double snr_a = 3.0, snr_b = 3.0, q = 0.0;
  bool grid = false;
  int n_seeds = 6;

  auto* theory_cmd = app.add_subcommand("theory", "analytic learning curves");
  theory_cmd->add_option("--config", config_path, "JSON config")->required();
  theory_cmd->add_option("--out", out_path, "output CSV")->required();

  auto* sim_cmd = app.add_subcommand("simulate", "one seeded training run");
  sim_cmd->add_option("--config", config_path, "JSON config")->required();
  sim_cmd->add_option("--seed", seed, "RNG seed");
  sim_cmd->add_option("--out", out_path, "output trace CSV")->required();

  auto* shrink_cmd = app.add_subcommand("shrink", "singular value shrinkage denoiser");
  shrink_cmd->add_option("--input", input_path, "input matrix CSV")->required();
  shrink_cmd->add_option("--aspect", aspect, "aspect ratio n3/n1")->required();
  shrink_cmd->add_option("--margin", margin, "outlier margin above the bulk edge");
  shrink_cmd->add_option("--out", out_path, "denoised matrix CSV")->required();
  shrink_cmd->add_option("--report", report_path, "detected-mode report CSV")->required();

  auto* transfer_cmd = app.add_subcommand("transfer", "two-task transfer benefit");
  transfer_cmd->add_option("--snr-a", snr_a, "task A SNR")->required();
  transfer_cmd->add_option("--snr-b", snr_b, "task B SNR");
  transfer_cmd->add_option("--q", q, "input feature alignment in [-1,1]");
  transfer_cmd->add_flag("--grid", grid, "sweep the canonical (q, snr_b) grid");
  transfer_cmd->add_option("--seeds", n_seeds, "simulation seeds per cell");
  transfer_cmd->add_option("--seed", seed, "base RNG seed");
  transfer_cmd->add_option("--out", out_path, "output CSV")->required();

  auto* repro_cmd = app.add_subcommand("reproduce", "canonical figure recipes");
  repro_cmd->add_option("figure", figure, "figure id")->required();
  repro_cmd->add_option("--outdir", outdir, "output directory")->required();
  repro_cmd->add_option("--seed", seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*theory_cmd) {
      gendyn::harness::run_theory(load_config(config_path), out_path);
    } else if (*sim_cmd) {
      gendyn::harness::run_simulate(load_config(config_path), seed, out_path);
    } else if (*shrink_cmd) {
      gendyn::harness::run_shrink(input_path, aspect, margin, out_path, report_path);
    } else if (*transfer_cmd) {
      gendyn::harness::run_transfer(snr_a, snr_b, q, grid, n_seeds, seed, out_path);
    } else if (*repro_cmd) {
      gendyn::harness::reproduce(figure, outdir, seed);
    }
  } catch (const gendyn::harness::ConfigParse& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gendyn::harness::UnknownFigure& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gendyn::theory::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gendyn::sim::Divergence& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
