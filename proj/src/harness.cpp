#include "gendyn/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

#include "gendyn/grid.hpp"
#include "gendyn/matrix_io.hpp"
#include "gendyn/parallel.hpp"
#include "gendyn/rmt.hpp"
#include "gendyn/shrinkage.hpp"
#include "gendyn/simulator.hpp"
#include "gendyn/svg.hpp"
#include "gendyn/theory.hpp"
#include "gendyn/transfer.hpp"

namespace gendyn::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_ = Clock::now();
};

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigParse("config field '" + key + "': " + e.what());
  }
}

template <typename T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigParse("config is missing required field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigParse("config field '" + key + "': " + e.what());
  }
}

theory::TheoryConfig theory_config_from_json(const json& j) {
  theory::TheoryConfig cfg;
  cfg.teacher_snrs = require<std::vector<double>>(j, "snrs");
  cfg.n1 = require<int>(j, "n1");
  cfg.n3 = require<int>(j, "n3");
  cfg.aspect_ratio = double(cfg.n3) / double(cfg.n1);
  cfg.student_rank = get_or<int>(j, "student_rank", cfg.n3);
  cfg.dyn.eps = get_or<double>(j, "eps", 1e-3);
  cfg.dyn.tau = get_or<double>(j, "tau", 1.0);
  cfg.dyn.depth = get_or<int>(j, "depth", 3);
  cfg.noise_scale = get_or<double>(j, "sigma_z", 1.0);
  cfg.sample_count = get_or<int>(j, "samples", -1);
  try {
    cfg.validate();
  } catch (const theory::ConfigInvalid& e) {
    throw ConfigParse(e.what());
  }
  return cfg;
}

sim::DatasetMode mode_from_string(const std::string& s) {
  if (s == "orthonormal" || s == "orthonormal_P_eq_N1") return sim::DatasetMode::OrthonormalPEqN1;
  if (s == "oversampled") return sim::DatasetMode::Oversampled;
  if (s == "undersampled") return sim::DatasetMode::Undersampled;
  if (s == "randomized_labels") return sim::DatasetMode::RandomizedLabels;
  if (s == "gaussian_inputs") return sim::DatasetMode::GaussianInputs;
  throw ConfigParse("unknown dataset mode '" + s + "'");
}

void plot_curves(const std::string& csv_path, const io::Table& table,
                 const std::string& title, bool log_x, bool log_y) {
  std::vector<svg::Series> series;
  for (std::size_t c = 1; c < table.columns.size(); ++c)
    series.push_back({table.columns[c], table.data[0], table.data[c]});
  svg::PlotOptions opt;
  opt.title = title;
  opt.x_label = table.columns.empty() ? "x" : table.columns[0];
  opt.y_label = "value";
  opt.log_x = log_x;
  opt.log_y = log_y;
  fs::path p(csv_path);
  p.replace_extension(".svg");
  svg::write_line_plot(p.string(), series, opt);
}

// Mean simulated curves over seeds, interpolated onto a fixed t/tau grid.
struct MeanCurves {
  std::vector<double> train, test;
};

struct SimRecipe {
  int n1 = 100, n2 = 50, n3 = 50;
  std::vector<double> snrs;
  double sigma_z = 1.0;
  int depth = 3;
  double eps = 1e-3;
  double lambda = 0;  // 0: auto
  double t_max = 3.0;
  sim::InitMode init = sim::InitMode::Aligned;
  sim::DatasetMode mode = sim::DatasetMode::OrthonormalPEqN1;
  int samples = -1;  // -1: n1
};

sim::ErrorTrace run_once(const SimRecipe& r, std::uint64_t seed, int track_modes = 0) {
  const auto teacher = sim::make_teacher(r.n1, r.n3, r.snrs, r.sigma_z, seed);
  const auto data = sim::make_dataset(teacher, r.samples < 0 ? r.n1 : r.samples,
                                      r.mode, seed ^ 0xdadaull);
  auto student = sim::init_student(r.n1, r.n2, r.n3, r.depth, r.eps, r.init, &data,
                                   seed ^ 0x57aull);
  sim::TrainOptions opts;
  opts.lambda = r.lambda > 0 ? r.lambda : 0.01 / data.data_s(0);
  opts.epochs = static_cast<long>(std::ceil(r.t_max / opts.lambda));
  opts.record_every = std::max<long>(1, opts.epochs / 400);
  opts.track_modes = track_modes;
  return sim::train_gd(student, data, opts);
}

MeanCurves mean_curves(const SimRecipe& r, const std::vector<double>& grid,
                       int n_seeds, std::uint64_t base_seed) {
  auto runs = parallel_map(n_seeds, [&](int i) {
    const auto trace = run_once(r, base_seed + 7919ull * i);
    MeanCurves c;
    c.train = interp_linear(trace.times, trace.train_errors, grid);
    c.test = interp_linear(trace.times, trace.test_errors, grid);
    return c;
  });
  MeanCurves mean;
  mean.train.assign(grid.size(), 0.0);
  mean.test.assign(grid.size(), 0.0);
  for (const auto& c : runs)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      mean.train[i] += c.train[i] / n_seeds;
      mean.test[i] += c.test[i] / n_seeds;
    }
  return mean;
}

}  // namespace

void write_manifest(const std::string& path, const RunManifest& m) {
  json j;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["wall_time_s"] = m.wall_time_s;
  j["outputs"] = m.outputs;
  io::write_text_atomic(path, j.dump(2) + "\n");
}

RunManifest run_theory(const json& config, const std::string& out_csv) {
  Stopwatch watch;
  auto cfg = theory_config_from_json(config);
  const double t_min = get_or<double>(config, "t_min", 0.01);
  const double t_max = get_or<double>(config, "t_max", 3.0);
  const int points = get_or<int>(config, "points", 120);
  const auto times = log_spaced(t_min * cfg.dyn.tau, t_max * cfg.dyn.tau, points);

  io::Table t;
  std::vector<double> tt;
  for (double x : times) tt.push_back(x / cfg.dyn.tau);
  t.add("t_over_tau", tt);
  if (cfg.samples() < cfg.n1) {
    t.add("eps_train", std::vector<double>(times.size(),
                                           std::numeric_limits<double>::quiet_NaN()));
    t.add("eps_test", theory::undersampled_test_error_curve(times, cfg));
  } else {
    auto eff = cfg.samples() > cfg.n1 ? theory::oversampled_equivalent(cfg) : cfg;
    t.add("eps_train", theory::train_error_curve(times, eff));
    t.add("eps_test", theory::test_error_curve(times, eff));
  }
  io::write_table_csv(out_csv, t);
  plot_curves(out_csv, t, "analytic learning curves", true, false);

  RunManifest m;
  m.config = config;
  m.wall_time_s = watch.seconds();
  m.outputs = {out_csv};
  write_manifest(out_csv + ".manifest.json", m);
  return m;
}

RunManifest run_simulate(const json& config, std::uint64_t seed,
                         const std::string& out_csv) {
  Stopwatch watch;
  SimRecipe r;
  r.n1 = require<int>(config, "n1");
  r.n3 = require<int>(config, "n3");
  r.n2 = get_or<int>(config, "n2", r.n3);
  r.snrs = require<std::vector<double>>(config, "snrs");
  r.sigma_z = get_or<double>(config, "sigma_z", 1.0);
  r.depth = get_or<int>(config, "depth", 3);
  r.eps = get_or<double>(config, "eps", 1e-3);
  r.lambda = get_or<double>(config, "lambda", 0.0);
  r.t_max = get_or<double>(config, "t_max", 3.0);
  r.samples = get_or<int>(config, "samples", -1);
  r.mode = mode_from_string(get_or<std::string>(config, "mode", "orthonormal"));
  r.init = get_or<std::string>(config, "init", "aligned") == "random"
               ? sim::InitMode::Random
               : sim::InitMode::Aligned;
  const int track = get_or<int>(config, "track_modes", 0);

  const auto teacher = sim::make_teacher(r.n1, r.n3, r.snrs, r.sigma_z, seed);
  const auto data = sim::make_dataset(teacher, r.samples < 0 ? r.n1 : r.samples,
                                      r.mode, seed ^ 0xdadaull);
  auto student = sim::init_student(r.n1, r.n2, r.n3, r.depth, r.eps, r.init, &data,
                                   seed ^ 0x57aull);
  if (get_or<std::string>(config, "activation", "linear") == "leaky_relu") {
    student.activation = sim::Activation::LeakyRelu;
    student.leaky_slope = get_or<double>(config, "leaky_slope", 0.2);
  }
  sim::TrainOptions opts;
  opts.lambda = r.lambda > 0 ? r.lambda : 0.01 / data.data_s(0);
  opts.epochs = static_cast<long>(std::ceil(r.t_max / opts.lambda));
  opts.record_every = std::max<long>(1, opts.epochs / get_or<int>(config, "record_points", 400));
  opts.track_modes = track;
  const auto trace = sim::train_gd(student, data, opts);
  io::write_trace_csv(out_csv, trace);

  RunManifest m;
  m.config = config;
  m.seed = seed;
  m.wall_time_s = watch.seconds();
  m.outputs = {out_csv};
  write_manifest(out_csv + ".manifest.json", m);
  return m;
}

RunManifest run_shrink(const std::string& input_csv, double aspect, double margin,
                       const std::string& out_csv, const std::string& report_csv) {
  Stopwatch watch;
  const auto m = io::read_matrix_csv(input_csv);
  rmt::SpectrumParams<double> sp{aspect, 1.0};
  const auto rep = shrinkage::shrink_denoise(m, sp, margin);
  io::write_matrix_csv(out_csv, rep.estimate);

  io::Table t;
  std::vector<double> shat, sbar, shrunk;
  for (const auto& d : rep.detected) {
    shat.push_back(d.shat);
    sbar.push_back(d.sbar);
    shrunk.push_back(d.shrunk);
  }
  t.add("shat", shat);
  t.add("sbar_inferred", sbar);
  t.add("s_shrunk", shrunk);
  io::write_table_csv(report_csv, t);

  RunManifest man;
  man.config = {{"input", input_csv}, {"aspect", aspect}, {"margin", margin}};
  man.wall_time_s = watch.seconds();
  man.outputs = {out_csv, report_csv};
  write_manifest(out_csv + ".manifest.json", man);
  return man;
}

namespace {

struct TransferCell {
  double q, snr_b, t_theory, t_sim, ci;
};

std::vector<TransferCell> transfer_cells(double snr_a, const std::vector<double>& qs,
                                         const std::vector<double>& snr_bs,
                                         int n_seeds, std::uint64_t seed,
                                         bool simulate) {
  const int n1 = 100, n3 = 50;
  dynamics::DynamicsParams<double> dyn{1e-3, 1.0, 3};
  std::vector<std::pair<double, double>> grid;
  for (double q : qs)
    for (double sb : snr_bs) grid.push_back({q, sb});

  auto cells = parallel_map(static_cast<int>(grid.size()), [&](int i) {
    const auto [q, sb] = grid[static_cast<std::size_t>(i)];
    const auto pair = transfer::make_rank1_pair(snr_a, sb, q, n1, n3, 1.0, seed);
    TransferCell cell{q, sb, 0, std::nan(""), std::nan("")};
    cell.t_theory = transfer::transfer_benefit_theory(pair, dyn, 1.0).benefit;
    if (simulate) {
      transfer::SimOptions opts;
      opts.student_rank = n3;
      const auto r = transfer::transfer_benefit_sim(pair, opts, n_seeds, seed + i);
      cell.t_sim = r.benefit;
      cell.ci = r.ci_halfwidth;
    }
    return cell;
  });
  return cells;
}

void write_transfer_csv(const std::string& path, double snr_a,
                        const std::vector<TransferCell>& cells) {
  io::Table t;
  std::vector<double> q, sa, sb, th, si, ci;
  for (const auto& c : cells) {
    q.push_back(c.q);
    sa.push_back(snr_a);
    sb.push_back(c.snr_b);
    th.push_back(c.t_theory);
    si.push_back(c.t_sim);
    ci.push_back(c.ci);
  }
  t.add("q", q);
  t.add("snr_a", sa);
  t.add("snr_b", sb);
  t.add("T_theory", th);
  t.add("T_sim", si);
  t.add("ci", ci);
  io::write_table_csv(path, t);
}

}  // namespace

RunManifest run_transfer(double snr_a, double snr_b, double q, bool grid,
                         int n_seeds, std::uint64_t seed, const std::string& out_csv) {
  Stopwatch watch;
  std::vector<TransferCell> cells;
  if (grid) {
    cells = transfer_cells(snr_a, {0.0, 0.25, 0.5, 0.75, 1.0}, {1, 2, 3, 5, 10},
                           n_seeds, seed, true);
  } else {
    cells = transfer_cells(snr_a, {q}, {snr_b}, n_seeds, seed, true);
  }
  write_transfer_csv(out_csv, snr_a, cells);

  RunManifest m;
  m.config = {{"snr_a", snr_a}, {"snr_b", snr_b}, {"q", q}, {"grid", grid},
              {"seeds", n_seeds}};
  m.seed = seed;
  m.wall_time_s = watch.seconds();
  m.outputs = {out_csv};
  write_manifest(out_csv + ".manifest.json", m);
  return m;
}

namespace {

using Writer = void (*)(const fs::path&, std::uint64_t, std::vector<std::string>&);

void reproduce_fig1(const fs::path& dir, std::uint64_t, std::vector<std::string>& outs) {
  dynamics::DynamicsParams<double> dyn{1e-3, 1.0, 3};
  const auto times = log_spaced(0.05, 6.0, 120);
  io::Table curves;
  std::vector<double> tt(times.begin(), times.end());
  curves.add("t_over_tau", tt);
  for (double shat : {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}) {
    std::vector<double> s;
    for (double t : times) s.push_back(dynamics::s_of_t(t, shat, dyn));
    curves.add("s_shat_" + std::to_string(int(shat)), s);
  }
  const std::string f1 = (dir / "fig1_learning_curves.csv").string();
  io::write_table_csv(f1, curves);
  plot_curves(f1, curves, "single-mode learning curves", false, false);
  outs.push_back(f1);

  io::Table wave;
  std::vector<double> shats;
  for (double s = 0.25; s <= 8.0 + 1e-9; s += 0.25) shats.push_back(s);
  wave.add("shat", shats);
  for (double t : {0.5, 1.0, 1.5, 2.0, 3.0}) {
    std::vector<double> frac;
    for (double sh : shats) frac.push_back(dynamics::s_of_t(t, sh, dyn) / sh);
    wave.add("t_" + std::to_string(t).substr(0, 3), frac);
  }
  const std::string f2 = (dir / "fig1_detection_wave.csv").string();
  io::write_table_csv(f2, wave);
  plot_curves(f2, wave, "detection wave s(t, shat)/shat", false, false);
  outs.push_back(f2);
}

void reproduce_fig2(const fs::path& dir, std::uint64_t seed, std::vector<std::string>& outs) {
  const int n = 100, n_seeds = 20;
  const rmt::SpectrumParams<double> sp{1.0, 1.0};

  // (a) bulk spectrum histogram at rank-1 snr 3, pooled over seeds
  std::vector<double> bulk;
  for (int i = 0; i < n_seeds; ++i) {
    const auto teacher = sim::make_teacher(n, n, {3.0}, 1.0, seed + i);
    const auto data = sim::make_dataset(teacher, n, sim::DatasetMode::OrthonormalPEqN1,
                                        seed + 1000 + i);
    for (int j = 1; j < n; ++j) bulk.push_back(data.data_s(j));
  }
  const int bins = 40;
  const double lo = 0.0, hi = sp.upper_edge() * 1.1;
  std::vector<double> centers(bins), emp(bins, 0.0), thr(bins);
  for (int b = 0; b < bins; ++b) {
    centers[b] = lo + (hi - lo) * (b + 0.5) / bins;
    thr[b] = rmt::mp_density(centers[b], sp);
  }
  for (double v : bulk) {
    const int b = std::min(bins - 1, std::max(0, int((v - lo) / (hi - lo) * bins)));
    emp[b] += 1.0;
  }
  const double norm = bulk.size() * (hi - lo) / bins;
  for (double& e : emp) e /= norm;
  io::Table spec;
  spec.add("shat", centers);
  spec.add("empirical_density", emp);
  spec.add("mp_density", thr);
  const std::string f1 = (dir / "fig2_spectrum.csv").string();
  io::write_table_csv(f1, spec);
  plot_curves(f1, spec, "bulk singular value density, A=1", false, false);
  outs.push_back(f1);

  // (b, c) top singular value and overlap transfer curves
  std::vector<double> sbars;
  for (double s = 0.25; s <= 6.0 + 1e-9; s += 0.25) sbars.push_back(s);
  std::vector<double> shat_emp(sbars.size(), 0.0), ov_emp(sbars.size(), 0.0);
  std::vector<double> shat_thr, ov_thr;
  for (std::size_t k = 0; k < sbars.size(); ++k) {
    shat_thr.push_back(rmt::shat_of_sbar(sbars[k], sp));
    ov_thr.push_back(rmt::overlap(sbars[k], sp).o);
  }
  auto rows = parallel_map(static_cast<int>(sbars.size()), [&](int k) {
    double se = 0, oe = 0;
    for (int i = 0; i < n_seeds; ++i) {
      const auto teacher = sim::make_teacher(n, n, {sbars[k]}, 1.0, seed + i);
      const auto data = sim::make_dataset(teacher, n, sim::DatasetMode::OrthonormalPEqN1,
                                          seed + 1000 + i);
      se += data.data_s(0);
      oe += std::abs(data.data_u.col(0).dot(teacher.u_out.col(0))) *
            std::abs(data.data_v.col(0).dot(teacher.v_in.col(0)));
    }
    return std::pair<double, double>{se / n_seeds, oe / n_seeds};
  });
  for (std::size_t k = 0; k < sbars.size(); ++k) {
    shat_emp[k] = rows[k].first;
    ov_emp[k] = rows[k].second;
  }
  io::Table tb;
  tb.add("sbar", sbars);
  tb.add("shat_empirical", shat_emp);
  tb.add("shat_theory", shat_thr);
  tb.add("overlap_empirical", ov_emp);
  tb.add("overlap_theory", ov_thr);
  const std::string f2 = (dir / "fig2_transfer_overlap.csv").string();
  io::write_table_csv(f2, tb);
  plot_curves(f2, tb, "spiked singular value and overlap vs SNR", false, false);
  outs.push_back(f2);
}

void fig3_like(const fs::path& dir, std::uint64_t seed, std::vector<std::string>& outs,
               int depth, double eps, double lambda, double t_max, const char* stem) {
  const std::vector<std::pair<std::string, std::vector<double>>> teachers = {
      {"rank1", {3.0}}, {"rank3", {6.0, 4.0, 2.0}}};
  for (const auto& [name, snrs] : teachers) {
    const auto grid = log_spaced(0.01, t_max, 60);
    theory::TheoryConfig cfg;
    cfg.teacher_snrs = snrs;
    cfg.n1 = 100;
    cfg.n3 = 50;
    cfg.aspect_ratio = 0.5;
    cfg.student_rank = 50;
    cfg.dyn = {eps, 1.0, depth};
    const auto train_th = theory::train_error_curve(grid, cfg);
    const auto test_th = theory::test_error_curve(grid, cfg);

    SimRecipe r;
    r.snrs = snrs;
    r.depth = depth;
    r.eps = eps;
    r.lambda = lambda;
    r.t_max = t_max;
    const auto ta = mean_curves(r, grid, 5, seed);
    r.init = sim::InitMode::Random;
    const auto rnd = mean_curves(r, grid, 5, seed + 500);

    io::Table t;
    t.add("t_over_tau", grid);
    t.add("train_theory", train_th);
    t.add("test_theory", test_th);
    t.add("train_ta", ta.train);
    t.add("test_ta", ta.test);
    t.add("train_random", rnd.train);
    t.add("test_random", rnd.test);
    const std::string f = (dir / (std::string(stem) + "_" + name + ".csv")).string();
    io::write_table_csv(f, t);
    plot_curves(f, t, std::string(stem) + " " + name, true, false);
    outs.push_back(f);
  }
}

void reproduce_fig3(const fs::path& dir, std::uint64_t seed, std::vector<std::string>& outs) {
  fig3_like(dir, seed, outs, 3, 1e-3, 1.6e-3, 3.0, "fig3");
}

void reproduce_fig_deep(const fs::path& dir, std::uint64_t seed, std::vector<std::string>& outs) {
  fig3_like(dir, seed, outs, 5, 0.03, 5e-4, 2.2, "fig_deep");
}

void reproduce_fig5(const fs::path& dir, std::uint64_t seed, std::vector<std::string>& outs) {
  const std::vector<double> qs{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> sbs{1, 2, 3, 5, 10};
  struct Panel {
    double snr_a;
    bool simulate;
    const char* name;
  };
  for (const Panel p : {Panel{0.84, true, "a"}, Panel{3.0, true, "b"}, Panel{100.0, false, "c"}}) {
    const auto cells = transfer_cells(p.snr_a, qs, sbs, 4, seed, p.simulate);
    const std::string f = (dir / (std::string("fig5") + p.name + ".csv")).string();
    write_transfer_csv(f, p.snr_a, cells);
    outs.push_back(f);
  }
}

void reproduce_fig6(const fs::path& dir, std::uint64_t seed, std::vector<std::string>& outs) {
  const std::vector<double> snrs{6.0, 4.0, 2.0};
  const auto teacher = sim::make_teacher(100, 50, snrs, 1.0, seed);
  const auto structured =
      sim::make_dataset(teacher, 100, sim::DatasetMode::OrthonormalPEqN1, seed + 1);
  const auto randomized =
      sim::make_dataset(teacher, 100, sim::DatasetMode::RandomizedLabels, seed + 1);

  io::Table spectra;
  std::vector<double> idx, s_str, s_rnd;
  for (int i = 0; i < 50; ++i) {
    idx.push_back(i + 1);
    s_str.push_back(structured.data_s(i));
    s_rnd.push_back(randomized.data_s(i));
  }
  spectra.add("mode", idx);
  spectra.add("structured", s_str);
  spectra.add("randomized", s_rnd);
  const std::string f1 = (dir / "fig6_spectra.csv").string();
  io::write_table_csv(f1, spectra);
  plot_curves(f1, spectra, "structured vs randomized spectra", false, false);
  outs.push_back(f1);

  const auto grid = log_spaced(0.05, 6.0, 60);
  SimRecipe r;
  r.snrs = snrs;
  r.lambda = 1.6e-3;
  r.t_max = 6.0;
  const auto ms = mean_curves(r, grid, 3, seed);
  r.mode = sim::DatasetMode::RandomizedLabels;
  const auto mr = mean_curves(r, grid, 3, seed);
  io::Table curves;
  curves.add("t_over_tau", grid);
  curves.add("train_structured", ms.train);
  curves.add("train_randomized", mr.train);
  const std::string f2 = (dir / "fig6_train_curves.csv").string();
  io::write_table_csv(f2, curves);
  plot_curves(f2, curves, "training error, structured vs randomized", true, false);
  outs.push_back(f2);
}

void reproduce_fig_alignment(const fs::path& dir, std::uint64_t seed,
                             std::vector<std::string>& outs) {
  for (int depth : {3, 5}) {
    for (const auto& [name, snrs] :
         std::vector<std::pair<std::string, std::vector<double>>>{
             {"rank1", {3.0}}, {"rank3", {6.0, 4.0, 2.0}}}) {
      SimRecipe r;
      r.snrs = snrs;
      r.depth = depth;
      r.eps = 0.01;
      r.lambda = depth == 3 ? 2e-3 : 1e-3;
      r.t_max = depth == 3 ? 3.0 : 5.0;
      r.init = sim::InitMode::Random;
      const auto trace = run_once(r, seed, static_cast<int>(snrs.size()));
      const std::string f =
          (dir / ("fig_alignment_" + name + "_depth" + std::to_string(depth) + ".csv"))
              .string();
      io::write_trace_csv(f, trace);
      outs.push_back(f);
    }
  }
}

void reproduce_fig_p(const fs::path& dir, std::uint64_t seed, std::vector<std::string>& outs) {
  const int n = 100;
  const auto grid = log_spaced(0.01, 2.5, 50);

  io::Table curves;
  curves.add("t_over_tau", grid);
  for (int p : {50, 100, 200, 400}) {
    theory::TheoryConfig cfg;
    cfg.teacher_snrs = {3.0};
    cfg.n1 = n;
    cfg.n3 = n;
    cfg.aspect_ratio = 1.0;
    cfg.student_rank = n;
    cfg.dyn = {1e-3, 1.0, 3};
    cfg.sample_count = p;
    std::vector<double> th;
    if (p < n) {
      th = theory::undersampled_test_error_curve(grid, cfg);
    } else {
      const auto eff = theory::oversampled_equivalent(cfg);
      th = theory::test_error_curve(grid, eff);
    }
    curves.add("theory_P" + std::to_string(p), th);

    SimRecipe r;
    r.n1 = n;
    r.n2 = n;
    r.n3 = n;
    r.snrs = {3.0};
    r.samples = p;
    r.mode = p < n ? sim::DatasetMode::Undersampled : sim::DatasetMode::Oversampled;
    r.t_max = 2.5;
    const auto mc = mean_curves(r, grid, 3, seed);
    curves.add("sim_P" + std::to_string(p), mc.test);
  }
  const std::string f1 = (dir / "fig_P_test_curves.csv").string();
  io::write_table_csv(f1, curves);
  plot_curves(f1, curves, "test error vs training time for varying P", true, false);
  outs.push_back(f1);

  // min-error collapse against SNR * sqrt(P/n1)
  io::Table collapse;
  std::vector<double> xs{2.0, 3.0, 4.0, 6.0};
  collapse.add("snr_times_sqrt_density", xs);
  for (int p : {100, 200, 400}) {
    const double root_d = std::sqrt(double(p) / n);
    auto mins = parallel_map(static_cast<int>(xs.size()), [&](int k) {
      double acc = 0;
      const int n_seeds = 5;
      for (int i = 0; i < n_seeds; ++i) {
        SimRecipe r;
        r.n1 = n;
        r.n2 = n;
        r.n3 = n;
        r.snrs = {xs[static_cast<std::size_t>(k)] / root_d};
        r.samples = p;
        r.mode = sim::DatasetMode::Oversampled;
        r.t_max = 3.0;
        const auto trace = run_once(r, seed + 31ull * i);
        acc += trace.test_errors[sim::argmin_test(trace)];
      }
      return acc / n_seeds;
    });
    collapse.add("min_err_P" + std::to_string(p), mins);
  }
  const std::string f2 = (dir / "fig_P_collapse.csv").string();
  io::write_table_csv(f2, collapse);
  plot_curves(f2, collapse, "optimal-stopping error collapse", false, false);
  outs.push_back(f2);
}

void reproduce_fig_rank(const fs::path& dir, std::uint64_t seed,
                        std::vector<std::string>& outs) {
  const std::vector<int> ranks{5, 25, 50, 100};
  io::Table t;
  std::vector<double> n2s, eta, era, tta, tra;
  for (int n2 : ranks) {
    double e_ta = 0, e_rnd = 0, t_ta = 0, t_rnd = 0;
    const int n_seeds = 5;
    auto vals = parallel_map(n_seeds, [&](int i) {
      SimRecipe r;
      r.n1 = 100;
      r.n3 = 100;
      r.n2 = n2;
      r.snrs = {3.0};
      r.t_max = 4.0;
      r.lambda = 3e-3;
      const auto ta = run_once(r, seed + 17ull * i);
      r.init = sim::InitMode::Random;
      const auto rnd = run_once(r, seed + 17ull * i);
      const auto ia = sim::argmin_test(ta), ir = sim::argmin_test(rnd);
      return std::array<double, 4>{ta.test_errors[ia], rnd.test_errors[ir],
                                   ta.times[ia], rnd.times[ir]};
    });
    for (const auto& v : vals) {
      e_ta += v[0] / n_seeds;
      e_rnd += v[1] / n_seeds;
      t_ta += v[2] / n_seeds;
      t_rnd += v[3] / n_seeds;
    }
    n2s.push_back(n2);
    eta.push_back(e_ta);
    era.push_back(e_rnd);
    tta.push_back(t_ta);
    tra.push_back(t_rnd);
  }
  t.add("n2", n2s);
  t.add("eps_opt_aligned", eta);
  t.add("eps_opt_random", era);
  t.add("t_opt_aligned", tta);
  t.add("t_opt_random", tra);
  const std::string f = (dir / "fig_rank.csv").string();
  io::write_table_csv(f, t);
  plot_curves(f, t, "optimal stopping vs student rank", false, false);
  outs.push_back(f);
}

void reproduce_fig_shrink(const fs::path& dir, std::uint64_t seed,
                          std::vector<std::string>& outs) {
  const rmt::SpectrumParams<double> sp{0.5, 1.0};
  std::vector<double> sbars{1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0};
  auto rows = parallel_map(static_cast<int>(sbars.size()), [&](int k) {
    const double sb = sbars[static_cast<std::size_t>(k)];
    const int n_seeds = 5;
    double e_shrink = 0, e_gd = 0;
    for (int i = 0; i < n_seeds; ++i) {
      const auto teacher = sim::make_teacher(100, 50, {sb}, 1.0, seed + 13ull * i);
      const auto data = sim::make_dataset(teacher, 100,
                                          sim::DatasetMode::OrthonormalPEqN1,
                                          seed + 1000 + 13ull * i);
      const auto rep = shrinkage::shrink_denoise(data.sigma31, sp);
      e_shrink +=
          sim::measure_errors(rep.estimate, data, teacher).second / n_seeds;

      auto student = sim::init_student(100, 50, 50, 3, 1e-3, sim::InitMode::Aligned,
                                       &data, seed + 2000 + i);
      sim::TrainOptions topt;
      topt.lambda = 0.01 / data.data_s(0);
      topt.epochs = static_cast<long>(std::ceil(3.0 / topt.lambda));
      topt.record_every = 10;
      const auto trace = sim::train_gd(student, data, topt);
      e_gd += trace.test_errors[sim::argmin_test(trace)] / n_seeds;
    }
    double pred = 1.0;
    if (sb > rmt::detection_threshold(sp))
      pred = theory::nongradient_optimal_error({sb}, sp);
    return std::array<double, 3>{pred, e_shrink, e_gd};
  });
  io::Table t;
  std::vector<double> pr, es, eg;
  for (const auto& r : rows) {
    pr.push_back(r[0]);
    es.push_back(r[1]);
    eg.push_back(r[2]);
  }
  t.add("sbar", sbars);
  t.add("eq16_prediction", pr);
  t.add("shrinkage_error", es);
  t.add("gd_optimal_stopping", eg);
  const std::string f = (dir / "fig_shrink.csv").string();
  io::write_table_csv(f, t);
  plot_curves(f, t, "shrinkage vs gradient descent", false, false);
  outs.push_back(f);
}

}  // namespace

const std::vector<std::string>& reproduce_targets() {
  static const std::vector<std::string> targets{
      "fig1", "fig2", "fig3", "fig_deep", "fig5",
      "fig6", "fig_alignment", "fig_P", "fig_rank", "fig_shrink"};
  return targets;
}

RunManifest reproduce(const std::string& figure_id, const std::string& outdir,
                      std::uint64_t seed) {
  Stopwatch watch;
  const fs::path dir(outdir);
  fs::create_directories(dir);
  std::vector<std::string> outs;

  if (figure_id == "fig1") reproduce_fig1(dir, seed, outs);
  else if (figure_id == "fig2") reproduce_fig2(dir, seed, outs);
  else if (figure_id == "fig3") reproduce_fig3(dir, seed, outs);
  else if (figure_id == "fig_deep") reproduce_fig_deep(dir, seed, outs);
  else if (figure_id == "fig5") reproduce_fig5(dir, seed, outs);
  else if (figure_id == "fig6") reproduce_fig6(dir, seed, outs);
  else if (figure_id == "fig_alignment") reproduce_fig_alignment(dir, seed, outs);
  else if (figure_id == "fig_P") reproduce_fig_p(dir, seed, outs);
  else if (figure_id == "fig_rank") reproduce_fig_rank(dir, seed, outs);
  else if (figure_id == "fig_shrink") reproduce_fig_shrink(dir, seed, outs);
  else throw UnknownFigure("unknown figure id '" + figure_id + "'");

  RunManifest m;
  m.config = {{"figure", figure_id}, {"outdir", outdir}};
  m.seed = seed;
  m.wall_time_s = watch.seconds();
  m.outputs = outs;
  write_manifest((dir / "run_manifest.json").string(), m);
  return m;
}

}  // namespace gendyn::harness
