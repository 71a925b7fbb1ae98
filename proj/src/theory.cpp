#include "gendyn/theory.hpp"

#include <algorithm>
#include <cmath>

namespace gendyn::theory {

void TheoryConfig::validate() const {
  if (n1 <= 0 || n3 <= 0) throw ConfigInvalid("TheoryConfig: n1 and n3 must be positive");
  if (n3 > n1) throw ConfigInvalid("TheoryConfig: requires n3 <= n1");
  if (std::abs(aspect_ratio - double(n3) / double(n1)) > 1e-9)
    throw ConfigInvalid("TheoryConfig: aspect_ratio must equal n3/n1");
  if (student_rank < teacher_rank() || student_rank > n3)
    throw ConfigInvalid("TheoryConfig: requires teacher_rank <= student_rank <= n3");
  if (!(noise_scale > 0)) throw ConfigInvalid("TheoryConfig: noise_scale must be positive");
  for (std::size_t i = 0; i < teacher_snrs.size(); ++i) {
    if (teacher_snrs[i] < 0) throw ConfigInvalid("TheoryConfig: SNRs must be >= 0");
    if (i > 0 && teacher_snrs[i] > teacher_snrs[i - 1] + 1e-12)
      throw ConfigInvalid("TheoryConfig: SNRs must be descending");
  }
  if (samples() < 1) throw ConfigInvalid("TheoryConfig: sample count must be >= 1");
  try {
    dyn.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigInvalid(e.what());
  }
}

namespace {

constexpr int kCurveIntervals = 4096;

// Precomputed pieces of Eqs. (14)-(15): signal-mode data values and overlaps,
// plus MP quadrature nodes for the learned (R_in) and never-learned (R_out)
// bulk regions. Mode counting is exact: the bulk holds n3 - teacher_rank
// modes, split (n3 - n2) : (n2 - teacher_rank) between R_out and R_in.
struct CurveContext {
  std::vector<double> shat;      // data singular value per teacher mode
  std::vector<double> sbar_abs;  // teacher singular value (absolute units)
  std::vector<double> ov;       // overlap product per teacher mode
  rmt::QuadratureNodes<double> in, out;
  int n_in = 0, n_out = 0;      // bulk multiplicities
  double den_train = 0, den_test = 0;
  dynamics::DynamicsParams<double> dyn;

  double curve(double t, double sh) const { return dynamics::mode_curve(t, sh, dyn); }
};

CurveContext make_context(const TheoryConfig& cfg) {
  cfg.validate();
  if (cfg.samples() != cfg.n1)
    throw RegimeError("theory curves implement the P = n1 design; see undersampled/oversampled ops");
  const auto sp = cfg.spectrum();
  CurveContext ctx;
  ctx.dyn = cfg.dyn;
  const int nb2 = cfg.teacher_rank();
  const int n_bulk = cfg.n3 - nb2;
  ctx.n_out = cfg.n3 - cfg.student_rank;
  ctx.n_in = cfg.student_rank - nb2;

  double sum_shat2 = 0, sum_sbar2 = 0;
  for (double s : cfg.teacher_snrs) {
    const double sh = rmt::shat_of_sbar(s, sp);
    ctx.shat.push_back(sh);
    ctx.sbar_abs.push_back(s * cfg.noise_scale);
    ctx.ov.push_back(rmt::overlap(s, sp).o);
    sum_shat2 += sh * sh;
    sum_sbar2 += s * s * cfg.noise_scale * cfg.noise_scale;
  }

  if (n_bulk > 0) {
    const double f = (ctx.n_out > 0)
                         ? rmt::mp_quantile(sp, double(ctx.n_out) / double(n_bulk))
                         : sp.lower_edge();
    ctx.in = rmt::mp_nodes(sp, f, sp.upper_edge(), kCurveIntervals);
    if (ctx.n_out > 0) ctx.out = rmt::mp_nodes(sp, sp.lower_edge(), f, kCurveIntervals);
  }

  // <shat^2> over the MP bulk equals scale^2 for every aspect ratio.
  ctx.den_train = double(n_bulk) * sp.scale * sp.scale + sum_shat2;
  ctx.den_test = sum_sbar2;
  return ctx;
}

double train_error_at(const CurveContext& ctx, double t) {
  double num = 0;
  if (ctx.n_out > 0 && ctx.out.mass > 0) {
    double acc = 0;
    for (std::size_t i = 0; i < ctx.out.shat.size(); ++i)
      acc += ctx.out.shat[i] * ctx.out.shat[i] * ctx.out.weight[i];
    num += ctx.n_out * acc / ctx.out.mass;
  }
  if (ctx.n_in > 0 && ctx.in.mass > 0) {
    double acc = 0;
    for (std::size_t i = 0; i < ctx.in.shat.size(); ++i) {
      const double sh = ctx.in.shat[i];
      const double d = ctx.curve(t, sh) - sh;
      acc += d * d * ctx.in.weight[i];
    }
    num += ctx.n_in * acc / ctx.in.mass;
  }
  for (std::size_t a = 0; a < ctx.shat.size(); ++a) {
    const double d = ctx.curve(t, ctx.shat[a]) - ctx.shat[a];
    num += d * d;
  }
  return num / ctx.den_train;
}

double test_error_at(const CurveContext& ctx, double t) {
  if (ctx.den_test <= 0)
    throw ConfigInvalid("theory_test_error: needs at least one teacher mode");
  double num = 0;
  if (ctx.n_in > 0 && ctx.in.mass > 0) {
    double acc = 0;
    for (std::size_t i = 0; i < ctx.in.shat.size(); ++i) {
      const double s = ctx.curve(t, ctx.in.shat[i]);
      acc += s * s * ctx.in.weight[i];
    }
    num += ctx.n_in * acc / ctx.in.mass;
  }
  for (std::size_t a = 0; a < ctx.shat.size(); ++a) {
    const double s = ctx.curve(t, ctx.shat[a]);
    const double sb = ctx.sbar_abs[a];
    num += (s - sb) * (s - sb) + 2 * s * sb * (1 - ctx.ov[a]);
  }
  return num / ctx.den_test;
}

}  // namespace

double theory_train_error(double t, const TheoryConfig& cfg) {
  if (t < 0) throw ConfigInvalid("theory_train_error: t must be >= 0");
  return train_error_at(make_context(cfg), t);
}

double theory_test_error(double t, const TheoryConfig& cfg) {
  if (t < 0) throw ConfigInvalid("theory_test_error: t must be >= 0");
  return test_error_at(make_context(cfg), t);
}

std::vector<double> train_error_curve(const std::vector<double>& times,
                                      const TheoryConfig& cfg) {
  const auto ctx = make_context(cfg);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(train_error_at(ctx, t));
  return out;
}

std::vector<double> test_error_curve(const std::vector<double>& times,
                                     const TheoryConfig& cfg) {
  const auto ctx = make_context(cfg);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(test_error_at(ctx, t));
  return out;
}

StoppingPoint optimal_stopping(const TheoryConfig& cfg) {
  const auto ctx = make_context(cfg);
  const double tau = cfg.dyn.tau;
  std::vector<double> grid;
  grid.push_back(0);
  const int n = 200;
  for (int i = 0; i < n; ++i)
    grid.push_back(tau * std::pow(10.0, -2.0 + 5.0 * i / (n - 1)));

  std::size_t best = 0;
  double best_val = test_error_at(ctx, grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = test_error_at(ctx, grid[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == 0) return {0.0, best_val};

  // golden-section refinement on the bracketing interval
  double a = grid[best - 1];
  double b = (best + 1 < grid.size()) ? grid[best + 1] : grid[best] * 1.1;
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = test_error_at(ctx, c), fd = test_error_at(ctx, d);
  while ((b - a) > 1e-6 * std::max(b, tau * 1e-6)) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = test_error_at(ctx, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = test_error_at(ctx, d);
    }
  }
  const double t_opt = (a + b) / 2;
  return {t_opt, test_error_at(ctx, t_opt)};
}

Rank1Optimum rank1_closed_form(double sbar, const rmt::SpectrumParams<double>& sp,
                               const dynamics::DynamicsParams<double>& dyn) {
  sp.validate();
  dyn.validate();
  if (sbar <= rmt::detection_threshold(sp))
    throw BelowThreshold("rank1_closed_form: sbar is at or below the detection threshold");
  const double o = rmt::overlap(sbar, sp).o;
  Rank1Optimum r;
  r.s_opt = sp.scale * sbar * o;
  r.eps_opt = 1 - o * o;
  r.t_opt = dynamics::t_of_s(r.s_opt, rmt::shat_of_sbar(sbar, sp), dyn);
  return r;
}

double nongradient_optimal_error(const std::vector<double>& snrs,
                                 const rmt::SpectrumParams<double>& sp) {
  if (snrs.empty())
    throw std::invalid_argument("nongradient_optimal_error: needs at least one SNR");
  double num = 0, den = 0;
  for (double s : snrs) {
    const double o = rmt::overlap(s, sp).o;
    num += s * s * (1 - o * o);
    den += s * s;
  }
  return num / den;
}

rmt::SpectrumParams<double> randomized_spectrum_params(const std::vector<double>& snrs,
                                                       int n3, int n1, double sigma_z) {
  if (n3 <= 0 || n1 <= 0)
    throw std::invalid_argument("randomized_spectrum_params: dimensions must be positive");
  double sum = 0;
  for (double s : snrs) sum += s * s * sigma_z * sigma_z;
  const double var = sum / n3 + sigma_z * sigma_z / n1;
  return {double(n3) / double(n1), std::sqrt(var)};
}

namespace {

struct UnderContext {
  std::vector<double> shat, sbar_abs, ov;
  rmt::QuadratureNodes<double> bulk;
  int n_bulk = 0, n_frozen = 0;
  double den = 0, eps = 0;
  dynamics::DynamicsParams<double> dyn;
};

// Eq. (23) with A -> D and sbar -> sqrt(D) sbar in the spectrum pieces. The
// overlap against the *true* teacher input vector carries one more factor of
// sqrt(D): the planted in-span direction is P v / ||P v|| and ||P v|| =
// sqrt(D), which the simulation confirms (the unmodified form misses the
// late-time error by ~0.3).
UnderContext make_under_context(const TheoryConfig& cfg) {
  cfg.validate();
  const int p = cfg.samples();
  if (p >= cfg.n1) throw RegimeError("undersampled_test_error: requires P < n1");
  if (cfg.n1 != cfg.n3 || cfg.student_rank != cfg.n3)
    throw ConfigInvalid("undersampled_test_error: stated for the full-rank n1 = n2 = n3 case");
  const double dens = double(p) / double(cfg.n1);
  const rmt::SpectrumParams<double> pd{dens, cfg.noise_scale};
  UnderContext ctx;
  ctx.dyn = cfg.dyn;
  ctx.eps = cfg.dyn.eps;
  ctx.n_frozen = cfg.n3 - p;
  ctx.n_bulk = p - cfg.teacher_rank();
  const double sd = std::sqrt(dens);
  for (double s : cfg.teacher_snrs) {
    ctx.shat.push_back(rmt::shat_of_sbar(sd * s, pd));
    ctx.sbar_abs.push_back(s * cfg.noise_scale);
    ctx.ov.push_back(rmt::overlap(sd * s, pd).o * sd);
    ctx.den += s * s * cfg.noise_scale * cfg.noise_scale;
  }
  ctx.bulk = rmt::mp_nodes(pd, pd.lower_edge(), pd.upper_edge(), kCurveIntervals);
  return ctx;
}

double under_error_at(const UnderContext& ctx, double t) {
  double num = ctx.n_frozen * ctx.eps * ctx.eps;
  if (ctx.n_bulk > 0 && ctx.bulk.mass > 0) {
    double acc = 0;
    for (std::size_t i = 0; i < ctx.bulk.shat.size(); ++i) {
      const double s = dynamics::mode_curve(t, ctx.bulk.shat[i], ctx.dyn);
      acc += s * s * ctx.bulk.weight[i];
    }
    num += ctx.n_bulk * acc / ctx.bulk.mass;
  }
  for (std::size_t a = 0; a < ctx.shat.size(); ++a) {
    const double s = dynamics::mode_curve(t, ctx.shat[a], ctx.dyn);
    const double sb = ctx.sbar_abs[a];
    num += (s - sb) * (s - sb) + 2 * s * sb * (1 - ctx.ov[a]);
  }
  return num / ctx.den;
}

}  // namespace

double undersampled_test_error(double t, const TheoryConfig& cfg) {
  if (t < 0) throw ConfigInvalid("undersampled_test_error: t must be >= 0");
  return under_error_at(make_under_context(cfg), t);
}

std::vector<double> undersampled_test_error_curve(const std::vector<double>& times,
                                                  const TheoryConfig& cfg) {
  const auto ctx = make_under_context(cfg);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(under_error_at(ctx, t));
  return out;
}

TheoryConfig oversampled_equivalent(const TheoryConfig& cfg) {
  cfg.validate();
  const int p = cfg.samples();
  if (p < cfg.n1) throw RegimeError("oversampled_equivalent: requires P >= n1");
  const double dens = double(p) / double(cfg.n1);
  TheoryConfig out = cfg;
  out.sample_count = cfg.n1;
  for (double& s : out.teacher_snrs) s *= std::sqrt(dens);
  out.dyn.tau /= dens;
  return out;
}

}  // namespace gendyn::theory
