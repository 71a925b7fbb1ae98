#include "gendyn/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "gendyn/rmt.hpp"
#include "gendyn/theory.hpp"

namespace gendyn::transfer {

namespace {

constexpr double kZeroMode = 1e-12;

void check_compatible(const sim::TeacherSpec& a, const sim::TeacherSpec& b) {
  if (a.n1() != b.n1()) throw DimError("transfer: tasks must share the input dimension");
  if (a.n3() != b.n3()) throw DimError("transfer: tasks must have equal head dimensions");
  if (std::abs(a.sigma_z - b.sigma_z) > 1e-12)
    throw DimError("transfer: tasks must share the noise level");
}

}  // namespace

sim::TeacherSpec composite_teacher(const sim::TeacherSpec& a, const sim::TeacherSpec& b) {
  check_compatible(a, b);
  const auto n1 = a.n1(), n3 = a.n3();
  if (2 * n3 > n1)
    throw AspectError("composite_teacher: composite aspect 2*n3/n1 exceeds 1");

  Matrix w(2 * n3, n1);
  w.topRows(n3) = a.map();
  w.bottomRows(n3) = b.map();

  Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double tol = kZeroMode * std::max(svd.singularValues()(0), 1.0);
  Eigen::Index rank = 0;
  while (rank < svd.singularValues().size() && svd.singularValues()(rank) > tol) ++rank;

  sim::TeacherSpec c;
  c.u_out = svd.matrixU().leftCols(rank);
  c.snrs = svd.singularValues().head(rank);
  c.v_in = svd.matrixV().leftCols(rank);
  c.sigma_z = a.sigma_z;
  return c;
}

TransferPair make_pair(const sim::TeacherSpec& a, const sim::TeacherSpec& b) {
  check_compatible(a, b);
  TransferPair p;
  p.task_a = a;
  p.task_b = b;
  p.q_matrix = a.v_in.transpose() * b.v_in;
  p.composite = composite_teacher(a, b);
  return p;
}

TransferPair make_rank1_pair(double snr_a, double snr_b, double q, int n1, int n3,
                             double sigma_z, std::uint64_t seed) {
  if (std::abs(q) > 1.0 + 1e-12)
    throw std::invalid_argument("make_rank1_pair: |q| must be <= 1");
  q = std::clamp(q, -1.0, 1.0);
  Rng rng(seed);
  sim::TeacherSpec a;
  a.u_out = rng.split(1).orthonormal_columns(n3, 1);
  a.v_in = rng.split(2).orthonormal_columns(n1, 1);
  a.snrs = Vector::Constant(1, snr_a);
  a.sigma_z = sigma_z;

  Eigen::VectorXd w = rng.split(3).gaussian_matrix(n1, 1);
  w -= a.v_in * (a.v_in.transpose() * w);
  w.normalize();

  sim::TeacherSpec b;
  b.u_out = rng.split(4).orthonormal_columns(n3, 1);
  b.v_in = q * a.v_in + std::sqrt(std::max(0.0, 1 - q * q)) * w;
  b.snrs = Vector::Constant(1, snr_b);
  b.sigma_z = sigma_z;
  return make_pair(a, b);
}

CompositeModes composite_modes_via_q(const Vector& s_a, const Vector& s_b,
                                     const Matrix& q_matrix) {
  const Eigen::Index ra = s_a.size(), rb = s_b.size();
  if (q_matrix.rows() != ra || q_matrix.cols() != rb)
    throw DimError("composite_modes_via_q: Q must be rank_A x rank_B");
  const Eigen::Index n = ra + rb;

  Matrix g = Matrix::Identity(n, n);
  g.topRightCorner(ra, rb) = q_matrix;
  g.bottomLeftCorner(rb, ra) = q_matrix.transpose();

  Eigen::SelfAdjointEigenSolver<Matrix> ge(g);
  if (ge.eigenvalues().minCoeff() < -1e-8)
    throw SingularGram("composite_modes_via_q: Q is not a valid similarity matrix");
  Vector root = ge.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Vector inv_root = root.unaryExpr([](double r) { return r > 1e-9 ? 1.0 / r : 0.0; });
  const Matrix g_half = ge.eigenvectors() * root.asDiagonal() * ge.eigenvectors().transpose();
  const Matrix g_half_inv =
      ge.eigenvectors() * inv_root.asDiagonal() * ge.eigenvectors().transpose();

  Vector s(n);
  s.head(ra) = s_a;
  s.tail(rb) = s_b;
  const Matrix m = g_half * s.array().square().matrix().asDiagonal() * g_half;

  Eigen::SelfAdjointEigenSolver<Matrix> me(m);
  CompositeModes out;
  out.values.resize(n);
  out.coeffs.resize(n, n);
  out.output_weights = Matrix::Zero(n, n);
  out.input_coeffs = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = n - 1 - j;  // descending order
    const double lam = std::max(me.eigenvalues()(src), 0.0);
    out.values(j) = std::sqrt(lam);
    out.coeffs.col(j) = me.eigenvectors().col(src);
    if (out.values(j) > kZeroMode) {
      out.output_weights.col(j) =
          s.asDiagonal() * (g_half * out.coeffs.col(j)) / out.values(j);
      out.input_coeffs.col(j) = g_half_inv * out.coeffs.col(j);
    }
  }
  return out;
}

Matrix assemble_input_vectors(const Matrix& v_a, const Matrix& v_b,
                              const CompositeModes& modes) {
  if (v_a.rows() != v_b.rows()) throw DimError("assemble_input_vectors: shared input space required");
  Matrix vab(v_a.rows(), v_a.cols() + v_b.cols());
  vab.leftCols(v_a.cols()) = v_a;
  vab.rightCols(v_b.cols()) = v_b;
  Matrix v = vab * modes.input_coeffs;
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    const double n = v.col(j).norm();
    if (n > kZeroMode) v.col(j) /= n;
  }
  return v;
}

namespace {

// Task-A-projected test error of the training-aligned composite student, in
// the same diagonal approximation the single-task theory uses: each detected
// composite data mode keeps overlap (o_u, o_v) with its own teacher mode, the
// lost output weight (1 - o_u^2) and every bulk mode leak a fraction
// head/total = 1/2 of their energy into the A head.
struct JointContext {
  std::vector<double> shat, sbar_abs, ou, ov, pu2;
  rmt::QuadratureNodes<double> in;
  int n_in = 0;
  double head_frac = 0.5;
  double den = 0;  // sum of task-A teacher squared singular values
  dynamics::DynamicsParams<double> dyn;

  double error_at(double t) const {
    double num = 0;
    for (std::size_t j = 0; j < shat.size(); ++j) {
      const double s = dynamics::mode_curve(t, shat[j], dyn);
      const double pu_hat2 = ou[j] * ou[j] * pu2[j] + (1 - ou[j] * ou[j]) * head_frac;
      num += s * s * pu_hat2 - 2 * s * sbar_abs[j] * ou[j] * ov[j] * pu2[j];
    }
    if (n_in > 0 && in.mass > 0) {
      double acc = 0;
      for (std::size_t i = 0; i < in.shat.size(); ++i) {
        const double s = dynamics::mode_curve(t, in.shat[i], dyn);
        acc += s * s * in.weight[i];
      }
      num += n_in * acc / in.mass * head_frac;
    }
    return (num + den) / den;
  }
};

double minimize_over_time(const JointContext& ctx) {
  const double tau = ctx.dyn.tau;
  double best = ctx.error_at(0.0);
  const int n = 200;
  std::vector<double> grid{0.0};
  for (int i = 0; i < n; ++i) grid.push_back(tau * std::pow(10.0, -2.0 + 5.0 * i / (n - 1)));
  std::size_t bi = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = ctx.error_at(grid[i]);
    if (v < best) {
      best = v;
      bi = i;
    }
  }
  if (bi == 0) return best;
  double a = grid[bi - 1], b = (bi + 1 < grid.size()) ? grid[bi + 1] : grid[bi] * 1.1;
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = ctx.error_at(c), fd = ctx.error_at(d);
  while ((b - a) > 1e-6 * b) {
    if (fc < fd) {
      b = d; d = c; fd = fc; c = b - gr * (b - a); fc = ctx.error_at(c);
    } else {
      a = c; c = d; fc = fd; d = a + gr * (b - a); fd = ctx.error_at(d);
    }
  }
  return std::min(best, ctx.error_at((a + b) / 2));
}

}  // namespace

TransferResult transfer_benefit_theory(const TransferPair& pair,
                                       const dynamics::DynamicsParams<double>& dyn,
                                       double sigma_z) {
  const int n1 = static_cast<int>(pair.task_a.n1());
  const int n3 = static_cast<int>(pair.task_a.n3());
  const double aspect_joint = 2.0 * n3 / n1;
  if (aspect_joint > 1.0 + 1e-12)
    throw AspectError("transfer_benefit_theory: composite aspect exceeds 1");

  // single-task optimum, full-rank student on one head
  theory::TheoryConfig alone;
  alone.teacher_snrs.assign(pair.task_a.snrs.data(),
                            pair.task_a.snrs.data() + pair.task_a.rank());
  alone.aspect_ratio = double(n3) / n1;
  alone.student_rank = n3;
  alone.n3 = n3;
  alone.n1 = n1;
  alone.dyn = dyn;
  alone.noise_scale = sigma_z;
  const double eps_alone = theory::optimal_stopping(alone).eps_opt;

  // composite modes from (S_A, S_B, Q) only
  const auto modes = composite_modes_via_q(pair.task_a.snrs, pair.task_b.snrs,
                                           pair.q_matrix);
  const rmt::SpectrumParams<double> sp{aspect_joint, sigma_z};
  const int ra = static_cast<int>(pair.task_a.rank());

  JointContext ctx;
  ctx.dyn = dyn;
  ctx.head_frac = 0.5;
  for (double s : alone.teacher_snrs) ctx.den += s * s * sigma_z * sigma_z;

  int live = 0;
  for (Eigen::Index j = 0; j < modes.values.size(); ++j) {
    const double val = modes.values(j);
    if (val <= kZeroMode) continue;
    ++live;
    const auto ov = rmt::overlap(val, sp);
    ctx.shat.push_back(rmt::shat_of_sbar(val, sp));
    ctx.sbar_abs.push_back(val * sigma_z);
    ctx.ou.push_back(ov.o_u);
    ctx.ov.push_back(ov.o_v);
    ctx.pu2.push_back(modes.output_weights.col(j).head(ra).squaredNorm());
  }

  const int n3_joint = 2 * n3;
  const int student_rank = n3;  // one head's worth of modes
  const int n_bulk = n3_joint - live;
  ctx.n_in = student_rank - live;
  if (ctx.n_in > 0 && n_bulk > 0) {
    const double left = double(n3_joint - student_rank) / double(n_bulk);
    const double f = rmt::mp_quantile(sp, left);
    ctx.in = rmt::mp_nodes(sp, f, sp.upper_edge(), 4096);
  }

  TransferResult r;
  r.method = Method::Theory;
  r.eps_a_alone = eps_alone;
  r.eps_a_joint = minimize_over_time(ctx);
  r.benefit = r.eps_a_alone - r.eps_a_joint;
  return r;
}

double sim_min_test_error(const sim::TeacherSpec& teacher, const SimOptions& opts,
                          std::uint64_t seed, int projector_rows) {
  const int n1 = static_cast<int>(teacher.n1());
  const int n3 = static_cast<int>(teacher.n3());
  const int rank = opts.student_rank > 0 ? opts.student_rank : n3;
  const auto data = sim::make_dataset(teacher, n1, sim::DatasetMode::OrthonormalPEqN1,
                                      seed);
  auto student = sim::init_student(n1, rank, n3, 3, opts.eps, opts.init, &data,
                                   seed ^ 0x5eedull);
  const double lambda = opts.lambda > 0 ? opts.lambda : 0.01 / data.data_s(0);

  sim::TrainOptions topts;
  topts.lambda = lambda;
  topts.epochs = static_cast<long>(std::ceil(opts.t_max / lambda));
  topts.record_every = opts.record_every;
  Matrix proj;
  if (projector_rows > 0) {
    proj = Matrix::Zero(projector_rows, n3);
    proj.leftCols(projector_rows).setIdentity();
    topts.projector = &proj;
  }
  const auto trace = sim::train_gd(student, data, topts);
  return trace.test_errors[sim::argmin_test(trace)];
}

TransferResult transfer_benefit_sim(const TransferPair& pair, const SimOptions& opts,
                                    int n_seeds, std::uint64_t base_seed) {
  if (n_seeds < 2) throw std::invalid_argument("transfer_benefit_sim: need >= 2 seeds");
  const int n3 = static_cast<int>(pair.task_a.n3());
  SimOptions alone_opts = opts;
  if (alone_opts.student_rank == 0) alone_opts.student_rank = n3;
  SimOptions joint_opts = alone_opts;

  std::vector<double> diffs(n_seeds);
  double alone_sum = 0, joint_sum = 0;
  for (int i = 0; i < n_seeds; ++i) {
    const std::uint64_t s = base_seed + 1000003ull * i;
    const double ea = sim_min_test_error(pair.task_a, alone_opts, s);
    const double ej = sim_min_test_error(pair.composite, joint_opts, s ^ 0x70ull, n3);
    diffs[i] = ea - ej;
    alone_sum += ea;
    joint_sum += ej;
  }

  TransferResult r;
  r.method = Method::Simulation;
  r.eps_a_alone = alone_sum / n_seeds;
  r.eps_a_joint = joint_sum / n_seeds;
  r.benefit = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n_seeds;

  // percentile bootstrap over seeds
  Rng rng(base_seed ^ 0xb007);
  const int reps = 1000;
  std::vector<double> means(reps);
  for (int r2 = 0; r2 < reps; ++r2) {
    double acc = 0;
    for (int i = 0; i < n_seeds; ++i)
      acc += diffs[static_cast<std::size_t>(rng.uniform() * n_seeds)];
    means[r2] = acc / n_seeds;
  }
  std::sort(means.begin(), means.end());
  const double lo = means[static_cast<std::size_t>(0.025 * (reps - 1))];
  const double hi = means[static_cast<std::size_t>(0.975 * (reps - 1))];
  r.ci_halfwidth = (hi - lo) / 2;
  return r;
}

}  // namespace gendyn::transfer
