#include "gendyn/simulator.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include <Eigen/SVD>

#include "gendyn/theory.hpp"

namespace gendyn::sim {

const char* to_string(DatasetMode mode) {
  switch (mode) {
    case DatasetMode::OrthonormalPEqN1: return "orthonormal_P_eq_N1";
    case DatasetMode::Oversampled: return "oversampled";
    case DatasetMode::Undersampled: return "undersampled";
    case DatasetMode::RandomizedLabels: return "randomized_labels";
    case DatasetMode::GaussianInputs: return "gaussian_inputs";
  }
  return "?";
}

Matrix StudentState::composite() const {
  Matrix w = layers.front();
  for (std::size_t l = 1; l < layers.size(); ++l) w = layers[l] * w;
  return w;
}

TeacherSpec make_teacher(int n1, int n3, const std::vector<double>& snrs,
                         double sigma_z, std::uint64_t seed) {
  const int rank = static_cast<int>(snrs.size());
  if (n1 <= 0 || n3 <= 0 || rank > std::min(n1, n3))
    throw DimError("make_teacher: need rank <= min(n1, n3)");
  for (int i = 0; i < rank; ++i) {
    if (snrs[i] <= 0) throw DimError("make_teacher: SNRs must be positive");
    if (i > 0 && snrs[i] > snrs[i - 1] + 1e-12)
      throw DimError("make_teacher: SNRs must be descending");
  }
  Rng rng(seed);
  TeacherSpec t;
  t.u_out = rng.split(1).orthonormal_columns(n3, rank);
  t.v_in = rng.split(2).orthonormal_columns(n1, rank);
  t.snrs = Eigen::Map<const Vector>(snrs.data(), rank);
  t.sigma_z = sigma_z;
  return t;
}

TrainingSet make_dataset(const TeacherSpec& teacher, int samples, DatasetMode mode,
                         std::uint64_t seed) {
  const auto n1 = teacher.n1(), n3 = teacher.n3();
  if (samples < 1) throw DimError("make_dataset: need at least one sample");
  Rng rng(seed);
  auto noise = [&](Eigen::Index cols) {
    return rng.split(7).gaussian_matrix(n3, cols, teacher.sigma_z / std::sqrt(double(n1)));
  };

  TrainingSet d;
  d.mode = mode;
  d.teacher_map = teacher.map();
  d.teacher_sq_norm = d.teacher_map.squaredNorm();

  switch (mode) {
    case DatasetMode::OrthonormalPEqN1: {
      if (samples != n1)
        throw ModeError("make_dataset: orthonormal design requires P = n1");
      d.x = Matrix::Identity(n1, n1);
      d.y = d.teacher_map + noise(n1);
      d.sigma11 = Matrix::Identity(n1, n1);
      d.sigma11_is_identity = true;
      d.sigma31 = d.y;
      break;
    }
    case DatasetMode::Oversampled: {
      if (samples < n1)
        throw ModeError("make_dataset: oversampled design requires P >= n1");
      const double root_d = std::sqrt(double(samples) / double(n1));
      // rows orthonormal: transpose of a thin-QR basis of a samples x n1 draw
      d.x = root_d * rng.split(3).orthonormal_columns(samples, n1).transpose();
      d.y = d.teacher_map * d.x + noise(samples);
      d.sigma11 = d.x * d.x.transpose();
      d.sigma31 = d.y * d.x.transpose();
      break;
    }
    case DatasetMode::Undersampled: {
      if (samples >= n1)
        throw ModeError("make_dataset: undersampled design requires P < n1");
      d.x = rng.split(3).orthonormal_columns(n1, samples);
      d.y = d.teacher_map * d.x + noise(samples);
      d.sigma11 = d.x * d.x.transpose();
      d.sigma31 = d.y * d.x.transpose();
      break;
    }
    case DatasetMode::RandomizedLabels: {
      if (samples != n1)
        throw ModeError("make_dataset: randomized design requires P = n1");
      std::vector<double> snrs(teacher.snrs.data(), teacher.snrs.data() + teacher.rank());
      const auto sp = theory::randomized_spectrum_params(
          snrs, static_cast<int>(n3), static_cast<int>(n1), teacher.sigma_z);
      d.x = Matrix::Identity(n1, n1);
      d.y = rng.split(7).gaussian_matrix(n3, n1, sp.scale / std::sqrt(double(n1)));
      d.sigma11 = Matrix::Identity(n1, n1);
      d.sigma11_is_identity = true;
      d.sigma31 = d.y;
      break;
    }
    case DatasetMode::GaussianInputs: {
      d.x = rng.split(3).gaussian_matrix(n1, samples, 1.0 / std::sqrt(double(n1)));
      d.y = d.teacher_map * d.x + noise(samples);
      d.sigma11 = d.x * d.x.transpose();
      d.sigma31 = d.y * d.x.transpose();
      break;
    }
  }

  d.y_sq_norm = d.y.squaredNorm();
  Eigen::BDCSVD<Matrix> svd(d.sigma31, Eigen::ComputeThinU | Eigen::ComputeThinV);
  d.data_u = svd.matrixU();
  d.data_s = svd.singularValues();
  d.data_v = svd.matrixV();
  return d;
}

StudentState init_student(int n1, int n2, int n3, int depth, double eps, InitMode mode,
                          const TrainingSet* dataset, std::uint64_t seed) {
  if (depth < 3) throw DimError("init_student: depth must be >= 3");
  if (n2 < 1 || n2 > std::min(n1, n3))
    throw DimError("init_student: requires 1 <= n2 <= min(n1, n3)");
  if (!(eps > 0)) throw DimError("init_student: eps must be positive");
  if (mode == InitMode::Aligned && dataset == nullptr)
    throw MissingDataset("init_student: aligned mode needs a dataset");
  if (dataset != nullptr &&
      (dataset->n1() != n1 || dataset->n3() != n3 || dataset->data_v.cols() < n2))
    throw DimError("init_student: dataset dimensions do not match");

  Rng rng(seed);
  const int nlayers = depth - 1;
  const double layer_scale = std::pow(eps, 1.0 / nlayers);

  // Balanced factorization on the eps-manifold: layer l = O_{l+1] scale O_l^T
  // gives a composite with all n2 singular values exactly eps, and keeps the
  // single-mode flow of the deep chain exact for aligned students.
  std::vector<Matrix> frames(nlayers + 1);
  if (mode == InitMode::Aligned) {
    frames[0] = dataset->data_v.leftCols(n2);
    frames[nlayers] = dataset->data_u.leftCols(n2);
  } else {
    frames[0] = rng.split(11).orthonormal_columns(n1, n2);
    frames[nlayers] = rng.split(12).orthonormal_columns(n3, n2);
  }
  for (int l = 1; l < nlayers; ++l)
    frames[l] = rng.split(100 + l).orthonormal_columns(n2, n2);

  StudentState s;
  s.init_eps = eps;
  s.init_mode = mode;
  s.seed = seed;
  s.layers.reserve(nlayers);
  for (int l = 0; l < nlayers; ++l)
    s.layers.push_back(frames[l + 1] * layer_scale * frames[l].transpose());
  return s;
}

namespace {

double leaky(double a, double slope) { return a > 0 ? a : slope * a; }
double leaky_grad(double a, double slope) { return a > 0 ? 1.0 : slope; }

struct Recorder {
  ErrorTrace trace;
  int track_modes;

  void reserve(std::size_t n) {
    trace.times.reserve(n);
    trace.train_errors.reserve(n);
    trace.test_errors.reserve(n);
    if (track_modes > 0) {
      trace.mode_values.resize(0, track_modes);
      trace.align_u.resize(0, track_modes);
      trace.align_v.resize(0, track_modes);
    }
  }

  void push(double t, double etr, double ete) {
    trace.times.push_back(t);
    trace.train_errors.push_back(etr);
    trace.test_errors.push_back(ete);
  }

  void push_modes(const Matrix& w, const TrainingSet& data) {
    const auto row = trace.mode_values.rows();
    trace.mode_values.conservativeResize(row + 1, track_modes);
    trace.align_u.conservativeResize(row + 1, track_modes);
    trace.align_v.conservativeResize(row + 1, track_modes);
    Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    for (int k = 0; k < track_modes; ++k) {
      trace.mode_values(row, k) = svd.singularValues()(k);
      trace.align_u(row, k) = std::abs(svd.matrixU().col(k).dot(data.data_u.col(k)));
      trace.align_v(row, k) = std::abs(svd.matrixV().col(k).dot(data.data_v.col(k)));
    }
  }
};

ErrorTrace train_linear(StudentState& student, const TrainingSet& data,
                        const TrainOptions& opts, double lambda, long record_every) {
  const int nlayers = static_cast<int>(student.layers.size());
  Recorder rec{{}, opts.track_modes};
  rec.reserve(static_cast<std::size_t>(opts.epochs / record_every) + 2);

  TeacherSpec unused;  // measure_errors reads the cached teacher map
  std::vector<Matrix> prefix(nlayers), suffix(nlayers);
  Matrix w, err;

  for (long epoch = 0;; ++epoch) {
    w = student.composite();
    if (epoch % record_every == 0 || epoch == opts.epochs) {
      auto [etr, ete] = measure_errors(w, data, unused, opts.projector);
      rec.push(epoch * lambda, etr, ete);
      if (opts.track_modes > 0) rec.push_modes(w, data);
      if (!(etr < opts.divergence_limit))
        throw Divergence("train_gd: training error exceeded the divergence limit");
    }
    if (epoch == opts.epochs) break;

    if (data.sigma11_is_identity)
      err = data.sigma31 - w;
    else
      err.noalias() = data.sigma31 - w * data.sigma11;

    // prefix[l] = layers[l-1] ... layers[0], suffix[l] = layers[L-1] ... layers[l+1]
    for (int l = 1; l < nlayers; ++l)
      prefix[l] = (l == 1) ? student.layers[0] : Matrix(student.layers[l - 1] * prefix[l - 1]);
    for (int l = nlayers - 2; l >= 0; --l)
      suffix[l] = (l == nlayers - 2) ? student.layers[nlayers - 1]
                                     : Matrix(suffix[l + 1] * student.layers[l + 1]);

    for (int l = 0; l < nlayers; ++l) {
      Matrix g = err;
      if (l < nlayers - 1) g = suffix[l].transpose() * g;
      if (l > 0) g = g * prefix[l].transpose();
      student.layers[l] += lambda * g;
    }
  }
  return rec.trace;
}

ErrorTrace train_nonlinear(StudentState& student, const TrainingSet& data,
                           const TrainOptions& opts, double lambda, long record_every) {
  const int nlayers = static_cast<int>(student.layers.size());
  const double slope = student.leaky_slope;
  Recorder rec{{}, 0};

  // fixed sampled test set; the Gaussian average has no closed form here
  const int test_n = 512;
  Rng trng(opts.test_seed);
  Matrix xt = trng.gaussian_matrix(data.n1(), test_n);
  Matrix yt = data.teacher_map * xt;
  const double yt_norm = yt.squaredNorm();

  std::vector<Matrix> acts(nlayers), hs(nlayers + 1);
  auto forward = [&](const Matrix& input) {
    hs[0] = input;
    for (int l = 0; l < nlayers; ++l) {
      acts[l].noalias() = student.layers[l] * hs[l];
      if (l < nlayers - 1)
        hs[l + 1] = acts[l].unaryExpr([&](double a) { return leaky(a, slope); });
      else
        hs[l + 1] = acts[l];
    }
    return hs[nlayers];
  };

  for (long epoch = 0;; ++epoch) {
    const Matrix out = forward(data.x);
    if (epoch % record_every == 0 || epoch == opts.epochs) {
      const double etr = (out - data.y).squaredNorm() / data.y_sq_norm;
      std::vector<Matrix> save_a = acts, save_h = hs;
      const double ete = (forward(xt) - yt).squaredNorm() / yt_norm;
      acts = save_a;
      hs = save_h;
      rec.push(epoch * lambda, etr, ete);
      if (!(etr < opts.divergence_limit))
        throw Divergence("train_gd: training error exceeded the divergence limit");
    }
    if (epoch == opts.epochs) break;

    Matrix delta = data.y - out;  // descent direction of 0.5||y - out||^2
    for (int l = nlayers - 1; l >= 0; --l) {
      Matrix grad = delta * hs[l].transpose();
      if (l > 0) {
        delta = student.layers[l].transpose() * delta;
        delta.array() *= acts[l - 1].unaryExpr([&](double a) { return leaky_grad(a, slope); }).array();
      }
      student.layers[l] += lambda * grad;
    }
  }
  return rec.trace;
}

}  // namespace

ErrorTrace train_gd(StudentState& student, const TrainingSet& data,
                    const TrainOptions& opts) {
  if (student.layers.front().cols() != data.n1() ||
      student.layers.back().rows() != data.n3())
    throw DimError("train_gd: student and dataset dimensions do not match");
  if (opts.epochs < 1) throw std::invalid_argument("train_gd: epochs must be >= 1");

  const double shat_max = data.data_s.size() > 0 ? data.data_s(0) : 1.0;
  const double lambda = opts.lambda > 0 ? opts.lambda : 0.01 / shat_max;
  if (lambda * shat_max > 0.1)
    std::cerr << "train_gd: warning: lambda * shat_max = " << lambda * shat_max
              << " > 0.1, discretization is unreliable\n";
  long record_every = opts.record_every > 0 ? opts.record_every : opts.epochs / 200;
  if (record_every < 1) record_every = 1;

  if (student.activation == Activation::Linear)
    return train_linear(student, data, opts, lambda, record_every);
  return train_nonlinear(student, data, opts, lambda, record_every);
}

std::pair<double, double> measure_errors(const Matrix& w, const TrainingSet& data,
                                         const TeacherSpec& teacher,
                                         const Matrix* projector) {
  if (w.rows() != data.n3() || w.cols() != data.n1())
    throw DimError("measure_errors: composite map has wrong shape");
  Matrix wbar_local;
  const Matrix* wbar_ptr = &data.teacher_map;
  if (data.teacher_map.size() == 0) {
    wbar_local = teacher.map();
    wbar_ptr = &wbar_local;
  }
  const Matrix& wbar = *wbar_ptr;
  if (projector != nullptr && projector->cols() != w.rows())
    throw DimError("measure_errors: projector must act on the output space");

  double etr, ete;
  if (projector == nullptr) {
    if (data.sigma11_is_identity)
      etr = (w - data.sigma31).squaredNorm() / data.sigma31.squaredNorm();
    else
      etr = (w * data.x - data.y).squaredNorm() / data.y_sq_norm;
    ete = (w - wbar).squaredNorm() / wbar.squaredNorm();
  } else {
    const Matrix& p = *projector;
    if (data.sigma11_is_identity) {
      etr = (p * (w - data.sigma31)).squaredNorm() / (p * data.sigma31).squaredNorm();
    } else {
      etr = (p * (w * data.x - data.y)).squaredNorm() / (p * data.y).squaredNorm();
    }
    ete = (p * (w - wbar)).squaredNorm() / (p * wbar).squaredNorm();
  }
  return {etr, ete};
}

std::size_t argmin_test(const ErrorTrace& trace) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.test_errors.size(); ++i)
    if (trace.test_errors[i] < trace.test_errors[best]) best = i;
  return best;
}

double first_train_crossing(const ErrorTrace& trace, double level) {
  for (std::size_t i = 0; i < trace.train_errors.size(); ++i) {
    if (trace.train_errors[i] <= level) {
      if (i == 0) return trace.times[0];
      const double e0 = trace.train_errors[i - 1], e1 = trace.train_errors[i];
      const double f = (e0 - level) / std::max(e0 - e1, 1e-300);
      return trace.times[i - 1] + f * (trace.times[i] - trace.times[i - 1]);
    }
  }
  return std::numeric_limits<double>::infinity();
}

AlignmentCurves alignment_trace(const ErrorTrace& trace) {
  AlignmentCurves c;
  c.times = trace.times;
  c.values = trace.mode_values;
  c.align_u = trace.align_u;
  c.align_v = trace.align_v;
  return c;
}

double alignment_time(const ErrorTrace& trace, int mode, double threshold) {
  if (trace.align_u.cols() <= mode)
    throw std::invalid_argument("alignment_time: mode was not tracked");
  for (Eigen::Index i = 0; i < trace.align_u.rows(); ++i) {
    if (trace.align_u(i, mode) * trace.align_v(i, mode) >= threshold)
      return trace.times[static_cast<std::size_t>(i)];
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace gendyn::sim
