#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gendyn/rng.hpp"

namespace gendyn::sim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingDataset : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Divergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Low-rank ground-truth map held as its SVD triple.
struct TeacherSpec {
  Matrix u_out;   // n3 x rank, orthonormal columns
  Vector snrs;    // rank, descending > 0
  Matrix v_in;    // n1 x rank, orthonormal columns
  double sigma_z = 1.0;

  Eigen::Index n1() const { return v_in.rows(); }
  Eigen::Index n3() const { return u_out.rows(); }
  Eigen::Index rank() const { return snrs.size(); }
  Matrix map() const { return u_out * snrs.asDiagonal() * v_in.transpose(); }
};

enum class DatasetMode {
  OrthonormalPEqN1,  // X = I, the main-text design
  Oversampled,       // P >= n1, row-orthonormal X scaled by sqrt(P/n1)
  Undersampled,      // P < n1, column-orthonormal X
  RandomizedLabels,  // X = I, Y iid Gaussian at the structured output variance
  GaussianInputs,    // X iid entries of variance 1/n1
};

const char* to_string(DatasetMode mode);

/// A sampled training set with its second-order statistics and the SVD of
/// sigma31 cached (the simulator and the aligned initializer both need it).
struct TrainingSet {
  Matrix x;        // n1 x P
  Matrix y;        // n3 x P
  Matrix sigma31;  // n3 x n1 = Y X^T
  Matrix sigma11;  // n1 x n1 = X X^T
  Matrix data_u;   // n3 x n3
  Vector data_s;   // n3
  Matrix data_v;   // n1 x n3
  DatasetMode mode{};
  bool sigma11_is_identity = false;
  double y_sq_norm = 0;
  double teacher_sq_norm = 0;
  Matrix teacher_map;  // n3 x n1, cached for error measurement

  Eigen::Index n1() const { return x.rows(); }
  Eigen::Index n3() const { return y.rows(); }
  Eigen::Index samples() const { return x.cols(); }
};

enum class InitMode { Random, Aligned };
enum class Activation { Linear, LeakyRelu };

/// Per-layer weights of an N_l-layer student. Layer l maps width[l] ->
/// width[l+1]; the composite map is layers[L-1] * ... * layers[0].
struct StudentState {
  std::vector<Matrix> layers;
  Activation activation = Activation::Linear;
  double leaky_slope = 0.2;
  double init_eps = 0;
  InitMode init_mode = InitMode::Random;
  std::uint64_t seed = 0;

  int depth() const { return static_cast<int>(layers.size()) + 1; }
  Matrix composite() const;
};

/// Recorded learning trajectory. times are in units of t/tau (= epoch *
/// lambda). mode_values/align_* have one row per record and track_modes
/// columns; alignment rows compare student mode a against dataset mode a.
struct ErrorTrace {
  std::vector<double> times;
  std::vector<double> train_errors;
  std::vector<double> test_errors;
  Matrix mode_values;
  Matrix align_u;
  Matrix align_v;
};

/// Index of the smallest recorded test error.
std::size_t argmin_test(const ErrorTrace& trace);

/// First recorded time at which the training error drops to `level`
/// (linearly interpolated); infinity if it never does.
double first_train_crossing(const ErrorTrace& trace, double level);

/// Per-mode alignment curves pulled out of a recorded trace.
struct AlignmentCurves {
  std::vector<double> times;
  Matrix values;   // singular values, one column per mode
  Matrix align_u;  // |u_a(t) . u_hat_a|
  Matrix align_v;  // |v_a(t) . v_hat_a|
};

AlignmentCurves alignment_trace(const ErrorTrace& trace);

/// First time the product alignment |u.u||v.v| of mode `mode` stays above
/// `threshold`; infinity if it never gets there.
double alignment_time(const ErrorTrace& trace, int mode, double threshold);

TeacherSpec make_teacher(int n1, int n3, const std::vector<double>& snrs,
                         double sigma_z, std::uint64_t seed);

TrainingSet make_dataset(const TeacherSpec& teacher, int samples, DatasetMode mode,
                         std::uint64_t seed);

StudentState init_student(int n1, int n2, int n3, int depth, double eps, InitMode mode,
                          const TrainingSet* dataset, std::uint64_t seed);

struct TrainOptions {
  double lambda = 0;        // 0: pick 0.01 / shat_max
  long epochs = 0;
  long record_every = 0;    // 0: epochs/200, at least 1
  int track_modes = 0;      // top-k modes to record (0: errors only)
  double divergence_limit = 1e6;
  const Matrix* projector = nullptr;  // optional output-space projector for errors
  std::uint64_t test_seed = 0x7e57;   // sampled test set, nonlinear mode only
};

/// Full-batch gradient descent on 0.5 * sum_mu ||y - W(x)||^2 for all layers.
/// Deterministic; throws Divergence when the train error passes the limit.
ErrorTrace train_gd(StudentState& student, const TrainingSet& data,
                    const TrainOptions& opts);

/// Exact train/test errors of a composite linear map W. Training error uses
/// the trace form against sigma31 for orthonormal designs and the data-space
/// form otherwise; the test error is always the exact Gaussian average. An
/// optional projector (k x n3) restricts both to a block of outputs.
std::pair<double, double> measure_errors(const Matrix& w, const TrainingSet& data,
                                         const TeacherSpec& teacher,
                                         const Matrix* projector = nullptr);

}  // namespace gendyn::sim
