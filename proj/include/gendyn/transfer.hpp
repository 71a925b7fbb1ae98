#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gendyn/dynamics.hpp"
#include "gendyn/simulator.hpp"

namespace gendyn::transfer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AspectError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularGram : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two tasks over a shared input space plus their input-feature similarity
/// matrix Q = V_A^T V_B and the stacked two-head composite teacher.
struct TransferPair {
  sim::TeacherSpec task_a;
  sim::TeacherSpec task_b;
  Matrix q_matrix;
  sim::TeacherSpec composite;
};

/// Stacks two equal-output-dimension teachers into a single two-head teacher
/// over 2*n3 outputs; the returned spec holds the true SVD of the stacked map.
sim::TeacherSpec composite_teacher(const sim::TeacherSpec& a, const sim::TeacherSpec& b);

TransferPair make_pair(const sim::TeacherSpec& a, const sim::TeacherSpec& b);

/// Rank-1 tasks with an exactly prescribed input alignment q.
TransferPair make_rank1_pair(double snr_a, double snr_b, double q, int n1, int n3,
                             double sigma_z, std::uint64_t seed);

/// Composite singular structure from (S_A, S_B, Q) alone, via the symmetrized
/// eigenproblem G^{1/2} S^2 G^{1/2} with G = [[I, Q], [Q^T, I]]. Zero modes are
/// kept (with zeroed weight columns) so rank collapse at |q| = 1 is visible.
struct CompositeModes {
  Vector values;          // composite singular values, descending
  Matrix coeffs;          // eigenvectors y of the symmetrized problem, one column per mode
  Matrix output_weights;  // w = S G^{1/2} y / value; block norms give head energies
  Matrix input_coeffs;    // a = G^{-1/2} y; input vector = [V_A V_B] a
};

CompositeModes composite_modes_via_q(const Vector& s_a, const Vector& s_b,
                                     const Matrix& q_matrix);

/// Input singular vectors reconstructed from the coefficient route.
Matrix assemble_input_vectors(const Matrix& v_a, const Matrix& v_b,
                              const CompositeModes& modes);

enum class Method { Theory, Simulation };

struct TransferResult {
  double eps_a_alone = 0;
  double eps_a_joint = 0;
  double benefit = 0;  // eps_a_alone - eps_a_joint
  Method method = Method::Theory;
  double ci_halfwidth = 0;  // simulation only
};

/// Semi-analytic transfer benefit: single-task optimal stopping versus the
/// task-A-projected optimal stopping of the composite student. Uses only
/// (S_A, S_B, Q, sigma_z), so U-rotations of either task change nothing.
TransferResult transfer_benefit_theory(const TransferPair& pair,
                                       const dynamics::DynamicsParams<double>& dyn,
                                       double sigma_z);

struct SimOptions {
  int student_rank = 0;  // 0: one head's output dimension
  double eps = 1e-3;
  double lambda = 0;     // 0: auto 0.01/shat_max
  double t_max = 3.0;    // in units of tau
  long record_every = 10;
  sim::InitMode init = sim::InitMode::Aligned;
};

/// Minimum (optionally head-projected) test error of one training-aligned run.
/// projector_rows > 0 restricts the error to the first projector_rows outputs.
double sim_min_test_error(const sim::TeacherSpec& teacher, const SimOptions& opts,
                          std::uint64_t seed, int projector_rows = 0);

/// Monte-Carlo transfer benefit over n_seeds paired runs, with a bootstrap
/// 95% half-width over seeds.
TransferResult transfer_benefit_sim(const TransferPair& pair, const SimOptions& opts,
                                    int n_seeds, std::uint64_t base_seed);

}  // namespace gendyn::transfer
