#pragma once

#include <stdexcept>
#include <vector>

#include "gendyn/dynamics.hpp"
#include "gendyn/rmt.hpp"

namespace gendyn::theory {

struct ConfigInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RegimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BelowThreshold : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything the analytic learning curves need: the teacher SNRs (descending,
/// in units of noise_scale), the data aspect ratio A = n3/n1, the student
/// rank, and the single-mode dynamics parameters. sample_count < 0 means the
/// canonical P = n1 design.
struct TheoryConfig {
  std::vector<double> teacher_snrs;
  double aspect_ratio = 1.0;
  int student_rank = 0;
  int n3 = 0;
  int n1 = 0;
  dynamics::DynamicsParams<double> dyn{};
  int sample_count = -1;
  double noise_scale = 1.0;

  int teacher_rank() const { return static_cast<int>(teacher_snrs.size()); }
  int samples() const { return sample_count < 0 ? n1 : sample_count; }
  rmt::SpectrumParams<double> spectrum() const { return {aspect_ratio, noise_scale}; }
  void validate() const;
};

/// Training error of a training-aligned student at time t (P = n1 design).
double theory_train_error(double t, const TheoryConfig& cfg);

/// Test error of a training-aligned student at time t (P = n1 design).
double theory_test_error(double t, const TheoryConfig& cfg);

/// Batched curve evaluation; much faster than per-point calls.
std::vector<double> train_error_curve(const std::vector<double>& times, const TheoryConfig& cfg);
std::vector<double> test_error_curve(const std::vector<double>& times, const TheoryConfig& cfg);

struct StoppingPoint {
  double t_opt = 0;
  double eps_opt = 0;
};

/// argmin_t of the test error: coarse log-spaced scan (including t = 0)
/// refined by golden section.
StoppingPoint optimal_stopping(const TheoryConfig& cfg);

struct Rank1Optimum {
  double s_opt = 0;
  double eps_opt = 0;
  double t_opt = 0;
};

/// Closed-form optimum for a rank-1 teacher above threshold:
/// s_opt = sbar * O(sbar), eps_opt = 1 - O(sbar)^2.
Rank1Optimum rank1_closed_form(double sbar, const rmt::SpectrumParams<double>& sp,
                               const dynamics::DynamicsParams<double>& dyn);

/// Best error attainable by setting every detected mode independently.
double nongradient_optimal_error(const std::vector<double>& snrs,
                                 const rmt::SpectrumParams<double>& sp);

/// Bulk parameters of the label-randomized dataset that preserves the
/// structured data's output variance.
rmt::SpectrumParams<double> randomized_spectrum_params(const std::vector<double>& snrs,
                                                       int n3, int n1, double sigma_z);

/// Test error when P < n1 training inputs span only part of input space
/// (full-rank student, n1 = n2 = n3). Includes the frozen-subspace term.
double undersampled_test_error(double t, const TheoryConfig& cfg);
std::vector<double> undersampled_test_error_curve(const std::vector<double>& times,
                                                  const TheoryConfig& cfg);

/// Maps a P >= n1 config onto the equivalent P = n1 one: SNRs boosted by
/// sqrt(P/n1), learning time sped up by P/n1.
TheoryConfig oversampled_equivalent(const TheoryConfig& cfg);

}  // namespace gendyn::theory
