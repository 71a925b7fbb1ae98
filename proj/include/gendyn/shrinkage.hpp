#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gendyn/rmt.hpp"

namespace gendyn::shrinkage {

using Matrix = Eigen::MatrixXd;

struct DimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TooFewModes : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DetectedMode {
  double shat = 0;    // data singular value
  double sbar = 0;    // inferred teacher SNR
  double shrunk = 0;  // optimal student value sbar * O(sbar)
};

struct ShrinkageReport {
  std::vector<DetectedMode> detected;
  double bulk_edge = 0;  // asymptotic MP edge, scale * (1 + sqrt(A))
  Matrix estimate;       // n3 x n1 denoised map
};

/// Non-gradient learner: SVD the covariance, invert every singular value that
/// pops out of the MP sea past (1 + margin) * edge back to its teacher SNR,
/// shrink it to sbar * O(sbar), and zero the bulk. Near-edge modes inside the
/// margin band are zeroed rather than shrunk.
ShrinkageReport shrink_denoise(const Matrix& sigma31,
                               const rmt::SpectrumParams<double>& params,
                               double margin = 0.02);

/// Median-matching estimate of the bulk scale, excluding outlier candidates.
double estimate_noise_scale(const Matrix& sigma31,
                            const rmt::SpectrumParams<double>& params);

}  // namespace gendyn::shrinkage
