#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/QR>

namespace gendyn {

/// Splittable counter-free RNG built on SplitMix64, with a hand-rolled
/// Box-Muller so that streams are bit-identical across platforms and
/// standard-library versions. All randomness in the library flows through
/// this type; there is no global generator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kGamma)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    state_ += kGamma;
    return mix(state_);
  }

  /// Child generator decorrelated from this one and from siblings with a
  /// different stream id. Does not advance the parent state.
  Rng split(std::uint64_t stream) const {
    Rng child(0);
    child.state_ = mix(state_ ^ mix(stream + 0xD1B54A32D192ED03ull));
    child.has_spare_ = false;
    return child;
  }

  /// Uniform double in [2^-54, 1).
  double uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  /// Standard normal deviate.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                  double stddev = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = stddev * gaussian();
    return m;
  }

  /// rows x cols matrix with orthonormal columns, Haar-distributed.
  /// Requires cols <= rows.
  Eigen::MatrixXd orthonormal_columns(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd g = gaussian_matrix(rows, cols);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    // Fix column signs so the distribution is exactly Haar.
    Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < cols; ++j)
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gendyn
