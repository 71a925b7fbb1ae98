#include "gendyn/shrinkage.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace gendyn::shrinkage {

namespace {

void check_aspect(const Matrix& sigma31, const rmt::SpectrumParams<double>& params) {
  if (sigma31.rows() < 1 || sigma31.cols() < 1 || sigma31.rows() > sigma31.cols())
    throw DimError("shrinkage: sigma31 must be n3 x n1 with n3 <= n1");
  const double a = double(sigma31.rows()) / double(sigma31.cols());
  if (std::abs(a - params.aspect_ratio) > 1e-9)
    throw DimError("shrinkage: matrix aspect ratio does not match params");
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ShrinkageReport shrink_denoise(const Matrix& sigma31,
                               const rmt::SpectrumParams<double>& params,
                               double margin) {
  params.validate();
  check_aspect(sigma31, params);
  Eigen::BDCSVD<Matrix> svd(sigma31, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();

  ShrinkageReport rep;
  rep.bulk_edge = params.upper_edge();
  rep.estimate = Matrix::Zero(sigma31.rows(), sigma31.cols());
  const double cutoff = rep.bulk_edge * (1 + margin);
  for (Eigen::Index a = 0; a < s.size(); ++a) {
    if (s(a) <= cutoff) break;  // singular values are descending
    DetectedMode m;
    m.shat = s(a);
    m.sbar = rmt::sbar_of_shat(s(a), params);
    m.shrunk = params.scale * m.sbar * rmt::overlap(m.sbar, params).o;
    rep.estimate.noalias() +=
        m.shrunk * svd.matrixU().col(a) * svd.matrixV().col(a).transpose();
    rep.detected.push_back(m);
  }
  return rep;
}

double estimate_noise_scale(const Matrix& sigma31,
                            const rmt::SpectrumParams<double>& params) {
  params.validate();
  check_aspect(sigma31, params);
  Eigen::BDCSVD<Matrix> svd(sigma31);
  const auto& s = svd.singularValues();
  const double q50 = rmt::mp_quantile(rmt::SpectrumParams<double>{params.aspect_ratio, 1.0}, 0.5);

  std::vector<double> all(s.data(), s.data() + s.size());
  const double sigma0 = median_of(all) / q50;

  // drop outlier candidates above the provisional edge, then re-match
  std::vector<double> bulk;
  const double cutoff = sigma0 * (1 + std::sqrt(params.aspect_ratio)) * 1.02;
  for (double v : all)
    if (v <= cutoff) bulk.push_back(v);
  if (bulk.size() < all.size() / 2)
    throw TooFewModes("estimate_noise_scale: fewer than half the modes look like bulk");
  const double med = median_of(bulk);
  if (med <= 1e-12 * (all.empty() ? 1.0 : all.front()))
    throw TooFewModes("estimate_noise_scale: bulk is degenerate");
  return med / q50;
}

}  // namespace gendyn::shrinkage
