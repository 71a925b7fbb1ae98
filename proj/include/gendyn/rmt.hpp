#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gendyn::rmt {

struct EmptyRegion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotDetectable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Marchenko-Pastur bulk of a rectangular iid-noise matrix with aspect ratio
/// A = rows/cols in (0, 1]. `scale` is the noise singular-value scale sigma;
/// the bulk support is [scale*(1-sqrt(A)), scale*(1+sqrt(A))]. Teacher
/// singular values are always quoted as SNRs, i.e. in units of `scale`.
template <typename Scalar = double>
struct SpectrumParams {
  Scalar aspect_ratio{1};
  Scalar scale{1};

  void validate() const {
    if (!(aspect_ratio > Scalar(0)) || !(aspect_ratio <= Scalar(1)))
      throw std::invalid_argument("SpectrumParams: aspect ratio must be in (0,1]");
    if (!(scale > Scalar(0)))
      throw std::invalid_argument("SpectrumParams: scale must be positive");
  }

  Scalar lower_edge() const { return scale * (1 - std::sqrt(aspect_ratio)); }
  Scalar upper_edge() const { return scale * (1 + std::sqrt(aspect_ratio)); }
};

/// |u.u| , |v.v| overlap factors of a detected mode and their product.
template <typename Scalar = double>
struct OverlapTriple {
  Scalar o_u{0};  // output (left) singular vector overlap
  Scalar o_v{0};  // input (right) singular vector overlap
  Scalar o{0};    // product o_u * o_v
};

/// SNR below which a teacher mode leaves no trace in the data spectrum.
template <typename Scalar>
Scalar detection_threshold(const SpectrumParams<Scalar>& p) {
  p.validate();
  return std::pow(p.aspect_ratio, Scalar(0.25));
}

/// MP density of singular values at `shat`; zero outside the support.
template <typename Scalar>
Scalar mp_density(Scalar shat, const SpectrumParams<Scalar>& p) {
  p.validate();
  const Scalar x = shat / p.scale;
  const Scalar a = p.aspect_ratio;
  const Scalar lo = 1 - std::sqrt(a), hi = 1 + std::sqrt(a);
  if (!(x > lo && x < hi) || !(x > Scalar(0))) return Scalar(0);
  const Scalar d = 4 * a - (x * x - (1 + a)) * (x * x - (1 + a));
  if (d <= Scalar(0)) return Scalar(0);
  return std::sqrt(d) / (Scalar(M_PI) * a * x) / p.scale;
}

/// Composite-Simpson nodes of the MP density over [lo, hi] (clamped to the
/// support). weight[i] already contains density * quadrature weight, so
/// sum(weight) is the region mass and sum(g(shat)*weight) the unnormalized
/// region integral of g.
template <typename Scalar>
struct QuadratureNodes {
  std::vector<Scalar> shat;
  std::vector<Scalar> weight;
  Scalar mass{0};
};

template <typename Scalar>
QuadratureNodes<Scalar> mp_nodes(const SpectrumParams<Scalar>& p, Scalar lo,
                                 Scalar hi, int intervals = 20000) {
  p.validate();
  lo = std::max(lo, p.lower_edge());
  hi = std::min(hi, p.upper_edge());
  QuadratureNodes<Scalar> q;
  if (!(hi > lo)) return q;
  if (intervals % 2 != 0) ++intervals;
  const Scalar h = (hi - lo) / intervals;
  q.shat.resize(intervals + 1);
  q.weight.resize(intervals + 1);
  for (int i = 0; i <= intervals; ++i) {
    const Scalar x = lo + h * i;
    Scalar w = (i == 0 || i == intervals) ? Scalar(1) : (i % 2 ? Scalar(4) : Scalar(2));
    q.shat[i] = x;
    q.weight[i] = w * (h / 3) * mp_density(x, p);
    q.mass += q.weight[i];
  }
  return q;
}

/// Total MP mass in [lo, hi].
template <typename Scalar>
Scalar mp_mass(Scalar lo, Scalar hi, const SpectrumParams<Scalar>& p,
               int intervals = 20000) {
  return mp_nodes(p, lo, hi, intervals).mass;
}

/// Conditional expectation of g(shat) given shat in [lo, hi] under the MP
/// density. Throws EmptyRegion when the region carries (numerically) no mass.
template <typename Scalar, typename F>
Scalar mp_region_mean(F&& g, Scalar lo, Scalar hi, const SpectrumParams<Scalar>& p,
                      int intervals = 20000) {
  const auto q = mp_nodes(p, lo, hi, intervals);
  if (q.mass < Scalar(1e-12)) throw EmptyRegion("mp_region_mean: region has no MP mass");
  Scalar acc = 0;
  for (std::size_t i = 0; i < q.shat.size(); ++i) acc += g(q.shat[i]) * q.weight[i];
  return acc / q.mass;
}

/// Point f in the support with `left_mass` of the MP mass to its left.
template <typename Scalar>
Scalar mp_quantile(const SpectrumParams<Scalar>& p, Scalar left_mass) {
  p.validate();
  if (left_mass < Scalar(0) || left_mass > Scalar(1))
    throw std::invalid_argument("mp_quantile: left_mass must be in [0,1]");
  Scalar lo = p.lower_edge(), hi = p.upper_edge();
  if (left_mass <= Scalar(0)) return lo;
  if (left_mass >= Scalar(1)) return hi;
  const Scalar total = mp_mass(lo, hi, p);
  Scalar a = lo, b = hi;
  for (int it = 0; it < 200 && (b - a) > Scalar(1e-13) * p.scale; ++it) {
    const Scalar m = (a + b) / 2;
    if (mp_mass(lo, m, p) / total < left_mass)
      a = m;
    else
      b = m;
  }
  return (a + b) / 2;
}

/// Data singular value produced by a teacher mode of SNR `sbar` (in units of
/// the bulk scale). Undetectable modes pin to the bulk edge.
template <typename Scalar>
Scalar shat_of_sbar(Scalar sbar, const SpectrumParams<Scalar>& p) {
  p.validate();
  if (sbar < Scalar(0)) throw std::invalid_argument("shat_of_sbar: sbar must be >= 0");
  const Scalar a = p.aspect_ratio;
  if (sbar <= detection_threshold(p)) return p.upper_edge();
  const Scalar s2 = sbar * sbar;
  return p.scale * std::sqrt((1 + s2) * (a + s2)) / sbar;
}

/// Functional inverse of shat_of_sbar on the detectable branch.
template <typename Scalar>
Scalar sbar_of_shat(Scalar shat, const SpectrumParams<Scalar>& p) {
  p.validate();
  const Scalar x = shat / p.scale;
  const Scalar a = p.aspect_ratio;
  const Scalar edge = 1 + std::sqrt(a);
  if (!(x > edge))
    throw NotDetectable("sbar_of_shat: singular value is at or inside the MP bulk");
  const Scalar y = x * x - 1 - a;
  const Scalar disc = y * y - 4 * a;
  // y > 2*sqrt(a) whenever x > edge, so disc > 0; the larger root is the
  // physical branch with sbar > a^{1/4}.
  const Scalar s2 = (y + std::sqrt(std::max(disc, Scalar(0)))) / 2;
  return std::sqrt(s2);
}

/// Asymptotic overlaps between the data singular vectors of a detected mode
/// and the planted teacher vectors. First factor of the product is the
/// output-side overlap, second the input-side one.
template <typename Scalar>
OverlapTriple<Scalar> overlap(Scalar sbar, const SpectrumParams<Scalar>& p) {
  p.validate();
  if (sbar < Scalar(0)) throw std::invalid_argument("overlap: sbar must be >= 0");
  OverlapTriple<Scalar> t;
  if (sbar <= detection_threshold(p)) return t;
  const Scalar a = p.aspect_ratio;
  const Scalar s2 = sbar * sbar;
  const Scalar bu = 1 - a * (1 + s2) / (s2 * (a + s2));
  const Scalar bv = 1 - (a + s2) / (s2 * (1 + s2));
  t.o_u = std::sqrt(std::clamp(bu, Scalar(0), Scalar(1)));
  t.o_v = std::sqrt(std::clamp(bv, Scalar(0), Scalar(1)));
  t.o = t.o_u * t.o_v;
  return t;
}

}  // namespace gendyn::rmt
