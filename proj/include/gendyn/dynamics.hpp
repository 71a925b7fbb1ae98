#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gendyn::dynamics {

struct InvalidInit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveMode : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Gradient-flow parameters of a single composite mode: initial strength eps,
/// time constant tau = 1/lambda, and total layer count depth (>= 3, so
/// depth-2 hidden layers).
template <typename Scalar = double>
struct DynamicsParams {
  Scalar eps{1e-3};
  Scalar tau{1};
  int depth{3};

  void validate() const {
    if (!(eps > Scalar(0))) throw std::invalid_argument("DynamicsParams: eps must be > 0");
    if (!(tau > Scalar(0))) throw std::invalid_argument("DynamicsParams: tau must be > 0");
    if (depth < 3) throw std::invalid_argument("DynamicsParams: depth must be >= 3");
  }
};

/// Right-hand side of the single-mode flow: du/dt for a mode of strength u
/// driven toward shat in a depth-layer linear network.
template <typename Scalar>
Scalar mode_ode_rhs(Scalar u, Scalar shat, const DynamicsParams<Scalar>& p) {
  p.validate();
  const Scalar nl1 = Scalar(p.depth - 1);
  return nl1 * std::pow(u, Scalar(2) - Scalar(2) / nl1) * (shat - u) / p.tau;
}

namespace detail {

// Depth-3 closed form, written so large exponents cannot overflow. Also valid
// on the decaying branch shat < eps (the mode relaxes down to shat), which the
// theory module needs when the bulk extends below eps.
template <typename Scalar>
Scalar s3_of_t(Scalar t, Scalar shat, Scalar eps, Scalar tau) {
  const Scalar x = std::exp(-2 * shat * t / tau);
  return shat / (1 + (shat / eps - 1) * x);
}

template <typename Scalar>
Scalar t3_of_s(Scalar s, Scalar shat, Scalar eps, Scalar tau) {
  return tau / (2 * shat) * std::log((shat / eps - 1) / (shat / s - 1));
}

// Depth-5 antiderivative of dt/du, valid on the rising branch u < shat.
template <typename Scalar>
Scalar t5_primitive(Scalar u, Scalar shat, Scalar tau) {
  return tau / 2 *
         (std::atanh(std::sqrt(u / shat)) / std::pow(shat, Scalar(1.5)) -
          1 / (shat * std::sqrt(u)));
}

template <typename Scalar>
Scalar t5_of_s(Scalar s, Scalar shat, Scalar eps, Scalar tau) {
  return t5_primitive(s, shat, tau) - t5_primitive(eps, shat, tau);
}

// Adaptive RK4 (step doubling) for the generic-depth mode ODE.
template <typename Scalar>
Scalar integrate_mode(Scalar t, Scalar shat, const DynamicsParams<Scalar>& p,
                      Scalar rel_tol = Scalar(1e-11)) {
  auto rhs = [&](Scalar u) { return mode_ode_rhs(u, shat, p); };
  auto rk4 = [&](Scalar u, Scalar h) {
    const Scalar k1 = rhs(u);
    const Scalar k2 = rhs(u + h / 2 * k1);
    const Scalar k3 = rhs(u + h / 2 * k2);
    const Scalar k4 = rhs(u + h * k3);
    return u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  };
  Scalar u = p.eps;
  Scalar x = 0;
  Scalar h = t / 64;
  const Scalar floor_u = std::min(p.eps, std::abs(shat)) * Scalar(0.5);
  while (x < t) {
    if (x + h > t) h = t - x;
    const Scalar big = rk4(u, h);
    const Scalar half = rk4(rk4(u, h / 2), h / 2);
    const Scalar err = std::abs(big - half);
    const Scalar scale = std::max(std::abs(half), floor_u);
    if (err <= rel_tol * scale || h <= t * Scalar(1e-12)) {
      u = half;
      x += h;
      if (err < rel_tol * scale / 16) h *= 2;
    } else {
      h /= 2;
    }
  }
  return u;
}

// Generic-depth t(s) by adaptive Simpson on the separable integral
// dt/du = tau / ((depth-1) u^{2-2/(depth-1)} (shat-u)).
template <typename Scalar, typename F>
Scalar adaptive_simpson(const F& f, Scalar a, Scalar b, Scalar whole, int depth_left) {
  const Scalar m = (a + b) / 2;
  auto panel = [&](Scalar x0, Scalar x1) {
    return (x1 - x0) / 6 * (f(x0) + 4 * f((x0 + x1) / 2) + f(x1));
  };
  const Scalar left = panel(a, m), right = panel(m, b);
  if (depth_left <= 0 ||
      std::abs(left + right - whole) < Scalar(1e-12) * (std::abs(whole) + Scalar(1e-30)))
    return left + right;
  return adaptive_simpson(f, a, m, left, depth_left - 1) +
         adaptive_simpson(f, m, b, right, depth_left - 1);
}

template <typename Scalar>
Scalar integrate_time(Scalar s, Scalar shat, const DynamicsParams<Scalar>& p) {
  auto f = [&](Scalar u) { return Scalar(1) / mode_ode_rhs(u, shat, p); };
  const Scalar m = (p.eps + s) / 2;
  const Scalar whole = (s - p.eps) / 6 * (f(p.eps) + 4 * f(m) + f(s));
  return adaptive_simpson(f, p.eps, s, whole, 40);
}

}  // namespace detail

/// Time at which a mode driven toward shat reaches strength s, starting from
/// eps at t = 0. Diverges logarithmically as s -> shat.
template <typename Scalar>
Scalar t_of_s(Scalar s, Scalar shat, const DynamicsParams<Scalar>& p) {
  p.validate();
  if (!(shat > Scalar(0))) throw NonPositiveMode("t_of_s: shat must be positive");
  if (p.eps >= shat) throw InvalidInit("t_of_s: requires eps < shat");
  if (s < p.eps || s >= shat) throw OutOfRange("t_of_s: s must lie in [eps, shat)");
  if (s == p.eps) return Scalar(0);
  switch (p.depth) {
    case 3:
      return detail::t3_of_s(s, shat, p.eps, p.tau);
    case 5:
      return detail::t5_of_s(s, shat, p.eps, p.tau);
    default:
      return detail::integrate_time(s, shat, p);
  }
}

/// Mode learning curve without the eps < shat precondition: modes with
/// shat <= eps relax downward to shat. Used for bulk averages; prefer s_of_t
/// for checked signal-mode evaluation.
template <typename Scalar>
Scalar mode_curve(Scalar t, Scalar shat, const DynamicsParams<Scalar>& p) {
  p.validate();
  if (!(shat > Scalar(0))) throw NonPositiveMode("mode_curve: shat must be positive");
  if (t <= Scalar(0)) return p.eps;
  if (std::isinf(t)) return shat;
  if (p.depth == 3) return detail::s3_of_t(t, shat, p.eps, p.tau);
  if (shat <= p.eps * (1 + Scalar(1e-12)))
    return detail::integrate_mode(t, shat, p);  // decaying branch
  if (p.depth == 5) {
    // bisect the closed-form inverse on [eps, shat)
    Scalar lo = p.eps, hi = shat * (1 - Scalar(1e-15));
    if (detail::t5_of_s(hi, shat, p.eps, p.tau) <= t) return shat;
    for (int it = 0; it < 120 && (hi - lo) > Scalar(1e-12) * shat; ++it) {
      const Scalar m = (lo + hi) / 2;
      if (detail::t5_of_s(m, shat, p.eps, p.tau) < t)
        lo = m;
      else
        hi = m;
    }
    return (lo + hi) / 2;
  }
  return detail::integrate_mode(t, shat, p);
}

/// Strength of a mode at time t >= 0; strictly increasing from eps to shat.
template <typename Scalar>
Scalar s_of_t(Scalar t, Scalar shat, const DynamicsParams<Scalar>& p) {
  p.validate();
  if (!(shat > Scalar(0))) throw NonPositiveMode("s_of_t: shat must be positive");
  if (p.eps >= shat) throw InvalidInit("s_of_t: requires eps < shat");
  if (t < Scalar(0)) throw OutOfRange("s_of_t: t must be >= 0");
  return mode_curve(t, shat, p);
}

/// Half-rise time of the depth-3 sigmoid: tau/(2 shat) * ln(shat/eps - 1).
template <typename Scalar>
Scalar transition_time(Scalar shat, const DynamicsParams<Scalar>& p) {
  p.validate();
  if (p.depth != 3)
    throw std::invalid_argument("transition_time: closed form only at depth 3");
  if (!(shat > Scalar(0))) throw NonPositiveMode("transition_time: shat must be positive");
  if (p.eps >= shat) throw InvalidInit("transition_time: requires eps < shat");
  return p.tau / (2 * shat) * std::log(shat / p.eps - 1);
}

}  // namespace gendyn::dynamics
