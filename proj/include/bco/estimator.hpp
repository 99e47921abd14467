#pragma once

#include <cmath>
#include <random>
#include <utility>

#include "bco/ball.hpp"
#include "bco/errors.hpp"

namespace bco {

/// Uniform draw from the unit sphere in R^d (normalised standard Gaussian).
template <typename Scalar, typename Rng>
Vector<Scalar> sample_unit_sphere(Rng& rng, Eigen::Index d) {
  if (d < 1) throw InvalidArgument("sample_unit_sphere: dimension must be >= 1");
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Vector<Scalar> u(d);
  Scalar norm(0);
  // A zero Gaussian vector has probability zero but would not normalise.
  do {
    for (Eigen::Index i = 0; i < d; ++i) u[i] = normal(rng);
    norm = u.norm();
  } while (!(norm > Scalar(0)));
  u /= norm;
  return u;
}

/// Uniform draw from the unit ball: a sphere direction scaled by U^(1/d).
template <typename Scalar, typename Rng>
Vector<Scalar> sample_unit_ball(Rng& rng, Eigen::Index d) {
  Vector<Scalar> v = sample_unit_sphere<Scalar>(rng, d);
  std::uniform_real_distribution<Scalar> uniform(Scalar(0), Scalar(1));
  v *= std::pow(uniform(rng), Scalar(1) / static_cast<Scalar>(d));
  return v;
}

template <typename Scalar>
struct GradientEstimate {
  Vector<Scalar> vector;
  std::pair<Vector<Scalar>, Vector<Scalar>> query_points;  // (x + delta u, x - delta u)
  std::pair<Scalar, Scalar> loss_values;
};

/// Two-point estimate (d / 2 delta) [f(x + delta u) - f(x - delta u)] u.
/// Calls `loss_at` exactly twice.
template <typename Scalar, typename LossAt>
GradientEstimate<Scalar> two_point_gradient(LossAt&& loss_at, const Vector<Scalar>& x,
                                            Scalar delta, const Vector<Scalar>& u) {
  if (!(delta > Scalar(0))) throw InvalidArgument("two_point_gradient: delta must be positive");
  if (u.size() != x.size())
    throw DimensionMismatch(static_cast<std::size_t>(x.size()), static_cast<std::size_t>(u.size()));
  GradientEstimate<Scalar> est;
  est.query_points.first = x + delta * u;
  est.query_points.second = x - delta * u;
  const Scalar plus = loss_at(est.query_points.first);
  const Scalar minus = loss_at(est.query_points.second);
  if (!std::isfinite(plus) || !std::isfinite(minus))
    throw NonFiniteValue("two_point_gradient: loss oracle returned a non-finite value");
  est.loss_values = {plus, minus};
  const Scalar d = static_cast<Scalar>(x.size());
  est.vector = (d / (Scalar(2) * delta) * (plus - minus)) * u;
  return est;
}

template <typename Scalar>
struct MonteCarloMean {
  Scalar mean;
  Scalar std_error;
};

/// Monte Carlo estimate of the ball-smoothed value E_v[f(x + delta v)], v uniform in the unit ball.
template <typename Scalar, typename LossAt, typename Rng>
MonteCarloMean<Scalar> smoothed_value_mc(LossAt&& loss_at, const Vector<Scalar>& x, Scalar delta,
                                         std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("smoothed_value_mc: sample count must be >= 1");
  // Welford accumulation; a constant sequence leaves m2 exactly zero.
  Scalar mean(0), m2(0);
  for (std::size_t k = 1; k <= n; ++k) {
    const Vector<Scalar> v = sample_unit_ball<Scalar>(rng, x.size());
    const Scalar value = loss_at(Vector<Scalar>(x + delta * v));
    if (!std::isfinite(value)) throw NonFiniteValue("smoothed_value_mc: non-finite loss value");
    const Scalar diff = value - mean;
    mean += diff / static_cast<Scalar>(k);
    m2 += diff * (value - mean);
  }
  const Scalar variance = n > 1 ? m2 / static_cast<Scalar>(n - 1) : Scalar(0);
  return {mean, std::sqrt(variance / static_cast<Scalar>(n))};
}

}  // namespace bco
