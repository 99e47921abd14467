#pragma once

#include <cmath>

#include <Eigen/Core>

#include "bco/errors.hpp"

namespace bco {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Closed Euclidean ball {x : |x - center| <= radius}; the decision domain.
template <typename Scalar>
class FeasibleBall {
 public:
  FeasibleBall(Vector<Scalar> center, Scalar radius) : center_(std::move(center)), radius_(radius) {
    if (center_.size() == 0) throw InvalidArgument("ball dimension must be positive");
    if (!(radius_ > Scalar(0))) throw InvalidArgument("ball radius must be positive");
  }

  /// Ball of the given radius centred at the origin.
  static FeasibleBall origin(Eigen::Index dimension, Scalar radius) {
    if (dimension <= 0) throw InvalidArgument("ball dimension must be positive");
    return FeasibleBall(Vector<Scalar>::Zero(dimension), radius);
  }

  const Vector<Scalar>& center() const { return center_; }
  Scalar radius() const { return radius_; }
  Eigen::Index dimension() const { return center_.size(); }
  Scalar diameter() const { return Scalar(2) * radius_; }

  /// The contracted copy (1 - xi) * ball about the same centre.
  FeasibleBall shrink(Scalar xi) const {
    if (!(xi > Scalar(0) && xi < Scalar(1))) throw InvalidArgument("shrinkage xi must lie in (0, 1)");
    return FeasibleBall(center_, (Scalar(1) - xi) * radius_);
  }

  template <typename Derived>
  Scalar distance_from_center(const Eigen::MatrixBase<Derived>& x) const {
    check_dimension(x.size());
    return (x - center_).norm();
  }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& x, Scalar slack = Scalar(0)) const {
    return distance_from_center(x) <= radius_ + slack;
  }

  void check_dimension(Eigen::Index n) const {
    if (n != center_.size())
      throw DimensionMismatch(static_cast<std::size_t>(center_.size()), static_cast<std::size_t>(n));
  }

  friend bool operator==(const FeasibleBall& a, const FeasibleBall& b) {
    return a.radius_ == b.radius_ && a.center_ == b.center_;
  }

 private:
  Vector<Scalar> center_;
  Scalar radius_;
};

/// Euclidean projection onto the ball. Interior points are returned unchanged.
template <typename Scalar, typename Derived>
Vector<Scalar> project(const FeasibleBall<Scalar>& ball, const Eigen::MatrixBase<Derived>& x) {
  ball.check_dimension(x.size());
  Vector<Scalar> offset = x - ball.center();
  const Scalar dist = offset.norm();
  if (dist <= ball.radius()) return x;
  // Nudge the scale down until the rounded result passes the membership test,
  // so a second projection is the identity.
  Scalar scale = ball.radius() / dist;
  Vector<Scalar> y = ball.center() + scale * offset;
  while ((y - ball.center()).norm() > ball.radius()) {
    scale = std::nextafter(scale, Scalar(0));
    y = ball.center() + scale * offset;
  }
  return y;
}

}  // namespace bco
