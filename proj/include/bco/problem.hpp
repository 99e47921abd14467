#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bco/ball.hpp"
#include "bco/constraint.hpp"

namespace bco {

template <typename Scalar>
struct LossEval {
  Scalar value;
  Vector<Scalar> gradient;
};

/// One online problem: the domain, T rounds of losses and constraints, and certified bounds.
///
/// The learner only ever sees `loss_query` (function values). `loss_full` exposes
/// values and gradients for baselines and offline bookkeeping. `loss_total`, when
/// set, evaluates sum_t f_t in one call and must agree with summing `loss_full`.
template <typename Scalar>
struct ProblemInstance {
  using Query = std::function<Scalar(std::int64_t, const Vector<Scalar>&)>;
  using Full = std::function<LossEval<Scalar>(std::int64_t, const Vector<Scalar>&)>;
  using Total = std::function<LossEval<Scalar>(const Vector<Scalar>&)>;

  explicit ProblemInstance(FeasibleBall<Scalar> domain_) : domain(std::move(domain_)) {}

  FeasibleBall<Scalar> domain;
  std::int64_t horizon = 0;
  Query loss_query;
  Full loss_full;
  Total loss_total;
  /// One entry when fixed_constraints, otherwise one per round.
  std::vector<ConstraintFn<Scalar>> constraints;
  bool fixed_constraints = true;
  Scalar loss_lipschitz = Scalar(0);        // F >= F_t for all t
  Scalar constraint_lipschitz = Scalar(0);  // G >= G_t for all t
  Scalar strong_convexity = Scalar(0);      // sigma, zero when not certified

  Eigen::Index dimension() const { return domain.dimension(); }

  bool has_constraint(std::int64_t t) const {
    return t >= 1 && t <= horizon && !constraints.empty();
  }

  /// g_t for 1 <= t <= T.
  const ConstraintFn<Scalar>& constraint(std::int64_t t) const {
    if (!has_constraint(t)) throw InvalidArgument("constraint index out of range");
    if (fixed_constraints) return constraints.front();
    return constraints.at(static_cast<std::size_t>(t - 1));
  }

  LossEval<Scalar> full(std::int64_t t, const Vector<Scalar>& x) const {
    if (!loss_full) throw InvalidArgument("instance has no full-information loss oracle");
    return loss_full(t, x);
  }

  /// sum_t f_t(x) and its gradient, via loss_total when available.
  LossEval<Scalar> total(const Vector<Scalar>& x) const {
    if (loss_total) return loss_total(x);
    LossEval<Scalar> acc{Scalar(0), Vector<Scalar>::Zero(x.size())};
    for (std::int64_t t = 1; t <= horizon; ++t) {
      auto e = full(t, x);
      acc.value += e.value;
      acc.gradient += e.gradient;
    }
    return acc;
  }

  void check() const {
    if (horizon < 0) throw InvalidArgument("horizon must be nonnegative");
    if (!loss_query) throw InvalidArgument("instance has no loss query oracle");
    if (constraints.empty()) throw InvalidArgument("instance has no constraints");
    if (!fixed_constraints && static_cast<std::int64_t>(constraints.size()) != horizon)
      throw InvalidArgument("time-varying instance needs one constraint per round");
  }
};

}  // namespace bco
