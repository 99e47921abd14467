#pragma once

#include <string_view>

#include "bco/algorithm.hpp"

namespace bco {

/// Reference learners sharing the instance, schedule and trace schema of the main method.
///   full_info_rectified:     true gradient in the subproblem, unshrunken domain
///   unconstrained_two_point: two-point estimate with the penalty weight forced to zero
///   projected_ogd:           x_{t+1} = Proj_X(x_t - grad f_t(x_t) / alpha_t)
enum class BaselineKind { full_info_rectified, unconstrained_two_point, projected_ogd };

inline std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::full_info_rectified: return "full_info_rectified";
    case BaselineKind::unconstrained_two_point: return "unconstrained_two_point";
    case BaselineKind::projected_ogd: return "projected_ogd";
  }
  return "unknown";
}

template <typename Scalar, typename Rng>
Trace<Scalar> run_baseline(BaselineKind kind, const ProblemInstance<Scalar>& instance,
                           const ScheduleParams<Scalar>& params, const Vector<Scalar>& x_init,
                           Rng& rng, const RunOptions<Scalar>& options = {}) {
  using detail::Learner;
  Learner learner = Learner::unconstrained_two_point;
  switch (kind) {
    case BaselineKind::full_info_rectified: learner = Learner::full_info_rectified; break;
    case BaselineKind::unconstrained_two_point: learner = Learner::unconstrained_two_point; break;
    case BaselineKind::projected_ogd: learner = Learner::projected_ogd; break;
  }
  if (learner != Learner::unconstrained_two_point && !instance.loss_full)
    throw InvalidArgument(std::string(to_string(kind)) +
                          " requires a full-information loss oracle");
  return detail::run_learner(learner, instance, params, x_init, rng, options);
}

}  // namespace bco
