#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "bco/ball.hpp"
#include "bco/errors.hpp"

namespace bco {

enum class ScheduleMode { convex, strongly_convex };

/// Tuning constants of the learner. Step sizes are derived per round by schedule().
template <typename Scalar>
struct ScheduleParams {
  Scalar c = Scalar(0.5);
  Scalar epsilon = Scalar(0.05);
  Scalar delta = Scalar(0);  // perturbation radius of the two query points
  Scalar xi = Scalar(0);     // shrinkage of the domain
  ScheduleMode mode = ScheduleMode::convex;
  std::optional<Scalar> sigma;  // strong convexity modulus, strongly_convex mode only
  std::int64_t horizon = 1;

  /// Defaults tied to the horizon: delta = 1/T and xi = delta / R.
  static ScheduleParams with_defaults(std::int64_t horizon, Scalar radius,
                                      ScheduleMode mode = ScheduleMode::convex,
                                      std::optional<Scalar> sigma = std::nullopt) {
    ScheduleParams p;
    p.horizon = horizon;
    p.mode = mode;
    p.sigma = sigma;
    p.delta = Scalar(1) / static_cast<Scalar>(horizon);
    p.xi = p.delta / radius;
    return p;
  }

  friend bool operator==(const ScheduleParams&, const ScheduleParams&) = default;
};

template <typename Scalar>
struct Steps {
  Scalar alpha;  // proximal weight
  Scalar gamma;  // constraint scaling
  Scalar eta;    // penalty floor
};

/// Step sizes for round t (1-based):
///   convex:          alpha = t^c,      gamma = t^(c + eps), eta = t^c
///   strongly convex: alpha = sigma t,  gamma = t^(c + eps), eta = t^c
template <typename Scalar>
Steps<Scalar> schedule(std::int64_t t, const ScheduleParams<Scalar>& p) {
  if (t < 1) throw InvalidArgument("schedule: round index must be >= 1");
  if (t > p.horizon) throw InvalidArgument("schedule: round index exceeds horizon");
  const Scalar tt = static_cast<Scalar>(t);
  const Scalar eta = std::pow(tt, p.c);
  const Scalar gamma = std::pow(tt, p.c + p.epsilon);
  if (p.mode == ScheduleMode::strongly_convex) {
    if (!p.sigma) throw InvalidArgument("schedule: strongly_convex mode requires sigma");
    return {*p.sigma * tt, gamma, eta};
  }
  return {eta, gamma, eta};
}

enum class ScheduleError {
  c_out_of_range,
  epsilon_not_positive,
  xi_out_of_range,
  delta_not_positive,
  perturbation_exceeds_margin,
  missing_sigma,
  sigma_not_positive,
  horizon_negative,
};

inline const char* describe(ScheduleError e) {
  switch (e) {
    case ScheduleError::c_out_of_range: return "c outside [1/2, 1)";
    case ScheduleError::epsilon_not_positive: return "epsilon must be positive";
    case ScheduleError::xi_out_of_range: return "xi outside (0, 1)";
    case ScheduleError::delta_not_positive: return "delta must be positive";
    case ScheduleError::perturbation_exceeds_margin: return "perturbation exceeds shrinkage margin";
    case ScheduleError::missing_sigma: return "strongly_convex mode requires sigma";
    case ScheduleError::sigma_not_positive: return "sigma must be positive";
    case ScheduleError::horizon_negative: return "horizon must be nonnegative";
  }
  return "invalid schedule";
}

class InvalidSchedule : public Error {
 public:
  explicit InvalidSchedule(ScheduleError code) : Error(describe(code)), code_(code) {}
  ScheduleError code() const { return code_; }

 private:
  ScheduleError code_;
};

/// Relative slack on the delta <= xi R test. The default xi = delta / R meets
/// the bound with equality and must survive the rounding of delta / R * R.
inline constexpr double kMarginRelativeSlack = 1e-12;

/// Throws InvalidSchedule naming the first violated precondition.
template <typename Scalar>
void validate(const ScheduleParams<Scalar>& p, const FeasibleBall<Scalar>& ball) {
  auto fail = [](ScheduleError e) { throw InvalidSchedule(e); };
  if (!(p.c >= Scalar(0.5) && p.c < Scalar(1))) fail(ScheduleError::c_out_of_range);
  if (!(p.epsilon > Scalar(0))) fail(ScheduleError::epsilon_not_positive);
  if (!(p.xi > Scalar(0) && p.xi < Scalar(1))) fail(ScheduleError::xi_out_of_range);
  if (!(p.delta > Scalar(0))) fail(ScheduleError::delta_not_positive);
  if (!(p.delta <= p.xi * ball.radius() * (Scalar(1) + Scalar(kMarginRelativeSlack))))
    fail(ScheduleError::perturbation_exceeds_margin);
  if (p.horizon < 0) fail(ScheduleError::horizon_negative);
  if (p.mode == ScheduleMode::strongly_convex) {
    if (!p.sigma) fail(ScheduleError::missing_sigma);
    if (!(*p.sigma > Scalar(0))) fail(ScheduleError::sigma_not_positive);
  }
}

}  // namespace bco
