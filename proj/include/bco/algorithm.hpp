#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bco/ball.hpp"
#include "bco/estimator.hpp"
#include "bco/problem.hpp"
#include "bco/schedule.hpp"
#include "bco/subproblem.hpp"

namespace bco {

/// Which point the penalty update evaluates the newly revealed constraint at.
/// `previous` is g_{t+1}(x_t), `current` is g_{t+1}(x_{t+1}).
enum class PenaltyEvalPoint { previous, current };

template <typename Scalar>
struct RunOptions {
  PenaltyEvalPoint penalty_eval_point = PenaltyEvalPoint::previous;
  Scalar solver_tol = Scalar(1e-10);
  std::int64_t solver_max_iter = 50000;
};

template <typename Scalar>
struct RoundState {
  std::int64_t t = 1;
  Vector<Scalar> x;
  Scalar lambda = Scalar(0);
};

/// Audit record of one round. Every metric is derived from these.
template <typename Scalar>
struct TraceRecord {
  std::int64_t t;
  Vector<Scalar> x;  // x_t
  Vector<Scalar> u;  // sphere direction (zero for full-information learners)
  Scalar loss_plus;
  Scalar loss_minus;
  Vector<Scalar> grad_est;
  Scalar g_at_x;  // g_t(x_t)
  Scalar g_plus;  // [g_t(x_t)]_+
  Scalar lambda;
  Scalar alpha;
  Scalar gamma;
  Scalar eta;
  SolveMethod solver_method;
  Scalar solver_gap;
};

template <typename Scalar>
using Trace = std::vector<TraceRecord<Scalar>>;

/// A run stopped early; the rounds completed so far are kept.
template <typename Scalar>
class RunAborted : public Error {
 public:
  RunAborted(const std::string& what, Trace<Scalar> partial)
      : Error(what), partial_(std::move(partial)) {}
  const Trace<Scalar>& partial_trace() const { return partial_; }

 private:
  Trace<Scalar> partial_;
};

/// lambda_{t+1} = max(lambda_t + gamma_{t+1} [g_{t+1}]_+, eta_{t+1})
template <typename Scalar>
Scalar update_penalty(Scalar lambda, Scalar g_value_plus, Scalar gamma_next, Scalar eta_next) {
  if (!std::isfinite(lambda) || !std::isfinite(g_value_plus) || !std::isfinite(gamma_next) ||
      !std::isfinite(eta_next))
    throw NonFiniteValue("update_penalty: non-finite input");
  if (g_value_plus < Scalar(0))
    throw InvalidArgument("update_penalty: constraint value must be rectified (>= 0)");
  return std::max(lambda + gamma_next * g_value_plus, eta_next);
}

namespace detail {

enum class Learner { main, full_info_rectified, unconstrained_two_point, projected_ogd };

template <typename Scalar, typename Rng>
std::pair<RoundState<Scalar>, TraceRecord<Scalar>> advance(Learner learner,
                                                           const RoundState<Scalar>& state,
                                                           const ProblemInstance<Scalar>& instance,
                                                           const ScheduleParams<Scalar>& params,
                                                           const FeasibleBall<Scalar>& domain,
                                                           Rng& rng,
                                                           const RunOptions<Scalar>& options) {
  const std::int64_t t = state.t;
  const auto steps = schedule(t, params);
  const auto& g = instance.constraint(t);
  const auto d = instance.dimension();

  TraceRecord<Scalar> rec;
  rec.t = t;
  rec.x = state.x;
  rec.lambda = state.lambda;
  rec.alpha = steps.alpha;
  rec.gamma = steps.gamma;
  rec.eta = steps.eta;
  rec.g_at_x = g.value(state.x);
  rec.g_plus = std::max(rec.g_at_x, Scalar(0));

  const bool full_info = learner == Learner::full_info_rectified || learner == Learner::projected_ogd;
  if (full_info) {
    auto eval = instance.full(t, state.x);
    if (!std::isfinite(eval.value) || !eval.gradient.allFinite())
      throw NonFiniteValue("full-information oracle returned a non-finite value");
    rec.u = Vector<Scalar>::Zero(d);
    rec.loss_plus = rec.loss_minus = eval.value;
    rec.grad_est = std::move(eval.gradient);
  } else {
    rec.u = sample_unit_sphere<Scalar>(rng, d);
    auto est = two_point_gradient<Scalar>(
        [&](const Vector<Scalar>& q) { return instance.loss_query(t, q); }, state.x, params.delta,
        rec.u);
    rec.loss_plus = est.loss_values.first;
    rec.loss_minus = est.loss_values.second;
    rec.grad_est = std::move(est.vector);
  }

  RoundState<Scalar> next{t + 1, Vector<Scalar>(), state.lambda};
  if (learner == Learner::projected_ogd) {
    next.x = project(domain, Vector<Scalar>(state.x - rec.grad_est / steps.alpha));
    rec.solver_method = SolveMethod::closed_form;
    rec.solver_gap = Scalar(0);
    return {std::move(next), std::move(rec)};
  }

  const Scalar weight =
      learner == Learner::unconstrained_two_point ? Scalar(0) : state.lambda * steps.gamma;
  Subproblem<Scalar> sub{rec.grad_est, state.x, weight, steps.alpha, domain, g};
  auto report = solve(sub, options.solver_tol, options.solver_max_iter);
  rec.solver_method = report.method;
  rec.solver_gap = report.certified_gap;
  next.x = std::move(report.solution);

  if (t < instance.horizon) {
    const auto steps_next = schedule(t + 1, params);
    const auto& point = options.penalty_eval_point == PenaltyEvalPoint::previous ? state.x : next.x;
    const Scalar g_next_plus = instance.constraint(t + 1).positive_part(point);
    next.lambda = update_penalty(state.lambda, g_next_plus, steps_next.gamma, steps_next.eta);
  }
  return {std::move(next), std::move(rec)};
}

template <typename Scalar, typename Rng>
Trace<Scalar> run_learner(Learner learner, const ProblemInstance<Scalar>& instance,
                          const ScheduleParams<Scalar>& params, const Vector<Scalar>& x_init,
                          Rng& rng, const RunOptions<Scalar>& options) {
  instance.check();
  if (params.horizon != instance.horizon)
    throw InvalidArgument("schedule horizon does not match the instance horizon");
  const bool shrink = learner == Learner::main || learner == Learner::unconstrained_two_point;
  if (shrink) validate(params, instance.domain);
  const FeasibleBall<Scalar> domain = shrink ? instance.domain.shrink(params.xi) : instance.domain;

  Trace<Scalar> trace;
  trace.reserve(static_cast<std::size_t>(instance.horizon));
  RoundState<Scalar> state{1, project(domain, x_init), Scalar(0)};
  for (std::int64_t t = 1; t <= instance.horizon; ++t) {
    try {
      auto [next, rec] = advance(learner, state, instance, params, domain, rng, options);
      trace.push_back(std::move(rec));
      state = std::move(next);
    } catch (const SolverUnconverged<Scalar>& e) {
      throw RunAborted<Scalar>("round " + std::to_string(t) + ": " + e.what(), std::move(trace));
    }
  }
  return trace;
}

}  // namespace detail

/// One round of the penalty-based proximal method with two-point feedback:
/// draw u_t, query f_t at x_t +/- delta u_t, estimate the gradient, solve the
/// proximal subproblem over the shrunken domain, then update the penalty with
/// the newly revealed constraint.
///
/// `state.x` must lie in the shrunken domain and `params` must pass validate().
template <typename Scalar, typename Rng>
std::pair<RoundState<Scalar>, TraceRecord<Scalar>> run_round(
    const RoundState<Scalar>& state, const ProblemInstance<Scalar>& instance,
    const ScheduleParams<Scalar>& params, Rng& rng, const RunOptions<Scalar>& options = {}) {
  const auto domain = instance.domain.shrink(params.xi);
  return detail::advance(detail::Learner::main, state, instance, params, domain, rng, options);
}

/// Full run from x_init (projected into the shrunken domain) with lambda_1 = 0.
/// Throws RunAborted, carrying the partial trace, if an inner solve fails.
template <typename Scalar, typename Rng>
Trace<Scalar> run(const ProblemInstance<Scalar>& instance, const ScheduleParams<Scalar>& params,
                  const Vector<Scalar>& x_init, Rng& rng, const RunOptions<Scalar>& options = {}) {
  return detail::run_learner(detail::Learner::main, instance, params, x_init, rng, options);
}

}  // namespace bco
