#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bco/ball.hpp"
#include "bco/constraint.hpp"

namespace bco {

/// Per-round proximal subproblem
///
///   minimize_{x in domain}  <v, x - x_t> + w [g(x)]_+ + (alpha / 2) |x - x_t|^2
///
/// with v the gradient estimate, x_t the anchor and w = lambda_t gamma_t the
/// penalty weight. The objective is alpha-strongly convex, so the minimiser is unique.
template <typename Scalar>
struct Subproblem {
  Vector<Scalar> gradient_est;
  Vector<Scalar> anchor;
  Scalar penalty_weight;
  Scalar alpha;
  FeasibleBall<Scalar> domain;
  ConstraintFn<Scalar> constraint;

  void check() const {
    domain.check_dimension(gradient_est.size());
    domain.check_dimension(anchor.size());
    if (!(alpha > Scalar(0))) throw InvalidArgument("subproblem: alpha must be positive");
    if (!(penalty_weight >= Scalar(0)))
      throw InvalidArgument("subproblem: penalty weight must be nonnegative");
    if (!gradient_est.allFinite() || !anchor.allFinite() || !std::isfinite(penalty_weight) ||
        !std::isfinite(alpha))
      throw NonFiniteValue("subproblem: non-finite input");
  }
};

enum class SolveMethod { closed_form, iterative };

inline const char* to_string(SolveMethod m) {
  return m == SolveMethod::closed_form ? "closed_form" : "iterative";
}

template <typename Scalar>
struct SolveReport {
  Vector<Scalar> solution;
  Scalar objective_value;
  SolveMethod method;
  std::int64_t iterations;
  Scalar certified_gap;  // upper bound on objective(solution) - optimum
};

/// The iterative solver ran out of budget before certifying its tolerance.
template <typename Scalar>
class SolverUnconverged : public Error {
 public:
  SolverUnconverged(Vector<Scalar> best, Scalar gap)
      : Error("inner solver unconverged: certified gap " + std::to_string(double(gap))),
        best_(std::move(best)),
        gap_(gap) {}
  const Vector<Scalar>& best_iterate() const { return best_; }
  Scalar gap() const { return gap_; }

 private:
  Vector<Scalar> best_;
  Scalar gap_;
};

template <typename Scalar>
Scalar objective(const Subproblem<Scalar>& sub, const Vector<Scalar>& x) {
  const Vector<Scalar> step = x - sub.anchor;
  return sub.gradient_est.dot(step) + sub.penalty_weight * sub.constraint.positive_part(x) +
         Scalar(0.5) * sub.alpha * step.squaredNorm();
}

/// Exact minimiser for an affine constraint when it lies inside the domain.
///
/// Candidates: the hinge-inactive step, the hinge-active step and the kink point
/// on the hyperplane a.x = b. Returns nullopt when the winner is outside the ball.
template <typename Scalar>
std::optional<SolveReport<Scalar>> solve_affine_closed_form(const Subproblem<Scalar>& sub) {
  sub.check();
  const auto* aff = sub.constraint.as_affine();
  if (!aff) throw InvalidArgument("solve_affine_closed_form: constraint is not affine");
  if (!aff->a.allFinite() || !std::isfinite(aff->b))
    throw NonFiniteValue("solve_affine_closed_form: non-finite constraint");
  const auto& a = aff->a;
  const Scalar b = aff->b;

  const Vector<Scalar> inactive = sub.anchor - sub.gradient_est / sub.alpha;
  const Vector<Scalar> active = inactive - (sub.penalty_weight / sub.alpha) * a;

  std::optional<Vector<Scalar>> best;
  Scalar best_value = std::numeric_limits<Scalar>::infinity();
  auto consider = [&](const Vector<Scalar>& x) {
    const Scalar value = objective(sub, x);
    if (value < best_value) best_value = value, best = x;
  };
  const bool inactive_ok = a.dot(inactive) <= b;
  const bool active_ok = a.dot(active) >= b;
  if (inactive_ok) consider(inactive);
  if (active_ok) consider(active);
  if (!inactive_ok && !active_ok) {
    const Scalar a2 = a.squaredNorm();
    if (a2 > Scalar(0)) consider(Vector<Scalar>(inactive - a * ((a.dot(inactive) - b) / a2)));
  }
  if (!best || !sub.domain.contains(*best)) return std::nullopt;
  return SolveReport<Scalar>{std::move(*best), best_value, SolveMethod::closed_form, 0, Scalar(0)};
}

namespace detail {

/// Minimiser over R^d of
///   <v, x> + w max_{j} (a_j.x - b_j) + (kappa / 2) |x - z|^2,
/// where the piece list always contains the zero piece (a = 0, b = 0).
/// Every optimal active set yields a small KKT system; the minimiser is the
/// lowest-objective point among all subset solutions.
template <typename Scalar>
struct PolyhedralProxResult {
  Vector<Scalar> x;
  Scalar value;                 // <v, x> + w max_j l_j(x) + kappa/2 |x - z|^2
  std::vector<Scalar> weights;  // convex weights on pieces (index-aligned with input)
};

template <typename Scalar>
PolyhedralProxResult<Scalar> polyhedral_prox_free(const Vector<Scalar>& v, Scalar w,
                                                  const std::vector<AffinePiece<Scalar>>& pieces,
                                                  Scalar kappa, const Vector<Scalar>& z) {
  const auto d = z.size();
  const std::size_t m = pieces.size();
  auto model = [&](const Vector<Scalar>& x) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (const auto& p : pieces) mx = std::max(mx, p(x));
    return v.dot(x) + w * mx + Scalar(0.5) * kappa * (x - z).squaredNorm();
  };

  PolyhedralProxResult<Scalar> best{Vector<Scalar>(), std::numeric_limits<Scalar>::infinity(),
                                    std::vector<Scalar>(m, Scalar(0))};
  const Vector<Scalar> base = z - v / kappa;
  if (w == Scalar(0)) {
    best.x = base;
    best.value = model(base);
    best.weights[0] = Scalar(1);
    return best;
  }

  std::vector<Scalar> r(m);
  for (std::size_t j = 0; j < m; ++j) r[j] = pieces[j](base);

  const std::size_t max_size = std::min<std::size_t>(m, static_cast<std::size_t>(d) + 1);
  std::vector<std::size_t> subset;
  Matrix<Scalar> system;
  Vector<Scalar> rhs;

  auto try_subset = [&]() {
    const auto k = static_cast<Eigen::Index>(subset.size());
    Vector<Scalar> pi(k);
    if (k == 1) {
      pi[0] = Scalar(1);
    } else {
      system.setZero(k + 1, k + 1);
      rhs.resize(k + 1);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j)
          system(i, j) = (w / kappa) * pieces[subset[i]].a.dot(pieces[subset[j]].a);
        system(i, k) = Scalar(1);
        system(k, i) = Scalar(1);
        rhs[i] = r[subset[i]];
      }
      rhs[k] = Scalar(1);
      Eigen::FullPivLU<Matrix<Scalar>> lu(system);
      if (!lu.isInvertible()) return;
      const Vector<Scalar> sol = lu.solve(rhs);
      if (!sol.allFinite()) return;
      pi = sol.head(k);
    }
    Vector<Scalar> direction = Vector<Scalar>::Zero(d);
    for (Eigen::Index i = 0; i < k; ++i) direction += pi[i] * pieces[subset[i]].a;
    Vector<Scalar> x = base - (w / kappa) * direction;
    const Scalar value = model(x);
    if (value < best.value) {
      best.value = value;
      best.x = std::move(x);
      std::fill(best.weights.begin(), best.weights.end(), Scalar(0));
      for (Eigen::Index i = 0; i < k; ++i) best.weights[subset[i]] = pi[i];
    }
  };

  // Enumerate subsets of size 1..max_size in lexicographic order.
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    if (!subset.empty()) try_subset();
    if (subset.size() == max_size) return;
    for (std::size_t j = start; j < m; ++j) {
      subset.push_back(j);
      self(self, j + 1);
      subset.pop_back();
    }
  };
  recurse(recurse, 0);
  return best;
}

template <typename Scalar>
struct BallProxResult {
  Vector<Scalar> x;
  Scalar value;        // objective of the un-shifted problem at x
  Scalar lower_bound;  // valid lower bound on the optimum over the ball
  std::vector<Scalar> weights;
  std::int64_t iterations;
};

/// Minimise <v, x - x_t> + w max_j l_j(x) + (alpha / 2)|x - x_t|^2 over the ball.
/// The ball enters through a scalar multiplier beta >= 0 on (|x - c|^2 - R^2) / 2,
/// which keeps the quadratic isotropic; beta is located by bisection.
template <typename Scalar>
BallProxResult<Scalar> polyhedral_prox_ball(const Vector<Scalar>& v, Scalar w,
                                            const std::vector<AffinePiece<Scalar>>& pieces,
                                            Scalar alpha, const Vector<Scalar>& anchor,
                                            const FeasibleBall<Scalar>& ball, Scalar tol,
                                            std::int64_t max_iter) {
  const auto& c = ball.center();
  const Scalar R = ball.radius();
  auto true_value = [&](const Vector<Scalar>& x) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (const auto& p : pieces) mx = std::max(mx, p(x));
    return v.dot(x - anchor) + w * mx + Scalar(0.5) * alpha * (x - anchor).squaredNorm();
  };
  struct Eval {
    PolyhedralProxResult<Scalar> inner;
    Scalar dual;  // Lagrangian dual value at beta
    Scalar dist;  // |x(beta) - c|
  };
  auto evaluate = [&](Scalar beta) {
    const Scalar kappa = alpha + beta;
    const Vector<Scalar> z = (alpha * anchor + beta * c) / kappa;
    Eval e{polyhedral_prox_free(v, w, pieces, kappa, z), Scalar(0), Scalar(0)};
    e.dist = (e.inner.x - c).norm();
    e.dual = true_value(e.inner.x) + Scalar(0.5) * beta * (e.dist * e.dist - R * R);
    return e;
  };

  Eval lo = evaluate(Scalar(0));
  if (lo.dist <= R) {
    const Scalar value = true_value(lo.inner.x);
    return {lo.inner.x, value, value, lo.inner.weights, 1};
  }
  std::int64_t iterations = 1;
  Scalar beta_lo(0), beta_hi = alpha;
  Eval hi = evaluate(beta_hi);
  while (hi.dist > R) {
    if (++iterations > max_iter || !std::isfinite(beta_hi))
      throw SolverUnconverged<Scalar>(project(ball, hi.inner.x),
                                      std::numeric_limits<Scalar>::infinity());
    beta_lo = beta_hi, lo = hi;
    beta_hi *= Scalar(2);
    hi = evaluate(beta_hi);
  }

  Vector<Scalar> best_x = hi.inner.x;
  Scalar best_value = true_value(best_x);
  std::vector<Scalar> best_weights = hi.inner.weights;
  Scalar lower = std::max(lo.dual, hi.dual);
  auto offer = [&](const Vector<Scalar>& x, const std::vector<Scalar>& weights) {
    const Scalar value = true_value(x);
    if (value < best_value) best_value = value, best_x = x, best_weights = weights;
  };
  offer(project(ball, lo.inner.x), lo.inner.weights);

  while (best_value - lower > tol) {
    const Scalar mid = beta_lo + (beta_hi - beta_lo) / Scalar(2);
    if (!(mid > beta_lo && mid < beta_hi)) break;
    if (++iterations > max_iter) break;
    Eval e = evaluate(mid);
    lower = std::max(lower, e.dual);
    if (e.dist > R) {
      beta_lo = mid;
      offer(project(ball, e.inner.x), e.inner.weights);
    } else {
      beta_hi = mid;
      offer(e.inner.x, e.inner.weights);
    }
  }
  return {best_x, best_value, lower, best_weights, iterations};
}

}  // namespace detail

/// Certified iterative solve for any constraint kind.
///
/// - affine: bisection on the hinge multiplier theta in [0, w], with the primal
///   point x(theta) = Proj(x_t - (v + theta a) / alpha);
/// - max_of_affine: exact active-set solve of the polyhedral prox, bisection on
///   the ball multiplier when the ball binds;
/// - opaque: cutting planes on g, each master solved as a max_of_affine problem.
///
/// Throws SolverUnconverged when the certified gap stays above `tol`.
template <typename Scalar>
SolveReport<Scalar> solve_generic(const Subproblem<Scalar>& sub, Scalar tol = Scalar(1e-10),
                                  std::int64_t max_iter = 50000) {
  sub.check();
  if (!(tol > Scalar(0))) throw InvalidArgument("solve_generic: tolerance must be positive");
  if (max_iter < 1) throw InvalidArgument("solve_generic: max_iter must be >= 1");
  const Scalar w = sub.penalty_weight;
  const Scalar alpha = sub.alpha;
  const auto& v = sub.gradient_est;
  const auto& anchor = sub.anchor;
  const auto& ball = sub.domain;

  auto finish = [&](Vector<Scalar> x, Scalar lower, std::int64_t iterations) {
    const Scalar value = objective(sub, x);
    const Scalar gap = std::max(value - lower, Scalar(0));
    if (!(gap <= tol)) throw SolverUnconverged<Scalar>(std::move(x), gap);
    return SolveReport<Scalar>{std::move(x), value, SolveMethod::iterative, iterations, gap};
  };

  if (const auto* aff = sub.constraint.as_affine()) {
    const auto& a = aff->a;
    const Scalar b = aff->b;
    auto point = [&](Scalar theta) -> Vector<Scalar> {
      return project(ball, Vector<Scalar>(anchor - (v + theta * a) / alpha));
    };
    // Lagrangian value at (x, theta); a lower bound on the optimum when x = point(theta).
    auto dual = [&](const Vector<Scalar>& x, Scalar theta) {
      const Vector<Scalar> step = x - anchor;
      return v.dot(step) + theta * (a.dot(x) - b) + Scalar(0.5) * alpha * step.squaredNorm();
    };
    Vector<Scalar> x_lo = point(Scalar(0));
    Scalar h_lo = a.dot(x_lo) - b;
    if (w == Scalar(0) || h_lo <= Scalar(0)) return finish(x_lo, dual(x_lo, Scalar(0)), 1);
    Vector<Scalar> x_hi = point(w);
    Scalar h_hi = a.dot(x_hi) - b;
    if (h_hi >= Scalar(0)) return finish(x_hi, dual(x_hi, w), 2);

    Scalar theta_lo(0), theta_hi = w;
    Scalar lower = std::max(dual(x_lo, theta_lo), dual(x_hi, theta_hi));
    std::int64_t iterations = 2;
    auto best_primal = [&]() {
      // The optimum sits on a.x = b; interpolate the bracket onto the hyperplane.
      const Scalar s = -h_hi / (h_lo - h_hi);
      Vector<Scalar> x = s * x_lo + (Scalar(1) - s) * x_hi;
      x = project(ball, x);
      Vector<Scalar> best = x;
      Scalar best_value = objective(sub, x);
      for (const Vector<Scalar>* cand : {&x_lo, &x_hi}) {
        const Scalar value = objective(sub, *cand);
        if (value < best_value) best_value = value, best = *cand;
      }
      return std::pair{best, best_value};
    };
    auto [x_best, value_best] = best_primal();
    while (value_best - lower > tol && iterations < max_iter) {
      const Scalar mid = theta_lo + (theta_hi - theta_lo) / Scalar(2);
      if (!(mid > theta_lo && mid < theta_hi)) break;
      ++iterations;
      Vector<Scalar> x_mid = point(mid);
      const Scalar h_mid = a.dot(x_mid) - b;
      lower = std::max(lower, dual(x_mid, mid));
      if (h_mid > Scalar(0)) {
        theta_lo = mid, x_lo = std::move(x_mid), h_lo = h_mid;
      } else if (h_mid < Scalar(0)) {
        theta_hi = mid, x_hi = std::move(x_mid), h_hi = h_mid;
      } else {
        return finish(x_mid, lower, iterations);
      }
      std::tie(x_best, value_best) = best_primal();
    }
    return finish(x_best, lower, iterations);
  }

  std::vector<AffinePiece<Scalar>> pieces;
  pieces.push_back({Vector<Scalar>::Zero(anchor.size()), Scalar(0)});

  if (const auto* mx = sub.constraint.as_max_of_affine()) {
    pieces.insert(pieces.end(), mx->pieces.begin(), mx->pieces.end());
    auto res = detail::polyhedral_prox_ball(v, w, pieces, alpha, anchor, ball, tol, max_iter);
    return finish(std::move(res.x), res.lower_bound, res.iterations);
  }

  // Opaque constraint: Kelley cutting planes on g with exact masters. The model
  // w max(0, max_j cut_j) under-estimates w [g]_+, so each master value is a lower bound.
  const auto& g = sub.constraint;
  const std::size_t max_cuts = static_cast<std::size_t>(anchor.size()) + 2;
  auto cut_at = [&](const Vector<Scalar>& x) {
    const Scalar gx = g.value(x);
    Vector<Scalar> s = g.subgradient(x);
    if (!std::isfinite(gx) || !s.allFinite())
      throw NonFiniteValue("solve_generic: non-finite constraint oracle output");
    const Scalar b = s.dot(x) - gx;
    return AffinePiece<Scalar>{std::move(s), b};
  };
  Vector<Scalar> best_x = project(ball, anchor);
  Scalar best_value = objective(sub, best_x);
  Scalar lower = -std::numeric_limits<Scalar>::infinity();
  pieces.push_back(cut_at(best_x));
  std::int64_t iterations = 0;
  while (iterations < max_iter) {
    auto res = detail::polyhedral_prox_ball(v, w, pieces, alpha, anchor, ball,
                                            std::max(tol / Scalar(4), Scalar(1e-300)), max_iter);
    iterations += res.iterations;
    lower = std::max(lower, res.lower_bound);
    const Scalar value = objective(sub, res.x);
    if (value < best_value) best_value = value, best_x = res.x;
    if (best_value - lower <= tol) break;

    // Keep the zero piece, the cuts the master used and a fresh cut. Dropping
    // unused cuts leaves the master value unchanged; past the cap the used cuts
    // are folded into their aggregate, which is still a minorant of [g]_+.
    std::vector<AffinePiece<Scalar>> next{pieces.front()};
    AffinePiece<Scalar> aggregate{Vector<Scalar>::Zero(anchor.size()), Scalar(0)};
    Scalar mass(0);
    for (std::size_t j = 1; j < pieces.size(); ++j) {
      const Scalar pi = res.weights[j];
      if (pi > Scalar(0)) {
        aggregate.a += pi * pieces[j].a;
        aggregate.b += pi * pieces[j].b;
        mass += pi;
        next.push_back(pieces[j]);
      }
    }
    if (next.size() + 1 > max_cuts) {
      aggregate.a /= mass;
      aggregate.b /= mass;
      next = {pieces.front(), std::move(aggregate)};
    }
    next.push_back(cut_at(res.x));
    pieces = std::move(next);
  }
  return finish(std::move(best_x), lower, iterations);
}

/// Strong-convexity certificate: max over probes p of
///   objective(candidate) + (alpha / 2)|p - candidate|^2 - objective(p).
/// Nonpositive (up to rounding) for the true minimiser.
template <typename Scalar>
Scalar certify_optimality(const Subproblem<Scalar>& sub, const Vector<Scalar>& candidate,
                          const std::vector<Vector<Scalar>>& probes) {
  if (probes.empty()) throw InvalidArgument("certify_optimality: empty probe list");
  const Scalar at_candidate = objective(sub, candidate);
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (const auto& p : probes) {
    worst = std::max(worst, at_candidate + Scalar(0.5) * sub.alpha * (p - candidate).squaredNorm() -
                                objective(sub, p));
  }
  return worst;
}

/// Closed form when it applies, certified iterative solve otherwise.
template <typename Scalar>
SolveReport<Scalar> solve(const Subproblem<Scalar>& sub, Scalar tol = Scalar(1e-10),
                          std::int64_t max_iter = 50000) {
  if (sub.constraint.as_affine()) {
    if (auto report = solve_affine_closed_form(sub)) return std::move(*report);
  }
  return solve_generic(sub, tol, max_iter);
}

}  // namespace bco
