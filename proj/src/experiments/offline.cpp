#include <cmath>
#include <limits>

#include "bco/experiments.hpp"

namespace bco {

namespace {

/// max_t g_t over all rounds with one subgradient of the maximiser.
/// Affine and max-of-affine constraints are stacked into one matrix so the
/// evaluation is a single product; anything else is evaluated one by one.
class ConstraintEnvelope {
 public:
  explicit ConstraintEnvelope(const Instance& instance) : instance_(instance) {
    const auto d = instance.dimension();
    std::vector<const AffinePiece<double>*> pieces;
    for (const auto& g : instance.constraints) {
      if (const auto* a = g.as_affine()) {
        pieces.push_back(a);
      } else if (const auto* m = g.as_max_of_affine()) {
        for (const auto& p : m->pieces) pieces.push_back(&p);
      } else {
        stacked_ = false;
        return;
      }
    }
    normals_.resize(d, static_cast<Eigen::Index>(pieces.size()));
    offsets_.resize(static_cast<Eigen::Index>(pieces.size()));
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      normals_.col(static_cast<Eigen::Index>(i)) = pieces[i]->a;
      offsets_[static_cast<Eigen::Index>(i)] = pieces[i]->b;
    }
  }

  std::pair<double, VectorXd> operator()(const VectorXd& x) const {
    if (stacked_) {
      const VectorXd values = normals_.transpose() * x - offsets_;
      Eigen::Index arg = 0;
      const double best = values.maxCoeff(&arg);
      return {best, normals_.col(arg)};
    }
    double best = -std::numeric_limits<double>::infinity();
    const ConstraintFn<double>* arg = nullptr;
    const std::int64_t count = instance_.fixed_constraints ? 1 : instance_.horizon;
    for (std::int64_t t = 1; t <= count; ++t) {
      const auto& g = instance_.constraint(t);
      const double v = g.value(x);
      if (v > best) best = v, arg = &g;
    }
    return {best, arg->subgradient(x)};
  }

 private:
  const Instance& instance_;
  bool stacked_ = true;
  Eigen::MatrixXd normals_;
  VectorXd offsets_;
};

/// Localising set: an ellipsoid {y : (y-x)' P^{-1} (y-x) <= 1}. In one
/// dimension it is kept as an interval so the update stays exact.
struct Localizer {
  VectorXd center;
  Eigen::MatrixXd shape;
  double lo = 0.0, hi = 0.0;  // d == 1 only

  /// sqrt(g' P g): the width of the set along g.
  double width(const VectorXd& g) const {
    if (center.size() == 1) return std::abs(g[0]) * 0.5 * (hi - lo);
    return std::sqrt(std::max(g.dot(shape * g), 0.0));
  }

  /// Keep {y : g'(y - x) + h <= 0}. Returns false when nothing is left.
  bool cut(const VectorXd& g, double h) {
    const auto d = center.size();
    if (d == 1) {
      if (g[0] == 0.0) return h <= 0.0;
      const double bound = center[0] - h / g[0];
      if (g[0] > 0) hi = std::min(hi, bound);
      else lo = std::max(lo, bound);
      if (lo > hi) return false;
      center[0] = 0.5 * (lo + hi);
      return true;
    }
    const double w = width(g);
    if (!(w > 0.0)) return h <= 0.0;
    const double a = h / w;
    if (a > 1.0) return false;
    const double alpha = std::max(a, -1.0 / static_cast<double>(d));
    const double n = static_cast<double>(d);
    const VectorXd pg = shape * g / w;
    center -= (1.0 + n * alpha) / (n + 1.0) * pg;
    shape = (n * n / (n * n - 1.0)) * (1.0 - alpha * alpha) *
            (shape - (2.0 * (1.0 + n * alpha) / ((n + 1.0) * (1.0 + alpha))) * pg * pg.transpose());
    shape = 0.5 * (shape + shape.transpose()).eval();
    return true;
  }
};

}  // namespace

OfflineSolution offline_optimum(const Instance& instance, double tol, std::int64_t max_iter) {
  instance.check();
  if (!(tol > 0.0)) throw InvalidArgument("offline_optimum: tol must be positive");
  if (!instance.loss_full && !instance.loss_total)
    throw InvalidArgument("offline_optimum: instance has no full-information loss oracle");

  const auto& ball = instance.domain;
  const auto d = ball.dimension();
  const ConstraintEnvelope envelope(instance);

  Localizer loc{ball.center(), Eigen::MatrixXd::Identity(d, d) * (ball.radius() * ball.radius())};
  loc.lo = ball.center()[0] - ball.radius();
  loc.hi = ball.center()[0] + ball.radius();

  bool found = false;
  VectorXd best_x;
  double best_f = std::numeric_limits<double>::infinity();
  double best_g = 0.0;
  double lower = -std::numeric_limits<double>::infinity();

  for (std::int64_t k = 1; k <= max_iter; ++k) {
    const VectorXd x = loc.center;
    const double dist = ball.distance_from_center(x);
    if (dist > ball.radius()) {
      if (!loc.cut((x - ball.center()) / dist, dist - ball.radius())) {
        if (found) return {best_x, best_f, best_g, 0.0, k};
        throw ComparatorUnconverged("offline_optimum: localiser collapsed outside the domain");
      }
      continue;
    }

    // Every point cut by an objective cut is worse than the incumbent, and
    // every point cut by a constraint cut violates some g_t; so on the
    // feasible set the optimum is at least min(best_f, bound over the set).
    const auto total = instance.total(x);
    lower = std::max(lower, total.value - loc.width(total.gradient));

    const auto [g_val, g_sub] = envelope(x);
    if (g_val > tol) {
      if (!loc.cut(g_sub, g_val) || g_sub.isZero(0.0)) {
        if (found) return {best_x, best_f, best_g, 0.0, k};
        throw Infeasible("offline_optimum: no point of the domain satisfies every constraint");
      }
      continue;
    }

    if (total.value < best_f) {
      best_f = total.value;
      best_x = x;
      best_g = g_val;
      found = true;
    }
    const double scale = tol * std::max(1.0, std::abs(best_f));
    if (best_f - lower <= scale) return {best_x, best_f, best_g, std::max(best_f - lower, 0.0), k};
    if (total.gradient.isZero(0.0)) return {best_x, best_f, best_g, 0.0, k};
    if (!loc.cut(total.gradient, total.value - best_f))
      return {best_x, best_f, best_g, 0.0, k};
  }

  if (!found)
    throw Infeasible("offline_optimum: no point with max_t g_t <= tol was found");
  const double gap = best_f - lower;
  if (gap <= tol * std::max(1.0, std::abs(best_f))) return {best_x, best_f, best_g, gap, max_iter};
  throw ComparatorUnconverged("offline_optimum: certified gap " + std::to_string(gap) +
                              " above tolerance after " + std::to_string(max_iter) +
                              " iterations");
}

}  // namespace bco
