#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bco/algorithm.hpp"
#include "bco/baselines.hpp"
#include "bco/problem.hpp"

namespace bco {

using VectorXd = Vector<double>;
using Instance = ProblemInstance<double>;

enum class LossFamily { linear_drift, quadratic, quadratic_general };
enum class ConstraintMode { fixed_affine, time_varying_affine, max_of_affine };

std::string_view to_string(LossFamily f);
std::string_view to_string(ConstraintMode m);
std::optional<LossFamily> parse_loss_family(std::string_view s);
std::optional<ConstraintMode> parse_constraint_mode(std::string_view s);

/// Synthetic suite description. The domain is the ball of `radius` about the origin.
///
/// Losses drift around a target outside the constraint set, so the comparator
/// sits on the constraint boundary; the origin (the default starting point)
/// violates every generated constraint.
struct SuiteSpec {
  LossFamily family = LossFamily::quadratic;
  ConstraintMode constraint_mode = ConstraintMode::fixed_affine;
  std::int64_t dimension = 2;
  std::int64_t horizon = 1000;
  std::uint64_t seed = 0;
  double drift_scale = 0.3;
  double radius = 1.0;

  friend bool operator==(const SuiteSpec&, const SuiteSpec&) = default;
};

/// Pure function of the SuiteSpec: equal inputs give identical instances.
Instance generate(const SuiteSpec& spec);

/// Constraint values of the hard/soft separation example: -1 on odd rounds, +1 on even rounds.
std::vector<double> make_alternating_example(std::int64_t horizon);

/// One-dimensional instance with f_t = 0 and g_t(x) = x + s_t, where s_t is the
/// alternating sequence above; playing x = 0 reproduces the example values.
Instance alternating_instance(std::int64_t horizon);

/// Trace of a learner that plays `x` in every round (no queries, no penalty).
Trace<double> constant_play_trace(const Instance& instance, const VectorXd& x);

class Infeasible : public Error {
 public:
  using Error::Error;
};

class ComparatorUnconverged : public Error {
 public:
  using Error::Error;
};

struct OfflineSolution {
  VectorXd x_star;
  double objective;      // sum_t f_t(x_star)
  double max_violation;  // max_t g_t(x_star)
  double certified_gap;  // objective - certified lower bound
  std::int64_t iterations;
};

/// Best fixed decision in hindsight: minimise sum_t f_t over the ball subject to
/// max_t g_t <= tol, with a certified gap of at most tol * max(1, |objective|).
/// Uses the central/deep-cut ellipsoid method, which also certifies infeasibility.
OfflineSolution offline_optimum(const Instance& instance, double tol = 1e-8,
                                std::int64_t max_iter = 200000);

/// Cumulative metrics at every round t = 1..T (index t-1).
struct MetricSeries {
  bool with_regret = false;
  std::vector<double> regret;  // empty unless with_regret
  std::vector<double> v_hard;
  std::vector<double> v_soft;

  std::size_t horizon() const { return v_hard.size(); }
  double final_regret() const;
  double final_v_hard() const { return v_hard.empty() ? 0.0 : v_hard.back(); }
  double final_v_soft() const { return v_soft.empty() ? 0.0 : v_soft.back(); }
};

/// Loss values come from the full-information oracle (bookkeeping only);
/// violations come from the recorded g_t(x_t). Pass x_star = nullptr to skip regret.
MetricSeries compute_metrics(const Trace<double>& trace, const Instance& instance,
                             const VectorXd* x_star);

/// Violation series from a trace alone.
MetricSeries violation_metrics(const Trace<double>& trace);

struct GrowthFit {
  double slope;
  double r_squared;
};

/// Least-squares slope of log(value) against log(T).
GrowthFit fit_growth_exponent(const std::vector<std::pair<double, double>>& points);

/// Median of a nonempty sample (mean of the two middle values for even sizes).
double median(std::vector<double> values);

enum class Algorithm { main, full_info_rectified, unconstrained_two_point, projected_ogd };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view s);

/// Run one learner on one instance from the domain centre. The sphere draws use
/// a stream derived from `seed` that is independent of the suite generator.
Trace<double> run_algorithm(Algorithm algorithm, const Instance& instance,
                            const ScheduleParams<double>& params, std::uint64_t seed,
                            const RunOptions<double>& options = {});

struct RunOutcome {
  Trace<double> trace;
  OfflineSolution comparator;
  MetricSeries metrics;
};

/// generate + run + offline comparator + metrics for one (suite, schedule, seed).
RunOutcome evaluate(const SuiteSpec& spec, const ScheduleParams<double>& params,
                    Algorithm algorithm, std::uint64_t seed, const RunOptions<double>& options = {});

/// Geometric checkpoint grid 10^3, 10^3.5, ..., 10^5 (rounded).
std::vector<std::int64_t> default_checkpoints();

}  // namespace bco
