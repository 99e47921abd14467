#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "bco/experiments.hpp"

namespace bco {

double MetricSeries::final_regret() const {
  if (!with_regret) throw InvalidArgument("metric series was computed without a comparator");
  return regret.empty() ? 0.0 : regret.back();
}

MetricSeries violation_metrics(const Trace<double>& trace) {
  MetricSeries m;
  m.v_hard.reserve(trace.size());
  m.v_soft.reserve(trace.size());
  double hard = 0.0, soft = 0.0;
  for (const auto& rec : trace) {
    hard += std::max(rec.g_at_x, 0.0);
    soft += rec.g_at_x;
    m.v_hard.push_back(hard);
    m.v_soft.push_back(soft);
  }
  return m;
}

MetricSeries compute_metrics(const Trace<double>& trace, const Instance& instance,
                             const VectorXd* x_star) {
  if (static_cast<std::int64_t>(trace.size()) != instance.horizon)
    throw InvalidArgument("compute_metrics: trace length does not match the instance horizon");
  MetricSeries m = violation_metrics(trace);
  if (x_star == nullptr) return m;
  instance.domain.check_dimension(x_star->size());
  m.with_regret = true;
  m.regret.reserve(trace.size());
  double regret = 0.0;
  for (const auto& rec : trace) {
    regret += instance.full(rec.t, rec.x).value - instance.full(rec.t, *x_star).value;
    m.regret.push_back(regret);
  }
  return m;
}

GrowthFit fit_growth_exponent(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw InvalidArgument("fit_growth_exponent: need at least 3 points");
  std::set<double> horizons;
  for (const auto& [T, v] : points) {
    if (!(T > 0.0)) throw InvalidArgument("fit_growth_exponent: T values must be positive");
    if (!(v > 0.0)) throw InvalidArgument("fit_growth_exponent: values must be positive");
    horizons.insert(T);
  }
  if (horizons.size() != points.size())
    throw InvalidArgument("fit_growth_exponent: T values must be distinct");

  const auto n = static_cast<Eigen::Index>(points.size());
  VectorXd lx(n), ly(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    lx[i] = std::log(points[static_cast<std::size_t>(i)].first);
    ly[i] = std::log(points[static_cast<std::size_t>(i)].second);
  }
  const VectorXd cx = lx.array() - lx.mean();
  const VectorXd cy = ly.array() - ly.mean();
  const double slope = cx.dot(cy) / cx.squaredNorm();
  const double ss_tot = cy.squaredNorm();
  const double ss_res = (cy - slope * cx).squaredNorm();
  // A constant series is fitted exactly by a flat line.
  const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return {slope, r2};
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty sample");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::main: return "main";
    case Algorithm::full_info_rectified: return "full_info_rectified";
    case Algorithm::unconstrained_two_point: return "unconstrained_two_point";
    case Algorithm::projected_ogd: return "projected_ogd";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (auto a : {Algorithm::main, Algorithm::full_info_rectified, Algorithm::unconstrained_two_point,
                 Algorithm::projected_ogd})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

Trace<double> run_algorithm(Algorithm algorithm, const Instance& instance,
                            const ScheduleParams<double>& params, std::uint64_t seed,
                            const RunOptions<double>& options) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 2u};
  std::mt19937_64 rng(seq);
  const VectorXd x0 = instance.domain.center();
  switch (algorithm) {
    case Algorithm::main: return run(instance, params, x0, rng, options);
    case Algorithm::full_info_rectified:
      return run_baseline(BaselineKind::full_info_rectified, instance, params, x0, rng, options);
    case Algorithm::unconstrained_two_point:
      return run_baseline(BaselineKind::unconstrained_two_point, instance, params, x0, rng, options);
    case Algorithm::projected_ogd:
      return run_baseline(BaselineKind::projected_ogd, instance, params, x0, rng, options);
  }
  throw InvalidArgument("unknown algorithm");
}

RunOutcome evaluate(const SuiteSpec& spec, const ScheduleParams<double>& params,
                    Algorithm algorithm, std::uint64_t seed, const RunOptions<double>& options) {
  if (spec.horizon != params.horizon)
    throw InvalidArgument("evaluate: suite and schedule horizons differ");
  const Instance instance = generate(spec);
  RunOutcome out;
  out.trace = run_algorithm(algorithm, instance, params, seed, options);
  out.comparator = offline_optimum(instance);
  out.metrics = compute_metrics(out.trace, instance, &out.comparator.x_star);
  return out;
}

std::vector<std::int64_t> default_checkpoints() {
  std::vector<std::int64_t> out;
  for (int k = 0; k <= 4; ++k) out.push_back(std::llround(std::pow(10.0, 3.0 + 0.5 * k)));
  return out;
}

}  // namespace bco
