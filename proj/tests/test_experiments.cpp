#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bco/experiments.hpp"

using namespace bco;
using Vec = VectorXd;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vec random_in(const FeasibleBall<double>& ball, std::mt19937_64& rng) {
  return ball.center() + ball.radius() * sample_unit_ball<double>(rng, ball.dimension());
}

/// T copies of f(x) = 1/2 |x - m|^2 and one fixed affine constraint.
Instance quadratic_instance(Vec m, Vec a, double b, double R, std::int64_t T) {
  Instance inst{FeasibleBall<double>::origin(m.size(), R)};
  inst.horizon = T;
  inst.loss_query = [m](std::int64_t, const Vec& x) { return 0.5 * (x - m).squaredNorm(); };
  inst.loss_full = [m](std::int64_t, const Vec& x) {
    return LossEval<double>{0.5 * (x - m).squaredNorm(), x - m};
  };
  inst.constraints.push_back(ConstraintFn<double>::affine(std::move(a), b));
  return inst;
}

const SuiteSpec kSpecs[] = {
    {LossFamily::linear_drift, ConstraintMode::fixed_affine, 2, 50, 1, 0.3, 1.0},
    {LossFamily::quadratic, ConstraintMode::time_varying_affine, 3, 50, 2, 0.5, 2.0},
    {LossFamily::quadratic_general, ConstraintMode::max_of_affine, 2, 50, 3, 0.2, 1.5},
    {LossFamily::quadratic, ConstraintMode::max_of_affine, 4, 50, 4, 0.3, 1.0},
    {LossFamily::quadratic_general, ConstraintMode::time_varying_affine, 1, 50, 5, 0.4, 1.0},
};

}  // namespace

TEST_CASE("generate: equal specs give identical instances") {
  const SuiteSpec spec{LossFamily::linear_drift, ConstraintMode::time_varying_affine, 2, 10, 7, 0.3, 1.0};
  const auto a = generate(spec);
  const auto b = generate(spec);
  std::mt19937_64 rng(1);
  for (std::int64_t t = 1; t <= 10; ++t) {
    const Vec x = random_in(a.domain, rng);
    CHECK(a.loss_query(t, x) == b.loss_query(t, x));
    CHECK(a.loss_full(t, x).gradient == b.loss_full(t, x).gradient);
    CHECK(a.constraint(t).value(x) == b.constraint(t).value(x));
  }
  CHECK(a.loss_lipschitz == b.loss_lipschitz);
  CHECK(a.constraint_lipschitz == b.constraint_lipschitz);

  auto other = spec;
  other.seed = 8;
  const auto c = generate(other);
  CHECK(c.loss_query(1, Vec::Zero(2)) == a.loss_query(1, Vec::Zero(2)));  // linear: zero at origin
  CHECK(c.loss_query(1, Vec::Ones(2)) != a.loss_query(1, Vec::Ones(2)));
}

TEST_CASE("generate: quadratic losses vanish in gradient at their targets") {
  const auto inst = generate({LossFamily::quadratic, ConstraintMode::fixed_affine, 3, 20, 3, 0.3, 1.0});
  CHECK(inst.strong_convexity == 1.0);
  for (std::int64_t t = 1; t <= 20; ++t) {
    const auto e = inst.loss_full(t, Vec::Zero(3));
    const Vec m = -e.gradient;
    CHECK(inst.loss_full(t, m).gradient.norm() <= 1e-15);
    CHECK(inst.loss_query(t, m) == doctest::Approx(0.0));
  }
}

TEST_CASE("generate: constraint modes") {
  const auto fixed = generate({LossFamily::quadratic, ConstraintMode::fixed_affine, 2, 30, 3, 0.3, 1.0});
  CHECK(fixed.fixed_constraints);
  CHECK(fixed.constraints.size() == 1);
  CHECK(&fixed.constraint(1) == &fixed.constraint(30));
  const auto varying = generate({LossFamily::quadratic, ConstraintMode::time_varying_affine, 2, 30, 3, 0.3, 1.0});
  CHECK(!varying.fixed_constraints);
  CHECK(varying.constraints.size() == 30);
  const auto maxed = generate({LossFamily::quadratic, ConstraintMode::max_of_affine, 2, 30, 3, 0.3, 1.0});
  CHECK(maxed.fixed_constraints);
  CHECK(maxed.constraint(1).as_max_of_affine() != nullptr);
}

TEST_CASE("generate: invalid specs") {
  CHECK_THROWS_AS(generate({LossFamily::quadratic, ConstraintMode::max_of_affine, 1, 10, 0, 0.3, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(generate({LossFamily::quadratic, ConstraintMode::fixed_affine, 0, 10, 0, 0.3, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(generate({LossFamily::quadratic, ConstraintMode::fixed_affine, 2, 0, 0, 0.3, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(generate({LossFamily::quadratic, ConstraintMode::fixed_affine, 2, 10, 0, 1.5, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(generate({LossFamily::quadratic, ConstraintMode::fixed_affine, 2, 10, 0, 0.3, 0.0}), InvalidArgument);
}

TEST_CASE("generate: certified Lipschitz bounds hold on random pairs") {
  for (const auto& spec : kSpecs) {
    const auto inst = generate(spec);
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<std::int64_t> round(1, spec.horizon);
    for (int k = 0; k < 10000; ++k) {
      const std::int64_t t = round(rng);
      const Vec x = random_in(inst.domain, rng), y = random_in(inst.domain, rng);
      const double dist = (x - y).norm();
      CHECK(std::abs(inst.loss_query(t, x) - inst.loss_query(t, y)) <= inst.loss_lipschitz * dist + 1e-12);
      const auto& g = inst.constraint(t);
      CHECK(std::abs(g.value(x) - g.value(y)) <= inst.constraint_lipschitz * dist + 1e-12);
      CHECK(inst.loss_full(t, x).gradient.norm() <= inst.loss_lipschitz + 1e-12);
    }
  }
}

TEST_CASE("generate: strong convexity modulus is certified") {
  for (const auto& spec : kSpecs) {
    if (spec.family == LossFamily::linear_drift) continue;
    const auto inst = generate(spec);
    CHECK(inst.strong_convexity > 0.0);
    std::mt19937_64 rng(spec.seed + 100);
    for (std::int64_t t = 1; t <= spec.horizon; ++t) {
      const Vec x = random_in(inst.domain, rng), y = random_in(inst.domain, rng);
      const auto fx = inst.loss_full(t, x);
      const double fy = inst.loss_query(t, y);
      CHECK(fy >= fx.value + fx.gradient.dot(y - x) + 0.5 * inst.strong_convexity * (y - x).squaredNorm() - 1e-12);
    }
  }
}

TEST_CASE("generate: aggregate loss agrees with the per-round sum") {
  for (const auto& spec : kSpecs) {
    const auto inst = generate(spec);
    std::mt19937_64 rng(3);
    const Vec x = random_in(inst.domain, rng);
    LossEval<double> acc{0.0, Vec::Zero(x.size())};
    for (std::int64_t t = 1; t <= inst.horizon; ++t) {
      const auto e = inst.loss_full(t, x);
      acc.value += e.value;
      acc.gradient += e.gradient;
    }
    const auto total = inst.total(x);
    CHECK(total.value == doctest::Approx(acc.value).epsilon(1e-12));
    CHECK((total.gradient - acc.gradient).norm() <= 1e-10 * (1 + acc.gradient.norm()));
  }
}

TEST_CASE("generate: origin violates the constraints and an interior feasible point exists") {
  for (const auto& spec : kSpecs) {
    const auto inst = generate(spec);
    const Vec origin = Vec::Zero(spec.dimension);
    const Vec anchor = -0.1 * spec.radius * Vec::Ones(spec.dimension) / std::sqrt(double(spec.dimension));
    for (std::int64_t t = 1; t <= spec.horizon; ++t) {
      CHECK(inst.constraint(t).value(origin) > 0.0);
      CHECK(inst.constraint(t).value(anchor) <= 1e-15);
    }
  }
}

TEST_CASE("alternating example") {
  const auto values = make_alternating_example(1000);
  REQUIRE(values.size() == 1000);
  double hard = 0.0, soft = 0.0;
  for (double g : values) {
    hard += std::max(g, 0.0);
    soft += g;
    CHECK(soft <= 0.0);
  }
  CHECK(hard == 500.0);
  CHECK(soft == 0.0);
  CHECK(make_alternating_example(2) == std::vector<double>{-1.0, 1.0});
  CHECK_THROWS_AS(make_alternating_example(3), InvalidArgument);
}

TEST_CASE("alternating example through the metrics pipeline") {
  const auto inst = alternating_instance(1000);
  const auto trace = constant_play_trace(inst, Vec::Zero(1));
  const auto m = compute_metrics(trace, inst, nullptr);
  CHECK(m.final_v_hard() == 500.0);
  CHECK(m.final_v_soft() == 0.0);
  for (std::size_t k = 0; k < m.horizon(); ++k) CHECK(m.v_soft[k] <= 0.0);
  const auto two = compute_metrics(constant_play_trace(alternating_instance(2), Vec::Zero(1)), alternating_instance(2), nullptr);
  CHECK(two.final_v_hard() == 1.0);
}

TEST_CASE("compute_metrics: examples and errors") {
  // Zero losses: regret identically zero.
  auto zero = alternating_instance(10);
  const auto m0 = compute_metrics(constant_play_trace(zero, Vec::Zero(1)), zero, &(const Vec&)Vec::Constant(1, 0.5));
  for (double r : m0.regret) CHECK(r == 0.0);

  // One round with f(x_1) = 3 and f(x*) = 1.
  Instance one{FeasibleBall<double>::origin(1, 5.0)};
  one.horizon = 1;
  one.loss_query = [](std::int64_t, const Vec& x) { return x[0]; };
  one.loss_full = [](std::int64_t, const Vec& x) { return LossEval<double>{x[0], Vec::Ones(1)}; };
  one.constraints.push_back(ConstraintFn<double>::affine(Vec::Ones(1), 10.0));
  const Vec x_star = Vec::Constant(1, 1.0);
  const auto m1 = compute_metrics(constant_play_trace(one, Vec::Constant(1, 3.0)), one, &x_star);
  CHECK(m1.with_regret);
  CHECK(m1.final_regret() == 2.0);

  const auto m2 = compute_metrics(constant_play_trace(one, Vec::Constant(1, 3.0)), one, nullptr);
  CHECK(!m2.with_regret);
  CHECK_THROWS_AS(m2.final_regret(), InvalidArgument);
  CHECK_THROWS_AS(compute_metrics(constant_play_trace(zero, Vec::Zero(1)), one, nullptr), InvalidArgument);
}

TEST_CASE("metrics invariants on algorithm traces") {
  for (const auto& spec : kSpecs) {
    const auto inst = generate(spec);
    const auto params = ScheduleParams<double>::with_defaults(spec.horizon, spec.radius);
    for (auto alg : {Algorithm::main, Algorithm::full_info_rectified, Algorithm::unconstrained_two_point,
                     Algorithm::projected_ogd}) {
      const auto trace = run_algorithm(alg, inst, params, 11);
      const auto opt = offline_optimum(inst);
      const auto m = compute_metrics(trace, inst, &opt.x_star);
      REQUIRE(m.horizon() == static_cast<std::size_t>(spec.horizon));
      for (std::size_t k = 0; k < m.horizon(); ++k) {
        CHECK(m.v_hard[k] >= 0.0);
        CHECK(m.v_hard[k] >= m.v_soft[k]);
        if (k > 0) CHECK(m.v_hard[k] >= m.v_hard[k - 1]);
      }
    }
  }
}

TEST_CASE("offline_optimum: unconstrained minimiser when feasible") {
  const auto inst = quadratic_instance(vec({-0.3, 0.2}), vec({1.0, 0.0}), 0.0, 1.0, 5);
  const auto sol = offline_optimum(inst);
  CHECK((sol.x_star - vec({-0.3, 0.2})).norm() <= 1e-4);
  CHECK(sol.max_violation <= 1e-8);
  CHECK(sol.certified_gap <= 1e-8 * std::max(1.0, std::abs(sol.objective)));
}

TEST_CASE("offline_optimum: boundary solution (0, 1)") {
  const auto inst = quadratic_instance(vec({1.0, 1.0}), vec({1.0, 0.0}), 0.0, 10.0, 1);
  const auto sol = offline_optimum(inst);
  CHECK((sol.x_star - vec({0.0, 1.0})).norm() <= 2e-4);
  CHECK(sol.objective == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.max_violation <= 1e-8);

  // Grid brute force at mesh 1e-3 over the feasible half of [-2, 2]^2.
  Vec best(2);
  double best_value = INFINITY;
  for (int i = -2000; i <= 0; ++i)
    for (int j = -2000; j <= 2000; ++j) {
      const double x = i * 1e-3, y = j * 1e-3;
      const double v = 0.5 * ((x - 1) * (x - 1) + (y - 1) * (y - 1));
      if (v < best_value) best_value = v, best << x, y;
    }
  CHECK((best - sol.x_star).norm() <= 2e-3);
}

TEST_CASE("offline_optimum: one-dimensional interval path") {
  const auto inst = quadratic_instance(vec({0.8}), vec({1.0}), 0.25, 1.0, 3);
  const auto sol = offline_optimum(inst);
  CHECK(sol.x_star[0] == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("offline_optimum: infeasible constraint") {
  const auto inst = quadratic_instance(vec({0.0, 0.0}), vec({0.0, 0.0}), -1.0, 1.0, 3);  // g = 1
  CHECK_THROWS_AS(offline_optimum(inst), Infeasible);
  const auto far = quadratic_instance(vec({0.0, 0.0}), vec({1.0, 0.0}), 2.0 * -1.0, 1.0, 3);  // x1 <= -2
  CHECK_THROWS_AS(offline_optimum(far), Infeasible);
}

TEST_CASE("offline_optimum: beats random feasible points on generated suites") {
  for (const auto& spec : kSpecs) {
    const auto inst = generate(spec);
    const auto sol = offline_optimum(inst);
    CHECK(sol.certified_gap <= 1e-8 * std::max(1.0, std::abs(sol.objective)));
    double worst = -INFINITY;
    for (std::int64_t t = 1; t <= inst.horizon; ++t) worst = std::max(worst, inst.constraint(t).value(sol.x_star));
    CHECK(worst <= 1e-8);
    CHECK(sol.max_violation == doctest::Approx(worst));
    CHECK(inst.domain.contains(sol.x_star, 1e-12));
    std::mt19937_64 rng(spec.seed);
    int tested = 0;
    while (tested < 10000) {
      const Vec x = random_in(inst.domain, rng);
      bool feasible = true;
      for (std::int64_t t = 1; t <= inst.horizon && feasible; ++t) feasible = inst.constraint(t).value(x) <= 0.0;
      if (!feasible) continue;
      ++tested;
      CHECK(inst.total(x).value >= sol.objective - 1e-8 * std::max(1.0, std::abs(sol.objective)));
    }
  }
}

TEST_CASE("fit_growth_exponent: examples") {
  auto f = fit_growth_exponent({{10, 10}, {100, 100}, {1000, 1000}});
  CHECK(f.slope == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  f = fit_growth_exponent({{10, std::sqrt(10.0)}, {100, 10}, {1000, std::sqrt(1000.0)}});
  CHECK(f.slope == doctest::Approx(0.5));
  f = fit_growth_exponent({{10, 4}, {100, 4}, {1000, 4}});
  CHECK(f.slope == doctest::Approx(0.0));
}

TEST_CASE("fit_growth_exponent: errors") {
  CHECK_THROWS_AS(fit_growth_exponent({{10, 1}, {100, 2}}), InvalidArgument);
  CHECK_THROWS_AS(fit_growth_exponent({{10, 1}, {100, 0}, {1000, 3}}), InvalidArgument);
  CHECK_THROWS_AS(fit_growth_exponent({{10, 1}, {100, -1}, {1000, 3}}), InvalidArgument);
  CHECK_THROWS_AS(fit_growth_exponent({{10, 1}, {10, 2}, {1000, 3}}), InvalidArgument);
}

TEST_CASE("fit_growth_exponent: r^2 below one for noisy data") {
  const auto f = fit_growth_exponent({{10, 1}, {100, 5}, {1000, 3}, {10000, 40}});
  CHECK(f.r_squared < 1.0);
  CHECK(f.r_squared > 0.0);
}

TEST_CASE("median") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS_AS(median({}), InvalidArgument);
}

TEST_CASE("algorithm names round-trip") {
  for (auto a : {Algorithm::main, Algorithm::full_info_rectified, Algorithm::unconstrained_two_point,
                 Algorithm::projected_ogd})
    CHECK(parse_algorithm(to_string(a)) == a);
  CHECK(!parse_algorithm("nope"));
  for (auto f : {LossFamily::linear_drift, LossFamily::quadratic, LossFamily::quadratic_general})
    CHECK(parse_loss_family(to_string(f)) == f);
  for (auto m : {ConstraintMode::fixed_affine, ConstraintMode::time_varying_affine, ConstraintMode::max_of_affine})
    CHECK(parse_constraint_mode(to_string(m)) == m);
}

TEST_CASE("default checkpoints") {
  CHECK(default_checkpoints() == std::vector<std::int64_t>{1000, 3162, 10000, 31623, 100000});
}

TEST_CASE("evaluate: end to end on a small suite") {
  const SuiteSpec spec{LossFamily::quadratic, ConstraintMode::fixed_affine, 2, 200, 1, 0.3, 1.0};
  const auto params = ScheduleParams<double>::with_defaults(200, 1.0);
  const auto out = evaluate(spec, params, Algorithm::main, 3);
  CHECK(out.trace.size() == 200);
  CHECK(out.metrics.with_regret);
  CHECK(out.metrics.horizon() == 200);
  const auto again = evaluate(spec, params, Algorithm::main, 3);
  CHECK(again.metrics.regret == out.metrics.regret);
  auto bad = params;
  bad.horizon = 100;
  CHECK_THROWS_AS(evaluate(spec, bad, Algorithm::main, 3), InvalidArgument);
}
