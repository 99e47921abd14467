#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bco/ball.hpp"
#include "bco/constraint.hpp"
#include "bco/problem.hpp"
#include "bco/schedule.hpp"

using namespace bco;
using Vec = Vector<double>;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ScheduleParams<double> params(double c, double eps, double delta, double xi, std::int64_t T) {
  ScheduleParams<double> p;
  p.c = c;
  p.epsilon = eps;
  p.delta = delta;
  p.xi = xi;
  p.horizon = T;
  return p;
}

}  // namespace

TEST_CASE("ball: construction and accessors") {
  const auto b = FeasibleBall<double>::origin(3, 2.0);
  CHECK(b.dimension() == 3);
  CHECK(b.radius() == 2.0);
  CHECK(b.diameter() == 4.0);
  CHECK(b.center().isZero());
  CHECK_THROWS_AS(FeasibleBall<double>(Vec::Zero(2), 0.0), InvalidArgument);
  CHECK_THROWS_AS(FeasibleBall<double>(Vec::Zero(2), -1.0), InvalidArgument);
  CHECK_THROWS_AS(FeasibleBall<double>::origin(0, 1.0), InvalidArgument);
}

TEST_CASE("ball: shrink keeps the centre and scales the radius") {
  const FeasibleBall<double> b(vec({1.0, 0.0}), 2.0);
  const auto s = b.shrink(0.25);
  CHECK(s.center() == b.center());
  CHECK(s.radius() == doctest::Approx(1.5));
  CHECK_THROWS_AS(b.shrink(0.0), InvalidArgument);
  CHECK_THROWS_AS(b.shrink(1.0), InvalidArgument);
}

TEST_CASE("project: examples") {
  const auto unit = FeasibleBall<double>::origin(2, 1.0);
  CHECK(project(unit, vec({0.3, 0.4})) == vec({0.3, 0.4}));
  const Vec p = project(unit, vec({3.0, 4.0}));
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-15));
  const FeasibleBall<double> off(vec({1.0, 0.0}), 2.0);
  const Vec q = project(off, vec({5.0, 0.0}));
  CHECK(q[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(q[1] == 0.0);
}

TEST_CASE("project: dimension mismatch") {
  const auto unit = FeasibleBall<double>::origin(2, 1.0);
  CHECK_THROWS_AS(project(unit, vec({1.0, 2.0, 3.0})), DimensionMismatch);
}

TEST_CASE("project: idempotent, feasible and nonexpansive on random points") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int k = 0; k < 2000; ++k) {
    const Eigen::Index d = 1 + k % 5;
    Vec c(d), x(d), y(d);
    for (Eigen::Index i = 0; i < d; ++i) c[i] = n(rng), x[i] = 4 * n(rng), y[i] = 4 * n(rng);
    const FeasibleBall<double> b(c, u(rng));
    const Vec px = project(b, x);
    const Vec py = project(b, y);
    REQUIRE(b.contains(px));
    CHECK(project(b, px) == px);
    CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
    // Variational inequality of the projection: (x - px).(z - px) <= 0 for z in the ball.
    const Vec z = project(b, y);
    CHECK((x - px).dot(z - px) <= 1e-9);
  }
}

TEST_CASE("schedule: convex examples") {
  const auto p = params(0.5, 0.25, 1e-3, 1e-3, 100);
  const auto s = schedule(4, p);
  CHECK(s.alpha == doctest::Approx(2.0));
  CHECK(s.gamma == doctest::Approx(std::pow(4.0, 0.75)));
  CHECK(s.gamma == doctest::Approx(2.8284271247).epsilon(1e-10));
  CHECK(s.eta == doctest::Approx(2.0));
  const auto s1 = schedule(1, p);
  CHECK(s1.alpha == 1.0);
  CHECK(s1.gamma == 1.0);
  CHECK(s1.eta == 1.0);
}

TEST_CASE("schedule: strongly convex example") {
  auto p = params(0.5, 0.25, 1e-3, 1e-3, 100);
  p.mode = ScheduleMode::strongly_convex;
  p.sigma = 2.0;
  const auto s = schedule(3, p);
  CHECK(s.alpha == doctest::Approx(6.0));
  CHECK(s.gamma == doctest::Approx(std::pow(3.0, 0.75)));
  CHECK(s.gamma == doctest::Approx(2.2795070570).epsilon(1e-9));
  CHECK(s.eta == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("schedule: round index and sigma checks") {
  auto p = params(0.5, 0.05, 1e-3, 1e-3, 10);
  CHECK_THROWS_AS(schedule(0, p), InvalidArgument);
  CHECK_THROWS_AS(schedule(11, p), InvalidArgument);
  p.mode = ScheduleMode::strongly_convex;
  CHECK_THROWS_AS(schedule(1, p), InvalidArgument);
}

TEST_CASE("schedule: monotone in t") {
  for (double c : {0.5, 0.7, 0.99}) {
    const auto p = params(c, 0.05, 1e-3, 1e-3, 1000);
    auto prev = schedule(1, p);
    for (std::int64_t t = 2; t <= 1000; ++t) {
      const auto s = schedule(t, p);
      CHECK(s.alpha >= prev.alpha);
      CHECK(s.gamma >= prev.gamma);
      CHECK(s.eta >= prev.eta);
      CHECK(s.gamma >= s.eta);
      prev = s;
    }
  }
}

TEST_CASE("validate: defaults pass") {
  const auto ball = FeasibleBall<double>::origin(2, 1.0);
  for (std::int64_t T : {7, 10, 1000, 3162, 31623, 100000}) {
    for (double R : {0.3, 1.0, 7.0}) {
      const auto b = FeasibleBall<double>::origin(2, R);
      CHECK_NOTHROW(validate(ScheduleParams<double>::with_defaults(T, R), b));
    }
  }
  const auto p = ScheduleParams<double>::with_defaults(1000, 1.0);
  CHECK(p.c == 0.5);
  CHECK(p.epsilon == 0.05);
  CHECK(p.delta == doctest::Approx(1e-3));
  CHECK(p.xi == doctest::Approx(1e-3));
  CHECK_NOTHROW(validate(p, ball));
}

TEST_CASE("validate: error cases") {
  const auto ball = FeasibleBall<double>::origin(2, 1.0);
  auto code = [&](const ScheduleParams<double>& p) {
    try {
      validate(p, ball);
    } catch (const InvalidSchedule& e) {
      return std::optional<ScheduleError>(e.code());
    }
    return std::optional<ScheduleError>();
  };
  CHECK(code(params(0.3, 0.05, 1e-3, 1e-3, 10)) == ScheduleError::c_out_of_range);
  CHECK(code(params(1.0, 0.05, 1e-3, 1e-3, 10)) == ScheduleError::c_out_of_range);
  CHECK(code(params(0.5, 0.0, 1e-3, 1e-3, 10)) == ScheduleError::epsilon_not_positive);
  CHECK(code(params(0.5, 0.05, 1e-3, 0.0, 10)) == ScheduleError::xi_out_of_range);
  CHECK(code(params(0.5, 0.05, 1e-3, 1.0, 10)) == ScheduleError::xi_out_of_range);
  CHECK(code(params(0.5, 0.05, 0.0, 1e-3, 10)) == ScheduleError::delta_not_positive);
  CHECK(code(params(0.5, 0.05, 0.1, 0.05, 10)) == ScheduleError::perturbation_exceeds_margin);
  CHECK(code(params(0.5, 0.05, 1e-3, 1e-3, -1)) == ScheduleError::horizon_negative);
  CHECK(!code(params(0.5, 0.05, 1e-3, 1e-3, 0)));
  auto sc = params(0.5, 0.05, 1e-3, 1e-3, 10);
  sc.mode = ScheduleMode::strongly_convex;
  CHECK(code(sc) == ScheduleError::missing_sigma);
  sc.sigma = 0.0;
  CHECK(code(sc) == ScheduleError::sigma_not_positive);
  sc.sigma = 1.0;
  CHECK(!code(sc));

  try {
    validate(params(0.3, 0.05, 1e-3, 1e-3, 10), ball);
    FAIL("expected InvalidSchedule");
  } catch (const InvalidSchedule& e) {
    CHECK(std::string(e.what()) == "c outside [1/2, 1)");
  }
}

TEST_CASE("validated schedules keep perturbed queries inside the domain") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  const FeasibleBall<double> ball(vec({0.5, -1.0}), 1.7);
  for (std::int64_t T : {10, 1000, 100000}) {
    const auto p = ScheduleParams<double>::with_defaults(T, ball.radius());
    validate(p, ball);
    const auto inner = ball.shrink(p.xi);
    for (int k = 0; k < 1000; ++k) {
      Vec x(2), u(2);
      x << 5 * n(rng), 5 * n(rng);
      u << n(rng), n(rng);
      u.normalize();
      const Vec y = project(inner, x);
      CHECK(ball.contains(Vec(y + p.delta * u), 1e-12));
      CHECK(ball.contains(Vec(y - p.delta * u), 1e-12));
    }
  }
}

TEST_CASE("constraint: values, subgradients and rectification") {
  const auto g = ConstraintFn<double>::affine(vec({1.0, -2.0}), 0.5);
  CHECK(g.value(vec({1.0, 1.0})) == doctest::Approx(-1.5));
  CHECK(g.positive_part(vec({1.0, 1.0})) == 0.0);
  CHECK(g.positive_part(vec({3.0, 0.0})) == doctest::Approx(2.5));
  CHECK(g.subgradient(vec({0.0, 0.0})) == vec({1.0, -2.0}));
  CHECK(g.lipschitz() == doctest::Approx(std::sqrt(5.0)));
  CHECK(g.as_affine() != nullptr);

  const auto m = ConstraintFn<double>::max_of_affine(
      {{vec({1.0, 0.0}), 0.0}, {vec({0.0, 1.0}), 0.0}, {vec({-3.0, 0.0}), 1.0}});
  CHECK(m.value(vec({0.2, 0.5})) == doctest::Approx(0.5));
  CHECK(m.subgradient(vec({0.2, 0.5})) == vec({0.0, 1.0}));
  CHECK(m.value(vec({-2.0, 0.0})) == doctest::Approx(5.0));
  CHECK(m.lipschitz() == doctest::Approx(3.0));
  CHECK_THROWS_AS(ConstraintFn<double>::max_of_affine({}), InvalidArgument);

  const auto o = ConstraintFn<double>::opaque([](const Vec& x) { return x.norm() - 1.0; },
                                              [](const Vec& x) { return Vec(x.normalized()); }, 1.0);
  CHECK(o.is_opaque());
  CHECK(o.value(vec({3.0, 4.0})) == doctest::Approx(4.0));
  CHECK_THROWS_AS(ConstraintFn<double>::opaque(nullptr, nullptr, -1.0), InvalidArgument);
}

TEST_CASE("constraint: subgradient inequality holds on random pairs") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  std::vector<AffinePiece<double>> pieces;
  for (int i = 0; i < 4; ++i) pieces.push_back({vec({n(rng), n(rng), n(rng)}), n(rng)});
  const auto g = ConstraintFn<double>::max_of_affine(pieces);
  for (int k = 0; k < 1000; ++k) {
    const Vec x = vec({n(rng), n(rng), n(rng)});
    const Vec y = vec({n(rng), n(rng), n(rng)});
    CHECK(g.value(y) >= g.value(x) + g.subgradient(x).dot(y - x) - 1e-12);
    CHECK(std::abs(g.value(x) - g.value(y)) <= g.lipschitz() * (x - y).norm() + 1e-12);
  }
}

TEST_CASE("problem instance: constraint lookup and checks") {
  ProblemInstance<double> inst{FeasibleBall<double>::origin(1, 1.0)};
  inst.horizon = 3;
  inst.loss_query = [](std::int64_t, const Vec& x) { return x[0]; };
  inst.constraints.push_back(ConstraintFn<double>::affine(vec({1.0}), 0.0));
  CHECK_NOTHROW(inst.check());
  CHECK(&inst.constraint(1) == &inst.constraint(3));
  CHECK_THROWS_AS(inst.constraint(0), InvalidArgument);
  CHECK_THROWS_AS(inst.constraint(4), InvalidArgument);
  CHECK_THROWS_AS(inst.full(1, vec({0.0})), InvalidArgument);

  inst.fixed_constraints = false;
  CHECK_THROWS_AS(inst.check(), InvalidArgument);
  inst.constraints.push_back(ConstraintFn<double>::affine(vec({2.0}), 0.0));
  inst.constraints.push_back(ConstraintFn<double>::affine(vec({3.0}), 0.0));
  CHECK_NOTHROW(inst.check());
  CHECK(inst.constraint(2).value(vec({1.0})) == 2.0);

  inst.loss_full = [](std::int64_t t, const Vec& x) {
    return LossEval<double>{static_cast<double>(t) * x[0], vec({static_cast<double>(t)})};
  };
  const auto tot = inst.total(vec({2.0}));
  CHECK(tot.value == doctest::Approx(12.0));
  CHECK(tot.gradient[0] == doctest::Approx(6.0));
}
