#include <cmath>
#include <memory>
#include <random>

#include <Eigen/QR>

#include "bco/estimator.hpp"
#include "bco/experiments.hpp"

namespace bco {

std::string_view to_string(LossFamily f) {
  switch (f) {
    case LossFamily::linear_drift: return "linear_drift";
    case LossFamily::quadratic: return "quadratic";
    case LossFamily::quadratic_general: return "quadratic_general";
  }
  return "unknown";
}

std::string_view to_string(ConstraintMode m) {
  switch (m) {
    case ConstraintMode::fixed_affine: return "fixed_affine";
    case ConstraintMode::time_varying_affine: return "time_varying_affine";
    case ConstraintMode::max_of_affine: return "max_of_affine";
  }
  return "unknown";
}

std::optional<LossFamily> parse_loss_family(std::string_view s) {
  for (auto f : {LossFamily::linear_drift, LossFamily::quadratic, LossFamily::quadratic_general})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

std::optional<ConstraintMode> parse_constraint_mode(std::string_view s) {
  for (auto m : {ConstraintMode::fixed_affine, ConstraintMode::time_varying_affine,
                 ConstraintMode::max_of_affine})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

namespace {

// Drift target of the losses and the anchor point of the constraints, as
// multiples of radius * (1, ..., 1) / sqrt(d).
constexpr double kTargetScale = 0.4;
constexpr double kAnchorScale = -0.1;
constexpr double kMarginScale = 0.1;
constexpr double kMinCurvature = 0.5;
constexpr double kMaxCurvature = 2.0;

struct LossData {
  LossFamily family;
  std::int64_t horizon;
  Eigen::MatrixXd centers;    // d x T: c_t (linear) or m_t (quadratic families)
  Eigen::MatrixXd curvature;  // d x (d T): A_t blocks (quadratic_general)
  Eigen::MatrixXd linear;     // d x T: b_t = -A_t m_t (quadratic_general)
  // Aggregates for sum_t f_t.
  Eigen::MatrixXd curvature_sum;
  VectorXd linear_sum;
  double constant_sum = 0.0;
};

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  return std::mt19937_64(seq);
}

void check_round(const LossData& data, std::int64_t t) {
  if (t < 1 || t > data.horizon) throw InvalidArgument("loss oracle: round index out of range");
}

double loss_value(const LossData& data, std::int64_t t, const VectorXd& x) {
  check_round(data, t);
  const auto k = t - 1;
  const auto d = x.size();
  switch (data.family) {
    case LossFamily::linear_drift: return data.centers.col(k).dot(x);
    case LossFamily::quadratic: return 0.5 * (x - data.centers.col(k)).squaredNorm();
    case LossFamily::quadratic_general: {
      const auto A = data.curvature.middleCols(k * d, d);
      return 0.5 * x.dot(A * x) + data.linear.col(k).dot(x);
    }
  }
  return 0.0;
}

LossEval<double> loss_full(const LossData& data, std::int64_t t, const VectorXd& x) {
  check_round(data, t);
  const auto k = t - 1;
  const auto d = x.size();
  switch (data.family) {
    case LossFamily::linear_drift: return {data.centers.col(k).dot(x), data.centers.col(k)};
    case LossFamily::quadratic: {
      VectorXd diff = x - data.centers.col(k);
      return {0.5 * diff.squaredNorm(), diff};
    }
    case LossFamily::quadratic_general: {
      const auto A = data.curvature.middleCols(k * d, d);
      VectorXd Ax = A * x;
      return {0.5 * x.dot(Ax) + data.linear.col(k).dot(x), Ax + data.linear.col(k)};
    }
  }
  return {0.0, VectorXd::Zero(d)};
}

LossEval<double> loss_total(const LossData& data, const VectorXd& x) {
  VectorXd grad = data.curvature_sum * x + data.linear_sum;
  return {0.5 * x.dot(data.curvature_sum * x) + data.linear_sum.dot(x) + data.constant_sum,
          std::move(grad)};
}

}  // namespace

Instance generate(const SuiteSpec& spec) {
  if (spec.dimension < 1) throw InvalidArgument("suite: dimension must be >= 1");
  if (spec.horizon < 1) throw InvalidArgument("suite: horizon must be >= 1");
  if (!(spec.radius > 0.0)) throw InvalidArgument("suite: radius must be positive");
  if (!(spec.drift_scale >= 0.0 && spec.drift_scale < 1.0))
    throw InvalidArgument("suite: drift_scale must lie in [0, 1)");
  if (spec.constraint_mode == ConstraintMode::max_of_affine && spec.dimension < 2)
    throw InvalidArgument("suite: max_of_affine constraints need dimension >= 2");

  const auto d = static_cast<Eigen::Index>(spec.dimension);
  const auto T = spec.horizon;
  const double R = spec.radius;
  const VectorXd e = VectorXd::Ones(d) / std::sqrt(static_cast<double>(d));

  auto loss_rng = make_rng(spec.seed, 0);
  auto constraint_rng = make_rng(spec.seed, 1);

  auto data = std::make_shared<LossData>();
  data->family = spec.family;
  data->horizon = T;
  data->centers.resize(d, T);
  data->curvature_sum = Eigen::MatrixXd::Zero(d, d);
  data->linear_sum = VectorXd::Zero(d);

  double max_center = 0.0;
  double lipschitz = 0.0;
  double sigma = 0.0;
  for (std::int64_t k = 0; k < T; ++k) {
    data->centers.col(k) =
        kTargetScale * R * e + spec.drift_scale * R * sample_unit_ball<double>(loss_rng, d);
    max_center = std::max(max_center, data->centers.col(k).norm());
  }

  switch (spec.family) {
    case LossFamily::linear_drift:
      lipschitz = max_center;
      data->linear_sum = data->centers.rowwise().sum();
      break;
    case LossFamily::quadratic:
      lipschitz = R + max_center;
      sigma = 1.0;
      data->curvature_sum = static_cast<double>(T) * Eigen::MatrixXd::Identity(d, d);
      data->linear_sum = -data->centers.rowwise().sum();
      data->constant_sum = 0.5 * data->centers.colwise().squaredNorm().sum();
      break;
    case LossFamily::quadratic_general: {
      data->curvature.resize(d, d * T);
      data->linear.resize(d, T);
      std::normal_distribution<double> normal;
      std::uniform_real_distribution<double> eig(kMinCurvature, kMaxCurvature);
      sigma = kMaxCurvature;
      for (std::int64_t k = 0; k < T; ++k) {
        Eigen::MatrixXd G(d, d);
        for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = normal(loss_rng);
        const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
        VectorXd lambdas(d);
        for (Eigen::Index i = 0; i < d; ++i) lambdas[i] = eig(loss_rng);
        const Eigen::MatrixXd A = Q * lambdas.asDiagonal() * Q.transpose();
        data->curvature.middleCols(k * d, d) = A;
        data->linear.col(k) = -A * data->centers.col(k);
        data->curvature_sum += A;
        data->linear_sum += data->linear.col(k);
        sigma = std::min(sigma, lambdas.minCoeff());
        lipschitz = std::max(lipschitz, lambdas.maxCoeff() * R + data->linear.col(k).norm());
      }
      break;
    }
  }

  Instance inst{FeasibleBall<double>::origin(d, R)};
  inst.horizon = T;
  inst.loss_lipschitz = lipschitz;
  inst.strong_convexity = sigma;
  inst.loss_query = [data](std::int64_t t, const VectorXd& x) { return loss_value(*data, t, x); };
  inst.loss_full = [data](std::int64_t t, const VectorXd& x) { return loss_full(*data, t, x); };
  inst.loss_total = [data](const VectorXd& x) { return loss_total(*data, x); };

  // Every constraint holds at the anchor, which lies strictly inside the ball;
  // the origin violates them.
  const VectorXd anchor = kAnchorScale * R * e;
  switch (spec.constraint_mode) {
    case ConstraintMode::fixed_affine:
      inst.fixed_constraints = true;
      inst.constraints.push_back(ConstraintFn<double>::affine(e, e.dot(anchor)));
      break;
    case ConstraintMode::time_varying_affine: {
      inst.fixed_constraints = false;
      inst.constraints.reserve(static_cast<std::size_t>(T));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (std::int64_t k = 0; k < T; ++k) {
        // Tilting e by less than its length keeps a.e > 0, so the slack at the
        // anchor can be capped below the violation at the origin.
        VectorXd a = (e + spec.drift_scale * sample_unit_ball<double>(constraint_rng, d)).normalized();
        const double slack = 0.5 * unit(constraint_rng) * (-a.dot(anchor));
        const double b = a.dot(anchor) + slack;
        inst.constraints.push_back(ConstraintFn<double>::affine(std::move(a), b));
      }
      break;
    }
    case ConstraintMode::max_of_affine: {
      inst.fixed_constraints = true;
      VectorXd perp = VectorXd::Zero(d);
      perp[0] = 1.0, perp[1] = -1.0;
      perp.normalize();
      std::vector<AffinePiece<double>> pieces;
      for (double tilt : {0.5, -0.5}) {
        VectorXd a = (e + tilt * perp).normalized();
        const double b = a.dot(anchor);
        pieces.push_back({std::move(a), b});
      }
      pieces.push_back({e, e.dot(anchor) + 0.5 * kMarginScale * R});
      inst.constraints.push_back(ConstraintFn<double>::max_of_affine(std::move(pieces)));
      break;
    }
  }
  double g_lip = 0.0;
  for (const auto& g : inst.constraints) g_lip = std::max(g_lip, g.lipschitz());
  inst.constraint_lipschitz = g_lip;
  return inst;
}

std::vector<double> make_alternating_example(std::int64_t horizon) {
  if (horizon < 0 || horizon % 2 != 0)
    throw InvalidArgument("alternating example: horizon must be a nonnegative even number");
  std::vector<double> values(static_cast<std::size_t>(horizon));
  for (std::int64_t t = 1; t <= horizon; ++t) values[t - 1] = (t % 2 == 1) ? -1.0 : 1.0;
  return values;
}

Instance alternating_instance(std::int64_t horizon) {
  const auto values = make_alternating_example(horizon);
  if (horizon == 0) throw InvalidArgument("alternating instance: horizon must be positive");
  Instance inst{FeasibleBall<double>::origin(1, 1.0)};
  inst.horizon = horizon;
  inst.fixed_constraints = false;
  inst.loss_query = [](std::int64_t, const VectorXd&) { return 0.0; };
  inst.loss_full = [](std::int64_t, const VectorXd& x) {
    return LossEval<double>{0.0, VectorXd::Zero(x.size())};
  };
  inst.loss_total = [](const VectorXd& x) {
    return LossEval<double>{0.0, VectorXd::Zero(x.size())};
  };
  inst.loss_lipschitz = 0.0;
  inst.constraint_lipschitz = 1.0;
  for (double s : values) inst.constraints.push_back(ConstraintFn<double>::affine(VectorXd::Ones(1), -s));
  return inst;
}

Trace<double> constant_play_trace(const Instance& instance, const VectorXd& x) {
  instance.domain.check_dimension(x.size());
  Trace<double> trace;
  trace.reserve(static_cast<std::size_t>(instance.horizon));
  const VectorXd zero = VectorXd::Zero(x.size());
  for (std::int64_t t = 1; t <= instance.horizon; ++t) {
    const double f = instance.loss_query(t, x);
    const double g = instance.constraint(t).value(x);
    trace.push_back({t, x, zero, f, f, zero, g, std::max(g, 0.0), 0.0, 0.0, 0.0, 0.0,
                     SolveMethod::closed_form, 0.0});
  }
  return trace;
}

}  // namespace bco
