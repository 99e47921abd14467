#pragma once

#include <algorithm>
#include <functional>
#include <variant>
#include <vector>

#include "bco/ball.hpp"

namespace bco {

/// g(x) = a.x - b
template <typename Scalar>
struct AffinePiece {
  Vector<Scalar> a;
  Scalar b;

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    return a.dot(x) - b;
  }
};

/// g(x) = max_i (a_i.x - b_i)
template <typename Scalar>
struct MaxOfAffine {
  std::vector<AffinePiece<Scalar>> pieces;
};

/// Any convex function given by value and subgradient callbacks.
template <typename Scalar>
struct OpaqueConvex {
  std::function<Scalar(const Vector<Scalar>&)> value;
  std::function<Vector<Scalar>(const Vector<Scalar>&)> subgradient;
};

/// A convex constraint g with a certified Lipschitz bound on the domain.
template <typename Scalar>
class ConstraintFn {
 public:
  using Kind = std::variant<AffinePiece<Scalar>, MaxOfAffine<Scalar>, OpaqueConvex<Scalar>>;

  ConstraintFn(Kind kind, Scalar lipschitz) : kind_(std::move(kind)), lipschitz_(lipschitz) {
    if (!(lipschitz_ >= Scalar(0))) throw InvalidArgument("constraint Lipschitz bound must be >= 0");
    if (auto* m = std::get_if<MaxOfAffine<Scalar>>(&kind_); m && m->pieces.empty())
      throw InvalidArgument("max_of_affine constraint needs at least one piece");
  }

  /// Affine constraint with its exact Lipschitz constant |a|.
  static ConstraintFn affine(Vector<Scalar> a, Scalar b) {
    const Scalar lip = a.norm();
    return ConstraintFn(AffinePiece<Scalar>{std::move(a), b}, lip);
  }

  static ConstraintFn max_of_affine(std::vector<AffinePiece<Scalar>> pieces) {
    Scalar lip(0);
    for (const auto& p : pieces) lip = std::max(lip, p.a.norm());
    return ConstraintFn(MaxOfAffine<Scalar>{std::move(pieces)}, lip);
  }

  static ConstraintFn opaque(std::function<Scalar(const Vector<Scalar>&)> value,
                             std::function<Vector<Scalar>(const Vector<Scalar>&)> subgradient,
                             Scalar lipschitz) {
    return ConstraintFn(OpaqueConvex<Scalar>{std::move(value), std::move(subgradient)}, lipschitz);
  }

  const Kind& kind() const { return kind_; }
  Scalar lipschitz() const { return lipschitz_; }

  const AffinePiece<Scalar>* as_affine() const { return std::get_if<AffinePiece<Scalar>>(&kind_); }
  const MaxOfAffine<Scalar>* as_max_of_affine() const {
    return std::get_if<MaxOfAffine<Scalar>>(&kind_);
  }
  bool is_opaque() const { return std::holds_alternative<OpaqueConvex<Scalar>>(kind_); }

  Scalar value(const Vector<Scalar>& x) const {
    return std::visit(
        [&](const auto& k) -> Scalar {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, AffinePiece<Scalar>>) {
            return k(x);
          } else if constexpr (std::is_same_v<K, MaxOfAffine<Scalar>>) {
            Scalar best = k.pieces.front()(x);
            for (std::size_t i = 1; i < k.pieces.size(); ++i) best = std::max(best, k.pieces[i](x));
            return best;
          } else {
            return k.value(x);
          }
        },
        kind_);
  }

  /// A subgradient at x. For max_of_affine this is the gradient of the first maximising piece.
  Vector<Scalar> subgradient(const Vector<Scalar>& x) const {
    return std::visit(
        [&](const auto& k) -> Vector<Scalar> {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, AffinePiece<Scalar>>) {
            return k.a;
          } else if constexpr (std::is_same_v<K, MaxOfAffine<Scalar>>) {
            std::size_t arg = 0;
            Scalar best = k.pieces.front()(x);
            for (std::size_t i = 1; i < k.pieces.size(); ++i) {
              const Scalar v = k.pieces[i](x);
              if (v > best) best = v, arg = i;
            }
            return k.pieces[arg].a;
          } else {
            return k.subgradient(x);
          }
        },
        kind_);
  }

  /// [g(x)]_+
  Scalar positive_part(const Vector<Scalar>& x) const { return std::max(value(x), Scalar(0)); }

 private:
  Kind kind_;
  Scalar lipschitz_;
};

}  // namespace bco
