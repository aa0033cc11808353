#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

#include "orthols/errors.hpp"
#include "orthols/numerics.hpp"

namespace orthols {

class NotTangent : public Error {
public:
  using Error::Error;
};

/// An n x p frame with orthonormal columns. The frame stands for its column
/// span; no canonical representative is chosen. Storage is shared and
/// immutable, so copies are cheap.
template <typename Scalar> class StiefelPoint {
public:
  static constexpr double kTolerance = 1e-10;

  explicit StiefelPoint(Matrix<Scalar> U)
      : U_(std::make_shared<const Matrix<Scalar>>(std::move(U))) {
    if (U_->rows() < U_->cols())
      throw ShapeMismatch("StiefelPoint: need n >= p");
    detail::require_finite(*U_, "StiefelPoint");
    if (orthonormality_defect(*U_) > Scalar(kTolerance))
      throw NotOrthonormal("StiefelPoint: columns are not orthonormal");
  }

  const Matrix<Scalar> &matrix() const { return *U_; }
  Eigen::Index rows() const { return U_->rows(); }
  Eigen::Index cols() const { return U_->cols(); }

  bool same_storage(const StiefelPoint &other) const { return U_ == other.U_; }

private:
  std::shared_ptr<const Matrix<Scalar>> U_;
};

/// An n x p matrix D with base^T D = 0, tagged with the point it lives at.
template <typename Scalar> class TangentVector {
public:
  static constexpr double kTolerance = 1e-10;

  TangentVector(StiefelPoint<Scalar> base, Matrix<Scalar> D)
      : base_(std::move(base)), D_(std::move(D)) {
    if (D_.rows() != base_.rows() || D_.cols() != base_.cols())
      throw ShapeMismatch("TangentVector: shape differs from base point");
    const Scalar defect = (base_.matrix().transpose() * D_).norm();
    if (defect > Scalar(kTolerance) * std::max(Scalar(1), D_.norm()))
      throw NotTangent("TangentVector: matrix is not tangent at its base");
  }

  const Matrix<Scalar> &matrix() const { return D_; }
  const StiefelPoint<Scalar> &base() const { return base_; }
  Scalar norm() const { return D_.norm(); }

private:
  StiefelPoint<Scalar> base_;
  Matrix<Scalar> D_;
};

template <typename Scalar>
Scalar inner(const TangentVector<Scalar> &X, const TangentVector<Scalar> &Y) {
  return inner(X.matrix(), Y.matrix());
}

/// Principal angles between span(U) and span(W), with the factors
///   U^T W = A cos(theta) B^T,   W - U U^T W = A2 sin(theta) B^T.
/// Angles are sorted descending.
template <typename Scalar> struct PrincipalAngles {
  Vector<Scalar> theta;
  Matrix<Scalar> A;
  Matrix<Scalar> A2;
  Matrix<Scalar> B;
};

enum class Retraction { qr, geodesic };

template <typename Derived>
TangentVector<typename Derived::Scalar>
project_tangent(const StiefelPoint<typename Derived::Scalar> &U,
                const Eigen::MatrixBase<Derived> &G) {
  using Scalar = typename Derived::Scalar;
  if (G.rows() != U.rows() || G.cols() != U.cols())
    throw ShapeMismatch("project_tangent: shapes differ");
  const Matrix<Scalar> &X = U.matrix();
  Matrix<Scalar> D = G - X * (X.transpose() * G);
  // A second pass removes what cancellation leaves behind when G is mostly normal.
  D -= X * (X.transpose() * D);
  return TangentVector<Scalar>(U, std::move(D));
}

namespace detail {

template <typename Scalar>
void require_tangent_at(const StiefelPoint<Scalar> &U, const TangentVector<Scalar> &D,
                        const char *where) {
  if (D.base().same_storage(U))
    return;
  if (D.matrix().rows() != U.rows() || D.matrix().cols() != U.cols())
    throw ShapeMismatch(std::string(where) + ": direction shape differs from point");
  const Scalar defect = (U.matrix().transpose() * D.matrix()).norm();
  if (defect > Scalar(TangentVector<Scalar>::kTolerance) * std::max(Scalar(1), D.norm()))
    throw NotTangent(std::string(where) + ": direction is not tangent at the point");
}

/// Unit vector orthogonal to the columns of `basis` (assumed orthonormal),
/// found by Gram-Schmidt over the canonical basis. Zero if none exists.
template <typename Scalar>
Vector<Scalar> orthogonal_complement_vector(const Matrix<Scalar> &basis) {
  const Eigen::Index n = basis.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Vector<Scalar> v = Vector<Scalar>::Unit(n, k);
    for (int pass = 0; pass < 2; ++pass)
      v -= basis * (basis.transpose() * v);
    const Scalar nv = v.norm();
    if (nv > Scalar(0.5))
      return v / nv;
  }
  return Vector<Scalar>::Zero(n);
}

} // namespace detail

/// QR retraction: the Q factor of U + tD, which equals (U + tD) R^{-1} with
/// R^T R = I + t^2 D^T D because U^T D = 0.
template <typename Scalar>
StiefelPoint<Scalar> retract_qr(const StiefelPoint<Scalar> &U, const TangentVector<Scalar> &D,
                                Scalar t) {
  detail::require_tangent_at(U, D, "retract_qr");
  if (t == Scalar(0))
    return U;
  Matrix<Scalar> moved = U.matrix() + t * D.matrix();
  return StiefelPoint<Scalar>(thin_qr(moved).Q);
}

/// Grassmann geodesic from U with initial velocity D = A S B^T:
///   Gamma(t) = U B cos(S t) B^T + A sin(S t) B^T.
template <typename Scalar>
StiefelPoint<Scalar> retract_geodesic(const StiefelPoint<Scalar> &U,
                                      const TangentVector<Scalar> &D, Scalar t) {
  detail::require_tangent_at(U, D, "retract_geodesic");
  if (t == Scalar(0))
    return U;
  const auto svd = svd_thin(D.matrix());
  const Matrix<Scalar> B = svd.Qt.transpose();
  const Vector<Scalar> st = svd.S * t;
  const Vector<Scalar> c = st.array().cos().matrix();
  const Vector<Scalar> s = st.array().sin().matrix();
  Matrix<Scalar> G = (U.matrix() * B) * c.asDiagonal() * svd.Qt + svd.P * s.asDiagonal() * svd.Qt;
  return StiefelPoint<Scalar>(std::move(G));
}

template <typename Scalar>
StiefelPoint<Scalar> retract(Retraction kind, const StiefelPoint<Scalar> &U,
                             const TangentVector<Scalar> &D, Scalar t) {
  return kind == Retraction::qr ? retract_qr(U, D, t) : retract_geodesic(U, D, t);
}

/// Parallel transport of Dt along the geodesic t -> retract_geodesic(U, D, t).
/// With D = A S B^T the transport operator is
///   -U B sin(S t) A^T + A cos(S t) A^T + (I - A A^T),
/// applied here as Dt + (-U B sin(St) + A (cos(St) - I)) A^T Dt so columns of A
/// with zero singular value drop out exactly. The result is re-projected onto
/// the tangent space at the new point.
template <typename Scalar>
TangentVector<Scalar> parallel_transport(const StiefelPoint<Scalar> &U,
                                         const TangentVector<Scalar> &D, Scalar t,
                                         const TangentVector<Scalar> &Dt) {
  detail::require_tangent_at(U, D, "parallel_transport");
  detail::require_tangent_at(U, Dt, "parallel_transport");
  const StiefelPoint<Scalar> moved = retract_geodesic(U, D, t);
  if (t == Scalar(0))
    return TangentVector<Scalar>(moved, Dt.matrix());

  const auto svd = svd_thin(D.matrix());
  const Matrix<Scalar> B = svd.Qt.transpose();
  const Vector<Scalar> st = svd.S * t;
  const Vector<Scalar> s = st.array().sin().matrix();
  const Vector<Scalar> cm1 = (st.array().cos() - Scalar(1)).matrix();
  const Matrix<Scalar> coeff = svd.P.transpose() * Dt.matrix();
  Matrix<Scalar> out = Dt.matrix() - (U.matrix() * B) * (s.asDiagonal() * coeff) +
                       svd.P * (cm1.asDiagonal() * coeff);
  return project_tangent(moved, out);
}

template <typename Scalar>
PrincipalAngles<Scalar> principal_angles(const StiefelPoint<Scalar> &U,
                                         const StiefelPoint<Scalar> &W) {
  if (U.rows() != W.rows() || U.cols() != W.cols())
    throw ShapeMismatch("principal_angles: shapes differ");
  const Eigen::Index n = U.rows(), p = U.cols();
  const Matrix<Scalar> &X = U.matrix();
  const Matrix<Scalar> M = X.transpose() * W.matrix();
  const auto svd = svd_thin(M);

  // The SVD returns cosines descending; recover sines from the residual block
  // so that small angles keep full relative accuracy.
  const Matrix<Scalar> Bsvd = svd.Qt.transpose();
  const Matrix<Scalar> Y = (W.matrix() - X * M) * Bsvd;
  std::vector<Scalar> cosv(p), sinv(p), ang(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    cosv[i] = std::clamp(svd.S(i), Scalar(0), Scalar(1));
    sinv[i] = std::min(Y.col(i).norm(), Scalar(1));
    ang[i] = std::atan2(sinv[i], cosv[i]);
  }
  std::vector<Eigen::Index> order(p);
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return ang[a] > ang[b]; });

  PrincipalAngles<Scalar> out;
  out.theta.resize(p);
  out.A.resize(p, p);
  out.B.resize(p, p);
  out.A2 = Matrix<Scalar>::Zero(n, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    out.theta(k) = ang[order[k]];
    out.A.col(k) = svd.P.col(order[k]);
    out.B.col(k) = Bsvd.col(order[k]);
  }

  // A2: orthonormal, orthogonal to span(U). Columns whose sine vanishes are
  // filled deterministically; they only ever get multiplied by sin(theta) = 0.
  const Scalar vanishing = Scalar(64) * std::numeric_limits<Scalar>::epsilon();
  Matrix<Scalar> basis = X;
  std::vector<Eigen::Index> deferred;
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::Index src = order[k];
    if (sinv[src] <= vanishing) {
      deferred.push_back(k);
      continue;
    }
    Vector<Scalar> v = Y.col(src) / sinv[src];
    for (int pass = 0; pass < 2; ++pass)
      v -= basis * (basis.transpose() * v);
    v.normalize();
    out.A2.col(k) = v;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v;
  }
  for (Eigen::Index k : deferred) {
    const Vector<Scalar> v = detail::orthogonal_complement_vector(basis);
    out.A2.col(k) = v;
    if (v.squaredNorm() > Scalar(0)) {
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v;
    }
  }
  return out;
}

/// Chordal Frobenius distance ||2 sin(theta / 2)||.
template <typename Scalar>
Scalar dist_cf(const StiefelPoint<Scalar> &U, const StiefelPoint<Scalar> &W) {
  const auto pa = principal_angles(U, W);
  return (Scalar(2) * (pa.theta.array() / Scalar(2)).sin()).matrix().norm();
}

/// Geodesic distance ||theta||.
template <typename Scalar>
Scalar dist_geo(const StiefelPoint<Scalar> &U, const StiefelPoint<Scalar> &W) {
  return principal_angles(U, W).theta.norm();
}

/// Initial velocity A2 theta A^T of the geodesic from U to W.
template <typename Scalar>
TangentVector<Scalar> geodesic_direction(const StiefelPoint<Scalar> &U,
                                         const PrincipalAngles<Scalar> &pa) {
  Matrix<Scalar> D = pa.A2 * pa.theta.asDiagonal() * pa.A.transpose();
  return project_tangent(U, D);
}

/// Point U A cos(theta t) A^T + A2 sin(theta t) A^T on the geodesic built
/// from principal angles; at t = 1 it spans the same subspace as W.
template <typename Scalar>
StiefelPoint<Scalar> geodesic_point(const StiefelPoint<Scalar> &U,
                                    const PrincipalAngles<Scalar> &pa, Scalar t) {
  const Vector<Scalar> c = (pa.theta.array() * t).cos().matrix();
  const Vector<Scalar> s = (pa.theta.array() * t).sin().matrix();
  Matrix<Scalar> G = (U.matrix() * pa.A) * c.asDiagonal() * pa.A.transpose() +
                     pa.A2 * s.asDiagonal() * pa.A.transpose();
  return StiefelPoint<Scalar>(std::move(G));
}

template <typename Scalar, typename Rng>
StiefelPoint<Scalar> random_stiefel(Eigen::Index n, Eigen::Index p, Rng &rng) {
  return StiefelPoint<Scalar>(thin_qr(random_normal<Scalar>(n, p, rng)).Q);
}

/// Random tangent vector at U with standard-normal ambient entries.
template <typename Scalar, typename Rng>
TangentVector<Scalar> random_tangent(const StiefelPoint<Scalar> &U, Rng &rng) {
  return project_tangent(U, random_normal<Scalar>(U.rows(), U.cols(), rng));
}

} // namespace orthols
