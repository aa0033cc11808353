#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <string>

#include "orthols/errors.hpp"
#include "orthols/manifold.hpp"
#include "orthols/numerics.hpp"

namespace orthols {

/// An orthogonally invariant energy E(U) = E(UP). Evaluations accept any
/// n x p matrix so finite-difference checks can step off the manifold.
/// Implementations are immutable and safe to share between threads.
template <typename Scalar> class EnergyModel {
public:
  virtual ~EnergyModel() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual Scalar value(const Matrix<Scalar> &U) const = 0;
  virtual Matrix<Scalar> euclidean_gradient(const Matrix<Scalar> &U) const = 0;
  /// Euclidean Hessian applied to D, i.e. the directional derivative of the gradient.
  virtual Matrix<Scalar> hessian_apply(const Matrix<Scalar> &U, const Matrix<Scalar> &D) const = 0;
};

/// E(U) = 1/2 tr(U^T A U).
template <typename Scalar> class QuadraticTraceModel final : public EnergyModel<Scalar> {
public:
  explicit QuadraticTraceModel(const Matrix<Scalar> &A) {
    if (A.rows() != A.cols())
      throw ShapeMismatch("QuadraticTraceModel: matrix must be square");
    detail::require_finite(A, "QuadraticTraceModel");
    if ((A - A.transpose()).norm() > Scalar(1e-10) * std::max(Scalar(1), A.norm()))
      throw NotSymmetric("QuadraticTraceModel: matrix must be symmetric");
    A_ = (A + A.transpose()) / Scalar(2);
  }

  const Matrix<Scalar> &matrix() const { return A_; }

  Eigen::Index dimension() const override { return A_.rows(); }

  Scalar value(const Matrix<Scalar> &U) const override {
    return Scalar(0.5) * inner(U, A_ * U);
  }

  Matrix<Scalar> euclidean_gradient(const Matrix<Scalar> &U) const override { return A_ * U; }

  Matrix<Scalar> hessian_apply(const Matrix<Scalar> &, const Matrix<Scalar> &D) const override {
    return A_ * D;
  }

private:
  Matrix<Scalar> A_;
};

struct LatticeParams {
  Eigen::Index npts = 128;
  double length = 10.0;
  double gamma = 1.0;
  double well = 1.0;
};

/// One-dimensional nonlinear lattice energy
///   E(U) = 1/2 tr(U^T A U) + h sum_r V_r rho_r + (gamma h / 2) sum_r rho_r^2,
/// rho_r = sum_i U_ri^2. Orthogonal invariance follows from that of rho.
template <typename Scalar> class NonlinearLatticeModel final : public EnergyModel<Scalar> {
public:
  /// Dirichlet lattice on (0, L) with npts interior nodes x_r = r h,
  /// h = L / (npts + 1), A = tridiag(-1, 2, -1) / h^2 and a harmonic well
  /// V_r = well * (x_r - L/2)^2 / 2.
  explicit NonlinearLatticeModel(const LatticeParams &params) {
    if (params.npts < 1 || !(params.length > 0) || !(params.gamma >= 0))
      throw Error("NonlinearLatticeModel: invalid lattice parameters");
    const Eigen::Index n = params.npts;
    h_ = Scalar(params.length) / Scalar(n + 1);
    gamma_ = Scalar(params.gamma);
    A_ = Matrix<Scalar>::Zero(n, n);
    V_.resize(n);
    const Scalar inv_h2 = Scalar(1) / (h_ * h_);
    for (Eigen::Index r = 0; r < n; ++r) {
      A_(r, r) = Scalar(2) * inv_h2;
      if (r > 0)
        A_(r, r - 1) = -inv_h2;
      if (r + 1 < n)
        A_(r, r + 1) = -inv_h2;
      const Scalar x = Scalar(r + 1) * h_ - Scalar(params.length) / Scalar(2);
      V_(r) = Scalar(params.well) * Scalar(0.5) * x * x;
    }
  }

  NonlinearLatticeModel(Matrix<Scalar> A, Vector<Scalar> V, Scalar h, Scalar gamma)
      : A_(std::move(A)), V_(std::move(V)), h_(h), gamma_(gamma) {
    if (A_.rows() != A_.cols() || V_.size() != A_.rows())
      throw ShapeMismatch("NonlinearLatticeModel: inconsistent sizes");
    if (!(h_ > Scalar(0)) || !(gamma_ >= Scalar(0)))
      throw Error("NonlinearLatticeModel: need h > 0 and gamma >= 0");
    if ((A_ - A_.transpose()).norm() > Scalar(1e-10) * std::max(Scalar(1), A_.norm()))
      throw NotSymmetric("NonlinearLatticeModel: matrix must be symmetric");
  }

  const Matrix<Scalar> &matrix() const { return A_; }
  const Vector<Scalar> &potential() const { return V_; }
  Scalar mesh_width() const { return h_; }
  Scalar gamma() const { return gamma_; }

  Eigen::Index dimension() const override { return A_.rows(); }

  static Vector<Scalar> density(const Matrix<Scalar> &U) { return U.rowwise().squaredNorm(); }

  Scalar value(const Matrix<Scalar> &U) const override {
    const Vector<Scalar> rho = density(U);
    return Scalar(0.5) * inner(U, A_ * U) + h_ * V_.dot(rho) +
           Scalar(0.5) * gamma_ * h_ * rho.squaredNorm();
  }

  /// A U + 2h diag(V) U + 2 gamma h diag(rho) U.
  Matrix<Scalar> euclidean_gradient(const Matrix<Scalar> &U) const override {
    const Vector<Scalar> w = Scalar(2) * h_ * (V_ + gamma_ * density(U));
    return A_ * U + w.asDiagonal() * U;
  }

  /// A D + 2h diag(V) D + 2 gamma h (diag(rho) D + 2 diag(sigma) U),
  /// sigma_r = sum_i U_ri D_ri.
  Matrix<Scalar> hessian_apply(const Matrix<Scalar> &U, const Matrix<Scalar> &D) const override {
    const Vector<Scalar> rho = density(U);
    const Vector<Scalar> sigma = U.cwiseProduct(D).rowwise().sum();
    const Vector<Scalar> w = Scalar(2) * h_ * (V_ + gamma_ * rho);
    return A_ * D + w.asDiagonal() * D +
           (Scalar(4) * gamma_ * h_ * sigma).asDiagonal() * U;
  }

private:
  Matrix<Scalar> A_;
  Vector<Scalar> V_;
  Scalar h_{};
  Scalar gamma_{};
};

template <typename Scalar>
Matrix<Scalar> lattice_gradient(const NonlinearLatticeModel<Scalar> &model,
                                const Matrix<Scalar> &U) {
  return model.euclidean_gradient(U);
}

template <typename Scalar>
Matrix<Scalar> lattice_hessian_apply(const NonlinearLatticeModel<Scalar> &model,
                                     const Matrix<Scalar> &U, const Matrix<Scalar> &D) {
  return model.hessian_apply(U, D);
}

/// Grassmann gradient (I - U U^T) grad E(U).
template <typename Scalar>
TangentVector<Scalar> grassmann_gradient(const EnergyModel<Scalar> &model,
                                         const StiefelPoint<Scalar> &U) {
  return project_tangent(U, model.euclidean_gradient(U.matrix()));
}

/// Grassmann Hessian quadratic form <D, hess E(U)[D]> - tr(D^T D U^T grad E(U)),
/// reusing an already computed Euclidean gradient.
template <typename Scalar>
Scalar grassmann_hessian_qform(const EnergyModel<Scalar> &model, const StiefelPoint<Scalar> &U,
                               const TangentVector<Scalar> &D,
                               const Matrix<Scalar> &euclidean_grad) {
  const Matrix<Scalar> &X = U.matrix();
  const Matrix<Scalar> &Dm = D.matrix();
  const Matrix<Scalar> proj = X.transpose() * euclidean_grad;
  const Matrix<Scalar> gram = Dm.transpose() * Dm;
  return inner(Dm, model.hessian_apply(X, Dm)) - inner(gram.transpose(), proj);
}

template <typename Scalar>
Scalar grassmann_hessian_qform(const EnergyModel<Scalar> &model, const StiefelPoint<Scalar> &U,
                               const TangentVector<Scalar> &D) {
  return grassmann_hessian_qform(model, U, D, model.euclidean_gradient(U.matrix()));
}

template <typename Scalar> struct EigenOracle {
  Scalar min_energy;
  StiefelPoint<Scalar> minimizer;
};

/// Minimum of 1/2 tr(U^T A U) over n x p frames: half the sum of the p
/// smallest eigenvalues, attained by the matching eigenvectors.
template <typename Scalar>
EigenOracle<Scalar> eigen_oracle(const QuadraticTraceModel<Scalar> &model, Eigen::Index p) {
  if (p < 1 || p > model.dimension())
    throw ShapeMismatch("eigen_oracle: need 1 <= p <= n");
  const auto eig = sym_eig(model.matrix());
  return {Scalar(0.5) * eig.evals.head(p).sum(),
          StiefelPoint<Scalar>(eig.evecs.leftCols(p))};
}

/// Seeded random symmetric matrix (M + M^T) / 2 with standard-normal M.
template <typename Scalar> Matrix<Scalar> random_symmetric(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix<Scalar> M = random_normal<Scalar>(n, n, rng);
  return (M + M.transpose()) / Scalar(2);
}

/// Seeded symmetric positive definite matrix Q diag(lambda) Q^T with
/// eigenvalues log-spaced on [1, condition].
template <typename Scalar>
Matrix<Scalar> random_spd_with_condition(Eigen::Index n, double condition, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix<Scalar> Q = thin_qr(random_normal<Scalar>(n, n, rng)).Q;
  Vector<Scalar> lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double frac = n > 1 ? double(i) / double(n - 1) : 0.0;
    lambda(i) = Scalar(std::pow(condition, frac));
  }
  const Matrix<Scalar> A = Q * lambda.asDiagonal() * Q.transpose();
  return (A + A.transpose()) / Scalar(2);
}

/// Dense text matrix: first token n, then n*n whitespace separated entries in
/// row-major order.
template <typename Scalar> Matrix<Scalar> read_dense_matrix(std::istream &in) {
  long long n = 0;
  if (!(in >> n) || n < 1)
    throw Error("matrix file: missing or invalid dimension line");
  Matrix<Scalar> A(n, n);
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < n; ++j) {
      double v;
      if (!(in >> v))
        throw Error("matrix file: expected " + std::to_string(n * n) + " entries");
      A(i, j) = Scalar(v);
    }
  std::string extra;
  if (in >> extra)
    throw Error("matrix file: trailing data after " + std::to_string(n * n) + " entries");
  detail::require_finite(A, "matrix file");
  return A;
}

} // namespace orthols
