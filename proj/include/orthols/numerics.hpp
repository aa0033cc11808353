#pragma once

#include <Eigen/Dense>

#include <random>
#include <string>

#include "orthols/errors.hpp"

namespace orthols {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

template <typename Scalar> struct ThinQR {
  Matrix<Scalar> Q; // n x p, orthonormal columns
  Matrix<Scalar> R; // p x p, upper triangular, positive diagonal
};

template <typename Scalar> struct ThinSVD {
  Matrix<Scalar> P;  // left singular vectors, n x k
  Vector<Scalar> S;  // singular values, descending
  Matrix<Scalar> Qt; // transposed right singular vectors, k x p
};

template <typename Scalar> struct SymEig {
  Vector<Scalar> evals; // ascending
  Matrix<Scalar> evecs; // columns are eigenvectors
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived> &M, const char *where) {
  if (!M.allFinite())
    throw NonFiniteInput(std::string(where) + ": matrix has non-finite entries");
}

} // namespace detail

/// Frobenius norm of U^T U - I.
template <typename Derived>
typename Derived::Scalar orthonormality_defect(const Eigen::MatrixBase<Derived> &U) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> gram = U.transpose() * U;
  return (gram - Matrix<Scalar>::Identity(U.cols(), U.cols())).norm();
}

/// Frobenius inner product tr(A^T B).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar inner(const Eigen::MatrixBase<DerivedA> &A,
                                const Eigen::MatrixBase<DerivedB> &B) {
  return A.cwiseProduct(B).sum();
}

/// Householder thin QR with the sign of R's diagonal fixed positive, so the
/// factorization (and anything built on it) is deterministic.
template <typename Derived>
ThinQR<typename Derived::Scalar> thin_qr(const Eigen::MatrixBase<Derived> &M) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = M.rows(), p = M.cols();
  if (n < p)
    throw ShapeMismatch("thin_qr: need rows >= cols");
  detail::require_finite(M, "thin_qr");

  Eigen::HouseholderQR<Matrix<Scalar>> qr(M);
  ThinQR<Scalar> out;
  out.Q = qr.householderQ() * Matrix<Scalar>::Identity(n, p);
  out.R = qr.matrixQR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();

  // R shares M's singular values; checking the small factor is enough.
  if (p > 0) {
    Eigen::JacobiSVD<Matrix<Scalar>> sv(out.R);
    const auto &s = sv.singularValues();
    if (!(s(0) > Scalar(0)) || s(p - 1) <= Scalar(1e-12) * s(0))
      throw RankDeficient("thin_qr: matrix is numerically rank deficient");
  }

  for (Eigen::Index i = 0; i < p; ++i) {
    if (out.R(i, i) < Scalar(0)) {
      out.R.row(i) *= Scalar(-1);
      out.Q.col(i) *= Scalar(-1);
    }
  }
  return out;
}

template <typename Derived>
ThinSVD<typename Derived::Scalar> svd_thin(const Eigen::MatrixBase<Derived> &M) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(M, "svd_thin");
  Eigen::JacobiSVD<Matrix<Scalar>> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw ConvergenceFailure("svd_thin: SVD iteration did not converge");
  return {svd.matrixU(), svd.singularValues(), svd.matrixV().transpose()};
}

/// Symmetric eigendecomposition with ascending eigenvalues. The input is
/// symmetrized as (A + A^T) / 2 after checking it is symmetric to 1e-10.
template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived> &A) {
  using Scalar = typename Derived::Scalar;
  if (A.rows() != A.cols())
    throw ShapeMismatch("sym_eig: matrix must be square");
  detail::require_finite(A, "sym_eig");
  const Matrix<Scalar> sym = (A + A.transpose()) / Scalar(2);
  if ((A - A.transpose()).norm() > Scalar(1e-10) * A.norm())
    throw NotSymmetric("sym_eig: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym);
  if (es.info() != Eigen::Success)
    throw ConvergenceFailure("sym_eig: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

template <typename Scalar, typename Rng>
Matrix<Scalar> random_normal(Eigen::Index rows, Eigen::Index cols, Rng &rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix<Scalar> M(rows, cols);
  // Column-major fill order is part of the seeded-determinism contract.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      M(i, j) = static_cast<Scalar>(dist(rng));
  return M;
}

} // namespace orthols
