#pragma once

#include <atomic>
#include <cstddef>

#include "orthols/objectives.hpp"

namespace orthols {

/// Forwards to another model and counts every evaluation. Used to audit how
/// much work a step-size rule or solver performs.
template <typename Scalar> class CountingModel final : public EnergyModel<Scalar> {
public:
  explicit CountingModel(const EnergyModel<Scalar> &inner) : inner_(inner) {}

  Eigen::Index dimension() const override { return inner_.dimension(); }

  Scalar value(const Matrix<Scalar> &U) const override {
    ++values_;
    return inner_.value(U);
  }

  Matrix<Scalar> euclidean_gradient(const Matrix<Scalar> &U) const override {
    ++gradients_;
    return inner_.euclidean_gradient(U);
  }

  Matrix<Scalar> hessian_apply(const Matrix<Scalar> &U, const Matrix<Scalar> &D) const override {
    ++hessians_;
    return inner_.hessian_apply(U, D);
  }

  std::size_t values() const { return values_; }
  std::size_t gradients() const { return gradients_; }
  std::size_t hessians() const { return hessians_; }

  void reset() {
    values_ = 0;
    gradients_ = 0;
    hessians_ = 0;
  }

private:
  const EnergyModel<Scalar> &inner_;
  mutable std::atomic<std::size_t> values_{0};
  mutable std::atomic<std::size_t> gradients_{0};
  mutable std::atomic<std::size_t> hessians_{0};
};

} // namespace orthols
