#pragma once

// Squared-exponential covariance over encoded subgroups. On one-hot inputs the
// squared distance is twice the number of differing attributes, so the kernel
// is a function of Hamming distance: k = sf2 * exp(-d / l^2).

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "slicemon/error.hpp"

namespace slicemon {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar = double>
struct KernelParams {
  Scalar lengthscale = Scalar(1);
  Scalar signal_variance = Scalar(1);
  Scalar noise_variance = Scalar(1e-4);
  Scalar jitter = Scalar(1e-8);

  /// Throws ConfigError unless lengthscale, signal variance and jitter are
  /// positive and the noise variance is non-negative (all finite).
  void validate() const {
    using std::isfinite;
    if (!(isfinite(lengthscale) && lengthscale > 0)) throw ConfigError("kernel lengthscale must be positive");
    if (!(isfinite(signal_variance) && signal_variance > 0))
      throw ConfigError("kernel signal variance must be positive");
    if (!(isfinite(noise_variance) && noise_variance >= 0))
      throw ConfigError("kernel noise variance must be non-negative");
    if (!(isfinite(jitter) && jitter > 0)) throw ConfigError("kernel jitter must be positive");
  }

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar se_kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                                    const KernelParams<typename DerivedA::Scalar>& p) {
  using std::exp;
  if (a.size() != b.size()) throw InvalidSubgroupError("kernel inputs differ in dimension");
  const auto sq = (a - b).squaredNorm();
  return p.signal_variance * exp(-sq / (2 * p.lengthscale * p.lengthscale));
}

/// Pairwise squared distances between the rows of `A` and the rows of `B`.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> squared_distances(const Eigen::MatrixBase<DerivedA>& A,
                                                    const Eigen::MatrixBase<DerivedB>& B) {
  if (A.cols() != B.cols()) throw InvalidSubgroupError("kernel inputs differ in dimension");
  Matrix<typename DerivedA::Scalar> D(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) D(i, j) = (A.row(i) - B.row(j)).squaredNorm();
  return D;
}

/// Elementwise SE covariance from a matrix of squared distances.
template <typename Derived>
Matrix<typename Derived::Scalar> covariance_from_sqdist(const Eigen::MatrixBase<Derived>& D,
                                                        const KernelParams<typename Derived::Scalar>& p) {
  using Scalar = typename Derived::Scalar;
  const Scalar scale = Scalar(-1) / (2 * p.lengthscale * p.lengthscale);
  return (p.signal_variance * (D.array() * scale).exp()).matrix();
}

/// Cross-covariance [k(a_i, b_j)] between the rows of `A` and `B`.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> cross_covariance(const Eigen::MatrixBase<DerivedA>& A,
                                                   const Eigen::MatrixBase<DerivedB>& B,
                                                   const KernelParams<typename DerivedA::Scalar>& p) {
  return covariance_from_sqdist(squared_distances(A, B), p);
}

}  // namespace slicemon
