#pragma once

// Exact Gaussian-process regression with a zero-mean prior on standardized
// targets. All solves go through a Cholesky factor of K + (noise + jitter) I.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "slicemon/error.hpp"
#include "slicemon/kernel.hpp"

namespace slicemon {

template <typename Scalar = double>
struct Posterior {
  Scalar mean = 0;
  Scalar variance = 0;
};

template <typename Scalar = double>
struct PosteriorBatch {
  Vector<Scalar> mean;
  Vector<Scalar> variance;
};

/// Hyperparameter grid searched by optimize_hypers (standardized target space).
template <typename Scalar = double>
struct HyperGrid {
  std::vector<Scalar> lengthscales{Scalar(0.1), Scalar(0.3), Scalar(1), Scalar(3), Scalar(10)};
  std::vector<Scalar> signal_variances{Scalar(0.25), Scalar(1), Scalar(4)};
  std::vector<Scalar> noise_variances{Scalar(1e-6), Scalar(1e-4), Scalar(1e-2)};
  Scalar jitter = Scalar(1e-8);

  void validate() const {
    if (lengthscales.empty() || signal_variances.empty() || noise_variances.empty())
      throw ConfigError("hyperparameter grid has an empty axis");
    for (const auto& p : points()) p.validate();
  }

  /// Grid points, lengthscale slowest, noise fastest.
  std::vector<KernelParams<Scalar>> points() const {
    std::vector<KernelParams<Scalar>> out;
    for (Scalar l : lengthscales)
      for (Scalar sf2 : signal_variances)
        for (Scalar sn2 : noise_variances) out.push_back({l, sf2, sn2, jitter});
    return out;
  }

  /// Middle point of each axis; used while there are too few observations to select.
  KernelParams<Scalar> fallback() const {
    auto mid = [](const std::vector<Scalar>& v) { return v[v.size() / 2]; };
    return {mid(lengthscales), mid(signal_variances), mid(noise_variances), jitter};
  }
};

namespace detail {

template <typename Scalar>
struct Factorization {
  Matrix<Scalar> lower;
  Scalar jitter;
};

/// Cholesky of K + (noise + jitter) I. On failure the jitter grows tenfold up to
/// 1e-2 * signal variance before NumericalFailure is thrown.
template <typename Scalar>
Factorization<Scalar> factorize(const Matrix<Scalar>& K, const KernelParams<Scalar>& p) {
  const Eigen::Index n = K.rows();
  const Scalar ceiling = Scalar(1e-2) * p.signal_variance;
  Scalar jitter = p.jitter;
  while (true) {
    Matrix<Scalar> A = K;
    A.diagonal().array() += p.noise_variance + jitter;
    Eigen::LLT<Matrix<Scalar>> llt(A);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite() &&
        (llt.matrixLLT().diagonal().array() > 0).all()) {
      Matrix<Scalar> L = llt.matrixL();
      return {std::move(L), jitter};
    }
    if (n == 0 || jitter * 10 > ceiling * (1 + std::numeric_limits<Scalar>::epsilon()))
      throw NumericalFailure("Cholesky factorization failed after jitter escalation");
    jitter *= 10;
  }
}

template <typename Scalar>
struct Standardization {
  Scalar mean = 0;
  Scalar scale = 1;
};

template <typename Derived>
Standardization<typename Derived::Scalar> standardization_of(const Eigen::MatrixBase<Derived>& y) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  Standardization<Scalar> s;
  if (y.size() == 0) return s;
  s.mean = y.mean();
  const Scalar var = (y.array() - s.mean).square().mean();
  const Scalar sd = sqrt(var);
  using std::abs;
  if (y.size() >= 2 && sd > Scalar(1e-12) * std::max(Scalar(1), abs(s.mean))) s.scale = sd;
  return s;
}

/// Log evidence from precomputed squared distances, targets taken as given.
template <typename Scalar>
Scalar log_marginal_likelihood_sqdist(const Matrix<Scalar>& D, const Vector<Scalar>& y,
                                      const KernelParams<Scalar>& p) {
  using std::log;
  const auto f = factorize<Scalar>(covariance_from_sqdist(D, p), p);
  const auto L = f.lower.template triangularView<Eigen::Lower>();
  const Vector<Scalar> beta = L.solve(y);  // alpha = L^-T beta, so y^T alpha = |beta|^2
  const Scalar n = static_cast<Scalar>(y.size());
  return Scalar(-0.5) * beta.squaredNorm() - f.lower.diagonal().array().log().sum() -
         Scalar(0.5) * n * log(2 * std::numbers::pi_v<Scalar>);
}

}  // namespace detail

/// Fitted GP. Immutable; posterior queries are const and thread-safe.
template <typename Scalar = double>
class GpModel {
 public:
  /// Model with no observations: standardized prior mean 0, variance sf2.
  static GpModel prior(Eigen::Index dim, const KernelParams<Scalar>& p) {
    p.validate();
    GpModel m;
    m.params_ = p;
    m.jitter_ = p.jitter;
    m.inputs_ = Matrix<Scalar>(0, dim);
    m.targets_ = Vector<Scalar>(0);
    m.alpha_ = Vector<Scalar>(0);
    m.lower_ = Matrix<Scalar>(0, 0);
    return m;
  }

  /// Conditions on rows of `X` with targets `y`; the targets are standardized first.
  template <typename DerivedX, typename DerivedY>
  static GpModel fit(const Eigen::MatrixBase<DerivedX>& X_in, const Eigen::MatrixBase<DerivedY>& y_in,
                     const KernelParams<Scalar>& p) {
    p.validate();
    // Evaluate once: the arguments may be lazy expressions.
    const Matrix<Scalar> X = X_in;
    const Vector<Scalar> y = y_in;
    if (X.rows() != y.size()) throw NumericalFailure("fit: input/target count mismatch");
    if (X.rows() == 0) return prior(X.cols(), p);
    if (!X.allFinite() || !y.allFinite()) throw NumericalFailure("fit: non-finite training data");

    GpModel m;
    m.params_ = p;
    m.inputs_ = X;
    const auto st = detail::standardization_of(y);
    m.target_mean_ = st.mean;
    m.target_std_ = st.scale;
    m.targets_ = ((y.array() - st.mean) / st.scale).matrix();

    const Matrix<Scalar> K = covariance_from_sqdist(squared_distances(m.inputs_, m.inputs_), p);
    auto f = detail::factorize<Scalar>(K, p);
    m.lower_ = std::move(f.lower);
    m.jitter_ = f.jitter;
    m.alpha_ = m.lower_.template triangularView<Eigen::Lower>().solve(m.targets_);
    m.lower_.template triangularView<Eigen::Lower>().transpose().solveInPlace(m.alpha_);
    return m;
  }

  Eigen::Index size() const { return inputs_.rows(); }
  Eigen::Index dim() const { return inputs_.cols(); }
  const Matrix<Scalar>& train_inputs() const { return inputs_; }
  /// Standardized targets.
  const Vector<Scalar>& train_targets() const { return targets_; }
  const Matrix<Scalar>& chol_factor() const { return lower_; }
  const Vector<Scalar>& alpha() const { return alpha_; }
  const KernelParams<Scalar>& params() const { return params_; }
  /// Jitter actually added to the diagonal (after any escalation).
  Scalar jitter() const { return jitter_; }
  Scalar target_mean() const { return target_mean_; }
  Scalar target_std() const { return target_std_; }

  /// Posterior of the latent function in standardized target space.
  template <typename Derived>
  Posterior<Scalar> latent_posterior(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != dim()) throw InvalidSubgroupError("posterior: query dimension mismatch");
    Matrix<Scalar> Xq(1, dim());
    Xq.row(0) = x.transpose();
    const auto b = latent_posterior_batch(Xq);
    return {b.mean(0), b.variance(0)};
  }

  /// Posterior in original target units.
  template <typename Derived>
  Posterior<Scalar> posterior_at(const Eigen::MatrixBase<Derived>& x) const {
    const auto z = latent_posterior(x);
    return {target_mean_ + target_std_ * z.mean, target_std_ * target_std_ * z.variance};
  }

  /// Latent posterior at every row of `Xq` (standardized space).
  template <typename Derived>
  PosteriorBatch<Scalar> latent_posterior_batch(const Eigen::MatrixBase<Derived>& Xq) const {
    if (Xq.cols() != dim()) throw InvalidSubgroupError("posterior: query dimension mismatch");
    PosteriorBatch<Scalar> out;
    const Scalar prior_var = params_.signal_variance;
    if (size() == 0) {
      out.mean = Vector<Scalar>::Zero(Xq.rows());
      out.variance = Vector<Scalar>::Constant(Xq.rows(), prior_var);
      return out;
    }
    const Matrix<Scalar> Ks = cross_covariance(inputs_, Xq, params_);  // n x q
    out.mean = Ks.transpose() * alpha_;
    const Matrix<Scalar> V = lower_.template triangularView<Eigen::Lower>().solve(Ks);
    out.variance = (prior_var - V.colwise().squaredNorm().array()).max(Scalar(0)).matrix().transpose();
    return out;
  }

  /// Posterior at every row of `Xq` in original target units.
  template <typename Derived>
  PosteriorBatch<Scalar> posterior_batch(const Eigen::MatrixBase<Derived>& Xq) const {
    auto b = latent_posterior_batch(Xq);
    b.mean = (b.mean.array() * target_std_ + target_mean_).matrix();
    b.variance *= target_std_ * target_std_;
    return b;
  }

 private:
  GpModel() = default;

  Matrix<Scalar> inputs_;
  Vector<Scalar> targets_;
  Matrix<Scalar> lower_;
  Vector<Scalar> alpha_;
  KernelParams<Scalar> params_;
  Scalar jitter_ = 0;
  Scalar target_mean_ = 0;
  Scalar target_std_ = 1;
};

/// log p(y | X, p) = -1/2 y^T alpha - sum log diag L - n/2 log 2pi, with `y` used
/// as given (no standardization).
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar log_marginal_likelihood(const Eigen::MatrixBase<DerivedX>& X,
                                                  const Eigen::MatrixBase<DerivedY>& y,
                                                  const KernelParams<typename DerivedX::Scalar>& p) {
  using Scalar = typename DerivedX::Scalar;
  p.validate();
  if (X.rows() != y.size() || X.rows() == 0) throw NumericalFailure("log_marginal_likelihood: bad input sizes");
  const Vector<Scalar> yy = y;
  return detail::log_marginal_likelihood_sqdist<Scalar>(squared_distances(X, X), yy, p);
}

/// Grid point with the highest log marginal likelihood of the standardized
/// targets. The first grid point wins ties. Points whose factorization fails
/// are skipped; NumericalFailure if all fail.
template <typename DerivedX, typename DerivedY>
KernelParams<typename DerivedX::Scalar> optimize_hypers(const Eigen::MatrixBase<DerivedX>& X_in,
                                                        const Eigen::MatrixBase<DerivedY>& y_in,
                                                        const HyperGrid<typename DerivedX::Scalar>& grid) {
  using Scalar = typename DerivedX::Scalar;
  grid.validate();
  const Matrix<Scalar> X = X_in;
  const Vector<Scalar> y = y_in;
  if (X.rows() != y.size()) throw NumericalFailure("optimize_hypers: input/target count mismatch");
  if (X.rows() < 2) throw NumericalFailure("optimize_hypers: need at least two observations");

  const auto st = detail::standardization_of(y);
  const Vector<Scalar> z = ((y.array() - st.mean) / st.scale).matrix();
  const Matrix<Scalar> D = squared_distances(X, X);

  bool found = false;
  KernelParams<Scalar> best;
  Scalar best_lml = -std::numeric_limits<Scalar>::infinity();
  for (const auto& p : grid.points()) {
    Scalar lml;
    try {
      lml = detail::log_marginal_likelihood_sqdist<Scalar>(D, z, p);
    } catch (const NumericalFailure&) {
      continue;
    }
    using std::isfinite;
    if (isfinite(lml) && (!found || lml > best_lml)) {
      best = p;
      best_lml = lml;
      found = true;
    }
  }
  if (!found) throw NumericalFailure("optimize_hypers: every grid point failed to factorize");
  return best;
}

}  // namespace slicemon
