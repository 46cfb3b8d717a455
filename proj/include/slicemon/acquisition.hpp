#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "slicemon/error.hpp"
#include "slicemon/gp.hpp"

namespace slicemon {

/// Candidates whose EI lies within this of the maximum count as tied.
inline constexpr double kEiTieTolerance = 1e-12;

template <typename Scalar>
Scalar normal_pdf(Scalar z) {
  using std::exp;
  return exp(Scalar(-0.5) * z * z) / std::sqrt(2 * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
Scalar normal_cdf(Scalar z) {
  using std::erfc;
  return Scalar(0.5) * erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

/// Expected improvement below `f_best` (minimization):
/// (f_best - mean) Phi(z) + sigma phi(z), z = (f_best - mean) / sigma.
/// Zero variance gives max(f_best - mean, 0).
template <typename Scalar>
Scalar expected_improvement(Scalar mean, Scalar variance, Scalar f_best) {
  using std::isfinite;
  using std::sqrt;
  if (!isfinite(mean) || !isfinite(variance) || !isfinite(f_best))
    throw NumericalFailure("expected_improvement: non-finite input");
  if (variance < 0) throw NumericalFailure("expected_improvement: negative variance");
  const Scalar gap = f_best - mean;
  if (variance == 0) return gap > 0 ? gap : Scalar(0);
  const Scalar sigma = sqrt(variance);
  const Scalar z = gap / sigma;
  const Scalar ei = gap * normal_cdf(z) + sigma * normal_pdf(z);
  return ei > 0 ? ei : Scalar(0);
}

/// EI of every candidate row of `candidates` under `model` (original target units).
template <typename Scalar, typename Derived>
Vector<Scalar> expected_improvement(const GpModel<Scalar>& model, const Eigen::MatrixBase<Derived>& candidates,
                                    Scalar f_best) {
  const auto post = model.posterior_batch(candidates);
  Vector<Scalar> ei(candidates.rows());
  for (Eigen::Index i = 0; i < ei.size(); ++i) ei(i) = expected_improvement(post.mean(i), post.variance(i), f_best);
  return ei;
}

/// Index of the EI maximizer; ties within kEiTieTolerance are broken uniformly
/// with `rng` (consumed only when there is a tie). nullopt for an empty pool.
template <typename Derived, typename Rng>
std::optional<std::size_t> pick_max_ei(const Eigen::MatrixBase<Derived>& ei, Rng& rng) {
  if (ei.size() == 0) return std::nullopt;
  const auto best = ei.maxCoeff();
  std::vector<std::size_t> tied;
  for (Eigen::Index i = 0; i < ei.size(); ++i)
    if (ei(i) >= best - kEiTieTolerance) tied.push_back(static_cast<std::size_t>(i));
  if (tied.size() == 1) return tied.front();
  std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
  return tied[pick(rng)];
}

/// Next candidate (row index of `candidates`) to evaluate; nullopt signals an
/// exhausted pool.
template <typename Scalar, typename Derived, typename Rng>
std::optional<std::size_t> suggest_next(const GpModel<Scalar>& model, const Eigen::MatrixBase<Derived>& candidates,
                                        Scalar f_best, Rng& rng) {
  if (candidates.rows() == 0) return std::nullopt;
  return pick_max_ei(expected_improvement(model, candidates, f_best), rng);
}

}  // namespace slicemon
