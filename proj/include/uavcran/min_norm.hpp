#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "uavcran/types.hpp"

namespace uavcran {

/// Minimum-norm point of the convex hull of the columns of `points`
/// (Wolfe's algorithm). Returns the barycentric weights; the point is
/// points * weights.
inline RVector min_norm_point_weights(const RMatrix& points, double tol = 1e-12, int max_iters = 1000) {
  const Eigen::Index m = points.cols();
  if (m == 0) throw InvariantError("min_norm_point: empty point set");
  RVector weights = RVector::Zero(m);
  Eigen::Index start = 0;
  points.colwise().squaredNorm().minCoeff(&start);
  std::vector<Eigen::Index> active{start};
  RVector lambda = RVector::Ones(1);
  RVector x = points.col(start);
  const double scale = std::max(points.colwise().squaredNorm().maxCoeff(), 1e-300);

  auto active_matrix = [&] {
    RMatrix p(points.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) p.col(static_cast<Eigen::Index>(j)) = points.col(active[j]);
    return p;
  };

  for (int outer = 0; outer < max_iters; ++outer) {
    Eigen::Index j = 0;
    const double best = (points.transpose() * x).minCoeff(&j);
    if (x.squaredNorm() - best <= tol * scale) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    lambda.conservativeResize(static_cast<Eigen::Index>(active.size()));
    lambda(lambda.size() - 1) = 0.0;

    for (int inner = 0; inner < max_iters; ++inner) {
      const RMatrix p = active_matrix();
      const Eigen::Index n = p.cols();
      // Affine minimizer over aff(active): [P^T P, 1; 1^T, 0] [a; mu] = [0; 1]
      RMatrix kkt = RMatrix::Zero(n + 1, n + 1);
      kkt.topLeftCorner(n, n) = p.transpose() * p;
      kkt.topRightCorner(n, 1).setOnes();
      kkt.bottomLeftCorner(1, n).setOnes();
      RVector rhs = RVector::Zero(n + 1);
      rhs(n) = 1.0;
      const RVector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      const RVector alpha = sol.head(n);
      if (alpha.minCoeff() > 1e-14) {
        lambda = alpha;
        x = p * lambda;
        break;
      }
      double theta = 1.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (alpha(i) <= 1e-14) theta = std::min(theta, lambda(i) / (lambda(i) - alpha(i)));
      lambda = lambda + theta * (alpha - lambda);
      std::vector<Eigen::Index> kept;
      std::vector<double> kept_lambda;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (lambda(i) > 1e-14) {
          kept.push_back(active[i]);
          kept_lambda.push_back(lambda(i));
        }
      }
      active = kept;
      lambda = Eigen::Map<RVector>(kept_lambda.data(), static_cast<Eigen::Index>(kept_lambda.size()));
      lambda /= lambda.sum();
      x = active_matrix() * lambda;
    }
  }
  for (std::size_t j = 0; j < active.size(); ++j) weights(active[j]) = lambda(static_cast<Eigen::Index>(j));
  return weights;
}

}  // namespace uavcran
