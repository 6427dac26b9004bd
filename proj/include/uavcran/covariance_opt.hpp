#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "uavcran/rate_region.hpp"
#include "uavcran/types.hpp"

namespace uavcran {

struct SolverSettings {
  int max_iters = 200;
  double step0 = 0.1;  // initial step as a fraction of each user's power budget
  double tol_obj = 1e-7;
  double tol_feas = 1e-9;

  friend bool operator==(const SolverSettings&, const SolverSettings&) = default;

  void validate() const {
    if (max_iters < 1) throw ValidationError("solver.max_iters must be >= 1");
    if (!(step0 > 0.0)) throw ValidationError("solver.step0 must be > 0");
    if (!(tol_obj > 0.0)) throw ValidationError("solver.tol_obj must be > 0");
    if (!(tol_feas > 0.0)) throw ValidationError("solver.tol_feas must be > 0");
  }
};

// Euclidean projection of v onto {lambda >= 0, sum(lambda) <= cap}.
inline RVector project_capped_simplex(const RVector& v, double cap) {
  RVector clipped = v.cwiseMax(0.0);
  if (clipped.sum() <= cap) return clipped;
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - cap) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

/// Projection onto {Q >= 0, trace(Q) <= p_max} in the Frobenius norm.
inline CMatrix project_psd_trace(const CMatrix& q, double p_max, double hermitian_tol = 1e-9) {
  if (q.rows() != q.cols()) throw DomainError("project_psd_trace: matrix is not square");
  if (!(p_max >= 0.0)) throw DomainError("project_psd_trace: negative power budget");
  if ((q - q.adjoint()).norm() > hermitian_tol * std::max(1.0, q.norm()))
    throw DomainError("project_psd_trace: input is not Hermitian");
  const CMatrix sym = 0.5 * (q + q.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(sym);
  const RVector lambda = project_capped_simplex(eig.eigenvalues(), p_max);
  const CMatrix& v = eig.eigenvectors();
  CMatrix out = v * lambda.cast<Complex>().asDiagonal() * v.adjoint();
  return 0.5 * (out + out.adjoint());
}

/// Gradient of sum_rate_bound(S)/|S| with respect to each Q_i (zero outside S).
inline std::vector<CMatrix> subset_covariance_gradient(const Subset& subset, const ChannelSet& channels,
                                                       const CovarianceSet& covs, LogBase base = LogBase::Bits) {
  const auto terms = user_gram_terms(channels, covs);
  const auto llt = factor_gram(subset_gram(subset, terms, channels.rows()), subset);
  const double scale = 0.5 * log_scale(base) / static_cast<double>(subset.size());
  std::vector<CMatrix> grad(channels.n_users, CMatrix::Zero(channels.n_tx, channels.n_tx));
  for (int i : subset) {
    const CMatrix& h = channels.aggregate[i];
    CMatrix g = h.adjoint() * llt.solve(h);
    grad[i] = Complex(scale) * 0.5 * (g + g.adjoint());
  }
  return grad;
}

struct CovarianceResult {
  CovarianceSet covariances;
  MinRateResult rate;
  int iterations = 0;
  bool converged = false;  // false: max_iters hit, best iterate returned
};

/// Max-min covariance subproblem at fixed UAV positions, solved by projected
/// subgradient ascent in budget-normalized coordinates with best-iterate
/// tracking. The step is step0/sqrt(t), where t counts the iterations that
/// failed to improve the best objective, so the step only shrinks once the
/// iterates stop making progress. Starts from the better of the isotropic
/// full-power point and `warm_start`.
inline CovarianceResult optimize_covariances(const ChannelSet& channels, std::span<const double> budgets,
                                             const SolverSettings& settings = {}, LogBase base = LogBase::Bits,
                                             const CovarianceSet* warm_start = nullptr,
                                             int max_users = kDefaultMaxUsers) {
  settings.validate();
  if (static_cast<int>(budgets.size()) != channels.n_users)
    throw InvariantError("optimize_covariances: budget count does not match user count");
  for (double p : budgets)
    if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("optimize_covariances: power budgets must be > 0");

  CovarianceSet current = CovarianceSet::isotropic(budgets, channels.n_tx);
  MinRateResult current_rate = min_rate(channels, current, base, max_users);
  if (warm_start != nullptr && warm_start->size() == channels.n_users) {
    CovarianceSet warm = *warm_start;
    warm.p_max.assign(budgets.begin(), budgets.end());
    for (int i = 0; i < warm.size(); ++i) warm.q[i] = project_psd_trace(warm.q[i], budgets[i], 1e-6);
    const MinRateResult warm_rate = min_rate(channels, warm, base, max_users);
    if (warm_rate.r_min > current_rate.r_min) {
      current = std::move(warm);
      current_rate = warm_rate;
    }
  }

  CovarianceResult best{current, current_rate, 0, false};
  constexpr int kStallWindow = 20;
  int step_index = 1;
  double window_start_best = best.rate.r_min;

  for (int t = 1; t <= settings.max_iters; ++t) {
    best.iterations = t;
    const auto grad = subset_covariance_gradient(current_rate.s_min, channels, current, base);
    double norm2 = 0.0;
    for (int i = 0; i < channels.n_users; ++i) norm2 += budgets[i] * budgets[i] * grad[i].squaredNorm();
    if (!(norm2 > 0.0)) {
      best.converged = true;
      break;
    }
    const double step = settings.step0 / std::sqrt(static_cast<double>(step_index)) / std::sqrt(norm2);
    double moved2 = 0.0;
    for (int i = 0; i < channels.n_users; ++i) {
      if (grad[i].squaredNorm() == 0.0) continue;
      const CMatrix trial = current.q[i] + Complex(step * budgets[i] * budgets[i]) * grad[i];
      const CMatrix projected = project_psd_trace(trial, budgets[i], 1e-6);
      moved2 += (projected - current.q[i]).squaredNorm() / (budgets[i] * budgets[i]);
      current.q[i] = projected;
    }
    if (moved2 < 1e-24) {
      best.converged = true;
      break;
    }
    current_rate = min_rate(channels, current, base, max_users);
    if (current_rate.r_min > best.rate.r_min) {
      best.covariances = current;
      best.rate = current_rate;
    } else {
      ++step_index;
    }
    if (t % kStallWindow == 0) {
      if (best.rate.r_min - window_start_best <= settings.tol_obj * std::max(1.0, std::abs(best.rate.r_min))) {
        best.converged = true;
        break;
      }
      window_start_best = best.rate.r_min;
    }
  }
  return best;
}

}  // namespace uavcran
