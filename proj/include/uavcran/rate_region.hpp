#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "uavcran/geometry_channel.hpp"
#include "uavcran/types.hpp"

namespace uavcran {

inline constexpr int kDefaultMaxUsers = 16;
inline constexpr double kSubsetTieTolerance = 1e-9;

/// Per-user transmit covariances Q_i with their trace budgets.
struct CovarianceSet {
  std::vector<CMatrix> q;
  std::vector<double> p_max;

  int size() const { return static_cast<int>(q.size()); }

  // Full-power isotropic point (P_i / n_tx) I.
  static CovarianceSet isotropic(std::span<const double> budgets, int n_tx) {
    CovarianceSet set;
    set.p_max.assign(budgets.begin(), budgets.end());
    for (double p : budgets) set.q.push_back(CMatrix::Identity(n_tx, n_tx) * Complex(p / n_tx));
    return set;
  }

  // Throws DomainError if any Q_i is not Hermitian PSD within budget (to tol).
  void validate(double tol = 1e-9) const {
    if (q.size() != p_max.size()) throw InvariantError("CovarianceSet: size mismatch");
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double scale = std::max(1.0, p_max[i]);
      if ((q[i] - q[i].adjoint()).norm() > tol * scale)
        throw DomainError("CovarianceSet: Q_" + std::to_string(i + 1) + " is not Hermitian");
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(q[i], Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < -tol * scale)
        throw DomainError("CovarianceSet: Q_" + std::to_string(i + 1) + " is not PSD");
      if (q[i].trace().real() > p_max[i] + tol * scale)
        throw DomainError("CovarianceSet: Q_" + std::to_string(i + 1) + " exceeds its power budget");
    }
  }
};

struct MinRateResult {
  double r_min = 0.0;
  Subset s_min;
};

inline std::string format_subset(const Subset& s, char sep = '-') {
  std::string out;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j) out += sep;
    out += std::to_string(s[j] + 1);
  }
  return out;
}

// Every nonempty subset of {0..G-1}, ordered by cardinality then lexicographically.
inline std::vector<Subset> subsets_iter(int n_users, int max_users = kDefaultMaxUsers) {
  if (n_users < 1) throw ValidationError("subsets_iter: at least one user required");
  if (n_users > max_users)
    throw CapacityError("subset enumeration over " + std::to_string(n_users) + " users exceeds the limit of " +
                        std::to_string(max_users));
  std::vector<Subset> out;
  out.reserve((std::size_t{1} << n_users) - 1);
  for (int card = 1; card <= n_users; ++card) {
    Subset s(card);
    for (int j = 0; j < card; ++j) s[j] = j;
    while (true) {
      out.push_back(s);
      int j = card - 1;
      while (j >= 0 && s[j] == n_users - card + j) --j;
      if (j < 0) break;
      ++s[j];
      for (int l = j + 1; l < card; ++l) s[l] = s[l - 1] + 1;
    }
  }
  return out;
}

// H_i Q_i H_i^H for every user.
inline std::vector<CMatrix> user_gram_terms(const ChannelSet& channels, const CovarianceSet& covs) {
  if (covs.size() != channels.n_users) throw InvariantError("covariance count does not match user count");
  std::vector<CMatrix> terms;
  terms.reserve(channels.n_users);
  for (int i = 0; i < channels.n_users; ++i) {
    const CMatrix& h = channels.aggregate[i];
    terms.push_back(h * covs.q[i] * h.adjoint());
  }
  return terms;
}

inline CMatrix subset_gram(const Subset& subset, std::span<const CMatrix> terms, int rows) {
  CMatrix m = CMatrix::Identity(rows, rows);
  for (int i : subset) m += terms[i];
  return m;
}

// Cholesky factor of I + sum_{i in S} H_i Q_i H_i^H; throws NumericalError on a non-positive pivot.
inline Eigen::LLT<CMatrix> factor_gram(const CMatrix& m, const Subset& subset) {
  Eigen::LLT<CMatrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError("log-det argument is not positive definite for subset {" + format_subset(subset, ',') + "}");
  return llt;
}

inline double log_det(const Eigen::LLT<CMatrix>& llt) {
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index j = 0; j < l.rows(); ++j) acc += std::log(l(j, j).real());
  return 2.0 * acc;
}

namespace detail {
inline double subset_bound_from_terms(const Subset& subset, std::span<const CMatrix> terms, int rows, LogBase base) {
  const CMatrix m = subset_gram(subset, terms, rows);
  return 0.5 * log_scale(base) * log_det(factor_gram(m, subset));
}
}  // namespace detail

/// (1/2) log det(I + sum_{i in S} H_i Q_i H_i^H), in bits by default.
inline double sum_rate_bound(const Subset& subset, const ChannelSet& channels, const CovarianceSet& covs,
                             LogBase base = LogBase::Bits) {
  if (subset.empty()) throw ValidationError("sum_rate_bound: empty subset");
  const auto terms = user_gram_terms(channels, covs);
  return detail::subset_bound_from_terms(subset, terms, channels.rows(), base);
}

/// Normalized bound sum_rate_bound(S)/|S| of every nonempty subset, in subsets_iter order.
struct SubsetValues {
  std::vector<Subset> subsets;
  std::vector<double> values;
};

inline SubsetValues subset_values(const ChannelSet& channels, const CovarianceSet& covs, LogBase base = LogBase::Bits,
                                  int max_users = kDefaultMaxUsers) {
  SubsetValues out;
  out.subsets = subsets_iter(channels.n_users, max_users);
  const auto terms = user_gram_terms(channels, covs);
  out.values.resize(out.subsets.size());
  for (std::size_t s = 0; s < out.subsets.size(); ++s) {
    out.values[s] = detail::subset_bound_from_terms(out.subsets[s], terms, channels.rows(), base) /
                    static_cast<double>(out.subsets[s].size());
  }
  return out;
}

/// Minimum over nonempty subsets of sum_rate_bound(S)/|S|. The binding subset
/// is the first one, in (cardinality, lexicographic) order, whose normalized
/// bound is within kSubsetTieTolerance of the minimum; r_min is its value.
inline MinRateResult min_rate(const ChannelSet& channels, const CovarianceSet& covs, LogBase base = LogBase::Bits,
                              int max_users = kDefaultMaxUsers) {
  const SubsetValues all = subset_values(channels, covs, base, max_users);
  const double best = *std::min_element(all.values.begin(), all.values.end());
  for (std::size_t s = 0; s < all.subsets.size(); ++s) {
    if (all.values[s] <= best + kSubsetTieTolerance) return {all.values[s], all.subsets[s]};
  }
  throw NumericalError("min_rate: subset bounds are not comparable (NaN)");
}

}  // namespace uavcran
