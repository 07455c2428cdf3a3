#pragma once

#include "fastlstd/errors.hpp"
#include "fastlstd/types.hpp"

namespace fastlstd {

/// One state-action sample in feature space: phi(s, a), the reward, and the
/// next-state features phi(s', a') for every action a' (one row per action),
/// so a greedy policy can re-select the successor action without touching the
/// environment.
template <typename Scalar>
struct QSample {
  Vector<Scalar> phi;        // phi(s_i, a_i)
  Scalar reward;             // r_i
  Matrix<Scalar> phi_next;   // actions x d, row a = phi(s'_i, a)
};

/// Index of the row maximizing theta' * row. Ties break to the lowest index,
/// which keeps greedy policies deterministic everywhere they appear.
template <typename Scalar>
Index greedy_row(const ConstVectorRef<Scalar>& theta, const Matrix<Scalar>& rows) {
  if (rows.rows() < 1) throw ConfigError("greedy_row: need at least one action row");
  Index best = 0;
  Scalar best_value = rows.row(0).dot(theta);
  for (Index a = 1; a < rows.rows(); ++a) {
    const Scalar value = rows.row(a).dot(theta);
    if (value > best_value) {
      best = a;
      best_value = value;
    }
  }
  return best;
}

}  // namespace fastlstd
