#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fastlstd/errors.hpp"
#include "fastlstd/qsample.hpp"
#include "fastlstd/transitions.hpp"
#include "fastlstd/types.hpp"

namespace fastlstd {

/// Condition estimate above which a system is declared singular; beyond this,
/// double precision cannot be trusted.
inline constexpr double kConditionLimit = 1e12;

/// The batch system Abar_T theta = bbar_T with
///   Abar_T = (1/T) sum phi(s_i) (phi(s_i) - beta phi(s'_i))^T
///   bbar_T = (1/T) sum r_i phi(s_i).
template <typename Scalar>
struct LstdSystem {
  Matrix<Scalar> a_bar;
  Vector<Scalar> b_bar;
  Index t = 0;
  Scalar beta = Scalar(0);
};

template <typename Scalar>
struct RegularizedSolution {
  Vector<Scalar> theta;
  Scalar mu;
};

namespace detail {

/// Pivoted-LU solve with a condition estimate and one step of iterative
/// refinement. Abar is non-symmetric in general, so no symmetric shortcut.
template <typename Scalar>
Vector<Scalar> solve_dense(const Matrix<Scalar>& a, const Vector<Scalar>& b,
                           const char* what) {
  Eigen::PartialPivLU<Matrix<Scalar>> lu(a);
  // rcond() is meaningless once a pivot collapses, so guard the U diagonal too
  const Scalar min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  const Scalar scale = a.template lpNorm<Eigen::Infinity>();
  if (!(min_pivot > scale * std::numeric_limits<Scalar>::epsilon() * Scalar(a.rows())))
    throw SingularityError(std::string(what) + ": system is singular",
                           std::numeric_limits<double>::infinity());
  const Scalar rcond = lu.rcond();
  if (!(rcond > Scalar(1) / Scalar(kConditionLimit)))
    throw SingularityError(std::string(what) + ": system is ill-conditioned",
                           rcond > Scalar(0) ? 1.0 / static_cast<double>(rcond)
                                             : std::numeric_limits<double>::infinity());
  Vector<Scalar> x = lu.solve(b);
  const Scalar tol = Scalar(1e-8) * (Scalar(1) + b.norm());
  for (int pass = 0; pass < 2 && (a * x - b).norm() > tol; ++pass)
    x += lu.solve(b - a * x);  // iterative refinement
  if (!((a * x - b).norm() <= tol))
    throw SingularityError(std::string(what) + ": residual exceeds tolerance",
                           1.0 / static_cast<double>(rcond));
  return x;
}

}  // namespace detail

template <typename Scalar>
LstdSystem<Scalar> lstd_system(const TransitionSet<Scalar>& set, Scalar beta) {
  set.require_nonempty("lstd_system");
  const Index t = set.size();
  LstdSystem<Scalar> sys;
  sys.a_bar = set.features().transpose() *
              (set.features() - beta * set.next_features()) / Scalar(t);
  sys.b_bar = set.features().transpose() * set.rewards() / Scalar(t);
  sys.t = t;
  sys.beta = beta;
  return sys;
}

/// theta_hat_T = Abar_T^{-1} bbar_T.
template <typename Scalar>
Vector<Scalar> lstd_solve(const TransitionSet<Scalar>& set, Scalar beta) {
  const auto sys = lstd_system(set, beta);
  return detail::solve_dense(sys.a_bar, sys.b_bar, "lstd_solve");
}

/// theta_hat_T^reg = (Abar_T + mu I)^{-1} bbar_T; well-posed for any sample
/// set once the shift dominates the spectrum.
template <typename Scalar>
RegularizedSolution<Scalar> lstd_solve_reg(const TransitionSet<Scalar>& set, Scalar beta,
                                           Scalar mu) {
  if (!(mu > Scalar(0))) throw ConfigError("lstd_solve_reg: mu must be positive");
  auto sys = lstd_system(set, beta);
  sys.a_bar.diagonal().array() += mu;
  return RegularizedSolution<Scalar>{detail::solve_dense(sys.a_bar, sys.b_bar, "lstd_solve_reg"),
                                     mu};
}

/// Incremental route: the running inverse of (ridge I + sum_i u_i v_i^T) is
/// maintained by rank-1 Sherman-Morrison updates, O(d^2) work per sample.
/// Seeding with (ridge I)^{-1} keeps the recursion total at an O(ridge) bias.
template <typename Scalar>
Vector<Scalar> lstd_solve_sherman_morrison(const TransitionSet<Scalar>& set, Scalar beta,
                                           Scalar ridge = Scalar(1e-8)) {
  set.require_nonempty("lstd_solve_sherman_morrison");
  if (!(ridge > Scalar(0)))
    throw ConfigError("lstd_solve_sherman_morrison: ridge must be positive");
  const Index d = set.dim();
  Matrix<Scalar> inv = Matrix<Scalar>::Identity(d, d) / ridge;
  Vector<Scalar> u(d), w(d), bu(d), bv(d);
  // past a couple of cache levels the matrix traffic dominates, so the two
  // products share one sweep over the columns; small systems stay on the
  // stock kernels
  const bool fuse = d >= 256;
  for (Index k = 0; k < set.size(); ++k) {
    u = set.phi(k);
    w.noalias() = u - beta * set.phi_next(k);
    if (fuse) {
      bu.setZero();
      for (Index j = 0; j < d; ++j) {
        const auto col = inv.col(j);
        bv[j] = col.dot(w);
        bu.noalias() += u[j] * col;
      }
    } else {
      bu.noalias() = inv * u;
      bv.noalias() = inv.transpose() * w;
    }
    const Scalar denom = Scalar(1) + bv.dot(u);
    if (std::abs(denom) < Scalar(1e-12))
      throw UpdateBreakdownError("lstd_solve_sherman_morrison: denominator underflow",
                                 k + 1);
    inv.noalias() -= (bu / denom) * bv.transpose();
  }
  return inv * (set.features().transpose() * set.rewards());
}

/// LSTDQ system for the greedy policy induced by policy_theta: the successor
/// features are phi(s', argmax_a policy_theta' phi(s', a)).
template <typename Scalar>
LstdSystem<Scalar> lstdq_system(const std::vector<QSample<Scalar>>& samples,
                                const ConstVectorRef<Scalar>& policy_theta, Scalar beta) {
  if (samples.empty()) throw EmptyPoolError("lstdq_system: empty sample pool");
  const Index d = samples.front().phi.size();
  LstdSystem<Scalar> sys;
  sys.a_bar = Matrix<Scalar>::Zero(d, d);
  sys.b_bar = Vector<Scalar>::Zero(d);
  for (const auto& s : samples) {
    if (s.phi.size() != d || s.phi_next.cols() != d)
      throw ConfigError("lstdq_system: sample dimension mismatch");
    const Index a = greedy_row<Scalar>(policy_theta, s.phi_next);
    sys.a_bar.noalias() +=
        s.phi * (s.phi - beta * s.phi_next.row(a).transpose()).transpose();
    sys.b_bar.noalias() += s.reward * s.phi;
  }
  const Scalar t = static_cast<Scalar>(samples.size());
  sys.a_bar /= t;
  sys.b_bar /= t;
  sys.t = static_cast<Index>(samples.size());
  sys.beta = beta;
  return sys;
}

/// Minimizer of sum_i (y_i - theta' x_i)^2 via the Gram system
/// (1/T) sum x_i x_i^T theta = (1/T) sum y_i x_i. X holds one sample per row.
template <typename Scalar>
Vector<Scalar> ls_solve(const Matrix<Scalar>& xs, const ConstVectorRef<Scalar>& ys) {
  if (xs.rows() == 0) throw EmptyPoolError("ls_solve: empty sample pool");
  if (xs.rows() != ys.size()) throw ConfigError("ls_solve: xs/ys length mismatch");
  const Scalar t = static_cast<Scalar>(xs.rows());
  const Matrix<Scalar> gram = xs.transpose() * xs / t;
  const Vector<Scalar> rhs = xs.transpose() * ys / t;
  return detail::solve_dense(gram, rhs, "ls_solve");
}

/// Smallest eigenvalue of the empirical feature covariance (1/T) Phi_T' Phi_T,
/// the strong-convexity constant mu gating every step-size regime. Symmetric
/// tridiagonalization + QR; tiny negative round-off is clamped to zero.
template <typename Scalar>
Scalar min_eigenvalue(const TransitionSet<Scalar>& set) {
  set.require_nonempty("min_eigenvalue");
  const Matrix<Scalar> cov =
      set.features().transpose() * set.features() / static_cast<Scalar>(set.size());
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(cov, Eigen::EigenvaluesOnly);
  const Scalar lambda = eig.eigenvalues()(0);
  return lambda < Scalar(0) ? Scalar(0) : lambda;
}

}  // namespace fastlstd
