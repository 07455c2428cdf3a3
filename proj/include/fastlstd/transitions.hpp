#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "fastlstd/errors.hpp"
#include "fastlstd/types.hpp"

namespace fastlstd {

/// One sample (phi(s_i), r_i, phi(s'_i)) in feature space.
template <typename Scalar>
struct Transition {
  Vector<Scalar> phi;
  Scalar reward;
  Vector<Scalar> phi_next;
};

/// The fixed sample pool D consumed by both the batch solvers and the SA
/// iterations. Immutable once filled; safely shared read-only across
/// concurrent runs. Rows are stored contiguously so the randomized updates
/// touch O(d) memory per step.
template <typename Scalar>
class TransitionSet {
 public:
  TransitionSet() = default;
  explicit TransitionSet(Index dim) : dim_(dim) {
    if (dim < 1) throw ConfigError("TransitionSet: dim must be positive");
  }

  Index dim() const { return dim_; }
  Index size() const { return size_; }
  bool empty() const { return size_ == 0; }

  void reserve(Index n) {
    if (n > phi_.rows()) grow(n);
  }

  void add(const Transition<Scalar>& t) { add(t.phi, t.reward, t.phi_next); }

  void add(const ConstVectorRef<Scalar>& phi, Scalar reward,
           const ConstVectorRef<Scalar>& phi_next) {
    if (dim_ == 0) dim_ = phi.size();
    if (phi.size() != dim_ || phi_next.size() != dim_)
      throw ConfigError("TransitionSet: transition dimension mismatch (expected " +
                        std::to_string(dim_) + ")");
    if (size_ == phi_.rows()) grow(size_ < 8 ? 8 : 2 * size_);
    phi_.row(size_) = phi.transpose();
    phi_next_.row(size_) = phi_next.transpose();
    rewards_[size_] = reward;
    ++size_;
  }

  auto phi(Index i) const { return phi_.row(i).transpose(); }
  auto phi_next(Index i) const { return phi_next_.row(i).transpose(); }
  Scalar reward(Index i) const { return rewards_[i]; }

  Transition<Scalar> operator[](Index i) const {
    return Transition<Scalar>{phi(i), reward(i), phi_next(i)};
  }

  /// Feature matrix Phi_T (one phi(s_i) per row), restricted to the filled rows.
  auto features() const { return phi_.topRows(size_); }
  auto next_features() const { return phi_next_.topRows(size_); }
  auto rewards() const { return rewards_.head(size_); }

  /// Largest |r_i| over the pool.
  Scalar max_reward_magnitude() const {
    return size_ == 0 ? Scalar(0) : rewards().cwiseAbs().maxCoeff();
  }

  /// Largest Euclidean feature norm over phi and phi_next rows.
  Scalar max_feature_norm() const {
    if (size_ == 0) return Scalar(0);
    return std::max(features().rowwise().norm().maxCoeff(),
                    next_features().rowwise().norm().maxCoeff());
  }

  /// Bound checking for the concentration analysis: features inside the unit
  /// ball and rewards within r_max. Throws ConfigError naming the first
  /// offending entry (1-based).
  void enforce_assumptions(Scalar r_max, Scalar feature_bound = Scalar(1)) const {
    for (Index i = 0; i < size_; ++i) {
      if (phi(i).norm() > feature_bound || phi_next(i).norm() > feature_bound)
        throw ConfigError("TransitionSet: feature norm bound violated at entry " +
                          std::to_string(i + 1));
      if (std::abs(rewards_[i]) > r_max)
        throw ConfigError("TransitionSet: reward bound violated at entry " +
                          std::to_string(i + 1));
    }
  }

  void require_nonempty(const std::string& op) const {
    if (size_ == 0) throw EmptyPoolError(op + ": empty sample pool");
  }

 private:
  void grow(Index capacity) {
    if (dim_ == 0) return;  // defer until the first record fixes the dimension
    phi_.conservativeResize(capacity, dim_);
    phi_next_.conservativeResize(capacity, dim_);
    rewards_.conservativeResize(capacity);
  }

  Index dim_ = 0;
  Index size_ = 0;
  RowMatrix<Scalar> phi_;
  RowMatrix<Scalar> phi_next_;
  Vector<Scalar> rewards_;
};

}  // namespace fastlstd
