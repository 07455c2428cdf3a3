#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "fastlstd/exact.hpp"
#include "fastlstd/qsample.hpp"
#include "fastlstd/rng.hpp"
#include "fastlstd/schedule.hpp"
#include "fastlstd/transitions.hpp"
#include "fastlstd/types.hpp"

namespace fastlstd {

/// Variant selector for one SA run. Regularization (mu > 0) adds the
/// -gamma_n mu theta shrinkage term; averaging maintains the running mean of
/// the iterates theta_{burn_in+1} .. theta_n.
template <typename Scalar>
struct SaMode {
  Scalar mu = Scalar(0);
  bool averaged = false;
  Index burn_in = 0;

  static SaMode plain() { return {}; }
  static SaMode regularized(Scalar mu) {
    if (!(mu > Scalar(0))) throw ConfigError("SaMode: mu must be positive");
    return {mu, false, 0};
  }
  static SaMode averaging(Index burn_in = 0) {
    if (burn_in < 0) throw ConfigError("SaMode: burn_in must be >= 0");
    return {Scalar(0), true, burn_in};
  }
  static SaMode regularized_averaging(Scalar mu, Index burn_in = 0) {
    if (!(mu > Scalar(0))) throw ConfigError("SaMode: mu must be positive");
    if (burn_in < 0) throw ConfigError("SaMode: burn_in must be >= 0");
    return {mu, true, burn_in};
  }
};

/// Mutable state of one stochastic-approximation run: the iterate theta_n,
/// the running average, the step counter, and the run-owned RNG. Single-owner;
/// independent runs may share one read-only sample pool.
template <typename Scalar>
class SaState {
 public:
  SaState(Index dim, StepSchedule<Scalar> schedule, SaMode<Scalar> mode,
          std::uint64_t seed, Vector<Scalar> theta0 = Vector<Scalar>())
      : theta_(theta0.size() == 0 ? Vector<Scalar>::Zero(dim) : std::move(theta0)),
        theta_bar_(Vector<Scalar>::Zero(dim)),
        rng_(seed),
        schedule_(std::move(schedule)),
        mode_(mode) {
    if (theta_.size() != dim) throw ConfigError("SaState: theta0 dimension mismatch");
  }

  const Vector<Scalar>& theta() const { return theta_; }
  Index step_count() const { return n_; }
  RngHandle& rng() { return rng_; }
  const StepSchedule<Scalar>& schedule() const { return schedule_; }
  const SaMode<Scalar>& mode() const { return mode_; }

  /// The run's current estimate: the averaged iterate once it exists,
  /// otherwise the raw iterate.
  const Vector<Scalar>& estimate() const {
    return (mode_.averaged && n_ > mode_.burn_in) ? theta_bar_ : theta_;
  }

  bool has_average() const { return mode_.averaged && n_ > mode_.burn_in; }

  /// Running mean over iterates burn_in+1 .. n.
  const Vector<Scalar>& average() const {
    if (!mode_.averaged) throw StateError("SaState: not in averaging mode");
    if (n_ <= mode_.burn_in)
      throw StateError("SaState: no averaged step has happened yet");
    return theta_bar_;
  }

  /// Largest |theta' phi| seen at sampled features; diagnostic stand-in for
  /// the bounded-value assumption, which the update itself never enforces.
  Scalar max_value_excursion() const { return max_value_excursion_; }
  Scalar max_theta_norm() const { return max_theta_norm_; }

  /// Advance by one update: theta *= (1 - gamma mu) is folded in when the
  /// mode is regularized. The caller supplies the sampled row and reward.
  template <typename PhiRow, typename PhiNextRow>
  void advance(const PhiRow& phi, Scalar reward, const PhiNextRow& phi_next,
               Scalar beta) {
    const Scalar gamma = step_size(schedule_, n_ + 1);
    const Scalar value = theta_.dot(phi);
    const Scalar next_value = theta_.dot(phi_next);
    const Scalar residual = reward + beta * next_value - value;
    if (mode_.mu > Scalar(0)) theta_ *= (Scalar(1) - gamma * mode_.mu);
    theta_ += gamma * residual * phi;
    finish_step(value, next_value);
  }

  /// One SGD step toward the least-squares solution (no discount term).
  template <typename XRow>
  void advance_ls(const XRow& x, Scalar y) {
    const Scalar gamma = step_size(schedule_, n_ + 1);
    const Scalar value = theta_.dot(x);
    const Scalar residual = y - value;
    if (mode_.mu > Scalar(0)) theta_ *= (Scalar(1) - gamma * mode_.mu);
    theta_ += gamma * residual * x;
    finish_step(value, value);
  }

 private:
  void finish_step(Scalar value, Scalar next_value) {
    ++n_;
    if (mode_.averaged && n_ > mode_.burn_in) {
      const Scalar m = static_cast<Scalar>(n_ - mode_.burn_in);
      theta_bar_ += (theta_ - theta_bar_) / m;
    }
    const Scalar excursion = std::max(std::abs(value), std::abs(next_value));
    if (excursion > max_value_excursion_) max_value_excursion_ = excursion;
    const Scalar norm = theta_.norm();
    if (norm > max_theta_norm_) max_theta_norm_ = norm;
  }

  Vector<Scalar> theta_;
  Vector<Scalar> theta_bar_;
  Index n_ = 0;
  RngHandle rng_;
  StepSchedule<Scalar> schedule_;
  SaMode<Scalar> mode_;
  Scalar max_value_excursion_ = Scalar(0);
  Scalar max_theta_norm_ = Scalar(0);
};

/// Distance-to-reference samples along one run.
template <typename Scalar>
struct TrajectoryRecord {
  Index step;
  Scalar norm_diff;
  Scalar gamma;
};

template <typename Scalar>
struct Trajectory {
  std::vector<TrajectoryRecord<Scalar>> records;
  Vector<Scalar> reference;

  /// norm_diff at step n; throws if the run never recorded that step.
  Scalar at_step(Index n) const {
    for (const auto& r : records)
      if (r.step == n) return r.norm_diff;
    throw ConfigError("Trajectory: step " + std::to_string(n) + " was not recorded");
  }
};

/// One randomized fixed-point update: draw i_n uniformly, then
///   theta_n = theta_{n-1}
///           + gamma_n (r_{i_n} + beta theta'phi(s'_{i_n}) - theta'phi(s_{i_n})) phi(s_{i_n})
/// with the extra (1 - gamma_n mu) shrinkage in regularized mode.
template <typename Scalar>
void flstd_sa_step(SaState<Scalar>& state, const TransitionSet<Scalar>& set, Scalar beta) {
  set.require_nonempty("flstd_sa_step");
  if (set.dim() != state.theta().size())
    throw ConfigError("flstd_sa_step: pool/iterate dimension mismatch");
  const Index i = state.rng().draw_index(set.size()) - 1;
  state.advance(set.phi(i), set.reward(i), set.phi_next(i), beta);
}

/// One randomized SGD step for least squares: draw i_n uniformly, then
///   theta_n = theta_{n-1} + gamma_n (y_{i_n} - theta'x_{i_n}) x_{i_n}
/// (minus gamma_n mu theta_{n-1} in regularized mode).
template <typename Scalar>
void fls_sa_step(SaState<Scalar>& state, const RowMatrix<Scalar>& xs,
                 const ConstVectorRef<Scalar>& ys) {
  if (xs.rows() == 0) throw EmptyPoolError("fls_sa_step: empty sample pool");
  if (xs.cols() != state.theta().size() || xs.rows() != ys.size())
    throw ConfigError("fls_sa_step: data dimension mismatch");
  const Index i = state.rng().draw_index(xs.rows()) - 1;
  state.advance_ls(xs.row(i).transpose(), ys[i]);
}

/// Full fLSTD-SA run. Records ||estimate_n - reference||_2 every record_every
/// steps; the reference defaults to the batch solution the run targets
/// (regularized when the mode is). Deterministic given the seed.
template <typename Scalar>
std::pair<SaState<Scalar>, Trajectory<Scalar>> run_flstd_sa(
    const TransitionSet<Scalar>& set, Scalar beta, const StepSchedule<Scalar>& schedule,
    const SaMode<Scalar>& mode, Index steps, std::uint64_t seed, Index record_every = 10,
    std::optional<Vector<Scalar>> reference = std::nullopt,
    Vector<Scalar> theta0 = Vector<Scalar>()) {
  if (steps < 1) throw ConfigError("run_flstd_sa: steps must be >= 1");
  if (record_every < 1) throw ConfigError("run_flstd_sa: record_every must be >= 1");
  set.require_nonempty("run_flstd_sa");

  Trajectory<Scalar> traj;
  traj.reference = reference ? *std::move(reference)
                             : (mode.mu > Scalar(0) ? lstd_solve_reg(set, beta, mode.mu).theta
                                                    : lstd_solve(set, beta));
  SaState<Scalar> state(set.dim(), schedule, mode, seed, std::move(theta0));
  traj.records.reserve(static_cast<std::size_t>(steps / record_every));
  for (Index n = 1; n <= steps; ++n) {
    flstd_sa_step(state, set, beta);
    if (n % record_every == 0)
      traj.records.push_back({n, (state.estimate() - traj.reference).norm(),
                              step_size(schedule, n)});
  }
  return {std::move(state), std::move(traj)};
}

/// fLSTDQ-SA: `steps` randomized updates against the greedy policy of
/// policy_theta, which stays frozen for the whole run (the successor action
/// per sample is fixed up front). Starts from policy_theta and returns the
/// final iterate; steps == 0 returns it unchanged.
template <typename Scalar>
Vector<Scalar> flstdq_sa_run(const std::vector<QSample<Scalar>>& samples,
                             const ConstVectorRef<Scalar>& policy_theta, Scalar beta,
                             const StepSchedule<Scalar>& schedule, Index steps,
                             std::uint64_t seed,
                             const SaMode<Scalar>& mode = SaMode<Scalar>::plain()) {
  if (samples.empty()) throw EmptyPoolError("flstdq_sa_run: empty sample pool");
  if (steps < 0) throw ConfigError("flstdq_sa_run: steps must be >= 0");
  const Index d = samples.front().phi.size();
  if (policy_theta.size() != d)
    throw ConfigError("flstdq_sa_run: policy dimension mismatch");

  const Index t = static_cast<Index>(samples.size());
  RowMatrix<Scalar> phi(t, d), phi_next(t, d);
  Vector<Scalar> rewards(t);
  for (Index i = 0; i < t; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (s.phi.size() != d || s.phi_next.cols() != d)
      throw ConfigError("flstdq_sa_run: sample dimension mismatch");
    phi.row(i) = s.phi.transpose();
    phi_next.row(i) = s.phi_next.row(greedy_row<Scalar>(policy_theta, s.phi_next));
    rewards[i] = s.reward;
  }

  SaState<Scalar> state(d, schedule, mode, seed, policy_theta);
  for (Index n = 0; n < steps; ++n) {
    const Index i = state.rng().draw_index(t) - 1;
    state.advance(phi.row(i).transpose(), rewards[i], phi_next.row(i).transpose(), beta);
  }
  return state.theta();
}

/// The averaged iterate (theta_{burn_in+1} + ... + theta_n) / (n - burn_in).
template <typename Scalar>
Vector<Scalar> extract_average(const SaState<Scalar>& state) {
  return state.average();
}

}  // namespace fastlstd
