#pragma once

#include <chrono>
#include <functional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fastlstd/errors.hpp"
#include "fastlstd/exact.hpp"
#include "fastlstd/format.hpp"
#include "fastlstd/qsample.hpp"
#include "fastlstd/sa.hpp"
#include "fastlstd/schedule.hpp"
#include "fastlstd/types.hpp"

namespace fastlstd {

/// A linear Q-function policy: pi(s) = argmax_a theta' phi(s, a). The feature
/// map returns one row per action. Ties break to the lowest action index, so
/// the greedy action is a pure function of (theta, state).
template <typename Scalar, typename State>
struct QPolicy {
  Vector<Scalar> theta;
  std::function<Matrix<Scalar>(const State&)> feature_map;  // action_count x d
  Index action_count = 0;
};

template <typename Scalar, typename State>
Index greedy_action(const QPolicy<Scalar, State>& policy, const State& state) {
  if (policy.action_count < 1) throw ConfigError("greedy_action: need >= 1 action");
  const Matrix<Scalar> rows = policy.feature_map(state);
  if (rows.rows() != policy.action_count)
    throw ConfigError("greedy_action: feature map action count mismatch");
  return greedy_row<Scalar>(policy.theta, rows);
}

/// One logged environment transition (s, a, r, s').
template <typename Scalar, typename State>
struct EnvTransition {
  State state;
  Index action = 0;
  Scalar reward = Scalar(0);
  State next_state;
};

/// Featurize a batch of env transitions into state-action samples; the
/// feature map is evaluated once per sample so LSPI iterations can re-select
/// successor actions without touching the environment again.
template <typename Scalar, typename State>
std::vector<QSample<Scalar>> featurize(
    const std::vector<EnvTransition<Scalar, State>>& samples,
    const std::function<Matrix<Scalar>(const State&)>& feature_map) {
  std::vector<QSample<Scalar>> pool;
  pool.reserve(samples.size());
  for (const auto& s : samples) {
    const Matrix<Scalar> rows = feature_map(s.state);
    if (s.action < 0 || s.action >= rows.rows())
      throw ConfigError("featurize: logged action out of range");
    pool.push_back(QSample<Scalar>{rows.row(s.action).transpose(), s.reward,
                                   feature_map(s.next_state)});
  }
  return pool;
}

/// Exact policy evaluation: solve the LSTDQ system, falling back to the
/// mu-regularized system when it is singular.
template <typename Scalar>
struct ExactEval {
  Scalar fallback_mu = Scalar(1);
};

/// SA policy evaluation: tau randomized fLSTDQ-SA updates against the frozen
/// greedy policy, warm-started from the current iterate. reg_mu > 0 runs the
/// regularized update (and is the default, matching regularized LSTDQ).
template <typename Scalar>
struct SaEval {
  Index tau = 500;
  StepSchedule<Scalar> schedule;
  std::uint64_t seed = 0;
  Scalar reg_mu = Scalar(1);
};

template <typename Scalar>
using LspiEval = std::variant<ExactEval<Scalar>, SaEval<Scalar>>;

template <typename Scalar>
struct LspiIteration {
  Index iter = 0;
  Scalar delta = Scalar(0);  // ||theta_k - theta_{k-1}||_2
  std::string eval_mode;
  Index eval_steps = 0;
  double wall_ms = 0;
};

template <typename Scalar>
struct LspiReport {
  std::vector<LspiIteration<Scalar>> iterations;
  std::vector<Vector<Scalar>> thetas;  // iterate after each evaluation
  Vector<Scalar> final_theta;
  bool converged = false;
};

/// Policy iteration over a fixed sample pool: alternate policy evaluation
/// (exact LSTDQ or fLSTDQ-SA) with greedy improvement until
/// ||theta - theta'|| < epsilon or max_iters.
template <typename Scalar>
LspiReport<Scalar> lspi_run(const std::vector<QSample<Scalar>>& pool, Scalar beta,
                            Scalar epsilon, const LspiEval<Scalar>& eval,
                            Index max_iters = 50,
                            Vector<Scalar> theta0 = Vector<Scalar>()) {
  if (pool.empty()) throw EmptyPoolError("lspi_run: empty sample pool");
  if (!(epsilon > Scalar(0))) throw ConfigError("lspi_run: epsilon must be positive");
  if (max_iters < 1) throw ConfigError("lspi_run: max_iters must be >= 1");
  const Index d = pool.front().phi.size();
  Vector<Scalar> theta = theta0.size() == 0 ? Vector<Scalar>::Zero(d) : std::move(theta0);
  if (theta.size() != d) throw ConfigError("lspi_run: theta0 dimension mismatch");

  LspiReport<Scalar> report;
  for (Index iter = 1; iter <= max_iters; ++iter) {
    const auto start = std::chrono::steady_clock::now();
    Vector<Scalar> next;
    std::string mode;
    Index steps = 0;
    if (const auto* exact = std::get_if<ExactEval<Scalar>>(&eval)) {
      const auto sys = lstdq_system<Scalar>(pool, theta, beta);
      try {
        next = detail::solve_dense(sys.a_bar, sys.b_bar, "lspi_run");
        mode = "exact";
      } catch (const SingularityError&) {
        Matrix<Scalar> shifted = sys.a_bar;
        shifted.diagonal().array() += exact->fallback_mu;
        next = detail::solve_dense(shifted, sys.b_bar, "lspi_run(reg)");
        mode = "exact_reg";
      }
      steps = static_cast<Index>(pool.size());
    } else {
      const auto& sa = std::get<SaEval<Scalar>>(eval);
      const auto sa_mode = sa.reg_mu > Scalar(0) ? SaMode<Scalar>::regularized(sa.reg_mu)
                                                 : SaMode<Scalar>::plain();
      next = flstdq_sa_run<Scalar>(pool, theta, beta, sa.schedule, sa.tau,
                                   sa.seed + static_cast<std::uint64_t>(iter), sa_mode);
      mode = "sa";
      steps = sa.tau;
    }
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    const Scalar delta = (next - theta).norm();
    report.iterations.push_back({iter, delta, mode, steps, wall_ms});
    report.thetas.push_back(next);
    theta = std::move(next);
    if (delta < epsilon) {
      report.converged = true;
      break;
    }
  }
  report.final_theta = std::move(theta);
  return report;
}

/// Overload taking raw env transitions plus the feature map.
template <typename Scalar, typename State>
LspiReport<Scalar> lspi_run(const std::vector<EnvTransition<Scalar, State>>& samples,
                            const std::function<Matrix<Scalar>(const State&)>& feature_map,
                            Scalar beta, Scalar epsilon, const LspiEval<Scalar>& eval,
                            Index max_iters = 50,
                            Vector<Scalar> theta0 = Vector<Scalar>()) {
  return lspi_run<Scalar>(featurize<Scalar, State>(samples, feature_map), beta, epsilon,
                          eval, max_iters, std::move(theta0));
}

/// v = (I - beta P)^{-1} r for a small exactly-known chain; P row-stochastic.
template <typename Scalar>
Vector<Scalar> compute_true_value(const Matrix<Scalar>& transition,
                                  const ConstVectorRef<Scalar>& rewards, Scalar beta) {
  if (!(beta >= Scalar(0) && beta < Scalar(1)))
    throw ConfigError("compute_true_value: beta must lie in [0, 1)");
  const Index s = transition.rows();
  if (s == 0 || transition.cols() != s || rewards.size() != s)
    throw ConfigError("compute_true_value: P must be square and match r");
  if (s > 1000) throw ScaleError("compute_true_value: state space too large (> 1000)");
  for (Index i = 0; i < s; ++i) {
    if (transition.row(i).minCoeff() < Scalar(-1e-12) ||
        std::abs(transition.row(i).sum() - Scalar(1)) > Scalar(1e-9))
      throw ConfigError("compute_true_value: P row " + std::to_string(i) +
                        " is not a probability distribution");
  }
  const Matrix<Scalar> system = Matrix<Scalar>::Identity(s, s) - beta * transition;
  return detail::solve_dense(system, Vector<Scalar>(rewards), "compute_true_value");
}

/// Report export: JSON with the iteration trace, and a per-iteration CSV
/// `iter,delta,wall_ms`. Wall-clock columns are the one non-reproducible part.
template <typename Scalar>
std::string lspi_report_json(const LspiReport<Scalar>& report) {
  std::ostringstream os;
  os << "{\"converged\":" << (report.converged ? "true" : "false") << ",\"iterations\":[";
  for (std::size_t i = 0; i < report.iterations.size(); ++i) {
    const auto& it = report.iterations[i];
    if (i) os << ",";
    os << "{\"iter\":" << it.iter << ",\"delta\":"
       << format_number(static_cast<double>(it.delta)) << ",\"eval_mode\":\""
       << it.eval_mode << "\",\"eval_steps\":" << it.eval_steps
       << ",\"wall_ms\":" << format_number(it.wall_ms) << "}";
  }
  os << "],\"final_theta\":[";
  for (Index i = 0; i < report.final_theta.size(); ++i) {
    if (i) os << ",";
    os << format_number(static_cast<double>(report.final_theta[i]));
  }
  os << "]}";
  return os.str();
}

template <typename Scalar>
std::string lspi_report_csv(const LspiReport<Scalar>& report,
                            const std::string& header_comment = "") {
  std::ostringstream os;
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "iter,delta,wall_ms\n";
  for (const auto& it : report.iterations)
    os << it.iter << "," << format_number(static_cast<double>(it.delta)) << ","
       << format_number(it.wall_ms) << "\n";
  return os.str();
}

}  // namespace fastlstd
