#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fastlstd/errors.hpp"
#include "fastlstd/exact.hpp"
#include "fastlstd/format.hpp"
#include "fastlstd/sa.hpp"
#include "fastlstd/schedule.hpp"
#include "fastlstd/transitions.hpp"
#include "fastlstd/types.hpp"

namespace fastlstd {

/// Inputs to every closed-form error bound. mu is the smallest eigenvalue of
/// the empirical feature covariance; leave it unset ("auto") to resolve from
/// a sample pool at check time.
template <typename Scalar>
struct BoundParams {
  Scalar beta = Scalar(0.9);          // discount, in (0, 1)
  std::optional<Scalar> mu;           // strong-convexity constant; nullopt = auto
  Scalar c = Scalar(1);               // step-size shift constant, > 0
  Scalar alpha = Scalar(0.75);        // averaging exponent, in (1/2, 1)
  Scalar r_max = Scalar(1);           // reward magnitude bound
  Scalar v_max = Scalar(1);           // value magnitude bound
  Scalar delta = Scalar(0.05);        // high-probability level, in (0, 1]
  Scalar init_dist = Scalar(0);       // ||theta_0 - theta_hat_T||
  Scalar sigma = Scalar(1);           // noise variance bound (least-squares only)

  Scalar mu_value() const {
    if (!mu) throw ConfigError("BoundParams: mu is unresolved (auto without data)");
    if (!(*mu > Scalar(0))) throw ConfigError("BoundParams: mu must be positive");
    return *mu;
  }

  void validate() const {
    if (!(beta > Scalar(0) && beta < Scalar(1)))
      throw ConfigError("BoundParams: beta must lie in (0, 1)");
    if (!(c > Scalar(0))) throw ConfigError("BoundParams: c must be positive");
    if (!(delta > Scalar(0) && delta <= Scalar(1)))
      throw ConfigError("BoundParams: delta must lie in (0, 1]");
    if (r_max < Scalar(0) || v_max < Scalar(0) || init_dist < Scalar(0))
      throw ConfigError("BoundParams: magnitude bounds must be non-negative");
  }
};

/// Resolve an "auto" mu from the pool's feature covariance.
template <typename Scalar>
BoundParams<Scalar> resolve_mu(BoundParams<Scalar> params, const TransitionSet<Scalar>& set) {
  if (!params.mu) params.mu = min_eigenvalue(set);
  return params;
}

/// Step-size regime warnings (non-fatal): the explicit constants assume
/// (1-beta)^2 mu c in (1.33, 2) for the fixed-point iteration and
/// mu c in (1.33, 2) for the least-squares variant.
template <typename Scalar>
std::vector<std::string> regime_warnings(const BoundParams<Scalar>& params,
                                         ScheduleKind kind) {
  std::vector<std::string> warnings;
  if (!params.mu) return warnings;
  const Scalar mu = *params.mu;
  if (kind == ScheduleKind::FixedPoint) {
    const Scalar eta = (Scalar(1) - params.beta) * (Scalar(1) - params.beta) * mu * params.c;
    if (!(eta > Scalar(1.33) && eta < Scalar(2))) {
      std::ostringstream os;
      os << "(1-beta)^2*mu*c = " << static_cast<double>(eta)
         << " outside (1.33, 2); explicit constants are not guaranteed";
      warnings.push_back(os.str());
    }
  } else if (kind == ScheduleKind::LeastSquares) {
    const Scalar eta = mu * params.c;
    if (!(eta > Scalar(1.33) && eta < Scalar(2))) {
      std::ostringstream os;
      os << "mu*c = " << static_cast<double>(eta)
         << " outside (1.33, 2); explicit constants are not guaranteed";
      warnings.push_back(os.str());
    }
  } else if (kind == ScheduleKind::IterateAveraging) {
    if (!(params.c > Scalar(1.33) && params.c < Scalar(2))) {
      std::ostringstream os;
      os << "c = " << static_cast<double>(params.c)
         << " outside (1.33, 2); averaging constants are not guaranteed";
      warnings.push_back(os.str());
    }
  }
  return warnings;
}

/// H_beta = sqrt(R_max (R_max + 2) + (1 + beta)^2 V_max^2), the
/// martingale-difference magnitude driving the sampling-error term.
template <typename Scalar>
Scalar h_beta(Scalar r_max, Scalar v_max, Scalar beta) {
  if (r_max < Scalar(0) || v_max < Scalar(0))
    throw ConfigError("h_beta: bounds must be non-negative");
  return std::sqrt(r_max * (r_max + Scalar(2)) +
                   (Scalar(1) + beta) * (Scalar(1) + beta) * v_max * v_max);
}

/// K1(n) = sqrt(c) ||theta_0 - theta_hat|| / n^{((1-beta)^2 mu c - 1)/2}
///       + (1-beta) c H_beta / 2.
/// The expectation envelope is K1(n) / sqrt(n + c).
template <typename Scalar>
Scalar k1(const BoundParams<Scalar>& params, Index n) {
  params.validate();
  if (n < 1) throw ConfigError("k1: n must be >= 1");
  const Scalar eta =
      (Scalar(1) - params.beta) * (Scalar(1) - params.beta) * params.mu_value() * params.c;
  if (!(eta > Scalar(1)))
    throw RegimeError("k1: (1-beta)^2*mu*c must exceed 1 for a decaying initial term");
  const Scalar h = h_beta(params.r_max, params.v_max, params.beta);
  const Scalar initial = std::sqrt(params.c) * params.init_dist /
                         std::pow(static_cast<Scalar>(n), (eta - Scalar(1)) / Scalar(2));
  return initial + (Scalar(1) - params.beta) * params.c * h / Scalar(2);
}

/// K2(n) = (1-beta) c sqrt(log(1/delta)) / (2 sqrt((4/3)(1-beta)^2 mu c - 1)) + K1(n).
/// The event ||theta_n - theta_hat|| <= K2(n)/sqrt(n+c) has probability >= 1 - delta.
template <typename Scalar>
Scalar k2(const BoundParams<Scalar>& params, Index n) {
  const Scalar base = k1(params, n);
  const Scalar eta =
      (Scalar(1) - params.beta) * (Scalar(1) - params.beta) * params.mu_value() * params.c;
  const Scalar radicand = Scalar(4) / Scalar(3) * eta - Scalar(1);
  if (!(radicand > Scalar(0)))
    throw RegimeError("k2: (4/3)(1-beta)^2*mu*c must exceed 1");
  const Scalar log_term = std::log(Scalar(1) / params.delta);
  return (Scalar(1) - params.beta) * params.c * std::sqrt(log_term) /
             (Scalar(2) * std::sqrt(radicand)) +
         base;
}

/// C = sum_{n >= 1} exp(-mu c n^{1-alpha}), summed directly until terms fall
/// below 1e-16. Throws when the series needs more than `max_terms` terms.
template <typename Scalar>
Scalar averaging_series_c(Scalar mu, Scalar c, Scalar alpha,
                          Index max_terms = Index(100000000)) {
  if (!(mu > Scalar(0) && c > Scalar(0)))
    throw ConfigError("averaging_series_c: mu*c must be positive (series diverges)");
  if (!(alpha > Scalar(0.5) && alpha < Scalar(1)))
    throw ConfigError("averaging_series_c: alpha must lie in (1/2, 1)");
  const Scalar a = mu * c;
  const Scalar b = Scalar(1) - alpha;
  Scalar sum = Scalar(0);
  for (Index n = 1; n <= max_terms; ++n) {
    const Scalar term = std::exp(-a * std::pow(static_cast<Scalar>(n), b));
    sum += term;
    if (term < Scalar(1e-16)) return sum;
  }
  throw ConfigError("averaging_series_c: series converges too slowly (mu*c too small)");
}

/// Upper bound on the tail sum_{n > N} exp(-a n^b) for b in (0, 1), used to
/// certify truncation: comparison with the integral and t^{s-1} <= T0^{s-1}
/// exp((s-1)(t-T0)/T0) after the substitution t = x^b.
template <typename Scalar>
Scalar averaging_series_tail_bound(Scalar a, Scalar b, Index n_last) {
  const Scalar s = Scalar(1) / b;
  const Scalar t0 = std::pow(static_cast<Scalar>(n_last), b);
  const Scalar slope = a - (s - Scalar(1)) / t0;
  if (!(slope > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return std::pow(t0, s - Scalar(1)) / b * std::exp(-a * t0) / slope;
}

/// Iterate-averaging constants (K1_IA, K2_IA); the envelope divides by
/// (n + c)^{alpha/2}.
template <typename Scalar>
std::pair<Scalar, Scalar> k_ia(const BoundParams<Scalar>& params, Index n) {
  params.validate();
  if (n < 1) throw ConfigError("k_ia: n must be >= 1");
  const Scalar mu = params.mu_value();
  const Scalar alpha = params.alpha;
  if (!(alpha > Scalar(0.5) && alpha < Scalar(1)))
    throw ConfigError("k_ia: alpha must lie in (1/2, 1)");
  const Scalar beta = params.beta;
  const Scalar c = params.c;
  const Scalar one_minus_beta = Scalar(1) - beta;
  const Scalar h = h_beta(params.r_max, params.v_max, beta);
  const Scalar nc = static_cast<Scalar>(n) + c;

  const Scalar series = params.init_dist > Scalar(0)
                            ? averaging_series_c(mu, c, alpha)
                            : Scalar(0);  // the C term vanishes with the initial error
  const Scalar rho = mu * std::pow(c, alpha) * one_minus_beta * one_minus_beta;
  const Scalar k1_ia =
      series * params.init_dist / std::pow(nc, (Scalar(1) - alpha) / Scalar(2)) +
      h * std::pow(c, alpha) * one_minus_beta /
          std::pow(rho, alpha * (Scalar(1) + Scalar(2) * alpha) /
                             (Scalar(2) * (Scalar(1) - alpha)));

  const Scalar bracket =
      std::pow(Scalar(3), alpha) +
      std::pow(Scalar(2) * alpha / rho + std::pow(Scalar(2), alpha) / alpha, Scalar(2));
  const Scalar k2_ia = std::sqrt(std::log(Scalar(1) / params.delta)) /
                           (mu * one_minus_beta) * bracket /
                           std::pow(nc, (Scalar(1) - alpha) / Scalar(2)) +
                       k1_ia;
  return {k1_ia, k2_ia};
}

/// h(n) = c [ (sigma + 2 D^2) + 4 D ln n + 2 ln^2 n ] with D the initial distance.
template <typename Scalar>
Scalar ls_noise_growth(const BoundParams<Scalar>& params, Index n) {
  if (n < 1) throw ConfigError("ls_noise_growth: n must be >= 1");
  const Scalar log_n = std::log(static_cast<Scalar>(n));
  const Scalar d0 = params.init_dist;
  return params.c * ((params.sigma + Scalar(2) * d0 * d0) + Scalar(4) * d0 * log_n +
                     Scalar(2) * log_n * log_n);
}

/// Least-squares constants (K1_LS, K2_LS); the envelope divides by sqrt(n + c).
/// K2_LS is implemented exactly as displayed: its radical sqrt(mu c / 2 - 1)
/// requires mu c > 2 even though the step-size regime asks for mu c in
/// (1.33, 2); delta = 1 sidesteps the radical (the log factor is zero), any
/// other delta in that regime raises RegimeError rather than guessing a fix.
template <typename Scalar>
std::pair<Scalar, Scalar> k_ls(const BoundParams<Scalar>& params, Index n) {
  params.validate();
  if (n < 1) throw ConfigError("k_ls: n must be >= 1");
  const Scalar mu = params.mu_value();
  const Scalar c = params.c;
  const Scalar eta = mu * c;
  if (!(eta > Scalar(1)))
    throw RegimeError("k_ls: mu*c must exceed 1 for a decaying initial term");
  const Scalar nc = static_cast<Scalar>(n) + c;
  const Scalar k1_ls = std::sqrt(c) * params.init_dist /
                           std::pow(nc, (eta - Scalar(1)) / Scalar(2)) +
                       ls_noise_growth(params, n) / Scalar(2);
  if (params.delta == Scalar(1)) return {k1_ls, k1_ls};
  const Scalar radicand = eta / Scalar(2) - Scalar(1);
  if (!(radicand > Scalar(0)))
    throw RegimeError("k_ls: the high-probability radical needs mu*c > 2");
  const Scalar k2_ls =
      std::sqrt(c) * std::sqrt(std::log(Scalar(1) / params.delta)) / std::sqrt(radicand) +
      k1_ls;
  return {k1_ls, k2_ls};
}

/// Direct evaluation of sum_{i=1}^n L_i^2 with
///   L_i = gamma_i prod_{j=i}^{n-1} (1 - 2 gamma_{j+1} mu ((1-beta) - beta(2-beta) gamma_{j+1}))^{1/2},
/// via suffix products in O(n). Feeds the raw concentration bound
/// exp(-eps^2 / (2 sum L_i^2)).
template <typename Scalar>
Scalar li_sum(const StepSchedule<Scalar>& schedule, const BoundParams<Scalar>& params,
              Index n) {
  if (n < 1) throw ConfigError("li_sum: n must be >= 1");
  const Scalar mu = params.mu_value();
  const Scalar beta = params.beta;
  Scalar sum = Scalar(0);
  Scalar suffix = Scalar(1);  // prod of factors for steps > i
  for (Index i = n; i >= 1; --i) {
    const Scalar gamma = step_size(schedule, i);
    sum += gamma * gamma * suffix;
    if (i == 1) break;  // the step-1 factor never enters any product
    const Scalar factor =
        Scalar(1) - Scalar(2) * gamma * mu *
                        ((Scalar(1) - beta) - beta * (Scalar(2) - beta) * gamma);
    if (factor < Scalar(0))
      throw RegimeError("li_sum: negative contraction factor at step " +
                        std::to_string(i) + " (step size too large)");
    suffix *= factor;
  }
  return sum;
}

/// Regime-(iii) closed form K_{mu,c,beta} / (n + c) with
/// K = (1-beta)^2 c^2 / (4 ((1-beta)^2 mu c - 1)); valid for
/// (1-beta)^2 mu c in (1.33, 2) under the fixed-point schedule.
template <typename Scalar>
Scalar li_sum_closed_form(const BoundParams<Scalar>& params, Index n) {
  const Scalar eta =
      (Scalar(1) - params.beta) * (Scalar(1) - params.beta) * params.mu_value() * params.c;
  if (!(eta > Scalar(1))) throw RegimeError("li_sum_closed_form: needs (1-beta)^2*mu*c > 1");
  const Scalar k = (Scalar(1) - params.beta) * (Scalar(1) - params.beta) * params.c *
                   params.c / (Scalar(4) * (eta - Scalar(1)));
  return k / (static_cast<Scalar>(n) + params.c);
}

/// Performance-bound pieces. Only the residual term has explicit constants:
///   residual = ||v - Pi v||_T / sqrt(1 - beta^2)
/// with Pi the ||.||_T-orthogonal projection onto the feature span. The
/// estimation and approximation terms hide their constants and are reported
/// as rate annotations only.
template <typename Scalar>
struct PerfBound {
  Scalar residual;
  bool rank_deficient;
  std::string estimation_note;
  std::string approximation_note;
};

template <typename Scalar>
PerfBound<Scalar> perf_bound_terms(const TransitionSet<Scalar>& set, Scalar beta,
                                   const ConstVectorRef<Scalar>& true_values) {
  set.require_nonempty("perf_bound_terms");
  if (!(beta > Scalar(0) && beta < Scalar(1)))
    throw ConfigError("perf_bound_terms: beta must lie in (0, 1)");
  if (true_values.size() != set.size())
    throw ConfigError("perf_bound_terms: true value vector length must equal T");
  const Index t = set.size();
  const Matrix<Scalar> phi = set.features();
  Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>> cod(phi);
  const Vector<Scalar> projected = phi * cod.solve(true_values);
  const Scalar norm_t = (true_values - projected).norm() / std::sqrt(static_cast<Scalar>(t));
  PerfBound<Scalar> out;
  out.residual = norm_t / std::sqrt(Scalar(1) - beta * beta);
  out.rank_deficient = cod.rank() < phi.cols();
  out.estimation_note = "O(sqrt(d / ((1-beta)^2 mu T)))";
  out.approximation_note = "O(sqrt(log(1/delta) / ((1-beta) mu T)))";
  return out;
}

/// Monte-Carlo check of the high-probability envelope at step n.
template <typename Scalar>
struct QuantileReport {
  Index n = 0;
  Scalar envelope = Scalar(0);
  Scalar empirical_fraction = Scalar(0);
  Scalar required_fraction = Scalar(0);
  Index runs = 0;
  bool pass = false;
};

/// Fraction of runs with ||theta_n - theta_hat|| <= K2(n)/sqrt(n+c), compared
/// against 1 - delta minus three binomial standard deviations.
template <typename Scalar>
QuantileReport<Scalar> empirical_quantile_check(
    const std::vector<Trajectory<Scalar>>& trajectories, const BoundParams<Scalar>& params,
    Index n, Scalar delta) {
  if (trajectories.size() < 100)
    throw SampleSizeError("empirical_quantile_check: need at least 100 runs, got " +
                          std::to_string(trajectories.size()));
  BoundParams<Scalar> p = params;
  p.delta = delta;
  QuantileReport<Scalar> report;
  report.n = n;
  report.runs = static_cast<Index>(trajectories.size());
  report.envelope = k2(p, n) / std::sqrt(static_cast<Scalar>(n) + p.c);
  Index under = 0;
  for (const auto& traj : trajectories)
    if (traj.at_step(n) <= report.envelope) ++under;
  report.empirical_fraction =
      static_cast<Scalar>(under) / static_cast<Scalar>(report.runs);
  const Scalar slack = Scalar(3) * std::sqrt(delta * (Scalar(1) - delta) /
                                             static_cast<Scalar>(report.runs));
  report.required_fraction = Scalar(1) - delta - slack;
  report.pass = report.empirical_fraction >= report.required_fraction;
  return report;
}

/// Trajectory CSV `step,norm_diff,gamma,bound_k1,bound_k2`; the bound columns
/// are filled when params are supplied, with the envelope matching the
/// schedule family (sqrt(n+c) denominator, or (n+c)^{alpha/2} for averaging).
template <typename Scalar>
std::string trajectory_csv(const Trajectory<Scalar>& traj,
                           const std::string& header_comment = "",
                           const std::optional<BoundParams<Scalar>>& params = std::nullopt,
                           ScheduleKind kind = ScheduleKind::FixedPoint) {
  std::ostringstream os;
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << (params ? "step,norm_diff,gamma,bound_k1,bound_k2\n" : "step,norm_diff,gamma\n");
  for (const auto& r : traj.records) {
    os << r.step << "," << format_number(static_cast<double>(r.norm_diff)) << ","
       << format_number(static_cast<double>(r.gamma));
    if (params) {
      Scalar env1, env2;
      const Scalar nc = static_cast<Scalar>(r.step) + params->c;
      if (kind == ScheduleKind::IterateAveraging) {
        const auto [a, b] = k_ia(*params, r.step);
        const Scalar denom = std::pow(nc, params->alpha / Scalar(2));
        env1 = a / denom;
        env2 = b / denom;
      } else if (kind == ScheduleKind::LeastSquares) {
        const auto [a, b] = k_ls(*params, r.step);
        env1 = a / std::sqrt(nc);
        env2 = b / std::sqrt(nc);
      } else {
        env1 = k1(*params, r.step) / std::sqrt(nc);
        env2 = k2(*params, r.step) / std::sqrt(nc);
      }
      os << "," << format_number(static_cast<double>(env1)) << ","
         << format_number(static_cast<double>(env2));
    }
    os << "\n";
  }
  return os.str();
}

/// Bound report as a JSON object {params, n, envelope, empirical_fraction, pass}.
template <typename Scalar>
std::string quantile_report_json(const QuantileReport<Scalar>& report,
                                 const BoundParams<Scalar>& params, Scalar delta) {
  std::ostringstream os;
  os << "{\"params\":{"
     << "\"beta\":" << format_number(static_cast<double>(params.beta))
     << ",\"mu\":" << (params.mu ? format_number(static_cast<double>(*params.mu)) : "null")
     << ",\"c\":" << format_number(static_cast<double>(params.c))
     << ",\"r_max\":" << format_number(static_cast<double>(params.r_max))
     << ",\"v_max\":" << format_number(static_cast<double>(params.v_max))
     << ",\"delta\":" << format_number(static_cast<double>(delta))
     << ",\"init_dist\":" << format_number(static_cast<double>(params.init_dist)) << "}"
     << ",\"n\":" << report.n
     << ",\"envelope\":" << format_number(static_cast<double>(report.envelope))
     << ",\"empirical_fraction\":"
     << format_number(static_cast<double>(report.empirical_fraction))
     << ",\"required_fraction\":"
     << format_number(static_cast<double>(report.required_fraction))
     << ",\"runs\":" << report.runs
     << ",\"pass\":" << (report.pass ? "true" : "false") << "}";
  return os.str();
}

}  // namespace fastlstd
