#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "fastlstd/exact.hpp"
#include "fastlstd/sa.hpp"
#include "fastlstd/schedule.hpp"
#include "fastlstd/transitions.hpp"

namespace fastlstd::bench {

/// Synthetic pool with features strictly inside the unit ball.
inline TransitionSet<double> synthetic_pool(Index d, Index t, std::uint64_t seed) {
  RngHandle rng(seed);
  TransitionSet<double> set(d);
  set.reserve(t);
  Vector<double> phi(d), phi_next(d);
  for (Index i = 0; i < t; ++i) {
    for (Index k = 0; k < d; ++k) phi[k] = rng.normal();
    for (Index k = 0; k < d; ++k) phi_next[k] = rng.normal();
    phi /= phi.norm() * rng.uniform(1.0, 1.2);
    phi_next /= phi_next.norm() * rng.uniform(1.0, 1.2);
    set.add(phi, rng.uniform(-1, 1), phi_next);
  }
  return set;
}

struct Row {
  Index d = 0;
  double sa_ns_per_step = 0;
  double sm_ns_per_sample = 0;
  double ratio = 0;
};

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[xs.size() / 2];
}

/// Median per-step cost of the randomized update and per-sample cost of the
/// Sherman-Morrison recursion at dimension d: one warmup repetition, then the
/// median of the rest, on a monotonic clock. Measurement windows are kept in
/// the tens of milliseconds so scheduler noise averages out.
inline Row measure(Index d, Index pool_size, std::uint64_t seed, int reps = 7) {
  using clock = std::chrono::steady_clock;
  const auto set = synthetic_pool(d, pool_size, seed);
  const double beta = 0.9;
  const auto schedule = StepSchedule<double>::fixed_point(beta, 133.0);

  const Index sa_steps =
      std::clamp<Index>((Index(1) << 25) / d, Index(16384), Index(1) << 20);
  std::vector<double> sa_times;
  for (int rep = 0; rep <= reps; ++rep) {
    SaState<double> state(d, schedule, SaMode<double>::plain(), seed + rep);
    const auto start = clock::now();
    for (Index n = 0; n < sa_steps; ++n) flstd_sa_step(state, set, beta);
    const auto stop = clock::now();
    if (rep > 0)
      sa_times.push_back(std::chrono::duration<double, std::nano>(stop - start).count() /
                         static_cast<double>(sa_steps));
  }

  const Index sm_samples = std::clamp<Index>((Index(1) << 26) / (d * d / 64), 8, 1024);
  const auto sm_set = synthetic_pool(d, sm_samples, seed + 17);
  std::vector<double> sm_times;
  for (int rep = 0; rep <= reps; ++rep) {
    const auto start = clock::now();
    volatile double sink = lstd_solve_sherman_morrison(sm_set, beta).sum();
    const auto stop = clock::now();
    (void)sink;
    if (rep > 0)
      sm_times.push_back(std::chrono::duration<double, std::nano>(stop - start).count() /
                         static_cast<double>(sm_samples));
  }

  Row row;
  row.d = d;
  row.sa_ns_per_step = median(sa_times);
  row.sm_ns_per_sample = median(sm_times);
  row.ratio = row.sm_ns_per_sample / row.sa_ns_per_step;
  return row;
}

inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace fastlstd::bench
