#pragma once

#include <functional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fastlstd/errors.hpp"
#include "fastlstd/lspi.hpp"
#include "fastlstd/rng.hpp"
#include "fastlstd/types.hpp"

namespace fastlstd::traffic {

/// Synthetic grid road network: rows x cols signalized intersections, each
/// with an even number of approach lanes split into two phases (first half
/// NS, second half EW). Vehicles arrive per lane as Bernoulli(arrival_prob)
/// per tick; a green lane discharges up to service_rate vehicles per tick.
/// Queues are capped by rejecting arrivals at queue_cap so the bounded-reward
/// assumption holds.
struct GridConfig {
  Index rows = 2;
  Index cols = 2;
  Index lanes_per_intersection = 4;
  double arrival_prob = 0.25;
  Index service_rate = 2;
  std::set<Index> priority_lanes;  // I_p, 0-based lane indices
  Index queue_low = 6;             // L1
  Index queue_high = 14;           // L2
  Index elapsed_threshold = 130;   // T1
  double u1 = 0.5, w1 = 0.5;       // state-term vs elapsed-term weights
  double u2 = 0.6, w2 = 0.4;       // priority vs non-priority weights
  Index horizon = 1000;            // ticks per episode
  bool normalize_features = true;
  Index queue_cap = 200;

  Index intersections() const { return rows * cols; }
  Index lanes() const { return intersections() * lanes_per_intersection; }
  void validate() const;
};

/// Snapshot: per-lane queue lengths q_i(t) and elapsed red times t_i(t)
/// (zero while green).
struct EnvState {
  Eigen::VectorXi queues;
  Eigen::VectorXi elapsed;

  static EnvState empty(const GridConfig& config) {
    EnvState s;
    s.queues = Eigen::VectorXi::Zero(config.lanes());
    s.elapsed = Eigen::VectorXi::Zero(config.lanes());
    return s;
  }
};

using Sample = EnvTransition<double, EnvState>;
using Policy = QPolicy<double, EnvState>;

/// All feasible sign configurations: one bit per intersection (0 = NS green,
/// 1 = EW green), so |A| = 2^(rows*cols). Enumeration is only supported at
/// desk scale.
std::vector<Index> feasible_actions(const GridConfig& config);

Index action_count(const GridConfig& config);

/// Whether `lane` shows green under `action`.
bool lane_is_green(const GridConfig& config, Index action, Index lane);

/// Single-stage cost on the current state:
///   h(s) = u1 [sum_{i in I_p} u2 q_i + sum_{i not in I_p} w2 q_i]
///        + w1 [sum_{i in I_p} u2 t_i + sum_{i not in I_p} w2 t_i].
double stage_cost(const EnvState& state, const GridConfig& config);

struct StepResult {
  EnvState next;
  double cost = 0;        // evaluated on the pre-transition state
  Index discharged = 0;   // vehicles that reached their destination this tick
  Index arrivals = 0;     // accepted arrivals this tick
};

/// One tick: green lanes discharge min(q_i, service_rate), every lane gains a
/// vehicle w.p. arrival_prob (rejected at queue_cap), elapsed times advance
/// on red and reset on green.
StepResult step(const EnvState& state, Index action, const GridConfig& config,
                RngHandle& rng);

/// Graded per-lane feature in {0.01..0.06} keyed by the queue band
/// (q < L1, L1 <= q < L2, q >= L2), the elapsed band (t < T1, t >= T1) and
/// the lane's signal; optionally scaled by 1/(0.06 sqrt(L)) so ||phi|| <= 1.
Vector<double> features(const EnvState& state, Index action, const GridConfig& config);

/// One row per action; the feature map handle used by policies and LSPI.
Matrix<double> feature_matrix(const EnvState& state, const GridConfig& config);

inline std::function<Matrix<double>(const EnvState&)> feature_map(const GridConfig& config) {
  return [config](const EnvState& s) { return feature_matrix(s, config); };
}

struct UniformRandom {};
using CollectPolicy = std::variant<UniformRandom, Policy>;

/// Simulate `episodes` episodes of `config.horizon` ticks from the empty
/// network, recording every transition with reward = -cost. Deterministic per
/// rng seed.
std::vector<Sample> collect_samples(const GridConfig& config, const CollectPolicy& policy,
                                    Index episodes, RngHandle& rng);

struct TarResult {
  long long tar = 0;      // total arrived road users (discharged vehicles)
  double mean_cost = 0;
};

/// Run the policy closed-loop and accumulate throughput and average cost.
TarResult evaluate_policy_tar(const GridConfig& config, const CollectPolicy& policy,
                              Index episodes, RngHandle& rng);

/// JSONL export/import of env samples:
/// {"q":[...],"t":[...],"action":a,"reward":r,"q_next":[...],"t_next":[...]}.
void save_env_samples(const std::vector<Sample>& samples, const std::string& path);
std::vector<Sample> load_env_samples(const std::string& path);

/// Flat key=value config file, keys named exactly after GridConfig fields.
GridConfig load_config(const std::string& path);
std::string config_to_string(const GridConfig& config);

}  // namespace fastlstd::traffic
