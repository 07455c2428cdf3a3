#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fastlstd/types.hpp"

namespace fastlstd::bandit {

/// Synthetic linear contextual bandit. Arm contexts are drawn uniformly from
/// the unit ball and refreshed every round; rewards are theta_star' x plus
/// noise uniform on [-noise_bound, noise_bound]. theta_star may be left empty
/// to derive a hidden unit vector from the run seed.
struct BanditConfig {
  Index dim = 5;
  Index arms_per_round = 10;
  Vector<double> theta_star;   // hidden parameter; empty = generate from seed
  double noise_bound = 0.1;
  double ucb_alpha = 0.1;      // UCB scale
  double kappa = 0.1;          // bonus constant
  double mu = 1.0;             // inner-loop regularizer
  Index tau = 20;              // inner SA steps per round
  Index rounds = 10000;
  Matrix<double> fixed_arms;   // arms x dim; non-empty pins the arm set every round

  void validate() const;
};

struct BanditRound {
  Index round = 0;
  Index arm = 0;
  double reward = 0;
  double regret = 0;       // best-arm value minus chosen-arm value under theta_star
  double cum_regret = 0;
  double norm_diff = 0;    // ||theta_tau - (Abar + mu I)^{-1} bbar|| over past data
};

struct BanditHistory {
  std::vector<BanditRound> rounds;
  Vector<double> final_theta;
  Vector<double> theta_star;
};

/// The SA-inside-a-decision-loop algorithm: each round runs tau regularized
/// randomized least-squares updates over all past (x, y) pairs and picks
/// argmax theta' x + ucb_alpha * kappa / sqrt(n) (lowest index on ties).
///
/// The exploration bonus is arm-independent by construction, so the arm
/// choice coincides with the plain greedy argmax; the degeneracy is kept as
/// written rather than repaired. The inner step index continues across
/// rounds (gamma_k = 1/k globally): with mu = 1, restarting at gamma_1 = 1
/// would erase the warm start every round.
BanditHistory flinucb_sa_run(const BanditConfig& config, std::uint64_t seed);

/// CSV export: `round,arm,reward,regret,cum_regret,norm_diff`.
std::string history_csv(const BanditHistory& history,
                        const std::string& header_comment = "");

}  // namespace fastlstd::bandit
