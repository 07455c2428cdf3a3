#include "fastlstd/bandit.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "fastlstd/errors.hpp"
#include "fastlstd/format.hpp"
#include "fastlstd/rng.hpp"

namespace fastlstd::bandit {

void BanditConfig::validate() const {
  if (dim < 1) throw ConfigError("BanditConfig: dim must be >= 1");
  if (arms_per_round < 1) throw ConfigError("BanditConfig: need at least one arm per round");
  if (theta_star.size() != 0 && theta_star.size() != dim)
    throw ConfigError("BanditConfig: theta_star dimension mismatch");
  if (noise_bound < 0) throw ConfigError("BanditConfig: noise_bound must be >= 0");
  if (!(mu > 0)) throw ConfigError("BanditConfig: mu must be positive");
  if (!(ucb_alpha > 0) || !(kappa > 0))
    throw ConfigError("BanditConfig: UCB constants must be positive");
  if (tau < 1) throw ConfigError("BanditConfig: tau must be >= 1");
  if (rounds < 1) throw ConfigError("BanditConfig: rounds must be >= 1");
  if (fixed_arms.size() != 0 &&
      (fixed_arms.rows() != arms_per_round || fixed_arms.cols() != dim))
    throw ConfigError("BanditConfig: fixed_arms must be arms_per_round x dim");
}

BanditHistory flinucb_sa_run(const BanditConfig& config, std::uint64_t seed) {
  config.validate();
  RngHandle rng(seed);

  Vector<double> theta_star = config.theta_star;
  if (theta_star.size() == 0) {
    theta_star.resize(config.dim);
    for (Index i = 0; i < config.dim; ++i) theta_star[i] = rng.normal();
    theta_star.normalize();
  }

  const Index d = config.dim;
  RowMatrix<double> xs(config.rounds, d);
  Vector<double> ys(config.rounds);
  Index history_size = 0;

  Vector<double> theta = Vector<double>::Zero(d);
  Matrix<double> sum_xx = Matrix<double>::Zero(d, d);
  Vector<double> sum_xy = Vector<double>::Zero(d);

  BanditHistory out;
  out.rounds.reserve(static_cast<std::size_t>(config.rounds));
  out.theta_star = theta_star;

  double cum_regret = 0;
  std::uint64_t global_step = 0;  // inner step index continues across rounds
  Matrix<double> arms(config.arms_per_round, d);

  for (Index n = 1; n <= config.rounds; ++n) {
    if (config.fixed_arms.size() != 0)
      arms = config.fixed_arms;
    else
      for (Index a = 0; a < config.arms_per_round; ++a)
        arms.row(a) = rng.unit_ball(d).transpose();

    // Inner loop: tau regularized fLS-SA steps over the past pairs.
    if (history_size > 0) {
      for (Index k = 0; k < config.tau; ++k) {
        ++global_step;
        const double gamma = 1.0 / static_cast<double>(global_step);
        const Index i = rng.draw_index(history_size) - 1;
        const double residual = ys[i] - theta.dot(xs.row(i));
        theta *= (1.0 - gamma * config.mu);
        theta += gamma * residual * xs.row(i).transpose();
      }
    }

    // Arm scores; the bonus is shared by every arm.
    const double bonus =
        config.ucb_alpha * config.kappa / std::sqrt(static_cast<double>(n));
    Index chosen = 0;
    double best_score = arms.row(0).dot(theta) + bonus;
    for (Index a = 1; a < config.arms_per_round; ++a) {
      const double score = arms.row(a).dot(theta) + bonus;
      if (score > best_score) {
        chosen = a;
        best_score = score;
      }
    }

    const double noise = config.noise_bound > 0
                             ? rng.uniform(-config.noise_bound, config.noise_bound)
                             : 0.0;
    const double reward = arms.row(chosen).dot(theta_star) + noise;

    double best_value = arms.row(0).dot(theta_star);
    for (Index a = 1; a < config.arms_per_round; ++a)
      best_value = std::max(best_value, arms.row(a).dot(theta_star));
    const double regret = best_value - arms.row(chosen).dot(theta_star);
    cum_regret += regret;

    // Exact regularized target over the data the inner loop saw.
    double norm_diff;
    if (history_size > 0) {
      const double t = static_cast<double>(history_size);
      Matrix<double> reg = sum_xx / t;
      reg.diagonal().array() += config.mu;
      norm_diff = (theta - reg.ldlt().solve(sum_xy / t)).norm();
    } else {
      norm_diff = theta.norm();
    }

    xs.row(history_size) = arms.row(chosen);
    ys[history_size] = reward;
    sum_xx.noalias() += arms.row(chosen).transpose() * arms.row(chosen);
    sum_xy.noalias() += reward * arms.row(chosen).transpose();
    ++history_size;

    out.rounds.push_back({n, chosen, reward, regret, cum_regret, norm_diff});
  }
  out.final_theta = theta;
  return out;
}

std::string history_csv(const BanditHistory& history, const std::string& header_comment) {
  std::ostringstream os;
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "round,arm,reward,regret,cum_regret,norm_diff\n";
  for (const auto& r : history.rounds)
    os << r.round << "," << r.arm << "," << format_number(r.reward) << ","
       << format_number(r.regret) << "," << format_number(r.cum_regret) << ","
       << format_number(r.norm_diff) << "\n";
  return os.str();
}

}  // namespace fastlstd::bandit
