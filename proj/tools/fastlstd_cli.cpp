// Command-line harness: data generation, SA runs against batch oracles,
// bound evaluation with optional Monte-Carlo envelope checks, the per-step
// complexity benchmark, LSPI / SA-LSPI comparisons, and the contextual
// bandit experiment. Every output file starts with a comment header holding
// the resolved configuration and seed; re-running with those values
// reproduces the file byte for byte (wall-time columns excepted).
//
// Exit codes: 0 success, 1 numeric/regime failure, 2 usage or I/O failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fastlstd/bandit.hpp"
#include "fastlstd/benchmark.hpp"
#include "fastlstd/bounds.hpp"
#include "fastlstd/exact.hpp"
#include "fastlstd/format.hpp"
#include "fastlstd/lspi.hpp"
#include "fastlstd/sa.hpp"
#include "fastlstd/traffic.hpp"
#include "fastlstd/transitions_io.hpp"

using namespace fastlstd;

namespace {

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << contents;
  if (!out) throw IoError("write failed for " + path);
}

std::string theta_to_string(const Vector<double>& theta) {
  std::ostringstream os;
  os << "[";
  for (Index i = 0; i < theta.size(); ++i) {
    if (i) os << ", ";
    os << format_number(theta[i]);
  }
  os << "]";
  return os.str();
}

traffic::GridConfig grid_from_options(const std::string& grid,
                                      const std::string& config_path) {
  traffic::GridConfig config;
  if (!config_path.empty()) config = traffic::load_config(config_path);
  if (!grid.empty()) {
    const auto x = grid.find('x');
    if (x == std::string::npos)
      throw ConfigError("--grid expects ROWSxCOLS, e.g. 2x2");
    config.rows = std::stol(grid.substr(0, x));
    config.cols = std::stol(grid.substr(x + 1));
  }
  config.validate();
  return config;
}

/// Exactly n env samples: whole episodes, then truncate.
std::vector<traffic::Sample> collect_n(const traffic::GridConfig& config, Index n,
                                       RngHandle& rng) {
  const Index episodes = (n + config.horizon - 1) / config.horizon;
  auto samples = traffic::collect_samples(config, traffic::UniformRandom{}, episodes, rng);
  samples.resize(static_cast<std::size_t>(n));
  return samples;
}

/// Traffic pool for policy evaluation: uniform exploratory collection,
/// featurized, with the successor action frozen at the greedy policy of
/// theta = 0. Returns the equivalent transition pool.
TransitionSet<double> traffic_eval_pool(const traffic::GridConfig& config, Index samples,
                                        std::uint64_t seed) {
  RngHandle rng(seed);
  const auto env_samples = collect_n(config, samples, rng);
  const auto pool = featurize<double, traffic::EnvState>(env_samples,
                                                         traffic::feature_map(config));
  const Vector<double> theta0 = Vector<double>::Zero(config.lanes());
  TransitionSet<double> set(config.lanes());
  set.reserve(static_cast<Index>(pool.size()));
  for (const auto& q : pool) {
    const Index a = greedy_row<double>(ConstVectorRef<double>(theta0), q.phi_next);
    set.add(q.phi, q.reward, q.phi_next.row(a).transpose());
  }
  return set;
}

struct ScheduleOptions {
  std::string kind = "td";
  double beta = 0.9;
  double c = 0.0;  // 0 = derive the default 1.33 (1-beta)^-2
  double alpha = 0.75;

  StepSchedule<double> build() const {
    const double cc = c > 0 ? c : 1.33 / ((1.0 - beta) * (1.0 - beta));
    if (kind == "td") return StepSchedule<double>::fixed_point(beta, cc);
    if (kind == "ia") return StepSchedule<double>::iterate_averaging(beta, cc, alpha);
    if (kind == "ls") return StepSchedule<double>::least_squares(cc);
    throw ConfigError("unknown schedule kind '" + kind + "'");
  }

  double resolved_c() const {
    return c > 0 ? c : 1.33 / ((1.0 - beta) * (1.0 - beta));
  }
};

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  std::string data_path;
  std::string env;
  std::string grid = "2x2";
  std::string grid_config;
  Index samples = 10000;
  std::string mode = "sa";  // exact | sa
  std::string variant;  // plain | reg | avg | reg-avg; default reg on the env, plain on files
  double reg_mu = 1.0;
  Index burn_in = 0;
  ScheduleOptions schedule;
  Index steps = 500;
  std::uint64_t seed = 1;
  Index record_every = 10;
  bool with_bounds = false;
  double delta = 0.05;
  std::string out;
};

SaMode<double> parse_variant(const std::string& variant, double mu, Index burn_in) {
  if (variant == "plain") return SaMode<double>::plain();
  if (variant == "reg") return SaMode<double>::regularized(mu);
  if (variant == "avg") return SaMode<double>::averaging(burn_in);
  if (variant == "reg-avg") return SaMode<double>::regularized_averaging(mu, burn_in);
  throw ConfigError("unknown variant '" + variant + "'");
}

int cmd_evaluate(const EvaluateOptions& opt) {
  std::ostringstream header;
  header << "fastlstd evaluate seed=" << opt.seed << " beta=" << format_number(opt.schedule.beta)
         << " mode=" << opt.mode;

  TransitionSet<double> set;
  std::string variant = opt.variant;
  if (!opt.data_path.empty()) {
    if (variant.empty()) variant = "plain";
    set = load_transitions(opt.data_path);
    header << " data=" << opt.data_path;
  } else if (opt.env == "traffic") {
    // the traffic protocol evaluates against the regularized system by default
    if (variant.empty()) variant = "reg";
    const auto config = grid_from_options(opt.grid, opt.grid_config);
    set = traffic_eval_pool(config, opt.samples, opt.seed);
    header << " env=traffic grid=" << config.rows << "x" << config.cols
           << " samples=" << set.size() << " " << traffic::config_to_string(config);
  } else {
    throw ConfigError("evaluate needs --data FILE or --env traffic");
  }
  const SaMode<double> mode = parse_variant(variant, opt.reg_mu, opt.burn_in);

  header << " variant=" << variant << " schedule=" << opt.schedule.kind
         << " c=" << format_number(opt.schedule.resolved_c())
         << " steps=" << opt.steps << " record_every=" << opt.record_every;

  if (opt.mode == "exact") {
    const Vector<double> theta =
        mode.mu > 0 ? lstd_solve_reg(set, opt.schedule.beta, mode.mu).theta
                    : lstd_solve(set, opt.schedule.beta);
    std::cout << "# " << header.str() << "\n";
    std::cout << "theta_hat = " << theta_to_string(theta) << "\n";
    return 0;
  }
  if (opt.mode != "sa") throw ConfigError("unknown mode '" + opt.mode + "'");

  const auto schedule = opt.schedule.build();
  const auto [state, traj] = run_flstd_sa(set, opt.schedule.beta, schedule, mode, opt.steps,
                                          opt.seed, opt.record_every);

  std::optional<BoundParams<double>> bound_params;
  if (opt.with_bounds) {
    BoundParams<double> params;
    params.beta = opt.schedule.beta;
    // regularized runs contract through the explicit shrinkage term; plain
    // runs through the covariance spectrum
    params.mu = mode.mu > 0 ? mode.mu : min_eigenvalue(set);
    params.c = opt.schedule.resolved_c();
    params.alpha = opt.schedule.alpha;
    params.delta = opt.delta;
    params.r_max = set.max_reward_magnitude();
    params.v_max = state.max_value_excursion();
    params.init_dist = traj.reference.norm();  // theta0 = 0
    const ScheduleKind kind = schedule.kind;
    for (const auto& warning : regime_warnings(params, kind))
      std::cerr << "warning: " << warning << "\n";
    bound_params = params;
  }
  const std::string csv =
      trajectory_csv<double>(traj, header.str(), bound_params, schedule.kind);
  if (opt.out.empty())
    std::cout << csv;
  else
    write_file(opt.out, csv);
  std::cout << "# final norm_diff = "
            << format_number((state.estimate() - traj.reference).norm())
            << " (max |theta'phi| excursion " << format_number(state.max_value_excursion())
            << ")\n";
  if (bound_params)
    std::cout << "# bound inputs: mu = " << format_number(*bound_params->mu)
              << " r_max = " << format_number(bound_params->r_max)
              << " v_max = " << format_number(bound_params->v_max)
              << " init_dist = " << format_number(bound_params->init_dist) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

struct BoundsOptions {
  double beta = 0.9;
  std::string mu = "auto";
  double c = 133.0;
  double alpha = 0.75;
  double r_max = 1.0;
  double v_max = 2.0;
  double delta = 0.05;
  double init_dist = 0.0;
  double sigma = 1.0;
  Index n = 10000;
  std::string variant = "td";  // td | ia | ls
  std::string data_path;
  Index monte_carlo = 0;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_bounds(const BoundsOptions& opt) {
  BoundParams<double> params;
  params.beta = opt.beta;
  params.c = opt.c;
  params.alpha = opt.alpha;
  params.r_max = opt.r_max;
  params.v_max = opt.v_max;
  params.delta = opt.delta;
  params.init_dist = opt.init_dist;
  params.sigma = opt.sigma;

  std::optional<TransitionSet<double>> set;
  if (!opt.data_path.empty()) set = load_transitions(opt.data_path);

  if (opt.mu == "auto") {
    if (!set) throw ConfigError("--mu auto needs --data to resolve the covariance");
    params = resolve_mu(params, *set);
  } else {
    params.mu = std::stod(opt.mu);
  }

  const ScheduleKind kind = opt.variant == "ia"   ? ScheduleKind::IterateAveraging
                            : opt.variant == "ls" ? ScheduleKind::LeastSquares
                                                  : ScheduleKind::FixedPoint;
  for (const auto& warning : regime_warnings(params, kind))
    std::cerr << "warning: " << warning << "\n";

  std::cout << "# fastlstd bounds variant=" << opt.variant
            << " beta=" << format_number(params.beta)
            << " mu=" << format_number(*params.mu) << " c=" << format_number(params.c)
            << " delta=" << format_number(params.delta)
            << " init_dist=" << format_number(params.init_dist) << " n=" << opt.n << "\n";

  const double nc = static_cast<double>(opt.n) + params.c;
  if (opt.variant == "td") {
    const double a = k1(params, opt.n), b = k2(params, opt.n);
    std::cout << "K1(n) = " << format_number(a) << "\nK2(n) = " << format_number(b)
              << "\nenvelope K1/sqrt(n+c) = " << format_number(a / std::sqrt(nc))
              << "\nenvelope K2/sqrt(n+c) = " << format_number(b / std::sqrt(nc)) << "\n";
  } else if (opt.variant == "ia") {
    const auto [a, b] = k_ia(params, opt.n);
    const double denom = std::pow(nc, params.alpha / 2.0);
    std::cout << "K1_IA(n) = " << format_number(a) << "\nK2_IA(n) = " << format_number(b)
              << "\nenvelope K1_IA/(n+c)^(alpha/2) = " << format_number(a / denom)
              << "\nenvelope K2_IA/(n+c)^(alpha/2) = " << format_number(b / denom) << "\n";
  } else if (opt.variant == "ls") {
    const auto [a, b] = k_ls(params, opt.n);
    std::cout << "K1_LS(n) = " << format_number(a) << "\nK2_LS(n) = " << format_number(b)
              << "\nenvelope K1_LS/sqrt(n+c) = " << format_number(a / std::sqrt(nc))
              << "\nenvelope K2_LS/sqrt(n+c) = " << format_number(b / std::sqrt(nc))
              << "\n";
  } else {
    throw ConfigError("unknown variant '" + opt.variant + "'");
  }

  if (opt.monte_carlo > 0) {
    if (!set) throw ConfigError("--monte-carlo needs --data");
    const auto schedule = StepSchedule<double>::fixed_point(params.beta, params.c);
    const auto reference = lstd_solve(*set, params.beta);
    BoundParams<double> mc_params = params;
    mc_params.init_dist = reference.norm();  // theta0 = 0
    mc_params.r_max = set->max_reward_magnitude();
    std::vector<Trajectory<double>> trajectories;
    trajectories.reserve(static_cast<std::size_t>(opt.monte_carlo));
    double v_max = 0.0;
    for (Index k = 0; k < opt.monte_carlo; ++k) {
      auto [state, traj] =
          run_flstd_sa(*set, params.beta, schedule, SaMode<double>::plain(), opt.n,
                       opt.seed + static_cast<std::uint64_t>(k), opt.n,
                       std::optional<Vector<double>>(reference));
      v_max = std::max(v_max, state.max_value_excursion());
      trajectories.push_back(std::move(traj));
    }
    mc_params.v_max = v_max;
    const auto report =
        empirical_quantile_check(trajectories, mc_params, opt.n, params.delta);
    const auto json = quantile_report_json(report, mc_params, params.delta);
    std::cout << (report.pass ? "pass" : "fail") << " empirical_fraction="
              << format_number(report.empirical_fraction) << " envelope="
              << format_number(report.envelope) << "\n";
    if (!opt.out.empty()) write_file(opt.out, json + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOptions {
  std::vector<Index> dims{256, 512, 1024, 2048};
  std::uint64_t seed = 1;
  Index pool_size = 256;
  std::string out;
};

int cmd_bench(const BenchOptions& opt) {
  std::ostringstream header;
  header << "fastlstd bench seed=" << opt.seed << " pool_size=" << opt.pool_size
         << " dims=";
  for (std::size_t i = 0; i < opt.dims.size(); ++i)
    header << (i ? "," : "") << opt.dims[i];

  std::vector<bench::Row> rows;
  for (Index d : opt.dims) rows.push_back(bench::measure(d, opt.pool_size, opt.seed));

  std::ostringstream csv;
  csv << "# " << header.str() << "\n";
  csv << "d,sa_ns_per_step,sm_ns_per_sample,ratio\n";
  for (const auto& r : rows)
    csv << r.d << "," << format_number(r.sa_ns_per_step) << ","
        << format_number(r.sm_ns_per_sample) << "," << format_number(r.ratio) << "\n";
  if (opt.out.empty())
    std::cout << csv.str();
  else
    write_file(opt.out, csv.str());

  if (rows.size() >= 2) {
    std::vector<double> ds, sa, sm;
    for (const auto& r : rows) {
      ds.push_back(static_cast<double>(r.d));
      sa.push_back(r.sa_ns_per_step);
      sm.push_back(r.sm_ns_per_sample);
    }
    std::cout << "sa_slope = " << format_number(bench::loglog_slope(ds, sa))
              << "\nsm_slope = " << format_number(bench::loglog_slope(ds, sm)) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// lspi
// ---------------------------------------------------------------------------

struct LspiOptions {
  std::string grid = "2x2";
  std::string grid_config;
  Index samples = 10000;
  double beta = 0.9;
  double epsilon = 0.1;
  Index tau = 500;
  double c = 0.0;
  double reg_mu = 1.0;
  std::string mode = "both";  // exact | sa | both
  Index seeds = 1;
  std::uint64_t seed = 1;
  Index max_iters = 50;
  Index eval_episodes = 2;
  std::string out_prefix = "lspi";
};

int cmd_lspi(const LspiOptions& opt) {
  const auto config = grid_from_options(opt.grid, opt.grid_config);
  const bool run_exact = opt.mode == "exact" || opt.mode == "both";
  const bool run_sa = opt.mode == "sa" || opt.mode == "both";
  if (!run_exact && !run_sa) throw ConfigError("unknown mode '" + opt.mode + "'");
  const double c = opt.c > 0 ? opt.c : 1.33 / ((1.0 - opt.beta) * (1.0 - opt.beta));

  std::ostringstream header;
  header << "fastlstd lspi seed=" << opt.seed << " seeds=" << opt.seeds
         << " beta=" << format_number(opt.beta) << " epsilon=" << format_number(opt.epsilon)
         << " tau=" << opt.tau << " c=" << format_number(c) << " mode=" << opt.mode
         << " samples=" << opt.samples << " eval_episodes=" << opt.eval_episodes << " "
         << traffic::config_to_string(config);

  std::ostringstream tar_csv, wall_csv;
  tar_csv << "# " << header.str() << "\n"
          << "seed,tar_exact,mean_cost_exact,tar_sa,mean_cost_sa\n";
  wall_csv << "# " << header.str() << "\n"
           << "seed,wall_exact_ms,wall_sa_ms,iters_exact,iters_sa\n";

  bool wrote_reports = false;
  for (Index k = 0; k < opt.seeds; ++k) {
    const std::uint64_t seed_k = opt.seed + static_cast<std::uint64_t>(k) * 7919;
    RngHandle collect_rng(seed_k);
    const auto env_samples = collect_n(config, opt.samples, collect_rng);
    const auto pool =
        featurize<double, traffic::EnvState>(env_samples, traffic::feature_map(config));

    auto evaluate_tar = [&](const Vector<double>& theta, std::uint64_t eval_seed) {
      traffic::Policy policy;
      policy.theta = theta;
      policy.feature_map = traffic::feature_map(config);
      policy.action_count = traffic::action_count(config);
      RngHandle eval_rng(eval_seed);
      return traffic::evaluate_policy_tar(config, policy, opt.eval_episodes, eval_rng);
    };

    double wall_exact = 0, wall_sa = 0;
    Index iters_exact = 0, iters_sa = 0;
    std::ostringstream tar_line, wall_line;
    tar_line << seed_k;
    wall_line << seed_k;

    if (run_exact) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto report = lspi_run<double>(pool, opt.beta, opt.epsilon,
                                           ExactEval<double>{opt.reg_mu}, opt.max_iters);
      wall_exact =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
      iters_exact = static_cast<Index>(report.iterations.size());
      const auto tar = evaluate_tar(report.final_theta, seed_k + 1);
      tar_line << "," << tar.tar << "," << format_number(tar.mean_cost);
      if (!wrote_reports) {
        write_file(opt.out_prefix + "_report_exact.json", lspi_report_json(report) + "\n");
        write_file(opt.out_prefix + "_iters_exact.csv",
                   lspi_report_csv(report, header.str()));
      }
    } else {
      tar_line << ",,";
    }

    if (run_sa) {
      SaEval<double> eval;
      eval.tau = opt.tau;
      eval.schedule = StepSchedule<double>::fixed_point(opt.beta, c);
      eval.seed = seed_k + 101;
      eval.reg_mu = opt.reg_mu;
      const auto t0 = std::chrono::steady_clock::now();
      const auto report = lspi_run<double>(pool, opt.beta, opt.epsilon,
                                           LspiEval<double>(eval), opt.max_iters);
      wall_sa =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
      iters_sa = static_cast<Index>(report.iterations.size());
      const auto tar = evaluate_tar(report.final_theta, seed_k + 1);
      tar_line << "," << tar.tar << "," << format_number(tar.mean_cost);
      if (!wrote_reports) {
        write_file(opt.out_prefix + "_report_sa.json", lspi_report_json(report) + "\n");
        write_file(opt.out_prefix + "_iters_sa.csv", lspi_report_csv(report, header.str()));
      }
    } else {
      tar_line << ",,";
    }
    wrote_reports = true;

    wall_line << "," << format_number(wall_exact) << "," << format_number(wall_sa) << ","
              << iters_exact << "," << iters_sa;
    tar_csv << tar_line.str() << "\n";
    wall_csv << wall_line.str() << "\n";
  }

  write_file(opt.out_prefix + "_tar.csv", tar_csv.str());
  write_file(opt.out_prefix + "_walltime.csv", wall_csv.str());
  std::cout << "# " << header.str() << "\n"
            << "wrote " << opt.out_prefix << "_tar.csv and " << opt.out_prefix
            << "_walltime.csv\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bandit
// ---------------------------------------------------------------------------

struct BanditOptions {
  Index dim = 5;
  Index arms = 10;
  Index rounds = 10000;
  Index tau = 20;
  double mu = 1.0;
  double ucb_alpha = 0.1;
  double kappa = 0.1;
  double noise = 0.1;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_bandit(const BanditOptions& opt) {
  bandit::BanditConfig config;
  config.dim = opt.dim;
  config.arms_per_round = opt.arms;
  config.rounds = opt.rounds;
  config.tau = opt.tau;
  config.mu = opt.mu;
  config.ucb_alpha = opt.ucb_alpha;
  config.kappa = opt.kappa;
  config.noise_bound = opt.noise;

  std::ostringstream header;
  header << "fastlstd bandit seed=" << opt.seed << " dim=" << opt.dim
         << " arms=" << opt.arms << " rounds=" << opt.rounds << " tau=" << opt.tau
         << " mu=" << format_number(opt.mu) << " ucb_alpha=" << format_number(opt.ucb_alpha)
         << " kappa=" << format_number(opt.kappa) << " noise=" << format_number(opt.noise);

  const auto history = bandit::flinucb_sa_run(config, opt.seed);
  const auto csv = bandit::history_csv(history, header.str());
  if (opt.out.empty())
    std::cout << csv;
  else
    write_file(opt.out, csv);
  std::cout << "# cum_regret = " << format_number(history.rounds.back().cum_regret)
            << " final norm_diff = " << format_number(history.rounds.back().norm_diff)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// traffic-collect
// ---------------------------------------------------------------------------

struct CollectOptions {
  std::string grid = "2x2";
  std::string grid_config;
  Index samples = 10000;
  std::uint64_t seed = 1;
  std::string out = "samples.jsonl";
};

int cmd_traffic_collect(const CollectOptions& opt) {
  const auto config = grid_from_options(opt.grid, opt.grid_config);
  RngHandle rng(opt.seed);
  const auto samples = collect_n(config, opt.samples, rng);
  traffic::save_env_samples(samples, opt.out);
  std::cout << "# fastlstd traffic-collect seed=" << opt.seed << " samples=" << samples.size()
            << " " << traffic::config_to_string(config) << "\n"
            << "wrote " << opt.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ls
// ---------------------------------------------------------------------------

struct LsOptions {
  Index dim = 3;
  Index t = 30;
  double noise = 0.5;
  double c = 0.0;  // 0 = choose mu c = 1.6 from the data
  Index steps = 20000;
  std::uint64_t seed = 1;
  Index record_every = 100;
  std::string out;
};

int cmd_ls(const LsOptions& opt) {
  RngHandle rng(opt.seed);
  RowMatrix<double> xs(opt.t, opt.dim);
  Vector<double> ys(opt.t);
  Vector<double> theta_star(opt.dim);
  for (Index k = 0; k < opt.dim; ++k) theta_star[k] = rng.normal();
  theta_star.normalize();
  for (Index i = 0; i < opt.t; ++i) {
    Vector<double> x(opt.dim);
    for (Index k = 0; k < opt.dim; ++k) x[k] = rng.normal();
    x *= rng.uniform(0.9, 1.0) / x.norm();
    xs.row(i) = x.transpose();
    ys[i] = x.dot(theta_star) + rng.uniform(-opt.noise, opt.noise);
  }

  const Matrix<double> dense_x = xs;
  const auto theta_hat = ls_solve(dense_x, ConstVectorRef<double>(ys));
  Eigen::SelfAdjointEigenSolver<Matrix<double>> eig(
      dense_x.transpose() * dense_x / static_cast<double>(opt.t), Eigen::EigenvaluesOnly);
  const double mu = std::max(0.0, eig.eigenvalues()(0));
  const double c = opt.c > 0 ? opt.c : 1.6 / mu;
  const auto schedule = StepSchedule<double>::least_squares(c);

  std::ostringstream header;
  header << "fastlstd ls seed=" << opt.seed << " d=" << opt.dim << " t=" << opt.t
         << " noise=" << format_number(opt.noise) << " mu=" << format_number(mu)
         << " c=" << format_number(c) << " steps=" << opt.steps
         << " record_every=" << opt.record_every;

  SaState<double> state(opt.dim, schedule, SaMode<double>::plain(), opt.seed);
  Trajectory<double> traj;
  traj.reference = theta_hat;
  for (Index n = 1; n <= opt.steps; ++n) {
    fls_sa_step(state, xs, ConstVectorRef<double>(ys));
    if (n % opt.record_every == 0)
      traj.records.push_back({n, (state.theta() - theta_hat).norm(), step_size(schedule, n)});
  }

  const auto csv = trajectory_csv<double>(traj, header.str());
  if (opt.out.empty())
    std::cout << csv;
  else
    write_file(opt.out, csv);
  std::cout << "# ls_solve theta_hat = " << theta_to_string(theta_hat)
            << "\n# final norm_diff = "
            << format_number((state.theta() - theta_hat).norm()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fastlstd: randomized-sample solvers for batch TD and least squares"};
  app.require_subcommand(1);
  app.set_config("--config-file");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Run exact LSTD/LSTDQ or the randomized iteration on a sample pool");
  evaluate->add_option("--data", ev.data_path, "transition JSONL file");
  evaluate->add_option("--env", ev.env, "synthetic environment (traffic)");
  evaluate->add_option("--grid", ev.grid, "grid size ROWSxCOLS")->capture_default_str();
  evaluate->add_option("--grid-config", ev.grid_config, "grid key=value config file");
  evaluate->add_option("--samples", ev.samples, "pool size for env collection")
      ->capture_default_str();
  evaluate->add_option("--beta", ev.schedule.beta, "discount factor")->capture_default_str();
  evaluate->add_option("--mode", ev.mode, "exact | sa")->capture_default_str();
  evaluate->add_option("--variant", ev.variant,
                       "plain | reg | avg | reg-avg (default: reg on --env, plain on --data)");
  evaluate->add_option("--mu", ev.reg_mu, "regularizer for reg variants")
      ->capture_default_str();
  evaluate->add_option("--burn-in", ev.burn_in, "averaging burn-in")->capture_default_str();
  evaluate->add_option("--schedule", ev.schedule.kind, "td | ia | ls")
      ->capture_default_str();
  evaluate->add_option("--c", ev.schedule.c, "step constant c (0 = 1.33 (1-beta)^-2)");
  evaluate->add_option("--alpha", ev.schedule.alpha, "averaging exponent")
      ->capture_default_str();
  evaluate->add_option("--steps", ev.steps, "SA steps")->capture_default_str();
  evaluate->add_option("--seed", ev.seed, "RNG seed")->capture_default_str();
  evaluate->add_option("--record-every", ev.record_every, "trajectory stride")
      ->capture_default_str();
  evaluate->add_flag("--with-bounds", ev.with_bounds,
                     "fill bound_k1/bound_k2 envelope columns (mu, R_max, V_max "
                     "resolved from the pool and the run)");
  evaluate->add_option("--delta", ev.delta, "high-probability level for bound_k2")
      ->capture_default_str();
  evaluate->add_option("--out", ev.out, "output CSV path (stdout if omitted)");

  BoundsOptions bo;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the closed-form error bounds");
  bounds->add_option("--beta", bo.beta)->capture_default_str();
  bounds->add_option("--mu", bo.mu, "number or 'auto' (needs --data)")
      ->capture_default_str();
  bounds->add_option("--c", bo.c)->capture_default_str();
  bounds->add_option("--alpha", bo.alpha)->capture_default_str();
  bounds->add_option("--rmax", bo.r_max)->capture_default_str();
  bounds->add_option("--vmax", bo.v_max)->capture_default_str();
  bounds->add_option("--delta", bo.delta)->capture_default_str();
  bounds->add_option("--init-dist", bo.init_dist)->capture_default_str();
  bounds->add_option("--sigma", bo.sigma)->capture_default_str();
  bounds->add_option("--n", bo.n, "step count the bound is evaluated at")
      ->capture_default_str();
  bounds->add_option("--variant", bo.variant, "td | ia | ls")->capture_default_str();
  bounds->add_option("--data", bo.data_path, "transition JSONL (for auto mu / Monte-Carlo)");
  bounds->add_option("--monte-carlo", bo.monte_carlo,
                     "run N seeds and check the envelope empirically");
  bounds->add_option("--seed", bo.seed)->capture_default_str();
  bounds->add_option("--out", bo.out, "write the JSON report here");

  BenchOptions be;
  auto* bench = app.add_subcommand(
      "bench", "Per-step cost of the randomized iteration vs Sherman-Morrison");
  bench->add_option("--dims", be.dims, "dimensions to sweep")->delimiter(',');
  bench->add_option("--pool-size", be.pool_size)->capture_default_str();
  bench->add_option("--seed", be.seed)->capture_default_str();
  bench->add_option("--out", be.out, "output CSV path (stdout if omitted)");

  LspiOptions lo;
  auto* lspi = app.add_subcommand("lspi", "Policy iteration on the traffic grid");
  lspi->add_option("--grid", lo.grid)->capture_default_str();
  lspi->add_option("--grid-config", lo.grid_config, "grid key=value config file");
  lspi->add_option("--samples", lo.samples)->capture_default_str();
  lspi->add_option("--beta", lo.beta)->capture_default_str();
  lspi->add_option("--epsilon", lo.epsilon)->capture_default_str();
  lspi->add_option("--tau", lo.tau)->capture_default_str();
  lspi->add_option("--c", lo.c, "step constant c (0 = 1.33 (1-beta)^-2)");
  lspi->add_option("--mu", lo.reg_mu, "regularizer")->capture_default_str();
  lspi->add_option("--mode", lo.mode, "exact | sa | both")->capture_default_str();
  lspi->add_option("--seeds", lo.seeds, "number of seeds")->capture_default_str();
  lspi->add_option("--seed", lo.seed)->capture_default_str();
  lspi->add_option("--max-iters", lo.max_iters)->capture_default_str();
  lspi->add_option("--eval-episodes", lo.eval_episodes)->capture_default_str();
  lspi->add_option("--out-prefix", lo.out_prefix)->capture_default_str();

  BanditOptions ba;
  auto* bandit_cmd = app.add_subcommand("bandit", "Contextual bandit with the SA inner loop");
  bandit_cmd->add_option("--dim", ba.dim)->capture_default_str();
  bandit_cmd->add_option("--arms", ba.arms)->capture_default_str();
  bandit_cmd->add_option("--rounds", ba.rounds)->capture_default_str();
  bandit_cmd->add_option("--tau", ba.tau)->capture_default_str();
  bandit_cmd->add_option("--mu", ba.mu)->capture_default_str();
  bandit_cmd->add_option("--ucb-alpha", ba.ucb_alpha)->capture_default_str();
  bandit_cmd->add_option("--kappa", ba.kappa)->capture_default_str();
  bandit_cmd->add_option("--noise", ba.noise)->capture_default_str();
  bandit_cmd->add_option("--seed", ba.seed)->capture_default_str();
  bandit_cmd->add_option("--out", ba.out, "output CSV path (stdout if omitted)");

  CollectOptions co;
  auto* collect = app.add_subcommand("traffic-collect",
                                     "Collect env samples under the uniform policy");
  collect->add_option("--grid", co.grid)->capture_default_str();
  collect->add_option("--grid-config", co.grid_config, "grid key=value config file");
  collect->add_option("--samples", co.samples)->capture_default_str();
  collect->add_option("--seed", co.seed)->capture_default_str();
  collect->add_option("--out", co.out)->capture_default_str();

  LsOptions ls;
  auto* ls_cmd = app.add_subcommand("ls", "Randomized least squares vs the batch solution");
  ls_cmd->add_option("--d", ls.dim)->capture_default_str();
  ls_cmd->add_option("--t", ls.t)->capture_default_str();
  ls_cmd->add_option("--noise", ls.noise)->capture_default_str();
  ls_cmd->add_option("--c", ls.c, "step constant c (0 = set mu c = 1.6)");
  ls_cmd->add_option("--steps", ls.steps)->capture_default_str();
  ls_cmd->add_option("--seed", ls.seed)->capture_default_str();
  ls_cmd->add_option("--record-every", ls.record_every)->capture_default_str();
  ls_cmd->add_option("--out", ls.out, "output CSV path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*evaluate) return cmd_evaluate(ev);
    if (*bounds) return cmd_bounds(bo);
    if (*bench) return cmd_bench(be);
    if (*lspi) return cmd_lspi(lo);
    if (*bandit_cmd) return cmd_bandit(ba);
    if (*collect) return cmd_traffic_collect(co);
    if (*ls_cmd) return cmd_ls(ls);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
