#include "fastlstd/traffic.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fastlstd/format.hpp"

namespace fastlstd::traffic {

using json = nlohmann::json;

void GridConfig::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("GridConfig: rows and cols must be >= 1");
  if (lanes_per_intersection < 2 || lanes_per_intersection % 2 != 0)
    throw ConfigError("GridConfig: lanes_per_intersection must be even and >= 2");
  if (arrival_prob < 0.0 || arrival_prob > 1.0)
    throw ConfigError("GridConfig: arrival_prob must lie in [0, 1]");
  if (service_rate < 1) throw ConfigError("GridConfig: service_rate must be >= 1");
  if (queue_low >= queue_high) throw ConfigError("GridConfig: L1 must be < L2");
  if (elapsed_threshold <= 0) throw ConfigError("GridConfig: T1 must be positive");
  if (std::abs(u1 + w1 - 1.0) > 1e-12 || std::abs(u2 + w2 - 1.0) > 1e-12)
    throw ConfigError("GridConfig: cost weights must satisfy u1+w1 = u2+w2 = 1");
  if (!(u2 > w2)) throw ConfigError("GridConfig: priority weight must satisfy u2 > w2");
  if (u1 < 0 || w1 < 0 || u2 < 0 || w2 < 0)
    throw ConfigError("GridConfig: cost weights must be non-negative");
  if (horizon < 1) throw ConfigError("GridConfig: horizon must be >= 1");
  if (queue_cap < 1) throw ConfigError("GridConfig: queue_cap must be >= 1");
  for (Index lane : priority_lanes)
    if (lane < 0 || lane >= lanes())
      throw ConfigError("GridConfig: priority lane index out of range");
}

Index action_count(const GridConfig& config) {
  const Index n = config.intersections();
  if (n > 8)
    throw ScaleError("feasible_actions: " + std::to_string(n) +
                     " intersections exceed full enumeration (2^8 actions); "
                     "use per-intersection factored control");
  return Index(1) << n;
}

std::vector<Index> feasible_actions(const GridConfig& config) {
  config.validate();
  const Index count = action_count(config);
  std::vector<Index> actions(static_cast<std::size_t>(count));
  for (Index a = 0; a < count; ++a) actions[static_cast<std::size_t>(a)] = a;
  return actions;
}

bool lane_is_green(const GridConfig& config, Index action, Index lane) {
  const Index intersection = lane / config.lanes_per_intersection;
  const Index local = lane % config.lanes_per_intersection;
  const bool ew_green = ((action >> intersection) & 1) != 0;
  const bool lane_is_ns = local < config.lanes_per_intersection / 2;
  return lane_is_ns != ew_green;
}

double stage_cost(const EnvState& state, const GridConfig& config) {
  double queue_priority = 0, queue_other = 0, elapsed_priority = 0, elapsed_other = 0;
  for (Index i = 0; i < config.lanes(); ++i) {
    const bool priority = config.priority_lanes.count(i) > 0;
    (priority ? queue_priority : queue_other) += state.queues[i];
    (priority ? elapsed_priority : elapsed_other) += state.elapsed[i];
  }
  return config.u1 * (config.u2 * queue_priority + config.w2 * queue_other) +
         config.w1 * (config.u2 * elapsed_priority + config.w2 * elapsed_other);
}

StepResult step(const EnvState& state, Index action, const GridConfig& config,
                RngHandle& rng) {
  if (action < 0 || action >= action_count(config))
    throw ConfigError("step: infeasible action " + std::to_string(action));
  StepResult result;
  result.cost = stage_cost(state, config);
  result.next.queues = state.queues;
  result.next.elapsed = state.elapsed;
  for (Index i = 0; i < config.lanes(); ++i) {
    const bool green = lane_is_green(config, action, i);
    if (green) {
      const Index served = std::min<Index>(result.next.queues[i], config.service_rate);
      result.next.queues[i] -= static_cast<int>(served);
      result.discharged += served;
      result.next.elapsed[i] = 0;
    } else {
      result.next.elapsed[i] += 1;
    }
    if (rng.uniform01() < config.arrival_prob &&
        result.next.queues[i] < static_cast<int>(config.queue_cap)) {
      result.next.queues[i] += 1;
      result.arrivals += 1;
    }
  }
  return result;
}

Vector<double> features(const EnvState& state, Index action, const GridConfig& config) {
  const Index lanes = config.lanes();
  if (state.queues.size() != lanes || state.elapsed.size() != lanes)
    throw ConfigError("features: state size does not match the grid");
  // Graded (queue band x elapsed band) values; GREEN mirrors RED so that the
  // most loaded red lane and the least loaded green lane score highest.
  static constexpr double kRed[6] = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06};
  static constexpr double kGreen[6] = {0.06, 0.05, 0.04, 0.03, 0.02, 0.01};
  Vector<double> phi(lanes);
  for (Index i = 0; i < lanes; ++i) {
    const int q = state.queues[i];
    const int t = state.elapsed[i];
    const int queue_band = q < config.queue_low ? 0 : (q < config.queue_high ? 1 : 2);
    const int cell = 2 * queue_band + (t >= config.elapsed_threshold ? 1 : 0);
    phi[i] = lane_is_green(config, action, i) ? kGreen[cell] : kRed[cell];
  }
  if (config.normalize_features)
    phi /= 0.06 * std::sqrt(static_cast<double>(lanes));
  return phi;
}

Matrix<double> feature_matrix(const EnvState& state, const GridConfig& config) {
  const Index actions = action_count(config);
  Matrix<double> rows(actions, config.lanes());
  for (Index a = 0; a < actions; ++a) rows.row(a) = features(state, a, config).transpose();
  return rows;
}

namespace {

Index pick_action(const CollectPolicy& policy, const EnvState& state,
                  const GridConfig& config, RngHandle& rng) {
  if (std::holds_alternative<UniformRandom>(policy))
    return rng.draw_index(action_count(config)) - 1;
  return greedy_action(std::get<Policy>(policy), state);
}

}  // namespace

std::vector<Sample> collect_samples(const GridConfig& config, const CollectPolicy& policy,
                                    Index episodes, RngHandle& rng) {
  config.validate();
  if (episodes < 1) throw ConfigError("collect_samples: episodes must be >= 1");
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(episodes * config.horizon));
  for (Index e = 0; e < episodes; ++e) {
    EnvState state = EnvState::empty(config);
    for (Index tick = 0; tick < config.horizon; ++tick) {
      const Index action = pick_action(policy, state, config, rng);
      StepResult result = step(state, action, config, rng);
      const double reward = result.cost == 0.0 ? 0.0 : -result.cost;  // avoid -0.0
      samples.push_back(Sample{state, action, reward, result.next});
      state = std::move(result.next);
    }
  }
  return samples;
}

TarResult evaluate_policy_tar(const GridConfig& config, const CollectPolicy& policy,
                              Index episodes, RngHandle& rng) {
  config.validate();
  if (episodes < 1) throw ConfigError("evaluate_policy_tar: episodes must be >= 1");
  TarResult out;
  double total_cost = 0;
  long long ticks = 0;
  for (Index e = 0; e < episodes; ++e) {
    EnvState state = EnvState::empty(config);
    for (Index tick = 0; tick < config.horizon; ++tick) {
      const Index action = pick_action(policy, state, config, rng);
      StepResult result = step(state, action, config, rng);
      out.tar += result.discharged;
      total_cost += result.cost;
      ++ticks;
      state = std::move(result.next);
    }
  }
  out.mean_cost = ticks > 0 ? total_cost / static_cast<double>(ticks) : 0.0;
  return out;
}

namespace {

json int_vector_to_json(const Eigen::VectorXi& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXi json_to_int_vector(const json& arr) {
  Eigen::VectorXi v(static_cast<Index>(arr.size()));
  Index i = 0;
  for (const auto& x : arr) v[i++] = x.get<int>();
  return v;
}

}  // namespace

void save_env_samples(const std::vector<Sample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_env_samples: cannot open " + path);
  for (const auto& s : samples) {
    nlohmann::ordered_json record;
    record["q"] = int_vector_to_json(s.state.queues);
    record["t"] = int_vector_to_json(s.state.elapsed);
    record["action"] = s.action;
    record["reward"] = s.reward;
    record["q_next"] = int_vector_to_json(s.next_state.queues);
    record["t_next"] = int_vector_to_json(s.next_state.elapsed);
    out << record.dump() << "\n";
  }
  if (!out) throw IoError("save_env_samples: write failed for " + path);
}

std::vector<Sample> load_env_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_env_samples: cannot open " + path);
  std::vector<Sample> samples;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
      Sample s;
      s.state.queues = json_to_int_vector(record.at("q"));
      s.state.elapsed = json_to_int_vector(record.at("t"));
      s.action = record.at("action").get<Index>();
      s.reward = record.at("reward").get<double>();
      s.next_state.queues = json_to_int_vector(record.at("q_next"));
      s.next_state.elapsed = json_to_int_vector(record.at("t_next"));
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw FormatError(std::string("load_env_samples: ") + e.what(), line_no);
    }
  }
  if (samples.empty()) throw EmptyPoolError("load_env_samples: no records in " + path);
  return samples;
}

GridConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_config: cannot open " + path);
  GridConfig config;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("load_config: expected key=value", line_no);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "rows") config.rows = std::stol(value);
      else if (key == "cols") config.cols = std::stol(value);
      else if (key == "lanes_per_intersection") config.lanes_per_intersection = std::stol(value);
      else if (key == "arrival_prob") config.arrival_prob = std::stod(value);
      else if (key == "service_rate") config.service_rate = std::stol(value);
      else if (key == "queue_low") config.queue_low = std::stol(value);
      else if (key == "queue_high") config.queue_high = std::stol(value);
      else if (key == "elapsed_threshold") config.elapsed_threshold = std::stol(value);
      else if (key == "u1") config.u1 = std::stod(value);
      else if (key == "w1") config.w1 = std::stod(value);
      else if (key == "u2") config.u2 = std::stod(value);
      else if (key == "w2") config.w2 = std::stod(value);
      else if (key == "horizon") config.horizon = std::stol(value);
      else if (key == "normalize_features") config.normalize_features = value == "true" || value == "1";
      else if (key == "queue_cap") config.queue_cap = std::stol(value);
      else if (key == "priority_lanes") {
        config.priority_lanes.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ','))
          if (!trim(item).empty()) config.priority_lanes.insert(std::stol(trim(item)));
      } else {
        throw FormatError("load_config: unknown key '" + key + "'", line_no);
      }
    } catch (const std::invalid_argument&) {
      throw FormatError("load_config: bad value for '" + key + "'", line_no);
    } catch (const std::out_of_range&) {
      throw FormatError("load_config: value out of range for '" + key + "'", line_no);
    }
  }
  config.validate();
  return config;
}

std::string config_to_string(const GridConfig& config) {
  std::ostringstream os;
  os << "rows=" << config.rows << " cols=" << config.cols
     << " lanes_per_intersection=" << config.lanes_per_intersection
     << " arrival_prob=" << format_number(config.arrival_prob)
     << " service_rate=" << config.service_rate << " queue_low=" << config.queue_low
     << " queue_high=" << config.queue_high
     << " elapsed_threshold=" << config.elapsed_threshold
     << " u1=" << format_number(config.u1) << " w1=" << format_number(config.w1)
     << " u2=" << format_number(config.u2) << " w2=" << format_number(config.w2)
     << " horizon=" << config.horizon
     << " normalize_features=" << (config.normalize_features ? "true" : "false")
     << " queue_cap=" << config.queue_cap;
  if (!config.priority_lanes.empty()) {
    os << " priority_lanes=";
    bool first = true;
    for (Index lane : config.priority_lanes) {
      if (!first) os << ",";
      os << lane;
      first = false;
    }
  }
  return os.str();
}

}  // namespace fastlstd::traffic
