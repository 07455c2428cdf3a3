#include "fastlstd/transitions_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "fastlstd/errors.hpp"

namespace fastlstd {

using json = nlohmann::json;

namespace {

Vector<double> parse_vector(const json& arr) {
  const auto values = arr.get<std::vector<double>>();  // throws on non-numeric entries
  Vector<double> v(static_cast<Index>(values.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = values[static_cast<std::size_t>(i)];
  return v;
}

json vector_to_json(const ConstVectorRef<double>& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

TransitionSet<double> load_transitions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_transitions: cannot open " + path);
  TransitionSet<double> set;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Vector<double> phi, phi_next;
    double reward;
    try {
      const json record = json::parse(line);
      phi = parse_vector(record.at("phi"));
      reward = record.at("reward").get<double>();
      phi_next = parse_vector(record.at("phi_next"));
    } catch (const json::exception& e) {
      throw FormatError(std::string("load_transitions: ") + e.what(), line_no);
    }
    if (set.dim() != 0 && (phi.size() != set.dim() || phi_next.size() != set.dim()))
      throw FormatError("load_transitions: dimension mismatch, expected " +
                            std::to_string(set.dim()) + " got " +
                            std::to_string(phi.size()) + "/" +
                            std::to_string(phi_next.size()),
                        line_no);
    if (phi.size() != phi_next.size())
      throw FormatError("load_transitions: phi and phi_next lengths differ", line_no);
    set.add(phi, reward, phi_next);
  }
  if (set.empty()) throw EmptyPoolError("load_transitions: no records in " + path);
  return set;
}

void save_transitions(const TransitionSet<double>& set, const std::string& path) {
  if (set.empty()) throw EmptyPoolError("save_transitions: empty set");
  std::ofstream out(path);
  if (!out) throw IoError("save_transitions: cannot open " + path);
  for (Index i = 0; i < set.size(); ++i) {
    nlohmann::ordered_json record;
    record["phi"] = vector_to_json(set.phi(i));
    record["reward"] = set.reward(i);
    record["phi_next"] = vector_to_json(set.phi_next(i));
    out << record.dump() << "\n";
  }
  if (!out) throw IoError("save_transitions: write failed for " + path);
}

}  // namespace fastlstd
