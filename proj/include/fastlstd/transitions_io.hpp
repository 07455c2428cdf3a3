#pragma once

#include <string>

#include "fastlstd/transitions.hpp"

namespace fastlstd {

/// JSON Lines transition file: one object per line with fields exactly
/// "phi" (array), "reward" (number), "phi_next" (array); numbers carry full
/// round-trip precision. The dimension is inferred from the first record and
/// enforced on the rest.
TransitionSet<double> load_transitions(const std::string& path);

void save_transitions(const TransitionSet<double>& set, const std::string& path);

}  // namespace fastlstd
