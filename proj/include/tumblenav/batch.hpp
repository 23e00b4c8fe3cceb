#pragma once

#include <cstdint>
#include <vector>

#include "tumblenav/simulation.hpp"

namespace tumblenav {

/// `count` copies of `base` with seeds base.seed, base.seed + 1, ...
std::vector<Scenario> seed_batch(const Scenario& base, int count);

/// Runs independent scenarios across OpenMP threads. Each run is
/// deterministic, so the result equals run_batch_serial element for element.
std::vector<RunResult> run_batch(const std::vector<Scenario>& scenarios);

/// Single-threaded reference for run_batch.
std::vector<RunResult> run_batch_serial(const std::vector<Scenario>& scenarios);

}  // namespace tumblenav
