#include "tumblenav/batch.hpp"

#include <exception>

namespace tumblenav {

std::vector<Scenario> seed_batch(const Scenario& base, int count) {
  std::vector<Scenario> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    Scenario s = base;
    s.seed = base.seed + static_cast<std::uint64_t>(i);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RunResult> run_batch(const std::vector<Scenario>& scenarios) {
  const auto n = static_cast<long>(scenarios.size());
  std::vector<RunResult> results(scenarios.size());
  std::exception_ptr error;

#pragma omp parallel for schedule(dynamic, 1) shared(results, scenarios, error)
  for (long i = 0; i < n; ++i) {
    try {
      results[static_cast<std::size_t>(i)] = run_scenario(scenarios[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(tumblenav_batch_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return results;
}

std::vector<RunResult> run_batch_serial(const std::vector<Scenario>& scenarios) {
  std::vector<RunResult> results;
  results.reserve(scenarios.size());
  for (const Scenario& s : scenarios) results.push_back(run_scenario(s));
  return results;
}

}  // namespace tumblenav
