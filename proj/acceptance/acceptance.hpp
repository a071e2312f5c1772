#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bigraph::acceptance {

/// Thresholds and sample sizes of the acceptance suite. Experiment-level
/// tolerance bands live in harness::tolerance.
namespace limits {
inline constexpr double kSolverResidual = 1e-10;
inline constexpr double kAsymptoticRatioLo = 0.95;
inline constexpr double kInverseAbs = 1e-10;
inline constexpr double kSigma = 3.0;
inline constexpr double kWidthFactor = 0.1;  // estimate <= 0.1 eps
inline constexpr double kRhoEps02 = 0.31369833104121768;  // frozen reference root, eps = 0.2
inline constexpr double kRhoEpsAbs = 1e-12;
}  // namespace limits

struct Options {
  std::uint64_t master_seed = 20240611;
  bool quick = false;
  int workers = 0;
  /// Criteria to run; empty means all.
  std::vector<int> only;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

struct Report {
  std::uint64_t master_seed = 0;
  bool quick = false;
  std::vector<CriterionResult> results;
  bool passed() const;
};

/// Runs the selected criteria in order, calling `on_result` after each one.
Report run(const Options& opts, const std::function<void(const CriterionResult&)>& on_result = {});

/// One line per criterion: "criterion <id> PASS|FAIL <title>: <detail> (<s> s, budget <b> s)".
std::string format_line(const CriterionResult& r);

/// Deterministic JSON: timing is omitted unless requested.
std::string to_json(const Report& r, bool with_timing = false);

}  // namespace bigraph::acceptance
