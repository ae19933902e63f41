// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace curio {

struct TrainingBudget {
  std::string label;
  double gpu_hours = 0.0;
  double peak_tflops = 0.0;
  std::string precision = "bf16";  // metadata only
  void validate() const;
};

inline constexpr const char* kComputeCaveat =
    "Normalized by peak TFLOPS only; ignores utilization, memory bandwidth and interconnect differences.";

/// gpu_hours * peak_tflops (TFLOPS-hours).
double normalized_compute(const TrainingBudget& b);

/// normalized_compute(a) / normalized_compute(b); ContractError when b is zero.
double compute_ratio(const TrainingBudget& a, const TrainingBudget& b);

/// One decimal percentage, e.g. 0.1928 -> "19.3%".
std::string format_percent(double ratio);

/// Reads {"budgets":[{"label","gpu_hours","peak_tflops","precision"?}, ...]}.
std::vector<TrainingBudget> parse_budgets(std::istream& in);

/// Ratio of every budget against `reference` as JSON, including the caveat.
std::string ratio_table_json(const std::vector<TrainingBudget>& budgets, std::size_t reference, int indent = 2);

}  // namespace curio
