// SPDX-License-Identifier: Apache-2.0
#include "curio/compute.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <set>

#include <json.hpp>

#include "curio/errors.hpp"

namespace curio {

void TrainingBudget::validate() const {
  if (!std::isfinite(gpu_hours) || gpu_hours < 0.0) throw DataError("budget \"" + label + "\": gpu_hours must be >= 0");
  if (!std::isfinite(peak_tflops) || peak_tflops <= 0.0)
    throw DataError("budget \"" + label + "\": peak_tflops must be > 0");
}

double normalized_compute(const TrainingBudget& b) { return b.gpu_hours * b.peak_tflops; }

double compute_ratio(const TrainingBudget& a, const TrainingBudget& b) {
  const double denom = normalized_compute(b);
  if (denom == 0.0) throw ContractError("compute_ratio: reference budget \"" + b.label + "\" has zero compute");
  return normalized_compute(a) / denom;
}

std::string format_percent(double ratio) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f%%", ratio * 100.0);
  return buf;
}

std::vector<TrainingBudget> parse_budgets(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("budget file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("budgets") || !j["budgets"].is_array())
    throw DataError("budget file: expected an object with a \"budgets\" array");
  static const std::set<std::string> allowed{"label", "gpu_hours", "peak_tflops", "precision"};
  std::vector<TrainingBudget> out;
  for (const auto& e : j["budgets"]) {
    if (!e.is_object()) throw DataError("budget file: every budget must be an object");
    for (const auto& [k, v] : e.items())
      if (!allowed.contains(k)) throw DataError("budget file: unknown key \"" + k + "\"");
    TrainingBudget b;
    try {
      b.label = e.at("label").get<std::string>();
      b.gpu_hours = e.at("gpu_hours").get<double>();
      b.peak_tflops = e.at("peak_tflops").get<double>();
      if (e.contains("precision")) b.precision = e["precision"].get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(std::string("budget file: ") + ex.what());
    }
    b.validate();
    out.push_back(std::move(b));
  }
  if (out.empty()) throw DataError("budget file: no budgets");
  return out;
}

std::string ratio_table_json(const std::vector<TrainingBudget>& budgets, std::size_t reference, int indent) {
  if (reference >= budgets.size()) throw ConfigError("reference budget index out of range");
  const auto& ref = budgets[reference];
  nlohmann::ordered_json j;
  j["reference"] = ref.label;
  j["caveat"] = kComputeCaveat;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& b : budgets) {
    const double r = compute_ratio(b, ref);
    j["rows"].push_back({{"label", b.label},
                         {"gpu_hours", b.gpu_hours},
                         {"peak_tflops", b.peak_tflops},
                         {"precision", b.precision},
                         {"tflops_hours", normalized_compute(b)},
                         {"ratio", r},
                         {"percent", format_percent(r)}});
  }
  return j.dump(indent);
}

}  // namespace curio
