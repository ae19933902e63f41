// SPDX-License-Identifier: Apache-2.0
#include "curio/timesteps.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "curio/errors.hpp"

namespace curio {

void MuSchedule::validate() const {
  if (!(n_lo < n_hi)) throw ConfigError("mu schedule requires n_lo < n_hi");
  if (!std::isfinite(mu_lo) || !std::isfinite(mu_hi)) throw ConfigError("mu schedule endpoints must be finite");
}

double mu_for_tokens(std::int64_t n, const MuSchedule& s) {
  if (n < 1) throw ContractError("mu_for_tokens: token count must be >= 1");
  const double x = static_cast<double>(n);
  if (s.clamp_outside) {
    if (x <= s.n_lo) return s.mu_lo;
    if (x >= s.n_hi) return s.mu_hi;
  }
  return s.mu_lo + (x - s.n_lo) / (s.n_hi - s.n_lo) * (s.mu_hi - s.mu_lo);
}

void LogitNormalParams::validate() const {
  if (!std::isfinite(mu)) throw ConfigError("mu must be finite");
  if (!std::isfinite(sigma) || sigma <= 0.0) throw ConfigError("sigma must be > 0");
}

double timestep_from_normal(double z, const LogitNormalParams& p) {
  const double t = sigmoid(p.mu + p.sigma * z);
  constexpr double lo = std::numeric_limits<double>::min();
  return std::clamp(t, lo, std::nextafter(1.0, 0.0));
}

double logit_normal_pdf(double t, const LogitNormalParams& p) {
  if (!(t > 0.0 && t < 1.0)) throw std::domain_error("logit_normal_pdf: t must lie in (0, 1)");
  const double u = (logit(t) - p.mu) / p.sigma;
  return std::exp(-0.5 * u * u) / (p.sigma * std::sqrt(2.0 * std::numbers::pi) * t * (1.0 - t));
}

double logit_normal_cdf(double t, const LogitNormalParams& p) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return 0.5 * std::erfc(-(logit(t) - p.mu) / (p.sigma * std::numbers::sqrt2));
}

}  // namespace curio
