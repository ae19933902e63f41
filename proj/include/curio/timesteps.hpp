// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace curio {

/// Location of the logit-normal as a linear function of the image token count.
struct MuSchedule {
  double n_lo = 256;
  double mu_lo = 1.0;
  double n_hi = 4096;
  double mu_hi = 1.3;
  bool clamp_outside = true;
  void validate() const;
};

double mu_for_tokens(std::int64_t n, const MuSchedule& s = {});

struct LogitNormalParams {
  double mu = 0.0;
  double sigma = 1.0;
  void validate() const;
};

inline double sigmoid(double x) noexcept {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
inline double logit(double t) noexcept { return std::log(t) - std::log1p(-t); }

/// t = sigmoid(mu + sigma * z), nudged strictly inside (0, 1) if it rounds to an endpoint.
double timestep_from_normal(double z, const LogitNormalParams& p);

template <class URBG>
double sample_t(URBG& rng, const LogitNormalParams& p) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return timestep_from_normal(normal(rng), p);
}

/// `n` draws sharing one normal distribution (so paired normal variates are not discarded).
template <class URBG>
std::vector<double> sample_ts(URBG& rng, const LogitNormalParams& p, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& t : out) t = timestep_from_normal(normal(rng), p);
  return out;
}

/// Density of t; throws std::domain_error outside (0, 1).
double logit_normal_pdf(double t, const LogitNormalParams& p);

/// Closed-form CDF, Phi((logit t - mu) / sigma).
double logit_normal_cdf(double t, const LogitNormalParams& p);

}  // namespace curio
