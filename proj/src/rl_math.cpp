// SPDX-License-Identifier: Apache-2.0
#include "curio/rl_math.hpp"

namespace curio {

double normalize_reward(double raw, double group_mean, double z_c) {
  if (!(z_c > 0.0)) throw ContractError("normalize_reward: z_c must be > 0");
  return 0.5 + 0.5 * std::clamp((raw - group_mean) / z_c, -1.0, 1.0);
}

namespace {

double population_std(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt((v.array() - v.mean()).square().mean());
}

}  // namespace

double global_reward_std(const RewardGroups& groups) {
  Eigen::Index n = 0;
  for (const auto& g : groups) n += g.size();
  Eigen::VectorXd pool(n);
  Eigen::Index k = 0;
  for (const auto& g : groups) {
    pool.segment(k, g.size()) = g;
    k += g.size();
  }
  return population_std(pool);
}

RewardGroups normalize_groups(const RewardGroups& groups, ZcMode mode) {
  for (const auto& g : groups) {
    if (g.size() == 0) throw ContractError("normalize_groups: empty reward group");
    if (!g.allFinite()) throw ContractError("normalize_groups: non-finite reward");
  }
  const double global = mode == ZcMode::GlobalStd ? global_reward_std(groups) : 0.0;
  RewardGroups out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    const double mean = g.mean();
    const double z = mode == ZcMode::GlobalStd ? global : population_std(g);
    Eigen::VectorXd r(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) r[i] = z > 0.0 ? normalize_reward(g[i], mean, z) : 0.5;
    out.push_back(std::move(r));
  }
  return out;
}

void NFTConfig::validate() const {
  if (!std::isfinite(beta) || beta <= 0.0) throw ConfigError("beta must be > 0");
  if (!std::isfinite(kl_coeff) || kl_coeff < 0.0) throw ConfigError("kl-coeff must be nonnegative");
}

double mean_squared_deviation(const Eigen::VectorXd& v_theta, const Eigen::VectorXd& v_old) {
  require_same_shape(v_theta, v_old, "mean_squared_deviation");
  if (v_theta.size() == 0) return 0.0;
  return (v_theta - v_old).squaredNorm() / static_cast<double>(v_theta.size());
}

NFTBatchLoss nft_batch_loss(const Eigen::MatrixXd& v_old, const Eigen::MatrixXd& v_theta,
                            const Eigen::MatrixXd& v_target, const Eigen::VectorXd& r, const NFTConfig& cfg,
                            const KlPenalty& penalty) {
  cfg.validate();
  require_same_shape(v_old, v_theta, "nft_batch_loss");
  require_same_shape(v_old, v_target, "nft_batch_loss");
  if (r.size() != v_old.cols()) throw ContractError("nft_batch_loss: one reward per column required");
  NFTBatchLoss out;
  const auto n = v_old.cols();
  if (n == 0) return out;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.nft += nft_loss(v_old.col(i), v_theta.col(i), v_target.col(i), r[i], cfg.beta);
    if (penalty) out.kl += penalty(v_theta.col(i), v_old.col(i));
  }
  out.nft /= static_cast<double>(n);
  out.kl /= static_cast<double>(n);
  out.total = out.nft + cfg.kl_coeff * out.kl;
  return out;
}

void DMDConfig::validate() const {
  if (gamma < 0 || alpha < 0 || lambda_d < 0 || lambda_g < 0 || mu_ida < 0)
    throw ConfigError("distillation weights must be nonnegative");
  if (mu_ida > 1.0) throw ConfigError("mu-ida must lie in [0, 1]");
  if (ttur_ratio < 1) throw ConfigError("ttur-ratio must be >= 1");
}

double discriminator_loss(const Eigen::VectorXd& d_real, const Eigen::VectorXd& d_fake,
                          const Eigen::VectorXd& d_perturbed, double gamma) {
  require_same_shape(d_real, d_perturbed, "discriminator_loss");
  const double r1 = d_real.size() == 0 ? 0.0 : (d_real - d_perturbed).squaredNorm() / static_cast<double>(d_real.size());
  return mean_logistic_loss(d_real) + mean_logistic_loss((-d_fake).eval()) + 0.5 * gamma * r1;
}

double generator_loss(const Eigen::VectorXd& d_fake) { return mean_logistic_loss(d_fake); }

double student_total_loss(double l_dm, double l_ca, double l_g, const DMDConfig& cfg) {
  return cfg.lambda_d * (l_dm + l_ca) + cfg.lambda_g * l_g;
}

double fake_score_loss(const Eigen::MatrixXd& v_phi, const Eigen::MatrixXd& u_t) {
  require_same_shape(v_phi, u_t, "fake_score_loss");
  if (v_phi.cols() == 0) return 0.0;
  return (v_phi - u_t).squaredNorm() / static_cast<double>(v_phi.cols());
}

std::string_view event_name(UpdateEvent e) noexcept {
  switch (e) {
    case UpdateEvent::Critic: return "critic";
    case UpdateEvent::Student: return "student";
    case UpdateEvent::Ida: return "ida";
  }
  return "critic";
}

std::vector<UpdateEvent> ttur_schedule(int global_steps, int ratio) {
  if (global_steps < 1) throw ContractError("ttur_schedule: global_steps must be >= 1");
  if (ratio < 1) throw ContractError("ttur_schedule: ratio must be >= 1");
  std::vector<UpdateEvent> tape;
  tape.reserve(static_cast<std::size_t>(global_steps) * static_cast<std::size_t>(ratio + 2));
  for (int s = 0; s < global_steps; ++s) {
    tape.insert(tape.end(), static_cast<std::size_t>(ratio), UpdateEvent::Critic);
    tape.push_back(UpdateEvent::Student);
    tape.push_back(UpdateEvent::Ida);
  }
  return tape;
}

}  // namespace curio
