// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "curio/errors.hpp"

namespace curio {

// ---------------------------------------------------------------- rewards

/// 1/2 + 1/2 * clip((raw - group_mean) / z_c, -1, 1).
double normalize_reward(double raw, double group_mean, double z_c);

enum class ZcMode {
  GlobalStd,  // population std of every reward in the pool
  GroupStd,   // population std of each prompt's own group
};

/// Groups of raw rewards, one group per prompt.
using RewardGroups = std::vector<Eigen::VectorXd>;

/// Population std of all rewards pooled across groups.
double global_reward_std(const RewardGroups& groups);

/// Normalized rewards per group. A zero std (all rewards equal to their mean)
/// maps every reward to 0.5.
RewardGroups normalize_groups(const RewardGroups& groups, ZcMode mode = ZcMode::GlobalStd);

// ---------------------------------------------------------------- DiffusionNFT

struct NFTConfig {
  double beta = 1.0;
  double kl_coeff = 1e-4;
  void validate() const;
};

/// Coefficient for the old-policy update: the printed expression evaluates to 0.001.
inline constexpr double kAdaptiveEta = 0.001;

template <class A, class B>
void require_same_shape(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError(std::string(what) + ": shape mismatch");
}

template <class Old, class Theta>
auto nft_positive(const Eigen::MatrixBase<Old>& v_old, const Eigen::MatrixBase<Theta>& v_theta, double beta) {
  return ((1.0 - beta) * v_old + beta * v_theta).eval();
}

template <class Old, class Theta>
auto nft_negative(const Eigen::MatrixBase<Old>& v_old, const Eigen::MatrixBase<Theta>& v_theta, double beta) {
  return ((1.0 + beta) * v_old - beta * v_theta).eval();
}

template <class Old, class Theta>
auto nft_velocities(const Eigen::MatrixBase<Old>& v_old, const Eigen::MatrixBase<Theta>& v_theta, double beta) {
  require_same_shape(v_old, v_theta, "nft_velocities");
  return std::pair{nft_positive(v_old, v_theta, beta), nft_negative(v_old, v_theta, beta)};
}

/// r * |v+ - v|^2 + (1 - r) * |v- - v|^2 for one sample.
template <class Old, class Theta, class Target>
double nft_loss(const Eigen::MatrixBase<Old>& v_old, const Eigen::MatrixBase<Theta>& v_theta,
                const Eigen::MatrixBase<Target>& v_target, double r, double beta) {
  require_same_shape(v_old, v_theta, "nft_loss");
  require_same_shape(v_old, v_target, "nft_loss");
  if (!(r >= 0.0 && r <= 1.0)) throw ContractError("nft_loss: r must lie in [0, 1]");
  const auto [vp, vm] = nft_velocities(v_old, v_theta, beta);
  return r * (vp - v_target).squaredNorm() + (1.0 - r) * (vm - v_target).squaredNorm();
}

/// d nft_loss / d v_theta = 2 beta r (v+ - v) - 2 beta (1 - r) (v- - v).
template <class Old, class Theta, class Target>
Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> nft_loss_gradient(const Eigen::MatrixBase<Old>& v_old,
                                                                        const Eigen::MatrixBase<Theta>& v_theta,
                                                                        const Eigen::MatrixBase<Target>& v_target,
                                                                        double r, double beta) {
  const auto [vp, vm] = nft_velocities(v_old, v_theta, beta);
  return 2.0 * beta * r * (vp - v_target) - 2.0 * beta * (1.0 - r) * (vm - v_target);
}

/// Pluggable divergence between the current and old policy velocities.
using KlPenalty = std::function<double(const Eigen::VectorXd& v_theta, const Eigen::VectorXd& v_old)>;

/// Default penalty: mean squared deviation of v_theta from v_old.
double mean_squared_deviation(const Eigen::VectorXd& v_theta, const Eigen::VectorXd& v_old);

/// Columns are samples (dim x batch). Mean over the batch of nft_loss plus kl_coeff * penalty.
struct NFTBatchLoss {
  double nft = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

NFTBatchLoss nft_batch_loss(const Eigen::MatrixXd& v_old, const Eigen::MatrixXd& v_theta,
                            const Eigen::MatrixXd& v_target, const Eigen::VectorXd& r, const NFTConfig& cfg,
                            const KlPenalty& penalty = mean_squared_deviation);

/// old <- eta * old + (1 - eta) * theta.
template <class Old, class Theta>
auto old_policy_update(const Eigen::MatrixBase<Old>& old, const Eigen::MatrixBase<Theta>& theta,
                       double eta = kAdaptiveEta) {
  require_same_shape(old, theta, "old_policy_update");
  return (eta * old + (1.0 - eta) * theta).eval();
}

// ---------------------------------------------------------------- distillation

/// log(1 + exp(-x)) without overflow.
inline double logistic_loss(double x) noexcept {
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

template <class Derived>
double mean_logistic_loss(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) throw ContractError("mean_logistic_loss: empty input");
  return x.unaryExpr([](double v) { return logistic_loss(v); }).mean();
}

/// alpha_t * x + sigma_t * eps.
template <class X, class E>
auto forward_noise(const Eigen::MatrixBase<X>& x, double alpha_t, double sigma_t, const Eigen::MatrixBase<E>& eps) {
  require_same_shape(x, eps, "forward_noise");
  return (alpha_t * x + sigma_t * eps).eval();
}

/// Noised real sample shifted by alpha * eps, the input for the R1 approximation.
template <class X, class E>
auto r1_perturb(const Eigen::MatrixBase<X>& x_t, double alpha, const Eigen::MatrixBase<E>& eps) {
  require_same_shape(x_t, eps, "r1_perturb");
  return (x_t + alpha * eps).eval();
}

struct DMDConfig {
  double gamma = 1.0;     // R1 weight
  double alpha = 0.1;     // R1 perturbation scale
  double lambda_d = 0.1;  // distribution-matching weight
  double lambda_g = 0.001;
  double mu_ida = 0.03;
  int ttur_ratio = 4;
  void validate() const;
};

/// mean l(d_real) + mean l(-d_fake) + gamma/2 * mean (d_real - d_perturbed)^2.
double discriminator_loss(const Eigen::VectorXd& d_real, const Eigen::VectorXd& d_fake,
                          const Eigen::VectorXd& d_perturbed, double gamma);

/// mean l(d_fake).
double generator_loss(const Eigen::VectorXd& d_fake);

/// lambda_d * (l_dm + l_ca) + lambda_g * l_g; l_ca is an opaque input.
double student_total_loss(double l_dm, double l_ca, double l_g, const DMDConfig& cfg = {});

/// Velocity-matching loss for the fake score model, batch mean of squared column norms.
double fake_score_loss(const Eigen::MatrixXd& v_phi, const Eigen::MatrixXd& u_t);

template <class F, class T>
auto dmd_gradient_direction(const Eigen::MatrixBase<F>& s_fake, const Eigen::MatrixBase<T>& s_teacher) {
  require_same_shape(s_fake, s_teacher, "dmd_gradient_direction");
  return (s_fake - s_teacher).eval();
}

/// phi <- (1 - mu) * phi + mu * theta.
template <class P, class T>
auto ida_update(const Eigen::MatrixBase<P>& phi, const Eigen::MatrixBase<T>& theta, double mu) {
  require_same_shape(phi, theta, "ida_update");
  if (!(mu >= 0.0 && mu <= 1.0)) throw ContractError("ida_update: mu must lie in [0, 1]");
  return ((1.0 - mu) * phi + mu * theta).eval();
}

enum class UpdateEvent { Critic, Student, Ida };

std::string_view event_name(UpdateEvent e) noexcept;  // "critic", "student", "ida"

/// Per global step: `ratio` critic updates, one student update, one IDA update.
std::vector<UpdateEvent> ttur_schedule(int global_steps, int ratio);

}  // namespace curio
