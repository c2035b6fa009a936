#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "reinsim/nnet.hpp"
#include "reinsim/rng.hpp"

namespace reinsim {

inline constexpr double kLogStdLo = -5.0;
inline constexpr double kLogStdHi = 2.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

/// Diagonal-Gaussian policy: a mean network, state-independent log-stds per
/// action dimension, and a scalar value baseline.
struct PolicyModel {
  DenseNet mean_net;
  std::vector<double> log_std;
  DenseNet value_net;

  int observation_dim() const { return mean_net.input_size(); }
  int action_dim() const { return static_cast<int>(log_std.size()); }
};

inline PolicyModel make_policy_model(int obs_dim, int action_dim,
                                     const std::vector<int>& hidden, RngStream& rng) {
  if (obs_dim < 1 || action_dim < 1) throw std::invalid_argument("policy dims must be >= 1");
  PolicyModel policy;
  std::vector<int> mean_sizes{obs_dim};
  mean_sizes.insert(mean_sizes.end(), hidden.begin(), hidden.end());
  mean_sizes.push_back(action_dim);
  std::vector<Activation> acts(mean_sizes.size() - 2, Activation::Tanh);
  acts.push_back(Activation::Identity);
  policy.mean_net = make_dense_net(mean_sizes, acts, rng);
  policy.log_std.assign(action_dim, 0.0);
  std::vector<int> value_sizes{obs_dim};
  value_sizes.insert(value_sizes.end(), hidden.begin(), hidden.end());
  value_sizes.push_back(1);
  policy.value_net = make_dense_net(value_sizes, acts, rng);
  return policy;
}

inline double gaussian_log_density(std::span<const double> action,
                                   std::span<const double> mean,
                                   std::span<const double> log_std) {
  if (action.size() != mean.size() || action.size() != log_std.size()) {
    throw std::invalid_argument("gaussian density shape mismatch");
  }
  double logp = 0.0;
  for (std::size_t j = 0; j < action.size(); ++j) {
    const double sigma = std::exp(log_std[j]);
    const double z = (action[j] - mean[j]) / sigma;
    logp += -0.5 * z * z - log_std[j] - kHalfLog2Pi;
  }
  return logp;
}

// Closed-form entropy of the diagonal Gaussian: sum(log_std + 0.5*ln(2*pi*e)).
inline double policy_entropy(const PolicyModel& policy) {
  double h = 0.0;
  for (const double ls : policy.log_std) h += ls + kHalfLog2Pi + 0.5;
  return h;
}

inline std::vector<double> mean_action(const PolicyModel& policy, std::span<const double> obs) {
  return forward(policy.mean_net, obs);
}

inline double value_estimate(const PolicyModel& policy, std::span<const double> obs) {
  return forward(policy.value_net, obs)[0];
}

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
  double value = 0.0;
};

inline ActionSample select_action(const PolicyModel& policy, std::span<const double> obs,
                                  RngStream& rng) {
  ActionSample out;
  const auto mean = mean_action(policy, obs);
  out.action.resize(mean.size());
  for (std::size_t j = 0; j < mean.size(); ++j) {
    out.action[j] = mean[j] + std::exp(policy.log_std[j]) * rng.normal();
  }
  out.log_prob = gaussian_log_density(out.action, mean, policy.log_std);
  out.value = value_estimate(policy, obs);
  return out;
}

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation. `dones[t]` marks a terminal transition
/// at step t; `bootstrap_value` is V of the state after the last step (0 if
/// that step was terminal).
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                             std::span<const unsigned char> dones, double gamma, double lambda,
                             double bootstrap_value) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("gae input length mismatch");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0,1]");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_advantage = 0.0;
  double next_value = bootstrap_value;
  for (std::size_t t = n; t-- > 0;) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * not_done - values[t];
    next_advantage = delta + gamma * lambda * not_done * next_advantage;
    out.advantages[t] = next_advantage;
    out.returns[t] = next_advantage + values[t];
    next_value = values[t];
  }
  return out;
}

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  int rollout_horizon = 2048;
  int update_epochs = 10;
  int minibatch_size = 64;
  long total_timesteps = 6144;
  double learning_rate = 3e-4;
  double target_kl = 0.15;
  std::vector<int> hidden{64, 64};
};

inline void validate(const PpoConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw std::invalid_argument("gamma in [0,1]");
  if (!(cfg.gae_lambda >= 0.0 && cfg.gae_lambda <= 1.0)) {
    throw std::invalid_argument("gae_lambda in [0,1]");
  }
  if (!(cfg.clip_ratio > 0.0)) throw std::invalid_argument("clip_ratio must be > 0");
  if (cfg.rollout_horizon < 1 || cfg.update_epochs < 1 || cfg.minibatch_size < 1) {
    throw std::invalid_argument("ppo loop sizes must be >= 1");
  }
  if (cfg.total_timesteps < 1) throw std::invalid_argument("total_timesteps must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
}

struct Trajectory {
  std::vector<std::vector<double>> observations;
  std::vector<std::vector<double>> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<unsigned char> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return rewards.size(); }
  void clear() {
    observations.clear();
    actions.clear();
    log_probs.clear();
    rewards.clear();
    values.clear();
    dones.clear();
    advantages.clear();
    returns.clear();
  }
};

struct UpdateReport {
  double policy_gradient_loss = 0.0;
  double value_loss = 0.0;
  double entropy_loss = 0.0;  // -entropy, matching the reported sign convention
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int epochs_run = 0;
};

namespace detail {

struct PolicyParamLayout {
  std::size_t mean_params;
  std::size_t action_dim;
  std::size_t value_params;
  std::size_t total() const { return mean_params + action_dim + value_params; }
};

inline PolicyParamLayout policy_layout(const PolicyModel& p) {
  return {p.mean_net.parameter_count(), p.log_std.size(), p.value_net.parameter_count()};
}

inline std::vector<double> gather_policy_params(const PolicyModel& p) {
  std::vector<double> flat = get_parameters(p.mean_net);
  flat.insert(flat.end(), p.log_std.begin(), p.log_std.end());
  const auto value_flat = get_parameters(p.value_net);
  flat.insert(flat.end(), value_flat.begin(), value_flat.end());
  return flat;
}

inline void scatter_policy_params(PolicyModel& p, std::span<const double> flat) {
  const auto layout = policy_layout(p);
  set_parameters(p.mean_net, flat.subspan(0, layout.mean_params));
  std::copy(flat.begin() + layout.mean_params,
            flat.begin() + layout.mean_params + layout.action_dim, p.log_std.begin());
  set_parameters(p.value_net, flat.subspan(layout.mean_params + layout.action_dim));
  for (double& ls : p.log_std) ls = std::clamp(ls, kLogStdLo, kLogStdHi);
}

}  // namespace detail

/// Clipped-surrogate update with entropy and value terms, several epochs of
/// shuffled minibatches, and an approx-KL early stop.
inline UpdateReport ppo_update(PolicyModel& policy, OptimState& optim, const Trajectory& batch,
                               const PpoConfig& cfg, RngStream& rng) {
  validate(cfg);
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("empty trajectory");
  if (batch.advantages.size() != n || batch.returns.size() != n) {
    throw std::invalid_argument("advantages must be computed before the update");
  }

  // Normalize advantages over the batch.
  std::vector<double> adv(batch.advantages.begin(), batch.advantages.end());
  const double mean_adv = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (const double a : adv) var += (a - mean_adv) * (a - mean_adv);
  const double sd = std::sqrt(var / n) + 1e-8;
  for (double& a : adv) a = (a - mean_adv) / sd;

  const auto layout = detail::policy_layout(policy);
  const int act_dim = policy.action_dim();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  NetGradients mean_grads = make_gradients(policy.mean_net);
  NetGradients value_grads = make_gradients(policy.value_net);
  std::vector<double> log_std_grad(act_dim, 0.0);
  ForwardCache mean_cache, value_cache;

  UpdateReport report;
  double pg_acc = 0.0, value_acc = 0.0;
  std::size_t clip_events = 0, samples_seen = 0, passes = 0;

  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    shuffle_in_place(order, rng);
    for (std::size_t start = 0; start < n; start += cfg.minibatch_size) {
      const std::size_t stop = std::min(n, start + cfg.minibatch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      zero_gradients(mean_grads);
      zero_gradients(value_grads);
      std::fill(log_std_grad.begin(), log_std_grad.end(), 0.0);
      double pg_loss = 0.0, value_loss = 0.0;
      for (std::size_t it = start; it < stop; ++it) {
        const std::size_t i = order[it];
        const auto& obs = batch.observations[i];
        const auto& action = batch.actions[i];
        const auto mean = forward(policy.mean_net, obs, &mean_cache);
        const double logp = gaussian_log_density(action, mean, policy.log_std);
        const double ratio = std::exp(logp - batch.log_probs[i]);
        const double a = adv[i];
        const double unclipped = ratio * a;
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * a;
        pg_loss += -std::min(unclipped, clipped);
        if (std::abs(ratio - 1.0) > cfg.clip_ratio) ++clip_events;
        ++samples_seen;
        if (unclipped <= clipped) {
          // gradient flows through the unclipped surrogate
          const double scale = -a * ratio * inv;
          std::vector<double> d_mean(act_dim);
          for (int j = 0; j < act_dim; ++j) {
            const double sigma = std::exp(policy.log_std[j]);
            const double z = (action[j] - mean[j]) / sigma;
            d_mean[j] = scale * (z / sigma);
            log_std_grad[j] += scale * (z * z - 1.0);
          }
          backward_accumulate(policy.mean_net, mean_cache, d_mean, mean_grads);
        }
        const double v = forward(policy.value_net, obs, &value_cache)[0];
        const double v_err = v - batch.returns[i];
        value_loss += v_err * v_err;
        const double d_v[1] = {cfg.value_coef * 2.0 * v_err * inv};
        backward_accumulate(policy.value_net, value_cache, d_v, value_grads);
      }
      for (int j = 0; j < act_dim; ++j) log_std_grad[j] -= cfg.entropy_coef;
      pg_acc += pg_loss * inv;
      value_acc += value_loss * inv;
      ++passes;

      std::vector<double> params = detail::gather_policy_params(policy);
      std::vector<double> grads;
      grads.reserve(layout.total());
      append_gradients(mean_grads, grads);
      grads.insert(grads.end(), log_std_grad.begin(), log_std_grad.end());
      append_gradients(value_grads, grads);
      optim_step(optim, params, grads);
      detail::scatter_policy_params(policy, params);
    }
    report.epochs_run = epoch + 1;
    // Full-batch approx KL after each epoch; stop once the policy moved far.
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto mean = forward(policy.mean_net, batch.observations[i]);
      kl += batch.log_probs[i] - gaussian_log_density(batch.actions[i], mean, policy.log_std);
    }
    report.approx_kl = kl / static_cast<double>(n);
    if (report.approx_kl > cfg.target_kl) break;
  }

  report.policy_gradient_loss = pg_acc / static_cast<double>(passes);
  report.value_loss = value_acc / static_cast<double>(passes);
  report.entropy_loss = -policy_entropy(policy);
  report.clip_fraction = static_cast<double>(clip_events) / static_cast<double>(samples_seen);
  return report;
}

struct TrainMetricsRow {
  long timesteps = 0;
  double mean_episode_reward = 0.0;
  double policy_gradient_loss = 0.0;
  double entropy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
};

struct PpoTrainResult {
  PolicyModel policy;
  std::vector<TrainMetricsRow> metrics;
};

/// Rollout/update loop. Env must provide observation_size(), action_size(),
/// reset(rng) -> obs and step(action, rng) -> {observation, reward, done}.
template <typename Env>
PpoTrainResult train_ppo(Env& env, const PpoConfig& cfg, RngStream& rng) {
  validate(cfg);
  RngStream init_rng = rng.split(0);
  RngStream env_rng = rng.split(1);
  RngStream action_rng = rng.split(2);
  RngStream update_rng = rng.split(3);

  PpoTrainResult result;
  result.policy =
      make_policy_model(env.observation_size(), env.action_size(), cfg.hidden, init_rng);
  OptimState optim =
      make_optim_state(detail::policy_layout(result.policy).total(), cfg.learning_rate);

  Trajectory traj;
  std::vector<double> obs = env.reset(env_rng);
  double episode_reward = 0.0;
  double last_mean_episode_reward = 0.0;
  bool have_episode_mean = false;
  long steps_done = 0;

  while (steps_done < cfg.total_timesteps) {
    const long horizon =
        std::min<long>(cfg.rollout_horizon, cfg.total_timesteps - steps_done);
    traj.clear();
    std::vector<double> completed_rewards;
    bool last_done = false;
    for (long h = 0; h < horizon; ++h) {
      ActionSample sample = select_action(result.policy, obs, action_rng);
      auto sr = env.step(sample.action, env_rng);
      traj.observations.push_back(obs);
      traj.actions.push_back(sample.action);
      traj.log_probs.push_back(sample.log_prob);
      traj.rewards.push_back(sr.reward);
      traj.values.push_back(sample.value);
      traj.dones.push_back(sr.done ? 1 : 0);
      episode_reward += sr.reward;
      last_done = sr.done;
      if (sr.done) {
        completed_rewards.push_back(episode_reward);
        episode_reward = 0.0;
        obs = env.reset(env_rng);
      } else {
        obs = std::move(sr.observation);
      }
    }
    steps_done += horizon;
    const double bootstrap = last_done ? 0.0 : value_estimate(result.policy, obs);
    const auto gae =
        compute_gae(traj.rewards, traj.values, traj.dones, cfg.gamma, cfg.gae_lambda, bootstrap);
    traj.advantages = gae.advantages;
    traj.returns = gae.returns;
    const UpdateReport rep = ppo_update(result.policy, optim, traj, cfg, update_rng);

    if (!completed_rewards.empty()) {
      last_mean_episode_reward =
          std::accumulate(completed_rewards.begin(), completed_rewards.end(), 0.0) /
          static_cast<double>(completed_rewards.size());
      have_episode_mean = true;
    }
    const double reported = have_episode_mean ? last_mean_episode_reward : episode_reward;
    result.metrics.push_back({steps_done, reported, rep.policy_gradient_loss, rep.entropy_loss,
                              rep.value_loss, rep.clip_fraction});
  }
  return result;
}

inline nlohmann::json policy_to_json(const PolicyModel& p) {
  return {{"format", "reinsim-policy"},
          {"version", 1},
          {"observation_dim", p.observation_dim()},
          {"action_dim", p.action_dim()},
          {"log_std", p.log_std},
          {"mean_net", net_to_json(p.mean_net)},
          {"value_net", net_to_json(p.value_net)}};
}

inline PolicyModel policy_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "reinsim-policy") {
    throw std::invalid_argument("not a policy checkpoint");
  }
  PolicyModel p;
  p.mean_net = net_from_json(j.at("mean_net"));
  p.value_net = net_from_json(j.at("value_net"));
  p.log_std = j.at("log_std").get<std::vector<double>>();
  if (p.mean_net.output_size() != static_cast<int>(p.log_std.size())) {
    throw std::invalid_argument("policy checkpoint shape mismatch");
  }
  return p;
}

}  // namespace reinsim
