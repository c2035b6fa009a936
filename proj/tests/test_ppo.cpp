#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "reinsim/ppo.hpp"

using namespace reinsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// One-step bandit: reward = -(a - 0.3)^2, constant observation.
struct BanditEnv {
  int observation_size() const { return 1; }
  int action_size() const { return 1; }
  std::vector<double> reset(RngStream&) { return {0.0}; }
  struct Step {
    std::vector<double> observation;
    double reward;
    bool done;
  };
  Step step(std::span<const double> action, RngStream&) {
    const double d = action[0] - 0.3;
    return {{0.0}, -d * d, true};
  }
};

// Brute-force discounted-return-minus-baseline oracle for lambda = 1.
std::vector<double> brute_force_advantages(std::span<const double> rewards,
                                           std::span<const double> values,
                                           std::span<const unsigned char> dones, double gamma,
                                           double bootstrap) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n);
  for (std::size_t t = 0; t < n; ++t) {
    double ret = 0.0, discount = 1.0;
    for (std::size_t l = t; l < n; ++l) {
      ret += discount * rewards[l];
      if (dones[l]) break;
      discount *= gamma;
      if (l + 1 == n) ret += discount * bootstrap;
    }
    adv[t] = ret - values[t];
  }
  return adv;
}

Trajectory random_trajectory(std::size_t n, RngStream& rng, double done_prob = 0.1) {
  Trajectory traj;
  for (std::size_t i = 0; i < n; ++i) {
    traj.observations.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    traj.actions.push_back({rng.uniform(-1.0, 1.0)});
    traj.rewards.push_back(rng.uniform(-1.0, 1.0));
    traj.values.push_back(rng.uniform(-1.0, 1.0));
    traj.dones.push_back(rng.uniform() < done_prob ? 1 : 0);
    traj.log_probs.push_back(0.0);
  }
  return traj;
}

}  // namespace

TEST_CASE("select_action matches the closed-form Gaussian density") {
  RngStream init(1);
  const auto policy = make_policy_model(3, 2, {16}, init);
  const std::vector<double> obs{0.2, -0.4, 0.6};

  RngStream rng(2);
  const auto sample = select_action(policy, obs, rng);
  const auto mean = mean_action(policy, obs);
  double expected = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double sigma = std::exp(policy.log_std[j]);
    const double z = (sample.action[j] - mean[j]) / sigma;
    expected += -0.5 * z * z - policy.log_std[j] - 0.5 * std::log(2.0 * M_PI);
  }
  REQUIRE_THAT(sample.log_prob, WithinAbs(expected, 1e-12));

  SECTION("near-zero variance collapses to the mean") {
    auto tight = policy;
    std::fill(tight.log_std.begin(), tight.log_std.end(), -5.0);
    RngStream r(3);
    const auto s = select_action(tight, obs, r);
    for (int j = 0; j < 2; ++j) REQUIRE_THAT(s.action[j], WithinAbs(mean[j], 1e-2));
  }
  SECTION("fixed seed reproduces the action") {
    RngStream a(4), b(4);
    REQUIRE(select_action(policy, obs, a).action == select_action(policy, obs, b).action);
  }
}

TEST_CASE("compute_gae") {
  SECTION("gamma = 0 reduces to one-step TD errors") {
    const std::vector<double> rewards{1.0, 2.0, 3.0};
    const std::vector<double> values{0.5, 0.5, 0.5};
    const std::vector<unsigned char> dones{0, 0, 0};
    const auto gae = compute_gae(rewards, values, dones, 0.0, 0.95, 9.0);
    for (std::size_t t = 0; t < 3; ++t) {
      REQUIRE_THAT(gae.advantages[t], WithinAbs(rewards[t] - values[t], 1e-12));
    }
  }
  SECTION("single step with bootstrap zero") {
    const std::vector<double> r{1.0}, v{0.0};
    const std::vector<unsigned char> d{0};
    const auto gae = compute_gae(r, v, d, 0.99, 0.95, 0.0);
    REQUIRE_THAT(gae.advantages[0], WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(gae.returns[0], WithinAbs(1.0, 1e-12));
  }
  SECTION("lambda = 1 matches the brute-force oracle on random trajectories") {
    RngStream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const auto traj = random_trajectory(50, rng);
      const double bootstrap = traj.dones.back() ? 0.0 : rng.uniform(-1.0, 1.0);
      const auto gae =
          compute_gae(traj.rewards, traj.values, traj.dones, 0.97, 1.0, bootstrap);
      const auto oracle =
          brute_force_advantages(traj.rewards, traj.values, traj.dones, 0.97, bootstrap);
      for (std::size_t t = 0; t < 50; ++t) {
        REQUIRE_THAT(gae.advantages[t], WithinAbs(oracle[t], 1e-10));
      }
    }
  }
  SECTION("length mismatch is rejected") {
    const std::vector<double> r{1.0, 2.0}, v{0.0};
    const std::vector<unsigned char> d{0, 0};
    REQUIRE_THROWS_AS(compute_gae(r, v, d, 0.9, 0.9, 0.0), std::invalid_argument);
  }
}

TEST_CASE("policy entropy closed form") {
  RngStream init(6);
  auto policy = make_policy_model(4, 15, {8}, init);
  // log_std starts at zero: H = 15 * (0 + 0.5*ln(2*pi*e)) ~ 21.28
  REQUIRE_THAT(policy_entropy(policy), WithinAbs(15.0 * 0.5 * std::log(2.0 * M_PI * std::exp(1.0)),
                                                 1e-10));
  std::fill(policy.log_std.begin(), policy.log_std.end(), -1.0);
  REQUIRE_THAT(policy_entropy(policy), WithinAbs(15.0 * (-1.0 + 1.4189385332046727), 1e-9));
}

TEST_CASE("ppo_update first-pass properties") {
  RngStream init(7);
  PolicyModel policy = make_policy_model(2, 1, {16}, init);
  OptimState optim = make_optim_state(detail::policy_layout(policy).total(), 3e-4);

  RngStream rng(8);
  Trajectory traj = random_trajectory(128, rng);
  // log-probs consistent with the current policy, so first-pass ratios are 1
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto mean = mean_action(policy, traj.observations[i]);
    traj.log_probs[i] = gaussian_log_density(traj.actions[i], mean, policy.log_std);
    traj.values[i] = value_estimate(policy, traj.observations[i]);
  }
  const auto gae = compute_gae(traj.rewards, traj.values, traj.dones, 0.99, 0.95, 0.0);
  traj.advantages = gae.advantages;
  traj.returns = gae.returns;

  PpoConfig cfg;
  cfg.update_epochs = 1;
  cfg.minibatch_size = 128;  // one full-batch pass
  const auto report = ppo_update(policy, optim, traj, cfg, rng);

  // with ratios exactly 1 and normalized advantages, -mean(min(A, A)) ~ 0
  REQUIRE(std::abs(report.policy_gradient_loss) < 0.1);
  REQUIRE(report.clip_fraction == 0.0);
  REQUIRE(report.epochs_run == 1);
  REQUIRE_THAT(report.entropy_loss, WithinAbs(-policy_entropy(policy), 1e-12));
}

TEST_CASE("ppo_update with zero advantages leaves the mean unchanged") {
  RngStream init(9);
  PolicyModel policy = make_policy_model(2, 1, {8}, init);
  const auto before = mean_action(policy, std::vector<double>{0.3, -0.3});
  OptimState optim = make_optim_state(detail::policy_layout(policy).total(), 1e-3);

  RngStream rng(10);
  Trajectory traj = random_trajectory(64, rng);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto mean = mean_action(policy, traj.observations[i]);
    traj.log_probs[i] = gaussian_log_density(traj.actions[i], mean, policy.log_std);
  }
  traj.advantages.assign(64, 0.0);
  traj.returns = traj.values;  // value gradient also vanishes

  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  cfg.update_epochs = 3;
  const auto report = ppo_update(policy, optim, traj, cfg, rng);
  const auto after = mean_action(policy, std::vector<double>{0.3, -0.3});
  REQUIRE_THAT(after[0], WithinAbs(before[0], 1e-9));
  REQUIRE(report.clip_fraction >= 0.0);
  REQUIRE(report.clip_fraction <= 1.0);
}

TEST_CASE("approx-KL guard holds under the default config") {
  BanditEnv env;
  PpoConfig cfg;
  cfg.total_timesteps = 4096;
  cfg.rollout_horizon = 512;
  cfg.hidden = {32, 32};
  RngStream rng(11);
  // train and re-run the updates by hand to watch the kl (covered via report)
  PolicyModel policy = make_policy_model(1, 1, cfg.hidden, rng);
  OptimState optim = make_optim_state(detail::policy_layout(policy).total(), cfg.learning_rate);
  RngStream env_rng(12), act_rng(13), upd_rng(14);
  std::vector<double> obs = env.reset(env_rng);
  for (int iter = 0; iter < 8; ++iter) {
    Trajectory traj;
    for (int h = 0; h < cfg.rollout_horizon; ++h) {
      const auto sample = select_action(policy, obs, act_rng);
      auto sr = env.step(sample.action, env_rng);
      traj.observations.push_back(obs);
      traj.actions.push_back(sample.action);
      traj.log_probs.push_back(sample.log_prob);
      traj.rewards.push_back(sr.reward);
      traj.values.push_back(sample.value);
      traj.dones.push_back(1);
      obs = env.reset(env_rng);
    }
    const auto gae = compute_gae(traj.rewards, traj.values, traj.dones, cfg.gamma,
                                 cfg.gae_lambda, 0.0);
    traj.advantages = gae.advantages;
    traj.returns = gae.returns;
    const auto report = ppo_update(policy, optim, traj, cfg, upd_rng);
    REQUIRE(report.approx_kl <= 0.2);
  }
}

TEST_CASE("bandit toy converges to the reward peak") {
  BanditEnv env;
  PpoConfig cfg;
  cfg.total_timesteps = 20000;
  cfg.rollout_horizon = 2048;
  cfg.hidden = {32, 32};
  RngStream rng(15);
  const auto result = train_ppo(env, cfg, rng);
  const auto mean = mean_action(result.policy, std::vector<double>{0.0});
  REQUIRE_THAT(mean[0], WithinAbs(0.3, 0.05));

  SECTION("metrics cadence and finiteness") {
    REQUIRE(result.metrics.size() == 10);  // 20000 / 2048 rounds up to 10 rollouts
    for (const auto& row : result.metrics) {
      REQUIRE(std::isfinite(row.mean_episode_reward));
      REQUIRE(std::isfinite(row.policy_gradient_loss));
      REQUIRE(std::isfinite(row.entropy_loss));
      REQUIRE(row.clip_fraction >= 0.0);
      REQUIRE(row.clip_fraction <= 1.0);
    }
  }
}

TEST_CASE("train_ppo is deterministic under a fixed seed") {
  BanditEnv env_a, env_b;
  PpoConfig cfg;
  cfg.total_timesteps = 1024;
  cfg.rollout_horizon = 256;
  cfg.hidden = {8};
  RngStream ra(16), rb(16);
  const auto a = train_ppo(env_a, cfg, ra);
  const auto b = train_ppo(env_b, cfg, rb);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    REQUIRE(a.metrics[i].mean_episode_reward == b.metrics[i].mean_episode_reward);
    REQUIRE(a.metrics[i].policy_gradient_loss == b.metrics[i].policy_gradient_loss);
  }
  REQUIRE(a.policy.log_std == b.policy.log_std);
}

TEST_CASE("policy checkpoint round trip") {
  RngStream init(17);
  const auto policy = make_policy_model(5, 3, {16, 16}, init);
  const auto restored = policy_from_json(policy_to_json(policy));
  const std::vector<double> obs{0.1, 0.2, 0.3, 0.4, 0.5};
  REQUIRE(mean_action(policy, obs) == mean_action(restored, obs));
  REQUIRE(value_estimate(policy, obs) == value_estimate(restored, obs));
}
