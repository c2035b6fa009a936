#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "reinsim/rl_env.hpp"

using namespace reinsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

EnvConfig table_config() {
  EnvConfig cfg;
  cfg.episode = {10.0, 200, 20000.0, 0.0};
  cfg.constraints = {0.05, 150000.0, 0.2, 0.5};
  cfg.frequency = {10.0};
  cfg.premium = {0.1, 600.58};
  cfg.base_program = make_layered_program({{0.0, 42.66, 0.5, 0.2},
                                           {42.66, 76.83, 0.5, 0.2},
                                           {76.83, 119.29, 0.5, 0.2},
                                           {119.29, 235.10, 0.5, 0.2},
                                           {235.10, 435.21, 0.5, 0.2}});
  cfg.claims.kind = ClaimSourceKind::Parametric;
  cfg.claims.spec = ClaimDistributionSpec::make_lognormal(3.5, 1.0);
  return cfg;
}

std::vector<double> zero_action(const Environment& env) {
  return std::vector<double>(env.action_size(), 0.0);
}

}  // namespace

TEST_CASE("reset produces the documented observation") {
  Environment env(table_config());
  RngStream rng(1);
  const auto obs = env.reset(rng);

  REQUIRE(env.observation_size() == 2 + 3 * 5);
  REQUIRE(obs.size() == 17);
  REQUIRE(obs[0] == 1.0);                          // S0 / S0
  REQUIRE_THAT(obs[1], WithinAbs(1.0, 1e-12));     // lambda / lambda_ref
  for (int k = 0; k < 5; ++k) REQUIRE(obs[2 + k] == 0.5);
  REQUIRE_THAT(obs[7], WithinAbs(0.0, 1e-12));     // first attachment / M
  REQUIRE_THAT(obs[12], WithinAbs(42.66 / 1000.0, 1e-12));

  SECTION("same seed, same observation") {
    Environment env2(table_config());
    RngStream a(9), b(9);
    REQUIRE(env.reset(a) == env2.reset(b));
  }
  SECTION("doubling the surplus doubles the first entry") {
    auto cfg = table_config();
    EnvState state;
    state.surplus = 2.0 * cfg.episode.initial_surplus;
    state.lambda = cfg.frequency.lambda;
    state.program = cfg.base_program;
    REQUIRE(observe(state, cfg)[0] == 2.0);
  }
}

TEST_CASE("step mechanics") {
  SECTION("reward is ln(epsilon)-shifted at the threshold") {
    // with S - threshold = 0 and eps = 1, reward must be ln(1) = 0
    auto cfg = table_config();
    cfg.episode.initial_surplus = 0.0;
    cfg.episode.ruin_threshold = 0.0;
    cfg.premium.rate = 0.0;
    cfg.frequency.lambda = 1e-12;  // effectively claim-free
    for (auto& l : cfg.base_program.layers) l.retention = 0.5;
    Environment env(cfg);
    RngStream rng(3);
    env.reset(rng);
    const auto sr = env.step(zero_action(env), rng);
    // surplus drifts only by -cost; reward = ln(max(S,0)+1) ~ ln(1) when cost ~ 0
    REQUIRE_THAT(sr.reward, WithinAbs(0.0, 1e-3));
  }
  SECTION("zero action in a claim-free interval is pure drift") {
    auto cfg = table_config();
    cfg.frequency.lambda = 1e-12;
    Environment env(cfg);
    RngStream rng(4);
    env.reset(rng);
    const double s0 = env.state().surplus;
    env.step(zero_action(env), rng);
    const double dt = cfg.episode.dt();
    const double cost = env.state().cumulative_cost;
    REQUIRE_THAT(env.state().surplus, WithinAbs(s0 + cfg.premium.rate * dt - cost, 1e-9));
    REQUIRE(cost > 0.0);  // half-ceded program costs something
  }
  SECTION("ruin ends the episode") {
    auto cfg = table_config();
    cfg.episode.initial_surplus = -1000.0;  // first claimless step still below threshold
    cfg.premium.rate = 0.0;
    Environment env(cfg);
    RngStream rng(5);
    env.reset(rng);
    const auto sr = env.step(zero_action(env), rng);
    REQUIRE(sr.done);
    REQUIRE(env.state().t == 1);
    REQUIRE_THROWS_AS(env.step(zero_action(env), rng), std::logic_error);
  }
  SECTION("episode length is bounded by n_steps") {
    auto cfg = table_config();
    cfg.episode.n_steps = 7;
    Environment env(cfg);
    RngStream rng(6);
    env.reset(rng);
    int steps = 0;
    bool done = false;
    while (!done) {
      done = env.step(zero_action(env), rng).done;
      ++steps;
    }
    REQUIRE(steps <= 7);
  }
}

TEST_CASE("program stays valid under arbitrary action streams") {
  auto cfg = table_config();
  Environment env(cfg);
  RngStream rng(7);
  auto obs = env.reset(rng);
  RngStream action_rng(8);
  bool done = false;
  double total_reward = 0.0;
  while (!done) {
    std::vector<double> action(env.action_size());
    for (auto& a : action) a = action_rng.uniform(-50.0, 50.0);  // wild actions
    const auto sr = env.step(action, rng);
    REQUIRE(validate_program(env.state().program, cfg.constraints).empty());
    REQUIRE(sr.observation.size() == 17);
    REQUIRE(std::isfinite(sr.reward));
    total_reward += sr.reward;
    done = sr.done;
  }
  REQUIRE(std::isfinite(total_reward));
  REQUIRE(env.state().cumulative_cost <= cfg.budget_max + 1e-6);
}

TEST_CASE("rollouts are reproducible under fixed seeds") {
  auto cfg = table_config();
  Environment a(cfg), b(cfg);
  RngStream ra(11), rb(11);
  auto oa = a.reset(ra), ob = b.reset(rb);
  for (int i = 0; i < 25; ++i) {
    std::vector<double> action(a.action_size(), 0.1);
    const auto sa = a.step(action, ra);
    const auto sb = b.step(action, rb);
    REQUIRE(sa.observation == sb.observation);
    REQUIRE(sa.reward == sb.reward);
    if (sa.done) break;
  }
}

TEST_CASE("reset after done leaks no state") {
  auto cfg = table_config();
  cfg.episode.n_steps = 3;
  Environment env(cfg);
  RngStream rng(12);
  env.reset(rng);
  std::vector<double> push_action(env.action_size(), 10.0);  // drive program off base
  while (!env.step(push_action, rng).done) {
  }
  RngStream fresh(12);
  const auto obs = env.reset(fresh);
  REQUIRE(env.state().t == 0);
  REQUIRE(env.state().cumulative_cost == 0.0);
  REQUIRE(obs[0] == 1.0);
  for (std::size_t k = 0; k < cfg.base_program.size(); ++k) {
    REQUIRE(env.state().program.layers[k].retention == 0.5);
  }
}

TEST_CASE("generative claim source drives the surplus") {
  auto cfg = table_config();
  RngStream init(13);
  auto model = std::make_shared<VaeModel>();
  model->latent_dim = 2;
  model->encoder = make_dense_net({1, 4, 4}, {Activation::Relu, Activation::Identity}, init);
  model->decoder = make_dense_net({2, 4, 1}, {Activation::Relu, Activation::Identity}, init);
  model->norm_shift = 3.5;
  model->norm_scale = 1.0;
  cfg.claims.kind = ClaimSourceKind::Generative;
  cfg.claims.model = model;
  Environment env(cfg);
  RngStream rng(14);
  env.reset(rng);
  int claims_seen = 0;
  for (int i = 0; i < 50; ++i) {
    env.step(zero_action(env), rng);
    claims_seen += env.trace().back().claims_count;
  }
  REQUIRE(claims_seen > 0);  // lambda*dt = 0.5 over 50 steps
}

TEST_CASE("stress overlays") {
  SECTION("catastrophe shock lands exactly once at the configured step") {
    auto cfg = table_config();
    cfg.frequency.lambda = 1e-12;
    cfg.stress.name = "catastrophe";
    cfg.stress.shock = CatastropheShock{2, 5000.0};
    Environment env(cfg);
    RngStream rng(15);
    env.reset(rng);
    for (int i = 0; i < 5; ++i) env.step(zero_action(env), rng);
    REQUIRE(env.trace()[2].claims_count == 1);
    REQUIRE(env.trace()[0].claims_count == 0);
    REQUIRE_THAT(env.trace()[2].retained_sum + env.trace()[2].ceded_sum,
                 WithinAbs(5000.0, 1e-9));
  }
  SECTION("windowed multipliers stay inside the window") {
    auto cfg = table_config();
    cfg.episode.n_steps = 10;
    cfg.stress.frequency_multiplier = 3.0;
    cfg.stress.window_fraction = 0.5;
    Environment env(cfg);
    RngStream rng(16);
    env.reset(rng);
    const int start = env.state().stress_window_start;
    const int len = env.state().stress_window_len;
    REQUIRE(len == 5);
    REQUIRE(start >= 0);
    REQUIRE(start + len <= 10);
  }
  SECTION("invalid multipliers are rejected") {
    auto cfg = table_config();
    cfg.stress.frequency_multiplier = 0.0;
    REQUIRE_THROWS_AS(Environment(cfg), std::invalid_argument);
  }
}

TEST_CASE("trace CSV mirrors the surplus export with actions applied") {
  auto cfg = table_config();
  cfg.episode.n_steps = 4;
  Environment env(cfg);
  RngStream rng(17);
  env.reset(rng);
  while (!env.step(zero_action(env), rng).done) {
  }
  std::ostringstream out;
  env.write_trace_csv(out);
  REQUIRE(out.str().rfind("step,time,surplus,claims_count,retained_sum,ceded_sum,cost", 0) == 0);
}
