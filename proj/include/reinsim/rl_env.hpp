#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reinsim/claims.hpp"
#include "reinsim/contracts.hpp"
#include "reinsim/csv.hpp"
#include "reinsim/rng.hpp"
#include "reinsim/surplus.hpp"
#include "reinsim/vae.hpp"

namespace reinsim {

struct CatastropheShock {
  std::optional<int> step;  // nullopt: a uniformly random step per episode
  double amount = 0.0;
};

/// Claim-process overlay for stress experiments. Multipliers apply inside a
/// contiguous window covering `window_fraction` of the steps (placed at a
/// random start per episode; 1.0 covers the whole horizon).
struct StressScenario {
  std::string name = "baseline";
  double frequency_multiplier = 1.0;
  double severity_multiplier = 1.0;
  double window_fraction = 1.0;
  std::optional<CatastropheShock> shock;
};

inline void validate(const StressScenario& s) {
  if (!(s.frequency_multiplier > 0.0) || !(s.severity_multiplier > 0.0)) {
    throw std::invalid_argument("stress multipliers must be > 0");
  }
  if (!(s.window_fraction > 0.0 && s.window_fraction <= 1.0)) {
    throw std::invalid_argument("window fraction must be in (0,1]");
  }
}

enum class ClaimSourceKind { Parametric, Generative };

struct ClaimSource {
  ClaimSourceKind kind = ClaimSourceKind::Parametric;
  ClaimDistributionSpec spec;
  std::shared_ptr<const VaeModel> model;  // required when generative
};

struct ActionScales {
  double retention_delta_max = 0.05;  // per-step |delta| on retention, from base
  double boundary_delta_frac = 0.02;  // per-step |delta| on boundaries, fraction of cap
};

struct EnvConfig {
  EpisodeConfig episode;
  ConstraintSet constraints;
  FrequencySpec frequency;
  PremiumSpec premium;
  LayeredProgram base_program;
  ClaimSource claims;
  ActionScales action_scales;
  double epsilon = 1.0;
  double normalization_cap = 1000.0;  // M, for boundary observations and deltas
  double lambda_ref = 10.0;
  double budget_max = 150000.0;
  double variability_penalty = 0.0;  // optional |dS|/S0 coefficient, off by default
  std::size_t pricing_samples = 2048;
  std::uint64_t pricing_seed = 7;
  StressScenario stress;
};

inline void validate(const EnvConfig& cfg) {
  validate(cfg.episode);
  validate(cfg.constraints);
  validate(cfg.frequency);
  validate(cfg.stress);
  require_valid_program(cfg.base_program);
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(cfg.normalization_cap > 0.0)) throw std::invalid_argument("normalization cap must be > 0");
  if (!(cfg.lambda_ref > 0.0)) throw std::invalid_argument("lambda_ref must be > 0");
  if (cfg.pricing_samples < 1) throw std::invalid_argument("pricing_samples must be >= 1");
  if (cfg.claims.kind == ClaimSourceKind::Generative && !cfg.claims.model) {
    throw std::invalid_argument("generative claim source needs a model");
  }
  if (cfg.claims.kind == ClaimSourceKind::Parametric) validate(cfg.claims.spec);
}

struct EnvState {
  int t = 0;
  double surplus = 0.0;
  double lambda = 0.0;  // effective intensity visible to the agent
  LayeredProgram program;
  double cumulative_cost = 0.0;
  bool done = false;
  int stress_window_start = 0;
  int stress_window_len = 0;
  std::optional<int> catastrophe_step;
  double catastrophe_amount = 0.0;
};

/// Normalized observation: [S/S0, lambda/lambda_ref, retentions,
/// attachments/M, exhaustions/M], length 2 + 3K.
inline std::vector<double> observe(const EnvState& state, const EnvConfig& cfg) {
  std::vector<double> obs;
  const std::size_t k_layers = state.program.size();
  obs.reserve(2 + 3 * k_layers);
  obs.push_back(state.surplus / cfg.episode.initial_surplus);
  obs.push_back(state.lambda / cfg.lambda_ref);
  for (const Layer& l : state.program.layers) obs.push_back(l.retention);
  for (const Layer& l : state.program.layers) obs.push_back(l.attachment / cfg.normalization_cap);
  for (const Layer& l : state.program.layers) obs.push_back(l.exhaustion / cfg.normalization_cap);
  return obs;
}

struct EnvStepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
};

struct TraceRow {
  int step = 0;
  double time = 0.0;
  double surplus = 0.0;
  int claims_count = 0;
  double retained_sum = 0.0;
  double ceded_sum = 0.0;
  double cost = 0.0;
};

/// Sequential reinsurance environment: actions adjust the layered program
/// around its base snapshot, claims arrive from the configured source, and
/// the reward is the stabilized log of surplus clearance over the ruin
/// threshold.
class Environment {
 public:
  explicit Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    RngStream pricing_rng(cfg_.pricing_seed);
    std::vector<double> draws =
        cfg_.claims.kind == ClaimSourceKind::Parametric
            ? sample_claim_sizes(cfg_.claims.spec, cfg_.pricing_samples, pricing_rng)
            : generate_claims(*cfg_.claims.model, cfg_.pricing_samples, pricing_rng);
    pricing_ = std::make_shared<SeveritySample>(std::move(draws));
  }

  int observation_size() const {
    return 2 + 3 * static_cast<int>(cfg_.base_program.size());
  }
  int action_size() const { return 3 * static_cast<int>(cfg_.base_program.size()); }

  const EnvConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }
  const std::vector<TraceRow>& trace() const { return trace_; }

  std::vector<double> reset(RngStream& rng) {
    state_ = EnvState{};
    state_.surplus = cfg_.episode.initial_surplus;
    state_.program = cfg_.base_program;
    const int n = cfg_.episode.n_steps;
    state_.stress_window_len =
        std::min(n, static_cast<int>(std::lround(cfg_.stress.window_fraction * n)));
    if (state_.stress_window_len < n) {
      state_.stress_window_start = static_cast<int>(
          rng.uniform_index(static_cast<std::uint64_t>(n - state_.stress_window_len + 1)));
    }
    if (cfg_.stress.shock) {
      state_.catastrophe_step =
          cfg_.stress.shock->step
              ? cfg_.stress.shock->step
              : std::optional<int>(static_cast<int>(rng.uniform_index(n)));
      state_.catastrophe_amount = cfg_.stress.shock->amount;
    }
    state_.lambda = effective_lambda(0);
    trace_.clear();
    return observe(state_, cfg_);
  }

  EnvStepResult step(std::span<const double> action, RngStream& rng) {
    if (state_.done) throw std::logic_error("step called on a finished episode");
    if (static_cast<int>(action.size()) != action_size()) {
      throw std::invalid_argument("action length must be 3K");
    }
    const std::size_t k_layers = cfg_.base_program.size();
    DynamicAdjustment adj;
    adj.delta_retention.resize(k_layers);
    adj.delta_attachment.resize(k_layers);
    adj.delta_exhaustion.resize(k_layers);
    const double boundary_scale = cfg_.action_scales.boundary_delta_frac * cfg_.normalization_cap;
    for (std::size_t k = 0; k < k_layers; ++k) {
      adj.delta_retention[k] = cfg_.action_scales.retention_delta_max * std::tanh(action[k]);
      adj.delta_attachment[k] = boundary_scale * std::tanh(action[k_layers + k]);
      adj.delta_exhaustion[k] = boundary_scale * std::tanh(action[2 * k_layers + k]);
    }
    LayeredProgram program = apply_dynamic_adjustment(state_.program, adj, cfg_.constraints);
    double cost_step = reprice_step_cost(program);

    // Budget projection: scale ceded shares down until the step cost fits
    // what is left, within retention bounds.
    const double remaining = cfg_.budget_max - state_.cumulative_cost;
    if (cost_step > remaining && cost_step > 0.0) {
      const double shrink = std::max(remaining, 0.0) / cost_step;
      for (Layer& layer : program.layers) {
        const double ceded = (1.0 - layer.retention) * shrink;
        layer.retention = std::clamp(1.0 - ceded, cfg_.constraints.retention_lo,
                                     cfg_.constraints.retention_hi);
      }
      cost_step = reprice_step_cost(program);
    }

    const int t = state_.t;
    const bool in_window = t >= state_.stress_window_start &&
                           t < state_.stress_window_start + state_.stress_window_len;
    const double dt = cfg_.episode.dt();
    const double lambda_eff = effective_lambda(t);
    const int count = sample_poisson(lambda_eff * dt, rng);
    std::vector<double> sizes =
        cfg_.claims.kind == ClaimSourceKind::Parametric
            ? sample_claim_sizes(cfg_.claims.spec, count, rng)
            : generate_claims(*cfg_.claims.model, count, rng);
    if (in_window && cfg_.stress.severity_multiplier != 1.0) {
      for (double& x : sizes) x *= cfg_.stress.severity_multiplier;
    }
    if (state_.catastrophe_step && *state_.catastrophe_step == t) {
      sizes.push_back(state_.catastrophe_amount);
    }
    std::vector<double> retained(sizes.size());
    double gross = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      retained[i] = retained_loss_layered(program, sizes[i]);
      gross += sizes[i];
    }
    const double prev_surplus = state_.surplus;
    const double surplus = step_surplus(prev_surplus, cfg_.premium.rate, dt, retained, cost_step);
    const double clearance = std::max(surplus - cfg_.episode.ruin_threshold, 0.0);
    double reward = std::log(clearance + cfg_.epsilon);
    if (cfg_.variability_penalty > 0.0) {
      reward -= cfg_.variability_penalty * std::abs(surplus - prev_surplus) /
                cfg_.episode.initial_surplus;
    }

    state_.t = t + 1;
    state_.surplus = surplus;
    state_.program = std::move(program);
    state_.cumulative_cost += cost_step;
    state_.lambda = effective_lambda(std::min(state_.t, cfg_.episode.n_steps - 1));
    const bool ruined = surplus < cfg_.episode.ruin_threshold;
    state_.done = ruined || state_.t >= cfg_.episode.n_steps;

    double retained_sum = 0.0;
    for (const double r : retained) retained_sum += r;
    trace_.push_back({state_.t, dt * state_.t, surplus, static_cast<int>(sizes.size()),
                      retained_sum, gross - retained_sum, cost_step});
    return {observe(state_, cfg_), reward, state_.done};
  }

  void write_trace_csv(std::ostream& out) const {
    CsvWriter csv(out);
    csv.field("step").field("time").field("surplus").field("claims_count")
        .field("retained_sum").field("ceded_sum").field("cost");
    csv.end_row();
    for (const TraceRow& row : trace_) {
      csv.field(row.step).field(row.time).field(row.surplus).field(row.claims_count)
          .field(row.retained_sum).field(row.ceded_sum).field(row.cost);
      csv.end_row();
    }
  }

 private:
  double effective_lambda(int t) const {
    const bool in_window = t >= state_.stress_window_start &&
                           t < state_.stress_window_start + state_.stress_window_len;
    return cfg_.frequency.lambda * (in_window ? cfg_.stress.frequency_multiplier : 1.0);
  }

  // Premium for the program over the full horizon, charged per step.
  // Priced against the frozen severity sample and the contractual intensity.
  double reprice_step_cost(const LayeredProgram& program) const {
    const double total = program_premium(program, *pricing_, cfg_.frequency.lambda,
                                         cfg_.episode.horizon_years);
    return total / cfg_.episode.n_steps;
  }

  EnvConfig cfg_;
  std::shared_ptr<const SeveritySample> pricing_;
  EnvState state_;
  std::vector<TraceRow> trace_;
};

}  // namespace reinsim
