#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reinsim/claims.hpp"
#include "reinsim/contracts.hpp"
#include "reinsim/evaluation.hpp"
#include "reinsim/nnet.hpp"
#include "reinsim/parallel.hpp"
#include "reinsim/ppo.hpp"
#include "reinsim/rl_env.hpp"
#include "reinsim/rng.hpp"
#include "reinsim/surplus.hpp"

namespace reinsim {

struct BenchmarkResult {
  std::string method;
  double final_surplus = 0.0;  // mean over evaluation paths
  double ruin_probability = 0.0;
  double wall_seconds = 0.0;
  std::optional<double> budget_utilization;  // mean reinsurance spend; absent for baselines
  double efficiency = 0.0;
};

inline double efficiency(double final_surplus, double seconds) {
  if (!(seconds > 0.0)) throw std::invalid_argument("seconds must be > 0");
  return final_surplus / seconds;
}

struct DpSettings {
  int surplus_buckets = 64;
  int retention_actions = 11;
  int quadrature_samples = 64;
  double grid_margin = 1.25;  // grid top as multiple of S0 + premium income
};

struct McSettings {
  int candidates = 200;
  int search_paths = 100;
};

struct HybridMcSettings {
  int pool = 200;
  int phase1_paths = 20;
  double top_fraction = 0.1;
  int surrogate_epochs = 300;
  double surrogate_learning_rate = 1e-2;
  std::vector<int> surrogate_hidden{32, 32};
};

struct MoSettings {
  int retention_grid = 7;
  int scale_grid = 5;
  double scale_lo = 0.5;
  double scale_hi = 2.0;
  double w_surplus = 1.0;
  double w_ruin = 20000.0;
};

/// Shared experiment description consumed by every baseline: one episode
/// config, one claim model, and one evaluation seed set for fairness.
struct BaselineSpec {
  EpisodeConfig episode;
  FrequencySpec frequency;
  ClaimDistributionSpec severity;
  PremiumSpec premium;
  ConstraintSet constraints;
  LayeredProgram base_program;
  double proportional_loading = 0.2;  // reinsurer loading for the DP contract
  std::size_t eval_paths = 100;
  std::uint64_t eval_seed = 1000;
  std::uint64_t search_seed = 2000;
  std::size_t premium_mc_samples = 2048;
  int threads = 0;
  DpSettings dp;
  McSettings mc;
  HybridMcSettings hybrid_mc;
  MoSettings mo;
};

namespace detail {

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline EnsembleStats evaluate_program(const BaselineSpec& spec, const LayeredProgram& program,
                                      std::size_t n_paths, std::uint64_t seed) {
  return simulate_ensemble(spec.episode, program, spec.premium, spec.frequency, spec.severity,
                           n_paths, RngStream(seed), spec.threads, spec.premium_mc_samples);
}

inline BenchmarkResult finalize_result(std::string method, const EnsembleStats& eval,
                                       double seconds) {
  BenchmarkResult r;
  r.method = std::move(method);
  r.final_surplus = eval.mean_final;
  r.ruin_probability = eval.ruin.probability;
  r.wall_seconds = seconds;
  r.efficiency = efficiency(eval.mean_final, seconds);
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dynamic programming over a discretized (step, surplus) grid with a
// proportional retention action. Ruin is absorbing with value zero; the
// terminal value is the surplus itself.
// ---------------------------------------------------------------------------

struct DpModel {
  std::vector<double> surplus_grid;
  std::vector<double> retention_grid;
  std::vector<std::vector<double>> value;    // [step][bucket], step 0..n
  std::vector<std::vector<int>> best_action; // [step][bucket], step 0..n-1
};

inline DpModel dp_value_iteration(const BaselineSpec& spec) {
  const DpSettings& dp = spec.dp;
  if (dp.surplus_buckets < 2 || dp.retention_actions < 1) {
    throw std::invalid_argument("degenerate dp grids");
  }
  validate(spec.episode);
  const int n_steps = spec.episode.n_steps;
  const double dt = spec.episode.dt();
  const double threshold = spec.episode.ruin_threshold;
  const double mean_claim = expected_claim_size(spec.severity);

  DpModel model;
  model.surplus_grid.resize(dp.surplus_buckets);
  const double grid_lo = threshold;
  const double grid_hi =
      (spec.episode.initial_surplus + spec.premium.rate * spec.episode.horizon_years) *
      dp.grid_margin;
  for (int b = 0; b < dp.surplus_buckets; ++b) {
    model.surplus_grid[b] =
        grid_lo + (grid_hi - grid_lo) * b / static_cast<double>(dp.surplus_buckets - 1);
  }
  model.retention_grid.resize(dp.retention_actions);
  for (int a = 0; a < dp.retention_actions; ++a) {
    const double frac = dp.retention_actions == 1
                            ? 1.0
                            : a / static_cast<double>(dp.retention_actions - 1);
    model.retention_grid[a] =
        spec.constraints.retention_lo +
        (spec.constraints.retention_hi - spec.constraints.retention_lo) * frac;
  }

  // Shared atoms of the interval claim total, one draw set for all states.
  std::vector<double> claim_totals(dp.quadrature_samples);
  {
    RngStream atom_rng = RngStream(spec.search_seed).split(777);
    for (auto& z : claim_totals) {
      const int count = sample_poisson(spec.frequency.lambda * dt, atom_rng);
      const auto sizes = sample_claim_sizes(spec.severity, count, atom_rng);
      z = std::accumulate(sizes.begin(), sizes.end(), 0.0);
    }
  }

  const auto interpolate = [&](const std::vector<double>& values, double s) {
    if (s < threshold) return 0.0;  // ruin absorbs at zero value
    const auto& grid = model.surplus_grid;
    if (s >= grid.back()) return values.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), s);
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    const double frac = (s - grid[lo]) / (grid[hi] - grid[lo]);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };

  model.value.assign(n_steps + 1, std::vector<double>(dp.surplus_buckets, 0.0));
  model.best_action.assign(n_steps, std::vector<int>(dp.surplus_buckets, 0));
  model.value[n_steps] = model.surplus_grid;  // terminal payoff = surplus

  for (int t = n_steps - 1; t >= 0; --t) {
    const auto& next = model.value[t + 1];
    for (int b = 0; b < dp.surplus_buckets; ++b) {
      const double s = model.surplus_grid[b];
      double best = -1.0;
      int best_a = 0;
      for (int a = 0; a < dp.retention_actions; ++a) {
        const double alpha = model.retention_grid[a];
        const double cost_rate = (1.0 + spec.proportional_loading) * (1.0 - alpha) *
                                 spec.frequency.lambda * mean_claim;
        double acc = 0.0;
        for (const double z : claim_totals) {
          const double s_next = s + spec.premium.rate * dt - alpha * z - cost_rate * dt;
          acc += interpolate(next, s_next);
        }
        acc /= static_cast<double>(claim_totals.size());
        if (acc > best) {
          best = acc;
          best_a = a;
        }
      }
      model.value[t][b] = best;
      model.best_action[t][b] = best_a;
    }
  }
  return model;
}

inline BenchmarkResult run_dp_baseline(const BaselineSpec& spec) {
  detail::WallTimer timer;
  const DpModel model = dp_value_iteration(spec);
  const double dt = spec.episode.dt();
  const double mean_claim = expected_claim_size(spec.severity);

  // Greedy forward evaluation on the shared evaluation seeds.
  EnsembleStats stats;
  stats.finals.resize(spec.eval_paths);
  stats.ruined.resize(spec.eval_paths);
  const RngStream eval_rng(spec.eval_seed);
  const auto bucket_of = [&](double s) {
    const auto& grid = model.surplus_grid;
    const auto it = std::upper_bound(grid.begin(), grid.end(), s);
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    if (hi == 0) return std::size_t{0};
    return std::min(hi - 1, grid.size() - 1);
  };
  parallel_for(spec.eval_paths, spec.threads, [&](std::size_t i) {
    RngStream path_rng = eval_rng.split(i);
    RngStream claims_rng = path_rng.split(1);  // mirrors simulate_path stream layout
    double s = spec.episode.initial_surplus;
    bool ruined = s < spec.episode.ruin_threshold;
    for (int t = 0; t < spec.episode.n_steps; ++t) {
      const double alpha = model.retention_grid[model.best_action[t][bucket_of(s)]];
      const double cost_rate = (1.0 + spec.proportional_loading) * (1.0 - alpha) *
                               spec.frequency.lambda * mean_claim;
      const int count = sample_claim_count(spec.frequency, dt, claims_rng);
      const auto sizes = sample_claim_sizes(spec.severity, count, claims_rng);
      double retained = 0.0;
      for (const double x : sizes) retained += alpha * x;
      s += spec.premium.rate * dt - retained - cost_rate * dt;
      if (s < spec.episode.ruin_threshold) ruined = true;
    }
    stats.finals[i] = s;
    stats.ruined[i] = ruined ? 1 : 0;
  });
  std::size_t ruined = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < spec.eval_paths; ++i) {
    ruined += stats.ruined[i];
    sum += stats.finals[i];
  }
  stats.mean_final = sum / static_cast<double>(spec.eval_paths);
  stats.ruin = binomial_ruin_estimate(ruined, spec.eval_paths);
  return detail::finalize_result("dynamic_programming", stats, timer.seconds());
}

// ---------------------------------------------------------------------------
// Random search over static layered programs, optionally accelerated by a
// surplus-prediction surrogate (the hybrid deep variant).
// ---------------------------------------------------------------------------

// Candidate programs are keyed by index, so growing the pool never changes
// earlier candidates.
inline LayeredProgram random_candidate_program(const BaselineSpec& spec, std::uint64_t index) {
  RngStream rng = RngStream(spec.search_seed).split(index);
  const std::size_t k_layers = spec.base_program.size();
  const double base_top = spec.base_program.base.back().exhaustion;
  const double span = base_top * rng.uniform(0.5, 2.0);
  std::vector<double> cuts(k_layers);
  for (double& c : cuts) c = rng.uniform(0.05, 1.0);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Layer> layers(k_layers);
  double attachment = 0.0;
  for (std::size_t k = 0; k < k_layers; ++k) {
    layers[k].attachment = attachment;
    layers[k].exhaustion = std::max(cuts[k] * span, attachment + kMinLayerWidth);
    layers[k].retention =
        rng.uniform(spec.constraints.retention_lo, spec.constraints.retention_hi);
    layers[k].loading = spec.base_program.base[k].loading;
    attachment = layers[k].exhaustion;
  }
  return make_layered_program(std::move(layers));
}

namespace detail {

struct McEngineSettings {
  int candidates = 0;
  int full_paths = 0;
  bool use_surrogate = false;
  int phase1_paths = 0;
  double top_fraction = 0.1;
  int surrogate_epochs = 0;
  double surrogate_learning_rate = 1e-2;
  std::vector<int> surrogate_hidden;
};

struct ScoredCandidate {
  std::size_t index = 0;
  double score = 0.0;
  double ruin = 0.0;
};

inline std::vector<double> program_features(const LayeredProgram& p, double scale) {
  std::vector<double> f;
  f.reserve(3 * p.size());
  for (const Layer& l : p.layers) {
    f.push_back(l.retention);
    f.push_back(l.attachment / scale);
    f.push_back(l.exhaustion / scale);
  }
  return f;
}

inline std::vector<ScoredCandidate> score_candidates(const BaselineSpec& spec,
                                                     const std::vector<std::size_t>& indices,
                                                     int n_paths, std::uint64_t seed) {
  std::vector<ScoredCandidate> scored(indices.size());
  parallel_for(indices.size(), spec.threads, [&](std::size_t i) {
    const LayeredProgram program = random_candidate_program(spec, indices[i]);
    const EnsembleStats stats =
        simulate_ensemble(spec.episode, program, spec.premium, spec.frequency, spec.severity,
                          n_paths, RngStream(seed), 1, spec.premium_mc_samples);
    scored[i] = {indices[i], stats.mean_final, stats.ruin.probability};
  });
  return scored;
}

// Small value-prediction net fit on phase-1 scores. Targets are z-scored.
inline DenseNet fit_surrogate(const BaselineSpec& spec,
                              const std::vector<std::vector<double>>& features,
                              const std::vector<double>& targets, double& target_shift,
                              double& target_scale) {
  const HybridMcSettings& h = spec.hybrid_mc;
  target_shift = std::accumulate(targets.begin(), targets.end(), 0.0) / targets.size();
  double var = 0.0;
  for (const double t : targets) var += (t - target_shift) * (t - target_shift);
  target_scale = std::max(std::sqrt(var / targets.size()), 1e-9);

  std::vector<int> sizes{static_cast<int>(features.front().size())};
  sizes.insert(sizes.end(), h.surrogate_hidden.begin(), h.surrogate_hidden.end());
  sizes.push_back(1);
  std::vector<Activation> acts(sizes.size() - 2, Activation::Tanh);
  acts.push_back(Activation::Identity);
  RngStream init_rng = RngStream(spec.search_seed).split(31337);
  DenseNet net = make_dense_net(sizes, acts, init_rng);
  OptimState optim = make_optim_state(net.parameter_count(), h.surrogate_learning_rate);
  NetGradients grads = make_gradients(net);
  ForwardCache cache;
  const double inv = 1.0 / static_cast<double>(features.size());
  for (int epoch = 0; epoch < h.surrogate_epochs; ++epoch) {
    zero_gradients(grads);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto out = forward(net, features[i], &cache);
      const double target = (targets[i] - target_shift) / target_scale;
      const double d_out[1] = {2.0 * (out[0] - target) * inv};
      backward_accumulate(net, cache, d_out, grads);
    }
    std::vector<double> params = get_parameters(net);
    std::vector<double> flat;
    flat.reserve(params.size());
    append_gradients(grads, flat);
    optim_step(optim, params, flat);
    set_parameters(net, params);
  }
  return net;
}

inline BenchmarkResult run_mc_engine(const BaselineSpec& spec, const McEngineSettings& engine,
                                     std::string method_name) {
  if (engine.candidates < 1) throw std::invalid_argument("need at least one candidate");
  WallTimer timer;

  std::vector<std::size_t> all(engine.candidates);
  std::iota(all.begin(), all.end(), 0);

  std::vector<ScoredCandidate> full_scores;
  if (!engine.use_surrogate) {
    full_scores = score_candidates(spec, all, engine.full_paths, spec.search_seed);
  } else {
    // Phase 1: cheap scores + surrogate fit.
    const auto cheap = score_candidates(spec, all, engine.phase1_paths, spec.search_seed);
    std::vector<std::vector<double>> features;
    std::vector<double> targets;
    features.reserve(cheap.size());
    const double scale = spec.base_program.base.back().exhaustion * 2.0;
    for (const auto& c : cheap) {
      features.push_back(program_features(random_candidate_program(spec, c.index), scale));
      targets.push_back(c.score);
    }
    double shift = 0.0, tscale = 1.0;
    const DenseNet surrogate = fit_surrogate(spec, features, targets, shift, tscale);
    // Phase 2: re-evaluate only the top predicted fraction with full paths.
    std::vector<std::pair<double, std::size_t>> predicted(cheap.size());
    for (std::size_t i = 0; i < cheap.size(); ++i) {
      predicted[i] = {forward(surrogate, features[i])[0], cheap[i].index};
    }
    std::sort(predicted.begin(), predicted.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::size_t keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(engine.top_fraction * predicted.size())));
    std::vector<std::size_t> shortlist;
    shortlist.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) shortlist.push_back(predicted[i].second);
    std::sort(shortlist.begin(), shortlist.end());
    full_scores = score_candidates(spec, shortlist, engine.full_paths, spec.search_seed);
  }

  // Feasible (ruin within target) best by mean surplus; fall back to the
  // best overall if nothing is feasible.
  const ScoredCandidate* best = nullptr;
  for (const auto& c : full_scores) {
    if (c.ruin <= spec.constraints.psi_target && (!best || c.score > best->score)) best = &c;
  }
  if (!best) {
    for (const auto& c : full_scores) {
      if (!best || c.score > best->score) best = &c;
    }
  }
  const LayeredProgram chosen = random_candidate_program(spec, best->index);
  const EnsembleStats eval = evaluate_program(spec, chosen, spec.eval_paths, spec.eval_seed);
  return finalize_result(std::move(method_name), eval, timer.seconds());
}

}  // namespace detail

inline BenchmarkResult run_monte_carlo(const BaselineSpec& spec) {
  detail::McEngineSettings engine;
  engine.candidates = spec.mc.candidates;
  engine.full_paths = spec.mc.search_paths;
  engine.use_surrogate = false;
  return detail::run_mc_engine(spec, engine, "monte_carlo");
}

inline BenchmarkResult run_hybrid_deep_mc(const BaselineSpec& spec, bool use_surrogate = true) {
  detail::McEngineSettings engine;
  engine.candidates = spec.hybrid_mc.pool;
  engine.full_paths = spec.mc.search_paths;
  engine.use_surrogate = use_surrogate;
  engine.phase1_paths = spec.hybrid_mc.phase1_paths;
  engine.top_fraction = spec.hybrid_mc.top_fraction;
  engine.surrogate_epochs = spec.hybrid_mc.surrogate_epochs;
  engine.surrogate_learning_rate = spec.hybrid_mc.surrogate_learning_rate;
  engine.surrogate_hidden = spec.hybrid_mc.surrogate_hidden;
  return detail::run_mc_engine(spec, engine, "hybrid_deep_monte_carlo");
}

// ---------------------------------------------------------------------------
// Multi-objective grid scan over (uniform retention, boundary scale).
// ---------------------------------------------------------------------------

struct MoFrontierPoint {
  double mean_surplus = 0.0;
  double ruin_probability = 0.0;
};

inline LayeredProgram scaled_program(const LayeredProgram& base, double retention,
                                     double boundary_scale) {
  std::vector<Layer> layers = base.base;
  for (Layer& l : layers) {
    l.retention = retention;
    l.attachment *= boundary_scale;
    l.exhaustion = std::max(l.exhaustion * boundary_scale, l.attachment + kMinLayerWidth);
  }
  return make_layered_program(std::move(layers));
}

inline BenchmarkResult run_multi_objective(const BaselineSpec& spec, double w_surplus,
                                           double w_ruin,
                                           std::vector<MoFrontierPoint>* frontier = nullptr) {
  if (!(w_surplus >= 0.0) || !(w_ruin >= 0.0) || (w_surplus == 0.0 && w_ruin == 0.0)) {
    throw std::invalid_argument("objective weights must be >= 0 and not both zero");
  }
  const MoSettings& mo = spec.mo;
  detail::WallTimer timer;
  std::vector<std::pair<double, double>> cells;
  for (int i = 0; i < mo.retention_grid; ++i) {
    const double frac = mo.retention_grid == 1 ? 0.0 : i / static_cast<double>(mo.retention_grid - 1);
    const double retention = spec.constraints.retention_lo +
                             (spec.constraints.retention_hi - spec.constraints.retention_lo) * frac;
    for (int k = 0; k < mo.scale_grid; ++k) {
      const double sfrac = mo.scale_grid == 1 ? 0.0 : k / static_cast<double>(mo.scale_grid - 1);
      cells.emplace_back(retention, mo.scale_lo + (mo.scale_hi - mo.scale_lo) * sfrac);
    }
  }
  std::vector<MoFrontierPoint> points(cells.size());
  parallel_for(cells.size(), spec.threads, [&](std::size_t i) {
    const LayeredProgram program =
        scaled_program(spec.base_program, cells[i].first, cells[i].second);
    const EnsembleStats stats =
        simulate_ensemble(spec.episode, program, spec.premium, spec.frequency, spec.severity,
                          spec.mc.search_paths, RngStream(spec.search_seed), 1,
                          spec.premium_mc_samples);
    points[i] = {stats.mean_final, stats.ruin.probability};
  });
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double score = w_surplus * points[i].mean_surplus - w_ruin * points[i].ruin_probability;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  if (frontier) {
    frontier->clear();
    for (std::size_t i = 0; i < points.size(); ++i) {
      bool dominated = false;
      for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
        if (j == i) continue;
        const bool better_or_equal = points[j].mean_surplus >= points[i].mean_surplus &&
                                     points[j].ruin_probability <= points[i].ruin_probability;
        const bool strictly_better = points[j].mean_surplus > points[i].mean_surplus ||
                                     points[j].ruin_probability < points[i].ruin_probability;
        dominated = better_or_equal && strictly_better;
      }
      if (!dominated) frontier->push_back(points[i]);
    }
  }
  const LayeredProgram chosen =
      scaled_program(spec.base_program, cells[best].first, cells[best].second);
  const EnsembleStats eval = detail::evaluate_program(spec, chosen, spec.eval_paths, spec.eval_seed);
  return detail::finalize_result("multi_objective", eval, timer.seconds());
}

// ---------------------------------------------------------------------------
// Hybrid RL: evaluate the trained policy in its environment on the shared
// evaluation seeds. The only method that reports budget utilization.
// ---------------------------------------------------------------------------

inline BenchmarkResult run_hybrid_rl(const BaselineSpec& spec, const PolicyModel& policy,
                                     const EnvConfig& env_cfg, bool deterministic = true) {
  detail::WallTimer timer;
  const PolicyEvalResult eval = evaluate_policy(policy, env_cfg, spec.eval_paths,
                                                RngStream(spec.eval_seed), deterministic,
                                                spec.threads);
  BenchmarkResult r;
  r.method = "hybrid_rl_generative";
  r.final_surplus = eval.mean_final;
  r.ruin_probability = eval.ruin.probability;
  r.wall_seconds = timer.seconds();
  r.budget_utilization = eval.mean_cost;
  r.efficiency = efficiency(eval.mean_final, r.wall_seconds);
  return r;
}

}  // namespace reinsim
