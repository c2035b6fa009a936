#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "reinsim/claims.hpp"
#include "reinsim/contracts.hpp"
#include "reinsim/csv.hpp"
#include "reinsim/parallel.hpp"
#include "reinsim/rng.hpp"

namespace reinsim {

struct EpisodeConfig {
  double horizon_years = 10.0;
  int n_steps = 200;
  double initial_surplus = 20000.0;
  double ruin_threshold = 0.0;

  double dt() const { return horizon_years / n_steps; }
};

inline void validate(const EpisodeConfig& cfg) {
  if (cfg.n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  if (!(cfg.horizon_years > 0.0)) throw std::invalid_argument("horizon must be > 0");
  if (!std::isfinite(cfg.initial_surplus) || !std::isfinite(cfg.ruin_threshold)) {
    throw std::invalid_argument("episode currency values must be finite");
  }
}

struct StepRecord {
  int claims_count = 0;
  double retained_sum = 0.0;
  double ceded_sum = 0.0;
  double cost = 0.0;
};

/// One simulated surplus trajectory. `values` has n_steps + 1 entries; ruin
/// is an absorbing flag recorded at the first crossing while the path runs
/// to the horizon.
struct SurplusPath {
  std::vector<double> values;
  bool ruined = false;
  std::optional<int> ruin_step;
  double total_reinsurance_cost = 0.0;
  std::vector<StepRecord> steps;

  double final_surplus() const { return values.back(); }
};

// One step of the surplus recursion: premium income minus retained claims
// minus the reinsurance cost charged to this interval.
inline double step_surplus(double surplus, double premium_rate, double dt,
                           std::span<const double> retained_claims,
                           double reinsurance_cost_step) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  double claims = 0.0;
  for (const double r : retained_claims) claims += r;
  return surplus + premium_rate * dt - claims - reinsurance_cost_step;
}

/// Simulates a full path under a static program. The reinsurance premium is
/// priced once by Monte Carlo and charged uniformly per step.
inline SurplusPath simulate_path(const EpisodeConfig& cfg, const LayeredProgram& program,
                                 const PremiumSpec& premium, const FrequencySpec& freq,
                                 const ClaimDistributionSpec& spec, RngStream& rng,
                                 std::size_t premium_mc_samples = 2048) {
  validate(cfg);
  require_valid_program(program);
  RngStream pricing_rng = rng.split(0);
  RngStream claims_rng = rng.split(1);
  const double total_premium = reinsurance_premium(program, spec, freq, cfg.horizon_years,
                                                   premium_mc_samples, pricing_rng);
  const double cost_step = total_premium / cfg.n_steps;
  const double dt = cfg.dt();

  SurplusPath path;
  path.values.reserve(cfg.n_steps + 1);
  path.steps.reserve(cfg.n_steps);
  double surplus = cfg.initial_surplus;
  path.values.push_back(surplus);
  if (surplus < cfg.ruin_threshold) {
    path.ruined = true;
    path.ruin_step = 0;
  }
  std::vector<double> retained;
  for (int i = 0; i < cfg.n_steps; ++i) {
    const int count = sample_claim_count(freq, dt, claims_rng);
    const auto sizes = sample_claim_sizes(spec, count, claims_rng);
    retained.clear();
    double gross = 0.0;
    for (const double x : sizes) {
      retained.push_back(retained_loss_layered(program, x));
      gross += x;
    }
    surplus = step_surplus(surplus, premium.rate, dt, retained, cost_step);
    const double retained_sum = std::accumulate(retained.begin(), retained.end(), 0.0);
    path.values.push_back(surplus);
    path.steps.push_back({count, retained_sum, gross - retained_sum, cost_step});
    if (!path.ruined && surplus < cfg.ruin_threshold) {
      path.ruined = true;
      path.ruin_step = i + 1;
    }
  }
  path.total_reinsurance_cost = cost_step * cfg.n_steps;
  return path;
}

struct RuinEstimate {
  double probability = 0.0;
  double ci_half_width = 0.0;  // 95% normal approximation
};

inline RuinEstimate binomial_ruin_estimate(std::size_t ruined, std::size_t n_paths) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  const double p = static_cast<double>(ruined) / static_cast<double>(n_paths);
  const double half = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n_paths));
  return {p, half};
}

struct EnsembleStats {
  std::vector<double> finals;
  std::vector<unsigned char> ruined;
  double mean_final = 0.0;
  RuinEstimate ruin;
};

/// Simulates n_paths independent paths (split streams keyed by path index,
/// merged by index) and summarizes finals and ruin frequency.
inline EnsembleStats simulate_ensemble(const EpisodeConfig& cfg, const LayeredProgram& program,
                                       const PremiumSpec& premium, const FrequencySpec& freq,
                                       const ClaimDistributionSpec& spec, std::size_t n_paths,
                                       const RngStream& rng, int threads = 1,
                                       std::size_t premium_mc_samples = 2048) {
  EnsembleStats stats;
  stats.finals.resize(n_paths);
  stats.ruined.resize(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    RngStream path_rng = rng.split(i);
    const SurplusPath path =
        simulate_path(cfg, program, premium, freq, spec, path_rng, premium_mc_samples);
    stats.finals[i] = path.final_surplus();
    stats.ruined[i] = path.ruined ? 1 : 0;
  });
  std::size_t ruined = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    ruined += stats.ruined[i];
    sum += stats.finals[i];
  }
  stats.mean_final = sum / static_cast<double>(n_paths);
  stats.ruin = binomial_ruin_estimate(ruined, n_paths);
  return stats;
}

inline RuinEstimate estimate_ruin_probability(const EpisodeConfig& cfg,
                                              const LayeredProgram& program,
                                              const PremiumSpec& premium,
                                              const FrequencySpec& freq,
                                              const ClaimDistributionSpec& spec,
                                              std::size_t n_paths, const RngStream& rng,
                                              int threads = 1) {
  return simulate_ensemble(cfg, program, premium, freq, spec, n_paths, rng, threads).ruin;
}

inline void write_path_csv(std::ostream& out, const EpisodeConfig& cfg, const SurplusPath& path) {
  CsvWriter csv(out);
  csv.field("step").field("time").field("surplus").field("claims_count")
      .field("retained_sum").field("ceded_sum").field("cost");
  csv.end_row();
  csv.field(0).field(0.0).field(path.values[0]).field(0).field(0.0).field(0.0).field(0.0);
  csv.end_row();
  for (std::size_t i = 0; i < path.steps.size(); ++i) {
    const StepRecord& rec = path.steps[i];
    csv.field(i + 1)
        .field(cfg.dt() * static_cast<double>(i + 1))
        .field(path.values[i + 1])
        .field(rec.claims_count)
        .field(rec.retained_sum)
        .field(rec.ceded_sum)
        .field(rec.cost);
    csv.end_row();
  }
}

}  // namespace reinsim
