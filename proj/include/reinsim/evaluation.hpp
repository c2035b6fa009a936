#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reinsim/parallel.hpp"
#include "reinsim/ppo.hpp"
#include "reinsim/rl_env.hpp"
#include "reinsim/rng.hpp"
#include "reinsim/surplus.hpp"

namespace reinsim {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double d_location = 0.0;  // claim amount where the CDF gap peaks
};

// Asymptotic Kolmogorov tail probability Q(lambda) = 2 sum (-1)^(k-1) e^(-2 k^2 lambda^2),
// truncated at 100 terms.
inline double kolmogorov_asymptotic_p(double statistic, std::size_t n_a, std::size_t n_b) {
  if (statistic <= 0.0) return 1.0;
  const double n_eff = static_cast<double>(n_a) * static_cast<double>(n_b) /
                       static_cast<double>(n_a + n_b);
  const double lambda = std::sqrt(n_eff) * statistic;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Two-sample KS statistic over the merged support, the smallest location
/// achieving the supremum, and the asymptotic p-value with effective size
/// n_a*n_b/(n_a+n_b). The CDF gap is compared in exact integer arithmetic
/// (|i*nb - j*na|), so ties between locations resolve by position rather
/// than by rounding noise.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks samples must be nonempty");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t na = sa.size(), nb = sb.size();
  std::size_t i = 0, j = 0;
  long long best_num = -1;
  double best_loc = sa.front();
  while (i < na || j < nb) {
    const double x = (i < na && (j >= nb || sa[i] <= sb[j])) ? sa[i] : sb[j];
    while (i < na && sa[i] == x) ++i;
    while (j < nb && sb[j] == x) ++j;
    const long long gap_num = std::abs(static_cast<long long>(i * nb) -
                                       static_cast<long long>(j * na));
    if (gap_num > best_num) {
      best_num = gap_num;
      best_loc = x;
    }
  }
  KsResult out;
  out.statistic = static_cast<double>(best_num) / static_cast<double>(na * nb);
  out.d_location = best_loc;
  out.p_value = kolmogorov_asymptotic_p(out.statistic, na, nb);
  return out;
}

struct HistogramSeries {
  std::vector<double> bin_edges;  // n_bins + 1
  std::vector<double> density_a;
  std::vector<double> density_b;
};

// Shared-edge, density-normalized histograms (each series integrates to 1).
inline HistogramSeries shared_histogram(std::span<const double> a, std::span<const double> b,
                                        int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("need at least one bin");
  if (a.empty() || b.empty()) throw std::invalid_argument("histogram samples must be nonempty");
  double lo = a.front(), hi = a.front();
  for (const double x : a) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  for (const double x : b) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi <= lo) hi = lo + 1.0;
  HistogramSeries h;
  h.bin_edges.resize(n_bins + 1);
  const double width = (hi - lo) / n_bins;
  for (int k = 0; k <= n_bins; ++k) h.bin_edges[k] = lo + width * k;
  h.density_a.assign(n_bins, 0.0);
  h.density_b.assign(n_bins, 0.0);
  const auto accumulate = [&](std::span<const double> xs, std::vector<double>& dens) {
    for (const double x : xs) {
      int k = static_cast<int>((x - lo) / width);
      k = std::clamp(k, 0, n_bins - 1);
      dens[k] += 1.0;
    }
    const double norm = 1.0 / (static_cast<double>(xs.size()) * width);
    for (double& d : dens) d *= norm;
  };
  accumulate(a, h.density_a);
  accumulate(b, h.density_b);
  return h;
}

struct DistributionReport {
  KsResult ks;
  HistogramSeries histogram;
};

inline DistributionReport distribution_report(std::span<const double> training,
                                              std::span<const double> generated,
                                              int n_bins = 50) {
  return {ks_two_sample(training, generated), shared_histogram(training, generated, n_bins)};
}

struct PolicyEvalResult {
  std::vector<double> finals;
  std::vector<unsigned char> ruined;
  std::vector<double> costs;  // cumulative reinsurance cost per episode
  double mean_final = 0.0;
  RuinEstimate ruin;
  double mean_cost = 0.0;
};

/// Rolls the policy through n_paths episodes (split streams keyed by path
/// index). `deterministic` uses the policy mean; otherwise actions are
/// sampled from the Gaussian head.
inline PolicyEvalResult evaluate_policy(const PolicyModel& policy, const EnvConfig& cfg,
                                        std::size_t n_paths, const RngStream& rng,
                                        bool deterministic = true, int threads = 1) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  PolicyEvalResult out;
  out.finals.resize(n_paths);
  out.ruined.resize(n_paths);
  out.costs.resize(n_paths);
  const Environment proto(cfg);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    Environment env = proto;
    RngStream env_rng = rng.split(2 * i);
    RngStream act_rng = rng.split(2 * i + 1);
    std::vector<double> obs = env.reset(env_rng);
    bool done = false;
    while (!done) {
      const std::vector<double> action =
          deterministic ? mean_action(policy, obs)
                        : select_action(policy, obs, act_rng).action;
      auto sr = env.step(action, env_rng);
      done = sr.done;
      obs = std::move(sr.observation);
    }
    out.finals[i] = env.state().surplus;
    out.ruined[i] = env.state().surplus < cfg.episode.ruin_threshold ? 1 : 0;
    out.costs[i] = env.state().cumulative_cost;
  });
  std::size_t ruined = 0;
  double sum = 0.0, cost_sum = 0.0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    ruined += out.ruined[i];
    sum += out.finals[i];
    cost_sum += out.costs[i];
  }
  out.mean_final = sum / static_cast<double>(n_paths);
  out.mean_cost = cost_sum / static_cast<double>(n_paths);
  out.ruin = binomial_ruin_estimate(ruined, n_paths);
  return out;
}

struct OosReport {
  double mean_surplus = 0.0;
  double ruin_probability = 0.0;
  std::vector<double> final_surpluses;
  KsResult claim_comparison;      // training-spec sample vs out-of-sample claims
  HistogramSeries claim_histogram;
};

/// Evaluates the frozen policy on an environment whose claims come from a
/// distribution not used in training, and compares the two claim models.
inline OosReport out_of_sample_eval(const PolicyModel& policy, const EnvConfig& oos_cfg,
                                    const ClaimDistributionSpec& training_spec,
                                    std::size_t n_paths, const RngStream& rng,
                                    int threads = 1, std::size_t comparison_samples = 10000,
                                    int histogram_bins = 50) {
  const auto eval = evaluate_policy(policy, oos_cfg, n_paths, rng.split(0), true, threads);
  OosReport report;
  report.mean_surplus = eval.mean_final;
  report.ruin_probability = eval.ruin.probability;
  report.final_surpluses = eval.finals;
  RngStream cmp_rng = rng.split(1);
  const auto train_sample = sample_claim_sizes(training_spec, comparison_samples, cmp_rng);
  std::vector<double> oos_sample;
  if (oos_cfg.claims.kind == ClaimSourceKind::Parametric) {
    oos_sample = sample_claim_sizes(oos_cfg.claims.spec, comparison_samples, cmp_rng);
  } else {
    oos_sample = generate_claims(*oos_cfg.claims.model, comparison_samples, cmp_rng);
  }
  report.claim_comparison = ks_two_sample(train_sample, oos_sample);
  report.claim_histogram = shared_histogram(train_sample, oos_sample, histogram_bins);
  return report;
}

struct SensitivityRow {
  double mu = 0.0;
  double sigma = 0.0;
  double mean_surplus = 0.0;
  double ruin_probability = 0.0;
};

/// One out-of-sample evaluation per (mu, sigma) cell, deterministic per cell
/// index. `cells` is an explicit list so non-rectangular grids are exact.
inline std::vector<SensitivityRow> sensitivity_sweep(
    const PolicyModel& policy, const EnvConfig& base_cfg,
    std::span<const std::pair<double, double>> cells, std::size_t n_paths,
    const RngStream& rng, int threads = 1) {
  if (cells.empty()) throw std::invalid_argument("sensitivity grid must be nonempty");
  std::vector<SensitivityRow> rows;
  rows.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    EnvConfig cfg = base_cfg;
    cfg.claims.kind = ClaimSourceKind::Parametric;
    cfg.claims.model.reset();
    cfg.claims.spec = ClaimDistributionSpec::make_lognormal(cells[c].first, cells[c].second);
    const auto eval = evaluate_policy(policy, cfg, n_paths, rng.split(c), true, threads);
    rows.push_back({cells[c].first, cells[c].second, eval.mean_final, eval.ruin.probability});
  }
  return rows;
}

inline std::vector<std::pair<double, double>> cross_grid(std::span<const double> mu_grid,
                                                         std::span<const double> sigma_grid) {
  std::vector<std::pair<double, double>> cells;
  for (const double mu : mu_grid)
    for (const double sigma : sigma_grid) cells.emplace_back(mu, sigma);
  return cells;
}

struct StressReport {
  std::string scenario;
  double mean_surplus = 0.0;
  double ruin_probability = 0.0;
  std::array<double, 5> surplus_quantiles{};  // p5, p25, p50, p75, p95
};

inline StressReport stress_test(const PolicyModel& policy, const EnvConfig& cfg,
                                const StressScenario& scenario, std::size_t n_paths,
                                const RngStream& rng, int threads = 1) {
  validate(scenario);
  EnvConfig stressed = cfg;
  stressed.stress = scenario;
  const auto eval = evaluate_policy(policy, stressed, n_paths, rng, true, threads);
  StressReport report;
  report.scenario = scenario.name;
  report.mean_surplus = eval.mean_final;
  report.ruin_probability = eval.ruin.probability;
  std::vector<double> sorted = eval.finals;
  std::sort(sorted.begin(), sorted.end());
  const std::array<double, 5> qs{0.05, 0.25, 0.50, 0.75, 0.95};
  for (std::size_t k = 0; k < qs.size(); ++k) {
    const double pos = qs[k] * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - lo;
    report.surplus_quantiles[k] = sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
  }
  return report;
}

// Default scenarios; magnitudes are config-level choices.
inline std::vector<StressScenario> bundled_stress_scenarios(double expected_claim) {
  StressScenario high_frequency;
  high_frequency.name = "high_frequency";
  high_frequency.frequency_multiplier = 2.0;

  StressScenario pandemic;
  pandemic.name = "pandemic";
  pandemic.frequency_multiplier = 1.5;
  pandemic.severity_multiplier = 1.5;
  pandemic.window_fraction = 0.2;

  StressScenario catastrophe;
  catastrophe.name = "catastrophe";
  catastrophe.shock = CatastropheShock{std::nullopt, 50.0 * expected_claim};

  return {high_frequency, pandemic, catastrophe};
}

}  // namespace reinsim
