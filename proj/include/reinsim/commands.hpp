#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reinsim/benchmarks.hpp"
#include "reinsim/config.hpp"
#include "reinsim/csv.hpp"
#include "reinsim/evaluation.hpp"
#include "reinsim/ppo.hpp"
#include "reinsim/rl_env.hpp"
#include "reinsim/vae.hpp"

namespace reinsim {

namespace fs = std::filesystem;

inline EnvConfig make_env_config(const ExperimentConfig& cfg, ClaimSource claims) {
  EnvConfig env;
  env.episode = cfg.episode;
  env.constraints = config_constraints(cfg);
  env.frequency = cfg.frequency;
  env.premium = config_premium(cfg);
  env.base_program = config_program(cfg);
  env.claims = std::move(claims);
  env.action_scales = {cfg.env.retention_delta_max, cfg.env.boundary_delta_frac};
  env.epsilon = cfg.env.epsilon;
  env.normalization_cap = cfg.env.normalization_cap;
  env.lambda_ref = cfg.env.lambda_ref;
  env.budget_max = cfg.program.budget_max;
  env.variability_penalty = cfg.env.variability_penalty;
  env.pricing_samples = cfg.env.pricing_samples;
  env.pricing_seed = mix64(cfg.seed ^ 0x5ca1ab1eULL);
  return env;
}

inline BaselineSpec make_baseline_spec(const ExperimentConfig& cfg) {
  BaselineSpec spec;
  spec.episode = cfg.episode;
  spec.frequency = cfg.frequency;
  spec.severity = cfg.severity;
  spec.premium = config_premium(cfg);
  spec.constraints = config_constraints(cfg);
  spec.base_program = config_program(cfg);
  spec.proportional_loading = cfg.benchmarks.proportional_loading;
  spec.eval_paths = cfg.benchmarks.eval_paths;
  spec.eval_seed = cfg.benchmarks.eval_seed;
  spec.search_seed = cfg.benchmarks.search_seed;
  spec.premium_mc_samples = cfg.env.pricing_samples;
  spec.threads = cfg.threads;
  spec.dp = cfg.benchmarks.dp;
  spec.mc = cfg.benchmarks.mc;
  spec.hybrid_mc = cfg.benchmarks.hybrid_mc;
  spec.mo = cfg.benchmarks.mo;
  return spec;
}

namespace detail {

inline nlohmann::json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path.string());
  nlohmann::json j;
  in >> j;
  return j;
}

inline RunMetadata begin_run(const std::string& command, const ExperimentConfig& cfg,
                             const fs::path& dir) {
  RunMetadata meta;
  meta.command = command;
  meta.config_snapshot = config_to_json(cfg);
  meta.seed = cfg.seed;
  meta.started_at = iso8601_now();
  fs::create_directories(dir);
  write_metadata(dir, meta);
  return meta;
}

inline void finish_run(RunMetadata& meta, const fs::path& dir,
                       std::vector<std::string> outputs) {
  meta.outputs = std::move(outputs);
  meta.finished_at = iso8601_now();
  write_metadata(dir, meta);
}

inline std::string ks_json(const KsResult& ks) {
  return nlohmann::json{{"statistic", ks.statistic},
                        {"p_value", ks.p_value},
                        {"d_location", ks.d_location}}
      .dump(2);
}

inline std::string histogram_csv(const HistogramSeries& h, const std::string& series_a,
                                 const std::string& series_b) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.field("bin_lo").field("bin_hi").field(series_a + "_density").field(series_b + "_density");
  csv.end_row();
  for (std::size_t k = 0; k + 1 < h.bin_edges.size(); ++k) {
    csv.field(h.bin_edges[k]).field(h.bin_edges[k + 1]).field(h.density_a[k]).field(h.density_b[k]);
    csv.end_row();
  }
  return out.str();
}

}  // namespace detail

/// Samples training claims, trains the VAE, and writes the checkpoint, the
/// loss history, and a training-vs-generated distribution report.
inline void cmd_train_vae(const ExperimentConfig& cfg, const fs::path& out_dir) {
  RunMetadata meta = detail::begin_run("train-vae", cfg, out_dir);
  RngStream rng(cfg.seed);
  RngStream data_rng = rng.split(100);
  const auto claims = sample_claim_sizes(cfg.severity, cfg.vae_training_claims, data_rng);
  RngStream train_rng = rng.split(101);
  VaeTrainResult trained = train_vae(claims, cfg.vae, train_rng);

  write_text_file(out_dir / "vae_model.json", vae_to_json(trained.model).dump() + "\n");
  {
    std::ostringstream out;
    CsvWriter csv(out);
    csv.field("epoch").field("total").field("reconstruction").field("kl");
    csv.end_row();
    for (const auto& row : trained.history) {
      csv.field(row.epoch).field(row.total).field(row.reconstruction).field(row.kl);
      csv.end_row();
    }
    write_text_file(out_dir / "vae_loss.csv", out.str());
  }
  RngStream gen_rng = rng.split(102);
  const auto generated = generate_claims(trained.model, cfg.evaluation.ks_samples, gen_rng);
  const DistributionReport report =
      distribution_report(claims, generated, cfg.evaluation.histogram_bins);
  write_text_file(out_dir / "ks_report.json", detail::ks_json(report.ks) + "\n");
  write_text_file(out_dir / "claims_histogram.csv",
                  detail::histogram_csv(report.histogram, "training", "generated"));
  detail::finish_run(meta, out_dir,
                     {"vae_model.json", "vae_loss.csv", "ks_report.json", "claims_histogram.csv"});
}

inline std::string metrics_csv(const std::vector<TrainMetricsRow>& metrics) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.field("timesteps").field("mean_episode_reward").field("policy_gradient_loss")
      .field("entropy_loss").field("value_loss").field("clip_fraction");
  csv.end_row();
  for (const auto& row : metrics) {
    csv.field(row.timesteps).field(row.mean_episode_reward).field(row.policy_gradient_loss)
        .field(row.entropy_loss).field(row.value_loss).field(row.clip_fraction);
    csv.end_row();
  }
  return out.str();
}

/// Trains the PPO agent, on VAE claims when a checkpoint is given and on the
/// parametric model otherwise. Emits the policy checkpoint and the training
/// metrics table.
inline PpoTrainResult cmd_train_agent(const ExperimentConfig& cfg, const fs::path& out_dir,
                                      const std::optional<fs::path>& vae_checkpoint) {
  RunMetadata meta = detail::begin_run("train-agent", cfg, out_dir);
  ClaimSource source;
  if (vae_checkpoint) {
    source.kind = ClaimSourceKind::Generative;
    source.model =
        std::make_shared<VaeModel>(vae_from_json(detail::load_json_file(*vae_checkpoint)));
  } else {
    source.kind = ClaimSourceKind::Parametric;
    source.spec = cfg.severity;
  }
  Environment env(make_env_config(cfg, std::move(source)));
  RngStream rng = RngStream(cfg.seed).split(200);
  PpoTrainResult result = train_ppo(env, cfg.ppo, rng);
  write_text_file(out_dir / "policy.json", policy_to_json(result.policy).dump() + "\n");
  write_text_file(out_dir / "training_metrics.csv", metrics_csv(result.metrics));
  detail::finish_run(meta, out_dir, {"policy.json", "training_metrics.csv"});
  return result;
}

inline std::string benchmark_csv(const std::vector<BenchmarkResult>& rows) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.field("method").field("final_surplus").field("ruin_probability").field("time_seconds")
      .field("budget_utilization").field("efficiency");
  csv.end_row();
  for (const auto& row : rows) {
    csv.field(row.method).field(row.final_surplus).field(row.ruin_probability)
        .field(row.wall_seconds)
        .field(row.budget_utilization ? format_double(*row.budget_utilization)
                                      : std::string("NA"))
        .field(row.efficiency);
    csv.end_row();
  }
  return out.str();
}

struct BenchmarkRun {
  std::vector<BenchmarkResult> results;
  std::vector<MoFrontierPoint> frontier;
};

/// Runs the requested baseline methods plus the hybrid RL agent under one
/// shared evaluation seed set. An empty `methods` list runs all five.
inline BenchmarkRun cmd_benchmark(const ExperimentConfig& cfg, const fs::path& out_dir,
                                  const std::optional<fs::path>& policy_checkpoint,
                                  std::vector<std::string> methods = {}) {
  RunMetadata meta = detail::begin_run("benchmark", cfg, out_dir);
  if (methods.empty()) methods = {"dp", "mc", "hybrid_mc", "mo", "rl"};
  const auto wants = [&](const std::string& m) {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
  };
  for (const auto& m : methods) {
    if (m != "dp" && m != "mc" && m != "hybrid_mc" && m != "mo" && m != "rl") {
      throw ConfigError("unknown benchmark method: " + m);
    }
  }
  const BaselineSpec spec = make_baseline_spec(cfg);
  BenchmarkRun run;

  if (wants("dp")) run.results.push_back(run_dp_baseline(spec));
  if (wants("mc")) run.results.push_back(run_monte_carlo(spec));
  if (wants("hybrid_mc")) run.results.push_back(run_hybrid_deep_mc(spec));
  if (wants("mo")) {
    run.results.push_back(
        run_multi_objective(spec, spec.mo.w_surplus, spec.mo.w_ruin, &run.frontier));
  }
  if (wants("rl")) {
    PolicyModel policy;
    std::shared_ptr<const VaeModel> vae_model;
    if (policy_checkpoint) {
      policy = policy_from_json(detail::load_json_file(*policy_checkpoint));
      const fs::path vae_path = policy_checkpoint->parent_path() / "vae_model.json";
      if (fs::exists(vae_path)) {
        vae_model = std::make_shared<VaeModel>(vae_from_json(detail::load_json_file(vae_path)));
      }
    }
    if (!vae_model) {
      // Inline hybrid pipeline: train the generative model, then the agent.
      RngStream rng(cfg.seed);
      RngStream data_rng = rng.split(100);
      const auto claims = sample_claim_sizes(cfg.severity, cfg.vae_training_claims, data_rng);
      RngStream vae_rng = rng.split(101);
      vae_model = std::make_shared<VaeModel>(train_vae(claims, cfg.vae, vae_rng).model);
    }
    ClaimSource source;
    source.kind = ClaimSourceKind::Generative;
    source.model = vae_model;
    const EnvConfig env_cfg = make_env_config(cfg, std::move(source));
    if (!policy_checkpoint) {
      Environment env(env_cfg);
      RngStream rng = RngStream(cfg.seed).split(200);
      policy = train_ppo(env, cfg.ppo, rng).policy;
    }
    run.results.push_back(run_hybrid_rl(spec, policy, env_cfg));
  }

  write_text_file(out_dir / "benchmark_results.csv", benchmark_csv(run.results));
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : run.results) {
    nlohmann::json row = {{"method", r.method},
                          {"final_surplus", r.final_surplus},
                          {"ruin_probability", r.ruin_probability},
                          {"time_seconds", r.wall_seconds},
                          {"efficiency", r.efficiency}};
    if (r.budget_utilization) row["budget_utilization"] = *r.budget_utilization;
    jr.push_back(row);
  }
  nlohmann::json frontier = nlohmann::json::array();
  for (const auto& p : run.frontier) {
    frontier.push_back({{"mean_surplus", p.mean_surplus}, {"ruin_probability", p.ruin_probability}});
  }
  const nlohmann::json report = {{"results", jr},
                                 {"multi_objective_frontier", frontier},
                                 {"eval_seed", cfg.benchmarks.eval_seed},
                                 {"search_seed", cfg.benchmarks.search_seed},
                                 {"eval_paths", cfg.benchmarks.eval_paths}};
  write_text_file(out_dir / "benchmark_report.json", report.dump(2) + "\n");
  detail::finish_run(meta, out_dir, {"benchmark_results.csv", "benchmark_report.json"});
  return run;
}

inline EnvConfig make_oos_env_config(const ExperimentConfig& cfg, double mu, double sigma) {
  ClaimSource source;
  source.kind = ClaimSourceKind::Parametric;
  source.spec = ClaimDistributionSpec::make_lognormal(mu, sigma);
  EnvConfig env = make_env_config(cfg, std::move(source));
  env.episode.ruin_threshold = cfg.evaluation.ruin_threshold;
  return env;
}

inline void cmd_evaluate_oos(const ExperimentConfig& cfg, const fs::path& out_dir,
                             const fs::path& policy_path) {
  RunMetadata meta = detail::begin_run("evaluate-oos", cfg, out_dir);
  const PolicyModel policy = policy_from_json(detail::load_json_file(policy_path));
  const EnvConfig env_cfg =
      make_oos_env_config(cfg, cfg.evaluation.oos_mu, cfg.evaluation.oos_sigma);
  const RngStream rng = RngStream(cfg.seed).split(300);
  const OosReport report =
      out_of_sample_eval(policy, env_cfg, cfg.severity, cfg.evaluation.oos_paths, rng,
                         cfg.threads, cfg.evaluation.ks_samples, cfg.evaluation.histogram_bins);
  const nlohmann::json jr = {{"mean_surplus", report.mean_surplus},
                             {"ruin_probability", report.ruin_probability},
                             {"ruin_threshold", cfg.evaluation.ruin_threshold},
                             {"oos_mu", cfg.evaluation.oos_mu},
                             {"oos_sigma", cfg.evaluation.oos_sigma},
                             {"paths", cfg.evaluation.oos_paths},
                             {"claim_ks",
                              {{"statistic", report.claim_comparison.statistic},
                               {"p_value", report.claim_comparison.p_value},
                               {"d_location", report.claim_comparison.d_location}}}};
  write_text_file(out_dir / "oos_report.json", jr.dump(2) + "\n");
  {
    std::ostringstream out;
    CsvWriter csv(out);
    csv.field("path").field("final_surplus");
    csv.end_row();
    for (std::size_t i = 0; i < report.final_surpluses.size(); ++i) {
      csv.field(i).field(report.final_surpluses[i]);
      csv.end_row();
    }
    write_text_file(out_dir / "oos_finals.csv", out.str());
  }
  write_text_file(out_dir / "oos_claims_histogram.csv",
                  detail::histogram_csv(report.claim_histogram, "training", "out_of_sample"));
  detail::finish_run(meta, out_dir,
                     {"oos_report.json", "oos_finals.csv", "oos_claims_histogram.csv"});
}

inline void cmd_evaluate_sensitivity(const ExperimentConfig& cfg, const fs::path& out_dir,
                                     const fs::path& policy_path) {
  RunMetadata meta = detail::begin_run("evaluate-sensitivity", cfg, out_dir);
  const PolicyModel policy = policy_from_json(detail::load_json_file(policy_path));
  const EnvConfig base_cfg =
      make_oos_env_config(cfg, cfg.evaluation.oos_mu, cfg.evaluation.oos_sigma);
  const RngStream rng = RngStream(cfg.seed).split(301);
  const auto rows = sensitivity_sweep(policy, base_cfg, cfg.evaluation.sensitivity_cells,
                                      cfg.evaluation.sensitivity_paths, rng, cfg.threads);
  std::ostringstream out;
  CsvWriter csv(out);
  csv.field("mu").field("sigma").field("mean_surplus").field("ruin_probability");
  csv.end_row();
  for (const auto& row : rows) {
    csv.field(row.mu).field(row.sigma).field(row.mean_surplus).field(row.ruin_probability);
    csv.end_row();
  }
  write_text_file(out_dir / "sensitivity.csv", out.str());
  detail::finish_run(meta, out_dir, {"sensitivity.csv"});
}

inline void cmd_evaluate_stress(const ExperimentConfig& cfg, const fs::path& out_dir,
                                const fs::path& policy_path) {
  RunMetadata meta = detail::begin_run("evaluate-stress", cfg, out_dir);
  const PolicyModel policy = policy_from_json(detail::load_json_file(policy_path));
  ClaimSource source;
  source.kind = ClaimSourceKind::Parametric;
  source.spec = cfg.severity;
  EnvConfig env_cfg = make_env_config(cfg, std::move(source));
  env_cfg.episode.ruin_threshold = cfg.evaluation.ruin_threshold;
  const RngStream rng = RngStream(cfg.seed).split(302);
  nlohmann::json reports = nlohmann::json::array();
  const auto scenarios = bundled_stress_scenarios(expected_claim_size(cfg.severity));
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const StressReport report = stress_test(policy, env_cfg, scenarios[s],
                                            cfg.evaluation.stress_paths, rng.split(s),
                                            cfg.threads);
    reports.push_back({{"scenario", report.scenario},
                       {"mean_surplus", report.mean_surplus},
                       {"ruin_probability", report.ruin_probability},
                       {"surplus_quantiles",
                        {{"p5", report.surplus_quantiles[0]},
                         {"p25", report.surplus_quantiles[1]},
                         {"p50", report.surplus_quantiles[2]},
                         {"p75", report.surplus_quantiles[3]},
                         {"p95", report.surplus_quantiles[4]}}}});
  }
  write_text_file(out_dir / "stress_report.json",
                  nlohmann::json{{"scenarios", reports}}.dump(2) + "\n");
  detail::finish_run(meta, out_dir, {"stress_report.json"});
}

inline KsResult cmd_evaluate_ks(const ExperimentConfig& cfg, const fs::path& out_dir,
                                const fs::path& file_a, const fs::path& file_b) {
  RunMetadata meta = detail::begin_run("evaluate-ks", cfg, out_dir);
  const auto a = read_numeric_column(file_a.string());
  const auto b = read_numeric_column(file_b.string());
  if (a.empty() || b.empty()) {
    throw std::runtime_error("ks inputs must contain at least one numeric value each");
  }
  const KsResult ks = ks_two_sample(a, b);
  write_text_file(out_dir / "ks_result.json", detail::ks_json(ks) + "\n");
  detail::finish_run(meta, out_dir, {"ks_result.json"});
  return ks;
}

}  // namespace reinsim
