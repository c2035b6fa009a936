#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reinsim/benchmarks.hpp"
#include "reinsim/claims.hpp"
#include "reinsim/contracts.hpp"
#include "reinsim/evaluation.hpp"
#include "reinsim/ppo.hpp"
#include "reinsim/rl_env.hpp"
#include "reinsim/surplus.hpp"
#include "reinsim/vae.hpp"

namespace reinsim {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Configuration problems carry exit code 2 at the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnvKnobs {
  double epsilon = 1.0;
  double retention_delta_max = 0.05;
  double boundary_delta_frac = 0.02;
  double normalization_cap = 1000.0;
  double lambda_ref = 10.0;
  double variability_penalty = 0.0;
  std::size_t pricing_samples = 2048;
};

struct ProgramConfig {
  double retention_lo = 0.2;
  double retention_hi = 0.5;
  double budget_max = 150000.0;
  double ruin_probability_target = 0.05;
  std::vector<Layer> layers;
};

struct BenchmarksConfig {
  std::size_t eval_paths = 100;
  std::uint64_t eval_seed = 1000;
  std::uint64_t search_seed = 2000;
  double proportional_loading = 0.2;
  DpSettings dp;
  McSettings mc;
  HybridMcSettings hybrid_mc;
  MoSettings mo;
};

struct EvaluationConfig {
  double oos_mu = 3.6;
  double oos_sigma = 1.1;
  std::size_t oos_paths = 200;
  double ruin_threshold = -100.0;  // the out-of-sample experiments use -100
  std::vector<std::pair<double, double>> sensitivity_cells{
      {3.6, 1.1}, {3.6, 1.2}, {3.7, 1.0}, {3.7, 1.1}, {3.7, 1.2}};
  std::size_t sensitivity_paths = 200;
  std::size_t stress_paths = 200;
  int histogram_bins = 50;
  std::size_t ks_samples = 10000;
};

/// Full experiment description. Defaults reproduce the reference setup:
/// 10-year horizon in 200 steps, surplus 20000, Poisson(10) lognormal(3.5, 1)
/// claims, five quantile-spaced layers with retention bounds [0.2, 0.5], and
/// a 150000 reinsurance budget.
struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::string output_dir;  // resolved by the CLI when empty
  int threads = 0;         // 0: hardware concurrency

  EpisodeConfig episode;
  FrequencySpec frequency;
  ClaimDistributionSpec severity = ClaimDistributionSpec::make_lognormal(3.5, 1.0);
  double safety_loading = 0.1;
  ProgramConfig program;
  VaeTrainConfig vae;
  std::size_t vae_training_claims = 2000;
  PpoConfig ppo;
  EnvKnobs env;
  BenchmarksConfig benchmarks;
  EvaluationConfig evaluation;
};

// Layer boundaries sit near the 60/80/90/97.5/99.5 percent quantiles of the
// lognormal(3.5, 1) severity model; retention starts at the upper bound
// because ceding is loss-making in expectation when the reinsurer loading
// exceeds the insurer loading.
inline ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.program.layers = {
      {0.0, 42.66, 0.5, 0.2},    {42.66, 76.83, 0.5, 0.2}, {76.83, 119.29, 0.5, 0.2},
      {119.29, 235.10, 0.5, 0.2}, {235.10, 435.21, 0.5, 0.2}};
  return cfg;
}

inline LayeredProgram config_program(const ExperimentConfig& cfg) {
  return make_layered_program(cfg.program.layers);
}

inline ConstraintSet config_constraints(const ExperimentConfig& cfg) {
  ConstraintSet cs;
  cs.psi_target = cfg.program.ruin_probability_target;
  cs.premium_max = cfg.program.budget_max;
  cs.retention_lo = cfg.program.retention_lo;
  cs.retention_hi = cfg.program.retention_hi;
  return cs;
}

inline PremiumSpec config_premium(const ExperimentConfig& cfg) {
  return make_premium(cfg.safety_loading, cfg.frequency, cfg.severity);
}

// ---------------------------------------------------------------------------
// JSON round trip
// ---------------------------------------------------------------------------

inline nlohmann::json severity_to_json(const ClaimDistributionSpec& spec) {
  switch (spec.kind) {
    case SeverityKind::Lognormal:
      return {{"kind", "lognormal"}, {"mu", spec.lognormal.mu}, {"sigma", spec.lognormal.sigma}};
    case SeverityKind::Pareto:
      return {{"kind", "pareto"}, {"scale", spec.pareto.scale}, {"shape", spec.pareto.shape}};
    case SeverityKind::Mixture: {
      nlohmann::json parts = nlohmann::json::array();
      for (const auto& part : spec.mixture) {
        nlohmann::json jp = {{"weight", part.weight}};
        if (part.kind == SeverityKind::Lognormal) {
          jp["kind"] = "lognormal";
          jp["mu"] = part.lognormal.mu;
          jp["sigma"] = part.lognormal.sigma;
        } else {
          jp["kind"] = "pareto";
          jp["scale"] = part.pareto.scale;
          jp["shape"] = part.pareto.shape;
        }
        parts.push_back(jp);
      }
      return {{"kind", "mixture"}, {"components", parts}};
    }
  }
  throw std::logic_error("unreachable severity kind");
}

inline ClaimDistributionSpec severity_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "lognormal") {
    return ClaimDistributionSpec::make_lognormal(j.at("mu").get<double>(),
                                                 j.at("sigma").get<double>());
  }
  if (kind == "pareto") {
    return ClaimDistributionSpec::make_pareto(j.at("scale").get<double>(),
                                              j.at("shape").get<double>());
  }
  if (kind == "mixture") {
    std::vector<MixtureComponent> parts;
    for (const auto& jp : j.at("components")) {
      MixtureComponent part;
      part.weight = jp.at("weight").get<double>();
      const std::string part_kind = jp.at("kind").get<std::string>();
      if (part_kind == "lognormal") {
        part.kind = SeverityKind::Lognormal;
        part.lognormal = {jp.at("mu").get<double>(), jp.at("sigma").get<double>()};
      } else if (part_kind == "pareto") {
        part.kind = SeverityKind::Pareto;
        part.pareto = {jp.at("scale").get<double>(), jp.at("shape").get<double>()};
      } else {
        throw ConfigError("mixture component kind must be lognormal or pareto");
      }
      parts.push_back(part);
    }
    return ClaimDistributionSpec::make_mixture(std::move(parts));
  }
  throw ConfigError("severity kind must be lognormal, pareto, or mixture");
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& l : cfg.program.layers) {
    layers.push_back({{"attachment", l.attachment},
                      {"exhaustion", l.exhaustion},
                      {"retention", l.retention},
                      {"loading", l.loading}});
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [mu, sigma] : cfg.evaluation.sensitivity_cells) {
    cells.push_back({mu, sigma});
  }
  return {
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"threads", cfg.threads},
      {"episode",
       {{"horizon_years", cfg.episode.horizon_years},
        {"n_steps", cfg.episode.n_steps},
        {"initial_surplus", cfg.episode.initial_surplus},
        {"ruin_threshold", cfg.episode.ruin_threshold}}},
      {"claims", {{"lambda", cfg.frequency.lambda}, {"severity", severity_to_json(cfg.severity)}}},
      {"premium", {{"safety_loading", cfg.safety_loading}}},
      {"program",
       {{"retention_lo", cfg.program.retention_lo},
        {"retention_hi", cfg.program.retention_hi},
        {"budget_max", cfg.program.budget_max},
        {"ruin_probability_target", cfg.program.ruin_probability_target},
        {"layers", layers}}},
      {"vae",
       {{"beta", cfg.vae.beta},
        {"learning_rate", cfg.vae.learning_rate},
        {"epochs", cfg.vae.epochs},
        {"batch_size", cfg.vae.batch_size},
        {"latent_dim", cfg.vae.latent_dim},
        {"encoder_hidden", cfg.vae.encoder_hidden},
        {"decoder_hidden", cfg.vae.decoder_hidden},
        {"training_claims", cfg.vae_training_claims}}},
      {"ppo",
       {{"gamma", cfg.ppo.gamma},
        {"gae_lambda", cfg.ppo.gae_lambda},
        {"clip_ratio", cfg.ppo.clip_ratio},
        {"entropy_coef", cfg.ppo.entropy_coef},
        {"value_coef", cfg.ppo.value_coef},
        {"rollout_horizon", cfg.ppo.rollout_horizon},
        {"update_epochs", cfg.ppo.update_epochs},
        {"minibatch_size", cfg.ppo.minibatch_size},
        {"total_timesteps", cfg.ppo.total_timesteps},
        {"learning_rate", cfg.ppo.learning_rate},
        {"target_kl", cfg.ppo.target_kl},
        {"hidden", cfg.ppo.hidden}}},
      {"env",
       {{"epsilon", cfg.env.epsilon},
        {"retention_delta_max", cfg.env.retention_delta_max},
        {"boundary_delta_frac", cfg.env.boundary_delta_frac},
        {"normalization_cap", cfg.env.normalization_cap},
        {"lambda_ref", cfg.env.lambda_ref},
        {"variability_penalty", cfg.env.variability_penalty},
        {"pricing_samples", cfg.env.pricing_samples}}},
      {"benchmarks",
       {{"eval_paths", cfg.benchmarks.eval_paths},
        {"eval_seed", cfg.benchmarks.eval_seed},
        {"search_seed", cfg.benchmarks.search_seed},
        {"proportional_loading", cfg.benchmarks.proportional_loading},
        {"dp",
         {{"surplus_buckets", cfg.benchmarks.dp.surplus_buckets},
          {"retention_actions", cfg.benchmarks.dp.retention_actions},
          {"quadrature_samples", cfg.benchmarks.dp.quadrature_samples},
          {"grid_margin", cfg.benchmarks.dp.grid_margin}}},
        {"monte_carlo",
         {{"candidates", cfg.benchmarks.mc.candidates},
          {"search_paths", cfg.benchmarks.mc.search_paths}}},
        {"hybrid_mc",
         {{"pool", cfg.benchmarks.hybrid_mc.pool},
          {"phase1_paths", cfg.benchmarks.hybrid_mc.phase1_paths},
          {"top_fraction", cfg.benchmarks.hybrid_mc.top_fraction},
          {"surrogate_epochs", cfg.benchmarks.hybrid_mc.surrogate_epochs},
          {"surrogate_learning_rate", cfg.benchmarks.hybrid_mc.surrogate_learning_rate},
          {"surrogate_hidden", cfg.benchmarks.hybrid_mc.surrogate_hidden}}},
        {"multi_objective",
         {{"retention_grid", cfg.benchmarks.mo.retention_grid},
          {"scale_grid", cfg.benchmarks.mo.scale_grid},
          {"scale_lo", cfg.benchmarks.mo.scale_lo},
          {"scale_hi", cfg.benchmarks.mo.scale_hi},
          {"w_surplus", cfg.benchmarks.mo.w_surplus},
          {"w_ruin", cfg.benchmarks.mo.w_ruin}}}}},
      {"evaluation",
       {{"oos_mu", cfg.evaluation.oos_mu},
        {"oos_sigma", cfg.evaluation.oos_sigma},
        {"oos_paths", cfg.evaluation.oos_paths},
        {"ruin_threshold", cfg.evaluation.ruin_threshold},
        {"sensitivity_cells", cells},
        {"sensitivity_paths", cfg.evaluation.sensitivity_paths},
        {"stress_paths", cfg.evaluation.stress_paths},
        {"histogram_bins", cfg.evaluation.histogram_bins},
        {"ks_samples", cfg.evaluation.ks_samples}}}};
}

namespace detail {

// User keys must exist in the defaults (arrays are free-form).
inline void check_known_keys(const nlohmann::json& user, const nlohmann::json& reference,
                             const std::string& path) {
  if (!user.is_object() || !reference.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string here = path + "/" + key;
    if (!reference.contains(key)) throw ConfigError("unknown config key: " + here);
    check_known_keys(value, reference.at(key), here);
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& user) {
  const ExperimentConfig defaults = default_experiment_config();
  nlohmann::json merged = config_to_json(defaults);
  detail::check_known_keys(user, merged, "");
  merged.merge_patch(user);

  ExperimentConfig cfg;
  try {
    cfg.seed = merged.at("seed").get<std::uint64_t>();
    cfg.output_dir = merged.at("output_dir").get<std::string>();
    cfg.threads = merged.at("threads").get<int>();
    const auto& je = merged.at("episode");
    cfg.episode.horizon_years = je.at("horizon_years").get<double>();
    cfg.episode.n_steps = je.at("n_steps").get<int>();
    cfg.episode.initial_surplus = je.at("initial_surplus").get<double>();
    cfg.episode.ruin_threshold = je.at("ruin_threshold").get<double>();
    cfg.frequency.lambda = merged.at("claims").at("lambda").get<double>();
    cfg.severity = severity_from_json(merged.at("claims").at("severity"));
    cfg.safety_loading = merged.at("premium").at("safety_loading").get<double>();
    const auto& jp = merged.at("program");
    cfg.program.retention_lo = jp.at("retention_lo").get<double>();
    cfg.program.retention_hi = jp.at("retention_hi").get<double>();
    cfg.program.budget_max = jp.at("budget_max").get<double>();
    cfg.program.ruin_probability_target = jp.at("ruin_probability_target").get<double>();
    cfg.program.layers.clear();
    for (const auto& jl : jp.at("layers")) {
      cfg.program.layers.push_back({jl.at("attachment").get<double>(),
                                    jl.at("exhaustion").get<double>(),
                                    jl.at("retention").get<double>(),
                                    jl.at("loading").get<double>()});
    }
    const auto& jv = merged.at("vae");
    cfg.vae.beta = jv.at("beta").get<double>();
    cfg.vae.learning_rate = jv.at("learning_rate").get<double>();
    cfg.vae.epochs = jv.at("epochs").get<int>();
    cfg.vae.batch_size = jv.at("batch_size").get<int>();
    cfg.vae.latent_dim = jv.at("latent_dim").get<int>();
    cfg.vae.encoder_hidden = jv.at("encoder_hidden").get<std::vector<int>>();
    cfg.vae.decoder_hidden = jv.at("decoder_hidden").get<std::vector<int>>();
    cfg.vae_training_claims = jv.at("training_claims").get<std::size_t>();
    const auto& jr = merged.at("ppo");
    cfg.ppo.gamma = jr.at("gamma").get<double>();
    cfg.ppo.gae_lambda = jr.at("gae_lambda").get<double>();
    cfg.ppo.clip_ratio = jr.at("clip_ratio").get<double>();
    cfg.ppo.entropy_coef = jr.at("entropy_coef").get<double>();
    cfg.ppo.value_coef = jr.at("value_coef").get<double>();
    cfg.ppo.rollout_horizon = jr.at("rollout_horizon").get<int>();
    cfg.ppo.update_epochs = jr.at("update_epochs").get<int>();
    cfg.ppo.minibatch_size = jr.at("minibatch_size").get<int>();
    cfg.ppo.total_timesteps = jr.at("total_timesteps").get<long>();
    cfg.ppo.learning_rate = jr.at("learning_rate").get<double>();
    cfg.ppo.target_kl = jr.at("target_kl").get<double>();
    cfg.ppo.hidden = jr.at("hidden").get<std::vector<int>>();
    const auto& jn = merged.at("env");
    cfg.env.epsilon = jn.at("epsilon").get<double>();
    cfg.env.retention_delta_max = jn.at("retention_delta_max").get<double>();
    cfg.env.boundary_delta_frac = jn.at("boundary_delta_frac").get<double>();
    cfg.env.normalization_cap = jn.at("normalization_cap").get<double>();
    cfg.env.lambda_ref = jn.at("lambda_ref").get<double>();
    cfg.env.variability_penalty = jn.at("variability_penalty").get<double>();
    cfg.env.pricing_samples = jn.at("pricing_samples").get<std::size_t>();
    const auto& jb = merged.at("benchmarks");
    cfg.benchmarks.eval_paths = jb.at("eval_paths").get<std::size_t>();
    cfg.benchmarks.eval_seed = jb.at("eval_seed").get<std::uint64_t>();
    cfg.benchmarks.search_seed = jb.at("search_seed").get<std::uint64_t>();
    cfg.benchmarks.proportional_loading = jb.at("proportional_loading").get<double>();
    const auto& jdp = jb.at("dp");
    cfg.benchmarks.dp.surplus_buckets = jdp.at("surplus_buckets").get<int>();
    cfg.benchmarks.dp.retention_actions = jdp.at("retention_actions").get<int>();
    cfg.benchmarks.dp.quadrature_samples = jdp.at("quadrature_samples").get<int>();
    cfg.benchmarks.dp.grid_margin = jdp.at("grid_margin").get<double>();
    const auto& jmc = jb.at("monte_carlo");
    cfg.benchmarks.mc.candidates = jmc.at("candidates").get<int>();
    cfg.benchmarks.mc.search_paths = jmc.at("search_paths").get<int>();
    const auto& jh = jb.at("hybrid_mc");
    cfg.benchmarks.hybrid_mc.pool = jh.at("pool").get<int>();
    cfg.benchmarks.hybrid_mc.phase1_paths = jh.at("phase1_paths").get<int>();
    cfg.benchmarks.hybrid_mc.top_fraction = jh.at("top_fraction").get<double>();
    cfg.benchmarks.hybrid_mc.surrogate_epochs = jh.at("surrogate_epochs").get<int>();
    cfg.benchmarks.hybrid_mc.surrogate_learning_rate =
        jh.at("surrogate_learning_rate").get<double>();
    cfg.benchmarks.hybrid_mc.surrogate_hidden = jh.at("surrogate_hidden").get<std::vector<int>>();
    const auto& jmo = jb.at("multi_objective");
    cfg.benchmarks.mo.retention_grid = jmo.at("retention_grid").get<int>();
    cfg.benchmarks.mo.scale_grid = jmo.at("scale_grid").get<int>();
    cfg.benchmarks.mo.scale_lo = jmo.at("scale_lo").get<double>();
    cfg.benchmarks.mo.scale_hi = jmo.at("scale_hi").get<double>();
    cfg.benchmarks.mo.w_surplus = jmo.at("w_surplus").get<double>();
    cfg.benchmarks.mo.w_ruin = jmo.at("w_ruin").get<double>();
    const auto& jev = merged.at("evaluation");
    cfg.evaluation.oos_mu = jev.at("oos_mu").get<double>();
    cfg.evaluation.oos_sigma = jev.at("oos_sigma").get<double>();
    cfg.evaluation.oos_paths = jev.at("oos_paths").get<std::size_t>();
    cfg.evaluation.ruin_threshold = jev.at("ruin_threshold").get<double>();
    cfg.evaluation.sensitivity_cells.clear();
    for (const auto& jc : jev.at("sensitivity_cells")) {
      cfg.evaluation.sensitivity_cells.emplace_back(jc.at(0).get<double>(),
                                                    jc.at(1).get<double>());
    }
    cfg.evaluation.sensitivity_paths = jev.at("sensitivity_paths").get<std::size_t>();
    cfg.evaluation.stress_paths = jev.at("stress_paths").get<std::size_t>();
    cfg.evaluation.histogram_bins = jev.at("histogram_bins").get<int>();
    cfg.evaluation.ks_samples = jev.at("ks_samples").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

/// Validates every module invariant reachable from the config, before any
/// computation starts.
inline void validate_config(const ExperimentConfig& cfg) {
  try {
    validate(cfg.episode);
    validate(cfg.frequency);
    validate(cfg.severity);
    if (!(cfg.safety_loading >= 0.0)) throw std::invalid_argument("safety loading must be >= 0");
    const ConstraintSet cs = config_constraints(cfg);
    validate(cs);
    const LayeredProgram program = config_program(cfg);
    require_valid_program(program);
    const auto violations = validate_program(program, cs);
    if (!violations.empty()) {
      throw std::invalid_argument("program violates constraints: " + violations.front().message);
    }
    validate(cfg.vae);
    if (cfg.vae_training_claims < static_cast<std::size_t>(cfg.vae.batch_size)) {
      throw std::invalid_argument("training_claims must cover at least one batch");
    }
    validate(cfg.ppo);
    if (!(cfg.env.epsilon > 0.0)) throw std::invalid_argument("env epsilon must be > 0");
    if (!(cfg.env.normalization_cap > 0.0)) {
      throw std::invalid_argument("normalization_cap must be > 0");
    }
    if (!(cfg.env.lambda_ref > 0.0)) throw std::invalid_argument("lambda_ref must be > 0");
    if (cfg.env.pricing_samples < 1) throw std::invalid_argument("pricing_samples must be >= 1");
    if (cfg.benchmarks.eval_paths < 1) throw std::invalid_argument("eval_paths must be >= 1");
    if (cfg.benchmarks.dp.surplus_buckets < 2 || cfg.benchmarks.dp.retention_actions < 1 ||
        cfg.benchmarks.dp.quadrature_samples < 1) {
      throw std::invalid_argument("degenerate dp grids");
    }
    if (cfg.benchmarks.mc.candidates < 1 || cfg.benchmarks.mc.search_paths < 1) {
      throw std::invalid_argument("monte carlo needs candidates and paths");
    }
    if (cfg.evaluation.sensitivity_cells.empty()) {
      throw std::invalid_argument("sensitivity grid must be nonempty");
    }
    if (!(cfg.evaluation.oos_sigma > 0.0)) throw std::invalid_argument("oos sigma must be > 0");
    if (cfg.evaluation.histogram_bins < 1) throw std::invalid_argument("histogram_bins >= 1");
    if (cfg.evaluation.ks_samples < 1) throw std::invalid_argument("ks_samples must be >= 1");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline ExperimentConfig load_config_text(const std::string& text, const std::string& origin) {
  nlohmann::json user;
  try {
    user = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());  // includes byte position
  }
  ExperimentConfig cfg = config_from_json(user);
  validate_config(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str(), path.string());
}

// ---------------------------------------------------------------------------
// Run metadata
// ---------------------------------------------------------------------------

struct RunMetadata {
  std::string command;
  nlohmann::json config_snapshot;
  std::uint64_t seed = 0;
  std::string artifact_version = kArtifactVersion;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
};

inline std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

inline nlohmann::json metadata_to_json(const RunMetadata& meta) {
  return {{"command", meta.command},
          {"config", meta.config_snapshot},
          {"seed", meta.seed},
          {"artifact_version", meta.artifact_version},
          {"started_at", meta.started_at},
          {"finished_at", meta.finished_at},
          {"outputs", meta.outputs}};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
}

inline void write_metadata(const std::filesystem::path& dir, const RunMetadata& meta) {
  write_text_file(dir / "run_metadata.json", metadata_to_json(meta).dump(2) + "\n");
}

}  // namespace reinsim
