// reinsim: reinsurance optimization laboratory CLI.
//
// Subcommands: train-vae, train-agent, benchmark, evaluate <oos|sensitivity|stress|ks>.
// Exit codes: 0 success, 2 configuration error, 1 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reinsim/commands.hpp"
#include "reinsim/config.hpp"

namespace {

namespace fs = std::filesystem;
using reinsim::ConfigError;
using reinsim::ExperimentConfig;

struct GlobalOptions {
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> overrides;  // key.path=value
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

nlohmann::json parse_override_value(const std::string& raw) {
  try {
    return nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    return nlohmann::json(raw);  // bare strings stay strings
  }
}

// Applies --set a.b.c=value entries onto the user-config JSON.
void apply_overrides(nlohmann::json& user, const std::vector<std::string>& overrides) {
  for (const std::string& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key.path=value, got: " + entry);
    }
    std::string path = "/" + entry.substr(0, eq);
    for (auto& c : path) {
      if (c == '.') c = '/';
    }
    try {
      user[nlohmann::json::json_pointer(path)] = parse_override_value(entry.substr(eq + 1));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad --set path '" + entry + "': " + e.what());
    }
  }
}

ExperimentConfig resolve_config(const GlobalOptions& opts, const std::string& command) {
  nlohmann::json user = nlohmann::json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw ConfigError("cannot read config file: " + opts.config_path);
    try {
      in >> user;
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(opts.config_path + ": " + e.what());
    }
  }
  apply_overrides(user, opts.overrides);
  ExperimentConfig cfg = reinsim::config_from_json(user);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.threads) cfg.threads = *opts.threads;
  if (!opts.output_dir.empty()) {
    cfg.output_dir = opts.output_dir;
  } else if (cfg.output_dir.empty()) {
    const char* env_dir = std::getenv("REINSIM_OUTPUT_DIR");
    cfg.output_dir = env_dir ? (fs::path(env_dir) / command).string() : "runs/" + command;
  }
  reinsim::validate_config(cfg);
  return cfg;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reinsim: stochastic reinsurance optimization laboratory"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "experiment config JSON (defaults when omitted)");
  app.add_option("--output-dir", opts.output_dir, "artifact directory");
  app.add_option("--set", opts.overrides, "config override, key.path=value (repeatable)");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed");
  int threads_value = 0;
  auto* threads_opt = app.add_option("--threads", threads_value, "worker thread cap (0: auto)");

  auto* train_vae = app.add_subcommand("train-vae", "train the generative claim model");
  train_vae->fallthrough();
  int vae_epochs = -1;
  train_vae->add_option("--epochs", vae_epochs, "override vae training epochs");

  auto* train_agent = app.add_subcommand("train-agent", "train the PPO agent");
  train_agent->fallthrough();
  std::string vae_checkpoint;
  long total_timesteps = -1;
  train_agent->add_option("--vae", vae_checkpoint, "vae checkpoint for generative claims");
  train_agent->add_option("--total-timesteps", total_timesteps, "override training budget");

  auto* benchmark = app.add_subcommand("benchmark", "run the five-method comparison");
  benchmark->fallthrough();
  std::string methods_csv;
  std::string bench_policy;
  benchmark->add_option("--methods", methods_csv, "comma list: dp,mc,hybrid_mc,mo,rl");
  benchmark->add_option("--policy", bench_policy, "trained policy checkpoint (else trains inline)");

  auto* evaluate = app.add_subcommand("evaluate", "out-of-sample, sensitivity, stress, or ks");
  evaluate->fallthrough();
  std::string eval_kind;
  std::string policy_path, file_a, file_b;
  evaluate->add_option("kind", eval_kind, "one of: oos, sensitivity, stress, ks")->required();
  evaluate->add_option("--policy", policy_path, "trained policy checkpoint");
  evaluate->add_option("--a", file_a, "first claim CSV (ks)");
  evaluate->add_option("--b", file_b, "second claim CSV (ks)");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) opts.seed = seed_value;
  if (*threads_opt) opts.threads = threads_value;

  try {
    if (train_vae->parsed()) {
      if (vae_epochs >= 0) opts.overrides.push_back("vae.epochs=" + std::to_string(vae_epochs));
      const ExperimentConfig cfg = resolve_config(opts, "train-vae");
      reinsim::cmd_train_vae(cfg, cfg.output_dir);
    } else if (train_agent->parsed()) {
      if (total_timesteps >= 0) {
        opts.overrides.push_back("ppo.total_timesteps=" + std::to_string(total_timesteps));
      }
      const ExperimentConfig cfg = resolve_config(opts, "train-agent");
      std::optional<fs::path> vae;
      if (!vae_checkpoint.empty()) {
        if (!fs::exists(vae_checkpoint)) throw ConfigError("missing checkpoint: " + vae_checkpoint);
        vae = vae_checkpoint;
      }
      reinsim::cmd_train_agent(cfg, cfg.output_dir, vae);
    } else if (benchmark->parsed()) {
      const ExperimentConfig cfg = resolve_config(opts, "benchmark");
      std::optional<fs::path> policy;
      if (!bench_policy.empty()) {
        if (!fs::exists(bench_policy)) throw ConfigError("missing checkpoint: " + bench_policy);
        policy = bench_policy;
      }
      reinsim::cmd_benchmark(cfg, cfg.output_dir, policy, split_csv(methods_csv));
    } else if (evaluate->parsed()) {
      const ExperimentConfig cfg = resolve_config(opts, "evaluate-" + eval_kind);
      if (eval_kind == "ks") {
        if (file_a.empty() || file_b.empty()) {
          throw ConfigError("evaluate ks needs --a and --b claim files");
        }
        const reinsim::KsResult ks = reinsim::cmd_evaluate_ks(cfg, cfg.output_dir, file_a, file_b);
        std::cout << "ks statistic=" << reinsim::format_double(ks.statistic)
                  << " p_value=" << reinsim::format_double(ks.p_value)
                  << " d_location=" << reinsim::format_double(ks.d_location) << "\n";
      } else {
        if (policy_path.empty()) throw ConfigError("evaluate " + eval_kind + " needs --policy");
        if (!fs::exists(policy_path)) throw ConfigError("missing checkpoint: " + policy_path);
        if (eval_kind == "oos") {
          reinsim::cmd_evaluate_oos(cfg, cfg.output_dir, policy_path);
        } else if (eval_kind == "sensitivity") {
          reinsim::cmd_evaluate_sensitivity(cfg, cfg.output_dir, policy_path);
        } else if (eval_kind == "stress") {
          reinsim::cmd_evaluate_stress(cfg, cfg.output_dir, policy_path);
        } else {
          throw ConfigError("unknown evaluate kind: " + eval_kind);
        }
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
