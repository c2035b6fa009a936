#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "reinsim/nnet.hpp"
#include "reinsim/rng.hpp"

namespace reinsim {

inline constexpr double kLogVarClamp = 10.0;
inline constexpr double kLogClaimClamp = 30.0;

/// Generative claim model. The encoder emits (mu, log-variance) per latent
/// dimension for a standardized log-claim; the decoder maps a latent draw
/// back to the standardized claim feature.
struct VaeModel {
  DenseNet encoder;
  DenseNet decoder;
  int latent_dim = 4;
  double norm_shift = 0.0;  // mean of log-claims
  double norm_scale = 1.0;  // stddev of log-claims, > 0
};

struct VaeTrainConfig {
  double beta = 0.1;  // KL weight
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 64;
  int latent_dim = 4;
  std::vector<int> encoder_hidden{32, 32};
  std::vector<int> decoder_hidden{32, 32};
};

inline void validate(const VaeTrainConfig& cfg) {
  if (!(cfg.beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
}

inline std::pair<std::vector<double>, std::vector<double>> encode(const VaeModel& m,
                                                                  std::span<const double> x) {
  const auto out = forward(m.encoder, x);
  if (static_cast<int>(out.size()) != 2 * m.latent_dim) {
    throw std::invalid_argument("encoder output must be 2 * latent_dim");
  }
  std::vector<double> mu(out.begin(), out.begin() + m.latent_dim);
  std::vector<double> log_var(out.begin() + m.latent_dim, out.end());
  return {std::move(mu), std::move(log_var)};
}

// z = mu + exp(log_var / 2) * eps, with log_var clamped before exponentiation.
inline double reparameterize(double mu, double log_var, double eps) {
  const double lv = std::clamp(log_var, -kLogVarClamp, kLogVarClamp);
  return mu + std::exp(0.5 * lv) * eps;
}

inline std::vector<double> reparameterize(std::span<const double> mu,
                                          std::span<const double> log_var,
                                          std::span<const double> eps) {
  if (mu.size() != log_var.size() || mu.size() != eps.size()) {
    throw std::invalid_argument("reparameterize length mismatch");
  }
  std::vector<double> z(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) z[j] = reparameterize(mu[j], log_var[j], eps[j]);
  return z;
}

struct VaeLoss {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

/// Per-sample loss: mean squared error over features plus beta times the
/// Gaussian KL divergence -1/2 sum(1 + log s^2 - mu^2 - s^2).
inline VaeLoss vae_loss(std::span<const double> x, std::span<const double> x_hat,
                        std::span<const double> mu, std::span<const double> log_var,
                        double beta) {
  if (x.size() != x_hat.size() || mu.size() != log_var.size()) {
    throw std::invalid_argument("vae_loss shape mismatch");
  }
  double rec = 0.0;
  for (std::size_t f = 0; f < x.size(); ++f) {
    const double d = x[f] - x_hat[f];
    rec += d * d;
  }
  rec /= static_cast<double>(x.size());
  double kl = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double lv = std::clamp(log_var[j], -kLogVarClamp, kLogVarClamp);
    kl += -0.5 * (1.0 + lv - mu[j] * mu[j] - std::exp(lv));
  }
  return {rec + beta * kl, rec, kl};
}

struct VaeEpochStats {
  int epoch = 0;
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  double min_batch_kl = 0.0;  // smallest per-batch mean KL seen this epoch
};

struct VaeTrainResult {
  VaeModel model;
  std::vector<VaeEpochStats> history;
};

/// Trains on positive claim amounts: log-transform, z-score, minibatch Adam
/// on the reparameterized objective. History records per-epoch means.
inline VaeTrainResult train_vae(std::span<const double> claims, const VaeTrainConfig& cfg,
                                RngStream& rng) {
  validate(cfg);
  if (claims.empty()) throw std::invalid_argument("training data must be nonempty");
  if (static_cast<int>(claims.size()) < cfg.batch_size) {
    throw std::invalid_argument("need at least batch_size claims");
  }
  std::vector<double> logs(claims.size());
  for (std::size_t i = 0; i < claims.size(); ++i) {
    if (!(claims[i] > 0.0)) throw std::invalid_argument("claims must be positive");
    logs[i] = std::log(claims[i]);
  }
  const double shift = std::accumulate(logs.begin(), logs.end(), 0.0) / logs.size();
  double var = 0.0;
  for (const double l : logs) var += (l - shift) * (l - shift);
  const double scale = std::max(std::sqrt(var / logs.size()), 1e-9);
  std::vector<double> data(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) data[i] = (logs[i] - shift) / scale;

  VaeModel model;
  model.latent_dim = cfg.latent_dim;
  model.norm_shift = shift;
  model.norm_scale = scale;
  {
    std::vector<int> enc_sizes{1};
    enc_sizes.insert(enc_sizes.end(), cfg.encoder_hidden.begin(), cfg.encoder_hidden.end());
    enc_sizes.push_back(2 * cfg.latent_dim);
    std::vector<Activation> enc_acts(enc_sizes.size() - 2, Activation::Relu);
    enc_acts.push_back(Activation::Identity);
    RngStream init_rng = rng.split(0);
    model.encoder = make_dense_net(enc_sizes, enc_acts, init_rng);

    std::vector<int> dec_sizes{cfg.latent_dim};
    dec_sizes.insert(dec_sizes.end(), cfg.decoder_hidden.begin(), cfg.decoder_hidden.end());
    dec_sizes.push_back(1);
    std::vector<Activation> dec_acts(dec_sizes.size() - 2, Activation::Relu);
    dec_acts.push_back(Activation::Identity);
    model.decoder = make_dense_net(dec_sizes, dec_acts, init_rng);
  }

  const std::size_t enc_params = model.encoder.parameter_count();
  const std::size_t dec_params = model.decoder.parameter_count();
  OptimState optim = make_optim_state(enc_params + dec_params, cfg.learning_rate);

  RngStream train_rng = rng.split(1);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  NetGradients enc_grads = make_gradients(model.encoder);
  NetGradients dec_grads = make_gradients(model.decoder);
  ForwardCache enc_cache, dec_cache;
  const int latent = cfg.latent_dim;

  VaeTrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_in_place(order, train_rng);
    double epoch_total = 0.0, epoch_rec = 0.0, epoch_kl = 0.0;
    double min_batch_kl = std::numeric_limits<double>::infinity();
    std::size_t seen = 0;
    for (std::size_t start = 0; start + cfg.batch_size <= order.size();
         start += cfg.batch_size) {
      zero_gradients(enc_grads);
      zero_gradients(dec_grads);
      const std::size_t batch_n = cfg.batch_size;
      double batch_kl = 0.0;
      for (std::size_t b = 0; b < batch_n; ++b) {
        const double y = data[order[start + b]];
        const double input[1] = {y};
        const auto enc_out = forward(model.encoder, input, &enc_cache);
        std::vector<double> z(latent), eps(latent), lv(latent);
        std::vector<unsigned char> clamped(latent);
        for (int j = 0; j < latent; ++j) {
          const double raw_lv = enc_out[latent + j];
          lv[j] = std::clamp(raw_lv, -kLogVarClamp, kLogVarClamp);
          clamped[j] = (raw_lv < -kLogVarClamp || raw_lv > kLogVarClamp) ? 1 : 0;
          eps[j] = train_rng.normal();
          z[j] = enc_out[j] + std::exp(0.5 * lv[j]) * eps[j];
        }
        const auto x_hat = forward(model.decoder, z, &dec_cache);
        const double diff = x_hat[0] - y;
        const double rec = diff * diff;
        double kl = 0.0;
        for (int j = 0; j < latent; ++j) {
          kl += -0.5 * (1.0 + lv[j] - enc_out[j] * enc_out[j] - std::exp(lv[j]));
        }
        epoch_rec += rec;
        epoch_kl += kl;
        batch_kl += kl;
        epoch_total += rec + cfg.beta * kl;

        const double d_xhat[1] = {2.0 * diff};
        const auto dz = backward_accumulate(model.decoder, dec_cache, d_xhat, dec_grads);
        std::vector<double> enc_grad(2 * latent);
        for (int j = 0; j < latent; ++j) {
          enc_grad[j] = dz[j] + cfg.beta * enc_out[j];  // d/d mu
          double d_lv = 0.0;
          if (!clamped[j]) {
            d_lv = dz[j] * eps[j] * 0.5 * std::exp(0.5 * lv[j]) +
                   cfg.beta * (-0.5) * (1.0 - std::exp(lv[j]));
          }
          enc_grad[latent + j] = d_lv;
        }
        backward_accumulate(model.encoder, enc_cache, enc_grad, enc_grads);
      }
      seen += batch_n;
      min_batch_kl = std::min(min_batch_kl, batch_kl / static_cast<double>(batch_n));
      const double inv = 1.0 / static_cast<double>(batch_n);
      scale_gradients(enc_grads, inv);
      scale_gradients(dec_grads, inv);
      std::vector<double> params = get_parameters(model.encoder);
      {
        const auto dec_flat = get_parameters(model.decoder);
        params.insert(params.end(), dec_flat.begin(), dec_flat.end());
      }
      std::vector<double> grads;
      grads.reserve(params.size());
      append_gradients(enc_grads, grads);
      append_gradients(dec_grads, grads);
      optim_step(optim, params, grads);
      set_parameters(model.encoder, std::span<const double>(params.data(), enc_params));
      set_parameters(model.decoder,
                     std::span<const double>(params.data() + enc_params, dec_params));
    }
    if (seen == 0) throw std::invalid_argument("batch size exceeds training data");
    const double inv_seen = 1.0 / static_cast<double>(seen);
    result.history.push_back({epoch, epoch_total * inv_seen, epoch_rec * inv_seen,
                              epoch_kl * inv_seen, min_batch_kl});
  }
  result.model = std::move(model);
  return result;
}

/// Samples z ~ N(0, I), decodes, and inverts the log/z-score normalization.
/// Output is clamped in log space, so claims are strictly positive and finite.
inline std::vector<double> generate_claims(const VaeModel& m, std::size_t n, RngStream& rng) {
  std::vector<double> claims;
  claims.reserve(n);
  std::vector<double> z(m.latent_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < m.latent_dim; ++j) z[j] = rng.normal();
    const auto y = forward(m.decoder, z);
    const double log_claim =
        std::clamp(m.norm_shift + m.norm_scale * y[0], -kLogClaimClamp, kLogClaimClamp);
    claims.push_back(std::exp(log_claim));
  }
  return claims;
}

inline nlohmann::json vae_to_json(const VaeModel& m) {
  return {{"format", "reinsim-vae"},
          {"version", 1},
          {"latent_dim", m.latent_dim},
          {"norm_shift", m.norm_shift},
          {"norm_scale", m.norm_scale},
          {"encoder", net_to_json(m.encoder)},
          {"decoder", net_to_json(m.decoder)}};
}

inline VaeModel vae_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "reinsim-vae") {
    throw std::invalid_argument("not a vae checkpoint");
  }
  VaeModel m;
  m.latent_dim = j.at("latent_dim").get<int>();
  m.norm_shift = j.at("norm_shift").get<double>();
  m.norm_scale = j.at("norm_scale").get<double>();
  m.encoder = net_from_json(j.at("encoder"));
  m.decoder = net_from_json(j.at("decoder"));
  if (m.encoder.output_size() != 2 * m.latent_dim || m.decoder.input_size() != m.latent_dim) {
    throw std::invalid_argument("vae checkpoint shape mismatch");
  }
  return m;
}

}  // namespace reinsim
