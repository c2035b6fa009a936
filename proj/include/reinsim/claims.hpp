#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "reinsim/rng.hpp"

namespace reinsim {

/// Poisson claim-arrival intensity, in claims per year.
struct FrequencySpec {
  double lambda = 10.0;
};

inline void validate(const FrequencySpec& freq) {
  if (!(freq.lambda > 0.0)) {
    throw std::invalid_argument("frequency lambda must be > 0");
  }
}

enum class SeverityKind { Lognormal, Pareto, Mixture };

struct LognormalParams {
  double mu = 0.0;     // log-scale
  double sigma = 1.0;  // log-shape, > 0
};

// Type-I Pareto on [scale, inf).
struct ParetoParams {
  double scale = 1.0;  // x_m > 0
  double shape = 2.0;  // a > 1 for a finite mean
};

struct MixtureComponent {
  double weight = 1.0;
  SeverityKind kind = SeverityKind::Lognormal;
  LognormalParams lognormal{};
  ParetoParams pareto{};
};

/// Parametric claim-severity model: lognormal, Pareto, or a finite mixture
/// of the two. Mixture weights must be nonnegative and sum to 1.
struct ClaimDistributionSpec {
  SeverityKind kind = SeverityKind::Lognormal;
  LognormalParams lognormal{};
  ParetoParams pareto{};
  std::vector<MixtureComponent> mixture;

  static ClaimDistributionSpec make_lognormal(double mu, double sigma) {
    ClaimDistributionSpec spec;
    spec.kind = SeverityKind::Lognormal;
    spec.lognormal = {mu, sigma};
    return spec;
  }
  static ClaimDistributionSpec make_pareto(double scale, double shape) {
    ClaimDistributionSpec spec;
    spec.kind = SeverityKind::Pareto;
    spec.pareto = {scale, shape};
    return spec;
  }
  static ClaimDistributionSpec make_mixture(std::vector<MixtureComponent> parts) {
    ClaimDistributionSpec spec;
    spec.kind = SeverityKind::Mixture;
    spec.mixture = std::move(parts);
    return spec;
  }
};

inline void validate(const ClaimDistributionSpec& spec) {
  const auto check_lognormal = [](const LognormalParams& p) {
    if (!(p.sigma > 0.0)) throw std::invalid_argument("lognormal sigma must be > 0");
    if (!std::isfinite(p.mu)) throw std::invalid_argument("lognormal mu must be finite");
  };
  const auto check_pareto = [](const ParetoParams& p) {
    if (!(p.scale > 0.0)) throw std::invalid_argument("pareto scale must be > 0");
    if (!(p.shape > 1.0)) throw std::invalid_argument("pareto shape must be > 1");
  };
  switch (spec.kind) {
    case SeverityKind::Lognormal:
      check_lognormal(spec.lognormal);
      break;
    case SeverityKind::Pareto:
      check_pareto(spec.pareto);
      break;
    case SeverityKind::Mixture: {
      if (spec.mixture.empty()) throw std::invalid_argument("mixture must have components");
      double total = 0.0;
      for (const auto& part : spec.mixture) {
        if (!(part.weight >= 0.0)) throw std::invalid_argument("mixture weight must be >= 0");
        if (part.kind == SeverityKind::Mixture) {
          throw std::invalid_argument("nested mixtures are not supported");
        }
        if (part.kind == SeverityKind::Lognormal) check_lognormal(part.lognormal);
        if (part.kind == SeverityKind::Pareto) check_pareto(part.pareto);
        total += part.weight;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("mixture weights must sum to 1");
      }
      break;
    }
  }
}

/// Premium terms: safety loading theta and the resulting rate per year.
struct PremiumSpec {
  double theta = 0.1;
  double rate = 0.0;  // currency per year
};

/// Claims observed in one simulation interval.
struct ClaimBatch {
  std::vector<double> amounts;
  int interval_index = 0;
  std::size_t count() const { return amounts.size(); }
};

inline int sample_claim_count(const FrequencySpec& freq, double dt, RngStream& rng) {
  validate(freq);
  if (!(dt >= 0.0)) throw std::invalid_argument("dt must be >= 0");
  return sample_poisson(freq.lambda * dt, rng);
}

namespace detail {

inline double sample_lognormal(const LognormalParams& p, RngStream& rng) {
  return std::exp(p.mu + p.sigma * rng.normal());
}

// Inverse CDF: x_m * u^(-1/a) with u in (0, 1].
inline double sample_pareto(const ParetoParams& p, RngStream& rng) {
  const double u = 1.0 - rng.uniform();
  return p.scale * std::pow(u, -1.0 / p.shape);
}

}  // namespace detail

inline std::vector<double> sample_claim_sizes(const ClaimDistributionSpec& spec,
                                              std::size_t n, RngStream& rng) {
  validate(spec);
  std::vector<double> amounts;
  amounts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (spec.kind) {
      case SeverityKind::Lognormal:
        amounts.push_back(detail::sample_lognormal(spec.lognormal, rng));
        break;
      case SeverityKind::Pareto:
        amounts.push_back(detail::sample_pareto(spec.pareto, rng));
        break;
      case SeverityKind::Mixture: {
        double u = rng.uniform();
        const MixtureComponent* chosen = &spec.mixture.back();
        for (const auto& part : spec.mixture) {
          if (u < part.weight) {
            chosen = &part;
            break;
          }
          u -= part.weight;
        }
        amounts.push_back(chosen->kind == SeverityKind::Lognormal
                              ? detail::sample_lognormal(chosen->lognormal, rng)
                              : detail::sample_pareto(chosen->pareto, rng));
        break;
      }
    }
  }
  return amounts;
}

/// Closed-form severity mean: lognormal e^(mu + sigma^2/2), Pareto
/// scale*shape/(shape-1), mixtures by weighted sum.
inline double expected_claim_size(const ClaimDistributionSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case SeverityKind::Lognormal:
      return std::exp(spec.lognormal.mu + 0.5 * spec.lognormal.sigma * spec.lognormal.sigma);
    case SeverityKind::Pareto:
      if (!(spec.pareto.shape > 1.0)) {
        throw std::domain_error("pareto mean is infinite for shape <= 1");
      }
      return spec.pareto.scale * spec.pareto.shape / (spec.pareto.shape - 1.0);
    case SeverityKind::Mixture: {
      double mean = 0.0;
      for (const auto& part : spec.mixture) {
        ClaimDistributionSpec single;
        single.kind = part.kind;
        single.lognormal = part.lognormal;
        single.pareto = part.pareto;
        mean += part.weight * expected_claim_size(single);
      }
      return mean;
    }
  }
  throw std::logic_error("unreachable severity kind");
}

// Gross rate c = (1 + theta) * lambda * E[X]. theta = 0 is accepted so the
// zero-loading case stays testable.
inline double gross_premium_rate(double theta, const FrequencySpec& freq,
                                 const ClaimDistributionSpec& spec) {
  if (!(theta >= 0.0)) throw std::invalid_argument("safety loading must be >= 0");
  validate(freq);
  return (1.0 + theta) * freq.lambda * expected_claim_size(spec);
}

inline PremiumSpec make_premium(double theta, const FrequencySpec& freq,
                                const ClaimDistributionSpec& spec) {
  return PremiumSpec{theta, gross_premium_rate(theta, freq, spec)};
}

}  // namespace reinsim
