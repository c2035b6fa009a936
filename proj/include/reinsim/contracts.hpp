#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "reinsim/claims.hpp"
#include "reinsim/rng.hpp"

namespace reinsim {

/// One reinsurance layer [attachment, exhaustion): the insurer keeps
/// `retention` of losses falling in the layer, the reinsurer takes the rest
/// at loading `loading`.
struct Layer {
  double attachment = 0.0;
  double exhaustion = 0.0;
  double retention = 1.0;  // in [0, 1]
  double loading = 0.2;    // reinsurer loading, >= 0
};

/// Ordered layers plus the base snapshot that dynamic adjustments are
/// measured from.
struct LayeredProgram {
  std::vector<Layer> layers;
  std::vector<Layer> base;

  std::size_t size() const { return layers.size(); }
};

inline LayeredProgram make_layered_program(std::vector<Layer> layers) {
  LayeredProgram p;
  p.layers = layers;
  p.base = std::move(layers);
  return p;
}

struct ProportionalContract {
  double retention = 1.0;
};

/// Per-layer deltas applied to the base snapshot (retention, attachment,
/// exhaustion), all of length K.
struct DynamicAdjustment {
  std::vector<double> delta_retention;
  std::vector<double> delta_attachment;
  std::vector<double> delta_exhaustion;
};

struct ConstraintSet {
  double psi_target = 0.05;       // max acceptable ruin probability
  double premium_max = 150000.0;  // max reinsurance spend over the horizon
  double retention_lo = 0.0;
  double retention_hi = 1.0;
};

inline void validate(const ConstraintSet& cs) {
  if (!(cs.psi_target >= 0.0 && cs.psi_target <= 1.0)) {
    throw std::invalid_argument("psi_target must be in [0,1]");
  }
  if (!(cs.premium_max > 0.0)) throw std::invalid_argument("premium_max must be > 0");
  if (!(cs.retention_lo >= 0.0 && cs.retention_lo <= cs.retention_hi && cs.retention_hi <= 1.0)) {
    throw std::invalid_argument("retention bounds must satisfy 0 <= lo <= hi <= 1");
  }
}

struct ProgramViolation {
  std::string constraint;   // which rule failed
  std::size_t layer_index;  // offending layer (first of the pair for overlaps)
  std::string message;
};

/// Empty iff layers are ordered, non-overlapping, with valid intervals and
/// retentions inside [0,1] and the configured bounds.
inline std::vector<ProgramViolation> validate_program(const LayeredProgram& p,
                                                      const ConstraintSet& cs) {
  std::vector<ProgramViolation> out;
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const Layer& layer = p.layers[k];
    if (!(layer.attachment >= 0.0)) {
      out.push_back({"attachment_negative", k,
                     "layer " + std::to_string(k) + " attachment below 0"});
    }
    if (!(layer.attachment < layer.exhaustion)) {
      out.push_back({"layer_interval", k,
                     "layer " + std::to_string(k) + " needs attachment < exhaustion"});
    }
    if (layer.retention < 0.0 || layer.retention > 1.0) {
      out.push_back({"retention_range", k,
                     "layer " + std::to_string(k) + " retention outside [0,1]"});
    } else if (layer.retention < cs.retention_lo - 1e-12 ||
               layer.retention > cs.retention_hi + 1e-12) {
      out.push_back({"retention_bounds", k,
                     "layer " + std::to_string(k) + " retention outside configured bounds"});
    }
    if (k + 1 < p.layers.size() && p.layers[k + 1].attachment < layer.exhaustion - 1e-12) {
      out.push_back({"layer_overlap", k,
                     "layers " + std::to_string(k) + "," + std::to_string(k + 1) + " overlap"});
    }
  }
  return out;
}

inline void require_valid_program(const LayeredProgram& p) {
  if (p.layers.empty()) throw std::invalid_argument("program needs at least one layer");
  ConstraintSet unconstrained;  // structural checks only
  const auto violations = validate_program(p, unconstrained);
  if (!violations.empty()) {
    throw std::invalid_argument("invalid layered program: " + violations.front().message);
  }
}

inline double retained_loss_proportional(const ProportionalContract& c, double x) {
  if (!(c.retention >= 0.0 && c.retention <= 1.0)) {
    throw std::invalid_argument("retention must be in [0,1]");
  }
  if (!(x >= 0.0)) throw std::invalid_argument("claim amount must be >= 0");
  return c.retention * x;
}

// Covered slice of a claim within one layer.
inline double layer_cover(const Layer& layer, double x) {
  return std::min(std::max(x - layer.attachment, 0.0), layer.exhaustion - layer.attachment);
}

/// Insurer's share of a claim: retention-weighted covered slices plus all
/// ground-up exposure no layer covers (below the first attachment, between
/// layers, above the top exhaustion).
inline double retained_loss_layered(const LayeredProgram& p, double x) {
  require_valid_program(p);
  if (!(x >= 0.0)) throw std::invalid_argument("claim amount must be >= 0");
  double covered = 0.0;
  double retained_in_layers = 0.0;
  for (const Layer& layer : p.layers) {
    const double slice = layer_cover(layer, x);
    covered += slice;
    retained_in_layers += layer.retention * slice;
  }
  return retained_in_layers + (x - covered);
}

/// Reinsurer's share per layer: (1 - retention_k) of each covered slice.
inline std::vector<double> ceded_loss_by_layer(const LayeredProgram& p, double x) {
  require_valid_program(p);
  if (!(x >= 0.0)) throw std::invalid_argument("claim amount must be >= 0");
  std::vector<double> ceded;
  ceded.reserve(p.layers.size());
  for (const Layer& layer : p.layers) {
    ceded.push_back((1.0 - layer.retention) * layer_cover(layer, x));
  }
  return ceded;
}

/// Frozen severity draws with prefix sums, for O(log n) expected-cover
/// queries. Used to price programs consistently across many adjustments.
class SeveritySample {
 public:
  explicit SeveritySample(std::vector<double> draws) : values_(std::move(draws)) {
    if (values_.empty()) throw std::invalid_argument("severity sample must be nonempty");
    std::sort(values_.begin(), values_.end());
    prefix_.resize(values_.size() + 1, 0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      prefix_[i + 1] = prefix_[i] + values_[i];
    }
  }

  // Mean over the sample of min(max(x - attachment, 0), exhaustion - attachment).
  double expected_cover(double attachment, double exhaustion) const {
    const auto n = static_cast<std::ptrdiff_t>(values_.size());
    const auto lo = std::upper_bound(values_.begin(), values_.end(), attachment) - values_.begin();
    const auto hi = std::upper_bound(values_.begin(), values_.end(), exhaustion) - values_.begin();
    const double width = exhaustion - attachment;
    const double mid = (prefix_[hi] - prefix_[lo]) - attachment * static_cast<double>(hi - lo);
    const double top = width * static_cast<double>(n - hi);
    return (mid + top) / static_cast<double>(n);
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
  std::vector<double> prefix_;
};

/// Loaded expected ceded cost of the program against a frozen severity
/// sample, scaled to the expected claim count lambda * horizon.
inline double program_premium(const LayeredProgram& p, const SeveritySample& severities,
                              double lambda, double horizon_years) {
  require_valid_program(p);
  double total = 0.0;
  for (const Layer& layer : p.layers) {
    const double ceded_share = 1.0 - layer.retention;
    total += (1.0 + layer.loading) * ceded_share *
             severities.expected_cover(layer.attachment, layer.exhaustion);
  }
  return total * lambda * horizon_years;
}

inline double reinsurance_premium(const LayeredProgram& p, const ClaimDistributionSpec& spec,
                                  const FrequencySpec& freq, double horizon_years,
                                  std::size_t n_mc, RngStream& rng) {
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
  validate(freq);
  SeveritySample severities(sample_claim_sizes(spec, n_mc, rng));
  return program_premium(p, severities, freq.lambda, horizon_years);
}

inline constexpr double kMinLayerWidth = 1.0;

/// Applies deltas to the base snapshot, then repairs the result to a valid
/// program: retentions clamp to bounds, widths clamp to a minimum, and
/// layers are pushed upward until ordered. Never throws on any delta.
inline LayeredProgram apply_dynamic_adjustment(const LayeredProgram& p,
                                               const DynamicAdjustment& adj,
                                               const ConstraintSet& cs) {
  validate(cs);
  const std::size_t k_layers = p.base.size();
  if (adj.delta_retention.size() != k_layers || adj.delta_attachment.size() != k_layers ||
      adj.delta_exhaustion.size() != k_layers) {
    throw std::invalid_argument("adjustment length must match layer count");
  }
  LayeredProgram out = p;
  double floor = 0.0;
  for (std::size_t k = 0; k < k_layers; ++k) {
    const Layer& base = p.base[k];
    Layer& layer = out.layers[k];
    layer.retention = std::clamp(base.retention + adj.delta_retention[k],
                                 cs.retention_lo, cs.retention_hi);
    const double raw_a = base.attachment + adj.delta_attachment[k];
    const double raw_b = base.exhaustion + adj.delta_exhaustion[k];
    const double width = std::max(raw_b - raw_a, kMinLayerWidth);
    layer.attachment = std::max(raw_a, floor);
    layer.exhaustion = layer.attachment + width;
    layer.loading = base.loading;
    floor = layer.exhaustion;
  }
  return out;
}

}  // namespace reinsim
