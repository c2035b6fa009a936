#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "reinsim/contracts.hpp"

using namespace reinsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LayeredProgram two_layer_program() {
  return make_layered_program({{0.0, 10.0, 0.2, 0.2}, {10.0, 50.0, 0.8, 0.2}});
}

// Uniform random program: contiguous-or-gapped ordered layers, retentions in [0,1].
LayeredProgram random_program(RngStream& rng) {
  const std::size_t k = 1 + rng.uniform_index(5);
  std::vector<Layer> layers(k);
  double bound = rng.uniform(0.0, 5.0);
  for (auto& layer : layers) {
    layer.attachment = bound;
    layer.exhaustion = bound + rng.uniform(0.5, 60.0);
    layer.retention = rng.uniform(0.0, 1.0);
    layer.loading = rng.uniform(0.0, 0.5);
    bound = layer.exhaustion + rng.uniform(0.0, 10.0);
  }
  return make_layered_program(std::move(layers));
}

}  // namespace

TEST_CASE("retained_loss_proportional") {
  REQUIRE(retained_loss_proportional({1.0}, 42.0) == 42.0);
  REQUIRE(retained_loss_proportional({0.0}, 42.0) == 0.0);
  REQUIRE_THAT(retained_loss_proportional({0.5}, 8.0), WithinAbs(4.0, 1e-12));
  REQUIRE_THROWS_AS(retained_loss_proportional({0.5}, -1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(retained_loss_proportional({1.5}, 1.0), std::invalid_argument);
}

TEST_CASE("retained_loss_layered hand-evaluated slices") {
  SECTION("single layer, claim inside the layer") {
    const auto p = make_layered_program({{0.0, 10.0, 0.5, 0.2}});
    REQUIRE_THAT(retained_loss_layered(p, 8.0), WithinAbs(4.0, 1e-12));
  }
  SECTION("excess above the top layer stays with the insurer") {
    const auto p = make_layered_program({{0.0, 10.0, 0.5, 0.2}});
    REQUIRE_THAT(retained_loss_layered(p, 25.0), WithinAbs(0.5 * 10.0 + 15.0, 1e-12));
  }
  SECTION("two layers split a mid-size claim") {
    const auto p = two_layer_program();
    REQUIRE_THAT(retained_loss_layered(p, 30.0), WithinAbs(0.2 * 10.0 + 0.8 * 20.0, 1e-12));
  }
  SECTION("invalid program is rejected") {
    auto p = make_layered_program({{10.0, 5.0, 0.5, 0.2}});
    REQUIRE_THROWS_AS(retained_loss_layered(p, 1.0), std::invalid_argument);
  }
}

TEST_CASE("ceded_loss_by_layer") {
  SECTION("full retention cedes nothing") {
    const auto p = make_layered_program({{0.0, 10.0, 1.0, 0.2}});
    REQUIRE(ceded_loss_by_layer(p, 7.0) == std::vector<double>{0.0});
  }
  SECTION("complement of the retained slice") {
    const auto p = make_layered_program({{0.0, 10.0, 0.5, 0.2}});
    REQUIRE_THAT(ceded_loss_by_layer(p, 8.0)[0], WithinAbs(4.0, 1e-12));
  }
  SECTION("per-layer complements for two layers") {
    const auto ceded = ceded_loss_by_layer(two_layer_program(), 30.0);
    REQUIRE(ceded.size() == 2);
    REQUIRE_THAT(ceded[0], WithinAbs(8.0, 1e-12));
    REQUIRE_THAT(ceded[1], WithinAbs(4.0, 1e-12));
  }
}

TEST_CASE("conservation and monotonicity over random programs") {
  RngStream rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = random_program(rng);
    const double x = rng.uniform(0.0, 400.0);
    const double retained = retained_loss_layered(p, x);
    const auto ceded = ceded_loss_by_layer(p, x);
    const double total_ceded = std::accumulate(ceded.begin(), ceded.end(), 0.0);
    REQUIRE_THAT(retained + total_ceded, WithinAbs(x, 1e-9));

    // nondecreasing in x
    const double bigger = x + rng.uniform(0.0, 50.0);
    REQUIRE(retained_loss_layered(p, bigger) >= retained - 1e-12);

    // nondecreasing in each retention
    auto raised = p;
    const std::size_t k = rng.uniform_index(p.size());
    raised.layers[k].retention = std::min(1.0, raised.layers[k].retention + 0.1);
    REQUIRE(retained_loss_layered(raised, x) >= retained - 1e-12);
  }
}

TEST_CASE("single wide layer reproduces the proportional contract") {
  const double alpha = 0.35;
  const auto p = make_layered_program({{0.0, 1e9, alpha, 0.2}});
  RngStream rng(77);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(0.0, 1e6);  // all claims below the exhaustion
    REQUIRE_THAT(retained_loss_layered(p, x),
                 WithinAbs(retained_loss_proportional({alpha}, x), 1e-9));
  }
  // and the explicit identity retained = alpha*min(x, B) + max(x - B, 0)
  const auto small = make_layered_program({{0.0, 100.0, alpha, 0.2}});
  for (const double x : {50.0, 100.0, 250.0}) {
    REQUIRE_THAT(retained_loss_layered(small, x),
                 WithinAbs(alpha * std::min(x, 100.0) + std::max(x - 100.0, 0.0), 1e-12));
  }
}

TEST_CASE("reinsurance_premium") {
  FrequencySpec freq{1.0};
  const auto spec = ClaimDistributionSpec::make_lognormal(3.5, 1.0);

  SECTION("full retention costs nothing") {
    const auto p = two_layer_program();
    auto all_retained = p;
    for (auto& l : all_retained.layers) l.retention = 1.0;
    RngStream rng(1);
    REQUIRE(reinsurance_premium(all_retained, spec, freq, 1.0, 1000, rng) == 0.0);
  }
  SECTION("full cession of everything approximates E[X]") {
    const auto p = make_layered_program({{0.0, 1e12, 0.0, 0.0}});
    RngStream rng(2);
    const double premium = reinsurance_premium(p, spec, freq, 1.0, 200000, rng);
    REQUIRE_THAT(premium, WithinRel(std::exp(4.0), 0.02));
  }
  SECTION("deterministic under a fixed seed") {
    const auto p = two_layer_program();
    RngStream a(9), b(9);
    REQUIRE(reinsurance_premium(p, spec, freq, 10.0, 64, a) ==
            reinsurance_premium(p, spec, freq, 10.0, 64, b));
  }
  SECTION("nonincreasing in every retention") {
    RngStream rng(3);
    const SeveritySample severities(sample_claim_sizes(spec, 4096, rng));
    auto p = two_layer_program();
    for (auto& l : p.layers) l.retention = 0.1;
    double prev = program_premium(p, severities, 10.0, 10.0);
    for (double alpha : {0.3, 0.5, 0.7, 0.9}) {
      for (auto& l : p.layers) l.retention = alpha;
      const double now = program_premium(p, severities, 10.0, 10.0);
      REQUIRE(now <= prev + 1e-12);
      prev = now;
    }
  }
}

TEST_CASE("SeveritySample expected cover matches direct averaging") {
  RngStream rng(8);
  auto draws = sample_claim_sizes(ClaimDistributionSpec::make_lognormal(3.0, 0.8), 500, rng);
  const SeveritySample sample(draws);
  for (const auto [a, b] : {std::pair{0.0, 10.0}, {5.0, 60.0}, {30.0, 31.0}, {100.0, 1e6}}) {
    double direct = 0.0;
    for (const double x : draws) direct += std::min(std::max(x - a, 0.0), b - a);
    direct /= draws.size();
    REQUIRE_THAT(sample.expected_cover(a, b), WithinAbs(direct, 1e-9));
  }
}

TEST_CASE("apply_dynamic_adjustment") {
  ConstraintSet cs;
  cs.retention_lo = 0.2;
  cs.retention_hi = 0.5;
  const auto p = make_layered_program({{0.0, 10.0, 0.4, 0.2}, {10.0, 50.0, 0.4, 0.2}});

  SECTION("zero adjustment is the identity") {
    const DynamicAdjustment zero{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    const auto q = apply_dynamic_adjustment(p, zero, cs);
    for (std::size_t k = 0; k < p.size(); ++k) {
      REQUIRE(q.layers[k].attachment == p.layers[k].attachment);
      REQUIRE(q.layers[k].exhaustion == p.layers[k].exhaustion);
      REQUIRE(q.layers[k].retention == p.layers[k].retention);
    }
  }
  SECTION("retention deltas clamp to the bounds") {
    const DynamicAdjustment big{{10.0, -10.0}, {0.0, 0.0}, {0.0, 0.0}};
    const auto q = apply_dynamic_adjustment(p, big, cs);
    REQUIRE(q.layers[0].retention == 0.5);
    REQUIRE(q.layers[1].retention == 0.2);
  }
  SECTION("overlapping layers are pushed up to touch exactly") {
    const DynamicAdjustment shove{{0.0, 0.0}, {0.0, -8.0}, {0.0, -8.0}};
    const auto q = apply_dynamic_adjustment(p, shove, cs);
    REQUIRE(q.layers[1].attachment == q.layers[0].exhaustion);
    REQUIRE(q.layers[1].exhaustion - q.layers[1].attachment >= kMinLayerWidth);
  }
  SECTION("adjustments are measured from the base snapshot") {
    const DynamicAdjustment step{{0.05, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    auto q = apply_dynamic_adjustment(p, step, cs);
    q = apply_dynamic_adjustment(q, step, cs);  // same delta twice
    REQUIRE_THAT(q.layers[0].retention, WithinAbs(0.45, 1e-12));
  }
  SECTION("any adjustment yields a validate_program-clean result") {
    RngStream rng(55);
    for (int trial = 0; trial < 300; ++trial) {
      DynamicAdjustment adj;
      for (std::size_t k = 0; k < p.size(); ++k) {
        adj.delta_retention.push_back(rng.uniform(-1.0, 1.0));
        adj.delta_attachment.push_back(rng.uniform(-100.0, 100.0));
        adj.delta_exhaustion.push_back(rng.uniform(-100.0, 100.0));
      }
      const auto q = apply_dynamic_adjustment(p, adj, cs);
      REQUIRE(validate_program(q, cs).empty());
    }
  }
  SECTION("length mismatch is rejected") {
    const DynamicAdjustment bad{{0.0}, {0.0}, {0.0}};
    REQUIRE_THROWS_AS(apply_dynamic_adjustment(p, bad, cs), std::invalid_argument);
  }
}

TEST_CASE("validate_program reports the offending layer") {
  ConstraintSet cs;  // unconstrained retentions
  auto p = make_layered_program(
      {{0.0, 10.0, 0.5, 0.2}, {10.0, 20.0, 0.5, 0.2}, {20.0, 30.0, 0.5, 0.2}});
  REQUIRE(validate_program(p, cs).empty());

  SECTION("retention outside [0,1]") {
    p.layers[2].retention = 1.2;
    const auto v = validate_program(p, cs);
    REQUIRE(v.size() == 1);
    REQUIRE(v[0].constraint == "retention_range");
    REQUIRE(v[0].layer_index == 2);
  }
  SECTION("overlapping boundary pair") {
    p.layers[1].attachment = 8.0;
    const auto v = validate_program(p, cs);
    REQUIRE(v.size() == 1);
    REQUIRE(v[0].constraint == "layer_overlap");
    REQUIRE(v[0].layer_index == 0);
  }
}
