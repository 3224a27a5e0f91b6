#pragma once

// Ground truth of the synthetic marketplace: who arrives, which ads exist,
// and the true click / conversion probability of every
// (ad, segment, combination) cell.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dco/catalog.hpp"
#include "dco/p2d.hpp"
#include "dco/random.hpp"
#include "dco/segment.hpp"

namespace dco {

// Conversion reporting delay in ticks, capped at `horizon`.
struct DelayDistribution {
  enum class Kind { constant, geometric };
  Kind kind = Kind::geometric;
  double mean = 48.0;
  std::int64_t horizon = 720;  // 30 days of hourly ticks

  std::int64_t sample(Rng& rng) const;
  void validate() const;
};

struct WorldAd {
  AdListing listing;
  double daily_budget = 0.0;  // 0 = uncapped
};

struct WorldModel {
  SegmentSpace segments;
  std::vector<Segment> all_segments;      // enumerate_segments order
  std::vector<double> arrival_weights;    // per segment, sums to 1
  std::vector<WorldAd> ads;
  std::vector<std::vector<Combination>> combinations;  // per ad; one empty tuple for non-DCO
  // [ad][segment][combination]
  std::vector<std::vector<std::vector<double>>> true_ctr;
  std::vector<std::vector<std::vector<double>>> true_cvr;
  DelayDistribution delay;

  void validate() const;  // ConfigError
  Catalog catalog() const;
  std::optional<std::size_t> segment_index(const Segment& segment) const;
  std::optional<std::size_t> ad_index(const std::string& ad_id) const;
};

// Parameters of the generated world. Every DCO ad has one dominant
// combination whose conversion rate is `dominant_multiplier` times that of
// its other combinations in every segment.
struct WorldParams {
  std::uint64_t seed = 1;
  SegmentSpace segments;
  int dco_ads = 5;
  std::vector<int> attribute_sizes{2, 3, 3};
  int non_dco_ads = 5;
  double base_cvr_min = 0.004;
  double base_cvr_max = 0.012;
  double segment_spread = 0.5;  // per-segment factor uniform in [1-spread, 1+spread]
  double dominant_multiplier = 3.0;
  double base_ctr_min = 0.01;
  double base_ctr_max = 0.03;
  double ctr_combination_spread = 0.3;
  double ocpc_fraction = 0.5;
  double bid_min = 0.2;
  double bid_max = 1.0;
  double tcpa_min = 1.0;
  double tcpa_max = 2.5;
  double daily_budget = 0.0;
  bool uniform_arrivals = false;
  DelayDistribution delay;

  void validate() const;  // ConfigError with "world." field paths
};

// Default gender x device segment space (3 x 4 = 12 segments).
SegmentSpace default_segment_space();

WorldModel generate_world(const WorldParams& params);

// Index of the dominant combination of DCO ad `ad` (nullopt for non-DCO or
// when all combinations share one rate).
std::optional<std::size_t> dominant_combination(const WorldModel& world, std::size_t ad);

}  // namespace dco
