#include "dco/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dco/errors.hpp"

namespace dco {

std::int64_t DelayDistribution::sample(Rng& rng) const {
  std::int64_t delay;
  if (kind == Kind::constant) {
    delay = static_cast<std::int64_t>(std::llround(mean));
  } else {
    // Geometric on {0, 1, ...} with the requested mean.
    std::geometric_distribution<std::int64_t> geo(1.0 / (mean + 1.0));
    delay = geo(rng);
  }
  return std::clamp<std::int64_t>(delay, 0, horizon);
}

void DelayDistribution::validate() const {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ConfigError("world.delay.mean", "must be >= 0");
  if (horizon < 0) throw ConfigError("world.delay.horizon", "must be >= 0");
}

void WorldModel::validate() const {
  const std::size_t n_seg = all_segments.size();
  if (n_seg == 0) throw ConfigError("world.segment_keys", "no segments");
  if (arrival_weights.size() != n_seg) {
    throw ConfigError("world.arrival_weights", "one weight per segment required");
  }
  if (ads.empty()) throw ConfigError("world.ads", "no ads");
  auto check_prob = [](double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(field, "rates must lie in [0, 1]");
  };
  for (std::size_t a = 0; a < ads.size(); ++a) {
    const std::size_t n_comb = combinations[a].size();
    if (true_ctr[a].size() != n_seg || true_cvr[a].size() != n_seg) {
      throw ConfigError("world.rates", "rates must cover every segment");
    }
    for (std::size_t s = 0; s < n_seg; ++s) {
      if (true_ctr[a][s].size() != n_comb || true_cvr[a][s].size() != n_comb) {
        throw ConfigError("world.rates", "rates must cover every combination");
      }
      for (double p : true_ctr[a][s]) check_prob(p, "world.true_ctr");
      for (double p : true_cvr[a][s]) check_prob(p, "world.true_cvr");
    }
  }
  delay.validate();
}

Catalog WorldModel::catalog() const {
  std::vector<AdListing> listings;
  listings.reserve(ads.size());
  for (const auto& ad : ads) listings.push_back(ad.listing);
  return Catalog(segments, std::move(listings));
}

std::optional<std::size_t> WorldModel::segment_index(const Segment& segment) const {
  auto it = std::find(all_segments.begin(), all_segments.end(), segment);
  if (it == all_segments.end()) return std::nullopt;
  return static_cast<std::size_t>(it - all_segments.begin());
}

std::optional<std::size_t> WorldModel::ad_index(const std::string& ad_id) const {
  for (std::size_t i = 0; i < ads.size(); ++i) {
    if (ads[i].listing.ad_id == ad_id) return i;
  }
  return std::nullopt;
}

void WorldParams::validate() const {
  if (segments.keys.empty()) throw ConfigError("world.segment_keys", "no segment keys");
  if (dco_ads < 0) throw ConfigError("world.dco_ads", "must be >= 0");
  if (non_dco_ads < 0) throw ConfigError("world.non_dco_ads", "must be >= 0");
  if (dco_ads + non_dco_ads == 0) throw ConfigError("world.dco_ads", "world has no ads");
  if (attribute_sizes.empty()) throw ConfigError("world.attribute_sizes", "no attributes");
  for (int m : attribute_sizes) {
    if (m < 1 || m > static_cast<int>(kMaxAssetsPerAttribute)) {
      throw ConfigError("world.attribute_sizes", "each attribute needs 1..3 assets");
    }
  }
  auto range = [](double lo, double hi, const char* field) {
    if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) throw ConfigError(field, "need 0 <= min <= max <= 1");
  };
  range(base_cvr_min, base_cvr_max, "world.base_cvr");
  range(base_ctr_min, base_ctr_max, "world.base_ctr");
  if (!(segment_spread >= 0.0 && segment_spread < 1.0)) {
    throw ConfigError("world.segment_spread", "must be in [0, 1)");
  }
  if (!(ctr_combination_spread >= 0.0 && ctr_combination_spread < 1.0)) {
    throw ConfigError("world.ctr_combination_spread", "must be in [0, 1)");
  }
  if (!(dominant_multiplier > 0.0)) throw ConfigError("world.dominant_multiplier", "must be > 0");
  if (base_cvr_max * (1.0 + segment_spread) * std::max(1.0, dominant_multiplier) > 1.0) {
    throw ConfigError("world.dominant_multiplier", "true CVR would exceed 1");
  }
  if (!(ocpc_fraction >= 0.0 && ocpc_fraction <= 1.0)) {
    throw ConfigError("world.ocpc_fraction", "must be in [0, 1]");
  }
  if (!(bid_min > 0.0 && bid_min <= bid_max)) throw ConfigError("world.bid", "need 0 < min <= max");
  if (!(tcpa_min > 0.0 && tcpa_min <= tcpa_max)) {
    throw ConfigError("world.tcpa", "need 0 < min <= max");
  }
  if (!(daily_budget >= 0.0)) throw ConfigError("world.daily_budget", "must be >= 0");
  delay.validate();
}

SegmentSpace default_segment_space() {
  return {{"gender", "device"},
          {{"female", "male", "unknown"}, {"mobile", "desktop", "tablet", "unknown"}}};
}

namespace {

constexpr const char* kAttributePrefixes[] = {"Ti", "Im", "De", "Cta", "Lg", "Vd"};
constexpr const char* kCategories[] = {"sports", "electronics", "travel", "finance", "fashion",
                                       "autos"};

}  // namespace

WorldModel generate_world(const WorldParams& params) {
  params.validate();
  Rng rng = make_stream(params.seed, "world");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  WorldModel world;
  world.segments = params.segments;
  world.all_segments = enumerate_segments(params.segments.domains);
  world.delay = params.delay;
  const std::size_t n_seg = world.all_segments.size();

  world.arrival_weights.resize(n_seg);
  for (double& w : world.arrival_weights) w = params.uniform_arrivals ? 1.0 : uniform(0.5, 1.5);
  const double total = std::accumulate(world.arrival_weights.begin(),
                                       world.arrival_weights.end(), 0.0);
  for (double& w : world.arrival_weights) w /= total;

  const int n_ads = params.dco_ads + params.non_dco_ads;
  for (int a = 0; a < n_ads; ++a) {
    const bool is_dco = a < params.dco_ads;
    WorldAd ad;
    ad.daily_budget = params.daily_budget;
    AdListing& listing = ad.listing;
    listing.ad_id = is_dco ? "dco-" + std::to_string(a)
                           : "std-" + std::to_string(a - params.dco_ads);
    if (unit(rng) < params.ocpc_fraction) {
      listing.pricing = {PricingType::ocpc, uniform(params.tcpa_min, params.tcpa_max)};
    } else {
      listing.pricing = {PricingType::mcpc, uniform(params.bid_min, params.bid_max)};
    }
    const std::size_t cat_a = static_cast<std::size_t>(unit(rng) * std::size(kCategories));
    const std::size_t cat_b = (cat_a + 1 + static_cast<std::size_t>(unit(rng) * 3)) %
                              std::size(kCategories);
    listing.standard_features = {
        {"campaign", {{"cmp-" + std::to_string(a), 1.0}}},
        {"advertiser", {{"adv-" + std::to_string(a / 2), 1.0}}},
        {"category", {{kCategories[cat_a], 1.0}, {kCategories[cat_b], 1.0}}},
    };

    std::vector<Combination> combos{Combination{}};
    if (is_dco) {
      DcoAd dco{listing.ad_id, listing.standard_features, {}};
      for (std::size_t i = 0; i < params.attribute_sizes.size(); ++i) {
        std::vector<std::string> assets;
        for (int m = 0; m < params.attribute_sizes[i]; ++m) {
          assets.push_back(std::string(kAttributePrefixes[i % std::size(kAttributePrefixes)]) +
                           std::to_string(a) + "x" + std::to_string(i) + std::to_string(m));
        }
        dco.attributes.push_back(std::move(assets));
      }
      combos = enumerate_combinations(dco);
      listing.dco = std::move(dco);
    }
    const std::size_t n_comb = combos.size();

    const double base_cvr = uniform(params.base_cvr_min, params.base_cvr_max);
    const double base_ctr = uniform(params.base_ctr_min, params.base_ctr_max);
    const std::size_t dominant =
        std::min(n_comb - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n_comb)));
    std::vector<double> ctr_factor(n_comb);
    for (double& f : ctr_factor) {
      f = uniform(1.0 - params.ctr_combination_spread, 1.0 + params.ctr_combination_spread);
    }

    std::vector<std::vector<double>> ctr(n_seg, std::vector<double>(n_comb));
    std::vector<std::vector<double>> cvr(n_seg, std::vector<double>(n_comb));
    for (std::size_t s = 0; s < n_seg; ++s) {
      const double seg_cvr = uniform(1.0 - params.segment_spread, 1.0 + params.segment_spread);
      const double seg_ctr = uniform(1.0 - params.segment_spread, 1.0 + params.segment_spread);
      for (std::size_t c = 0; c < n_comb; ++c) {
        const double mult = (is_dco && c == dominant) ? params.dominant_multiplier : 1.0;
        cvr[s][c] = std::min(1.0, base_cvr * seg_cvr * mult);
        ctr[s][c] = std::min(1.0, base_ctr * seg_ctr * ctr_factor[c]);
      }
    }
    world.ads.push_back(std::move(ad));
    world.combinations.push_back(std::move(combos));
    world.true_ctr.push_back(std::move(ctr));
    world.true_cvr.push_back(std::move(cvr));
  }
  world.validate();
  return world;
}

std::optional<std::size_t> dominant_combination(const WorldModel& world, std::size_t ad) {
  if (!world.ads.at(ad).listing.is_dco()) return std::nullopt;
  const auto& rates = world.true_cvr[ad][0];
  const auto it = std::max_element(rates.begin(), rates.end());
  if (std::all_of(rates.begin(), rates.end(), [&](double r) { return r == *it; })) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - rates.begin());
}

}  // namespace dco
