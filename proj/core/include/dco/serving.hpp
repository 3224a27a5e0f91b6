#pragma once

// Post-auction serving path. Ads are ranked by bid * pCTR in a first-price
// auction; only after a DCO ad wins is a combination drawn from the
// distribution table entry of (ad, user segment).

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dco/catalog.hpp"
#include "dco/p2d.hpp"
#include "dco/random.hpp"
#include "dco/segment.hpp"

namespace dco {

// mCPC: the bid. oCPC: pconv * tCPA.
double effective_bid(const Pricing& pricing, double pconv) noexcept;

double score_ad(const Pricing& pricing, double pctr, double pconv) noexcept;

struct ScoredAd {
  const AdListing* ad = nullptr;
  double score = 0.0;
  double bid = 0.0;  // price per click if this ad wins
};

// Index of the highest score; ties go to the smallest ad_id. nullopt when
// `eligible` is empty (no fill).
std::optional<std::size_t> run_auction(std::span<const ScoredAd> eligible);

// Walker/Vose alias table: O(1) draws using a single uniform variate.
class AliasSampler {
 public:
  AliasSampler() = default;
  explicit AliasSampler(std::span<const double> weights);

  std::size_t size() const noexcept { return prob_.size(); }
  std::size_t sample(double u) const noexcept;  // u in [0, 1)
  std::size_t operator()(Rng& rng) const;

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// Distribution table prepared for serving: one alias sampler per entry plus
// the combination lists used for the uniform fallback.
class ServingTable {
 public:
  ServingTable(const DistributionTable& table, const Catalog& catalog);

  struct Draw {
    std::size_t index = 0;
    const Combination* combination = nullptr;
    bool fallback = false;  // entry missing, drawn uniformly
  };

  // One lookup and one categorical draw. Throws ServingError if the ad is
  // known to neither the table nor the catalog.
  Draw draw(const std::string& ad_id, const Segment& segment, Rng& rng) const;

  const std::string& model_version() const noexcept { return model_version_; }

 private:
  struct AdEntry {
    std::vector<Combination> combinations;
    std::map<Segment, AliasSampler> samplers;
  };
  std::map<std::string, AdEntry, std::less<>> ads_;
  std::string model_version_;
};

ServingTable::Draw draw_combination(const ServingTable& table, const std::string& ad_id,
                                    const Segment& segment, Rng& rng);

struct AuctionOutcome {
  bool filled = false;
  std::string winner;
  double score = 0.0;
  double price_per_click = 0.0;
  std::optional<Combination> rendered_combination;  // present iff winner is DCO
  std::optional<std::size_t> combination_index;
  Segment segment;
};

// Runs the auction, then, for a DCO winner, draws its combination from
// `table`. The draw never feeds back into the ranking.
AuctionOutcome serve(std::span<const ScoredAd> eligible, const ServingTable& table,
                     const Segment& segment, Rng& rng);

// Readers get either the old or the new table in full.
class TableHandle {
 public:
  std::shared_ptr<const ServingTable> load() const;
  void store(std::shared_ptr<const ServingTable> table);

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const ServingTable> table_;
};

}  // namespace dco
