#include "dco/serving.hpp"

#include <algorithm>
#include <numeric>

#include "dco/errors.hpp"

namespace dco {

Segment extract_segment(const UserFeatureMap& user, std::span<const std::string> keys) {
  Segment segment;
  segment.reserve(keys.size());
  for (const auto& key : keys) {
    auto it = user.find(key);
    segment.push_back(it == user.end() || it->second.empty() ? std::string(kUnknownValue)
                                                             : it->second);
  }
  return segment;
}

std::string segment_label(const Segment& segment) {
  std::string out;
  for (std::size_t i = 0; i < segment.size(); ++i) {
    if (i) out += '|';
    out += segment[i];
  }
  return out;
}

double effective_bid(const Pricing& pricing, double pconv) noexcept {
  return pricing.type == PricingType::mcpc ? pricing.amount : pconv * pricing.amount;
}

double score_ad(const Pricing& pricing, double pctr, double pconv) noexcept {
  return effective_bid(pricing, pconv) * pctr;
}

std::optional<std::size_t> run_auction(std::span<const ScoredAd> eligible) {
  if (eligible.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < eligible.size(); ++i) {
    const auto& cand = eligible[i];
    const auto& cur = eligible[best];
    if (cand.score > cur.score || (cand.score == cur.score && cand.ad->ad_id < cur.ad->ad_id)) {
      best = i;
    }
  }
  return best;
}

AliasSampler::AliasSampler(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw ServingError("alias sampler: empty distribution");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw ServingError("alias sampler: weights must have positive mass");

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  // Leftovers from rounding.
  for (std::size_t i : small) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::size_t AliasSampler::sample(double u) const noexcept {
  const double x = u * static_cast<double>(prob_.size());
  std::size_t column = static_cast<std::size_t>(x);
  if (column >= prob_.size()) column = prob_.size() - 1;
  const double frac = x - static_cast<double>(column);
  return frac < prob_[column] ? column : alias_[column];
}

std::size_t AliasSampler::operator()(Rng& rng) const {
  return sample(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

ServingTable::ServingTable(const DistributionTable& table, const Catalog& catalog)
    : model_version_(table.model_version) {
  for (const auto& ad : catalog.ads()) {
    if (ad.dco) ads_[ad.ad_id].combinations = enumerate_combinations(*ad.dco);
  }
  for (const auto& [ad_id, combos] : table.combinations) ads_[ad_id].combinations = combos;
  for (const auto& [key, probs] : table.entries) {
    AdEntry& entry = ads_[key.first];
    if (probs.size() != entry.combinations.size()) {
      throw ServingError("table entry for " + key.first + " has " +
                         std::to_string(probs.size()) + " probabilities for " +
                         std::to_string(entry.combinations.size()) + " combinations");
    }
    entry.samplers.emplace(key.second, AliasSampler(probs));
  }
}

ServingTable::Draw ServingTable::draw(const std::string& ad_id, const Segment& segment,
                                      Rng& rng) const {
  auto ad = ads_.find(ad_id);
  if (ad == ads_.end() || ad->second.combinations.empty()) {
    throw ServingError("no combinations known for ad '" + ad_id + "'");
  }
  const auto& combos = ad->second.combinations;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  Draw draw;
  auto sampler = ad->second.samplers.find(segment);
  if (sampler == ad->second.samplers.end()) {
    draw.fallback = true;
    draw.index = std::min(combos.size() - 1,
                          static_cast<std::size_t>(u * static_cast<double>(combos.size())));
  } else {
    draw.index = sampler->second.sample(u);
  }
  draw.combination = &combos[draw.index];
  return draw;
}

ServingTable::Draw draw_combination(const ServingTable& table, const std::string& ad_id,
                                    const Segment& segment, Rng& rng) {
  return table.draw(ad_id, segment, rng);
}

AuctionOutcome serve(std::span<const ScoredAd> eligible, const ServingTable& table,
                     const Segment& segment, Rng& rng) {
  AuctionOutcome outcome;
  outcome.segment = segment;
  const auto winner = run_auction(eligible);
  if (!winner) return outcome;
  const ScoredAd& w = eligible[*winner];
  outcome.filled = true;
  outcome.winner = w.ad->ad_id;
  outcome.score = w.score;
  outcome.price_per_click = w.bid;
  if (w.ad->is_dco()) {
    const auto draw = table.draw(w.ad->ad_id, segment, rng);
    outcome.rendered_combination = *draw.combination;
    outcome.combination_index = draw.index;
  }
  return outcome;
}

std::shared_ptr<const ServingTable> TableHandle::load() const {
  std::lock_guard lock(mu_);
  return table_;
}

void TableHandle::store(std::shared_ptr<const ServingTable> table) {
  std::lock_guard lock(mu_);
  table_ = std::move(table);
}

}  // namespace dco
