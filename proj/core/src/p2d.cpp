#include "dco/p2d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dco/errors.hpp"
#include "dco/training.hpp"

namespace dco {

namespace {

template <typename T>
std::vector<std::vector<T>> cartesian(const std::vector<std::vector<T>>& sets) {
  std::vector<std::vector<T>> out{{}};
  for (const auto& set : sets) {
    std::vector<std::vector<T>> next;
    next.reserve(out.size() * set.size());
    for (const auto& prefix : out) {
      for (const auto& item : set) {
        auto row = prefix;
        row.push_back(item);
        next.push_back(std::move(row));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

std::vector<Segment> enumerate_segments(const std::vector<std::vector<std::string>>& domains) {
  if (domains.empty()) throw ConfigError("segment_keys", "no segment keys configured");
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (domains[i].empty()) {
      throw ConfigError("segment_keys[" + std::to_string(i) + "].values", "empty domain");
    }
  }
  return cartesian(domains);
}

std::vector<Combination> enumerate_combinations(const DcoAd& ad) {
  ad.validate();
  return cartesian(ad.attributes);
}

double correct_prediction(double raw, double r_ds) {
  if (raw <= 0.0) return 0.0;
  // raw / (r (1 - raw)) >= 1  <=>  raw (1 + r) >= r; the second form is exact
  // at the threshold raw = r / (1 + r).
  if (raw * (1.0 + r_ds) >= r_ds) return 1.0;
  return std::min(1.0, raw / (r_ds * (1.0 - raw)));
}

double P2DParams::uniform_total(std::size_t n) const noexcept {
  return uniform_mass == UniformMass::total ? lambda_mix
                                            : lambda_mix * static_cast<double>(n);
}

void P2DParams::validate() const {
  if (!(r_ds >= 1.0)) throw ConfigError("p2d.r_ds", "must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("p2d.beta", "must be >= 0");
  if (!(lambda_mix >= 0.0 && lambda_mix <= 1.0)) {
    throw ConfigError("p2d.lambda_mix", "must be in [0, 1]");
  }
}

std::vector<double> softmax_distribution(std::span<const double> preds, double beta,
                                         double lambda_total) {
  const std::size_t n = preds.size();
  if (n == 0) throw ConfigError("p2d", "softmax over zero combinations");
  if (!(lambda_total >= 0.0 && lambda_total <= 1.0)) {
    throw ConfigError("p2d.lambda_mix", "total uniform mass must be in [0, 1]");
  }
  const double uniform = 1.0 / static_cast<double>(n);
  const double p_max = *std::max_element(preds.begin(), preds.end());
  if (!(p_max > 0.0) || !std::isfinite(p_max)) return std::vector<double>(n, uniform);

  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = std::exp(-beta * (1.0 - preds[i] / p_max));
  const double z = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& x : q) x = (1.0 - lambda_total) * x / z + lambda_total * uniform;
  return q;
}

const std::vector<double>* DistributionTable::find(const std::string& ad_id,
                                                   const Segment& segment) const {
  auto it = entries.find({ad_id, segment});
  return it == entries.end() ? nullptr : &it->second;
}

namespace {

std::vector<std::vector<double>> combination_vectors(const ModelState& model, const DcoAd& ad,
                                                     const std::vector<Combination>& combos) {
  std::vector<std::vector<double>> out;
  out.reserve(combos.size());
  for (const auto& combo : combos) {
    out.push_back(
        build_ad_vector(model, combination_ad_features(ad.ad_id, ad.standard_features, combo)));
  }
  return out;
}

std::vector<double> corrected(const ModelState& model, std::span<const double> user_vec,
                              const std::vector<std::vector<double>>& ad_vecs, double r_ds) {
  std::vector<double> preds;
  preds.reserve(ad_vecs.size());
  for (const auto& ad_vec : ad_vecs) {
    preds.push_back(correct_prediction(predict(model, user_vec, ad_vec), r_ds));
  }
  return preds;
}

}  // namespace

std::vector<double> combination_predictions(const ModelState& model, const DcoAd& ad,
                                            const Segment& segment, double r_ds) {
  const auto combos = enumerate_combinations(ad);
  return corrected(model, build_user_vector(model, segment),
                   combination_vectors(model, ad, combos), r_ds);
}

DistributionTable generate_table(const ModelState& model, std::span<const DcoAd> ads,
                                 const SegmentSpace& segments, const P2DParams& params) {
  params.validate();
  if (segments.keys != model.user_features()) {
    throw StructuralError("p2d: segment keys must coincide with the model's user features");
  }
  DistributionTable table;
  table.model_version = model.model_version();
  table.params = params;
  table.segment_keys = segments.keys;

  const auto all_segments = enumerate_segments(segments.domains);
  std::vector<std::vector<double>> user_vecs;
  user_vecs.reserve(all_segments.size());
  for (const auto& seg : all_segments) user_vecs.push_back(build_user_vector(model, seg));

  for (const DcoAd& ad : ads) {
    auto combos = enumerate_combinations(ad);
    const auto ad_vecs = combination_vectors(model, ad, combos);
    const double lambda_total = params.uniform_total(combos.size());
    for (std::size_t s = 0; s < all_segments.size(); ++s) {
      const auto preds = corrected(model, user_vecs[s], ad_vecs, params.r_ds);
      table.entries[{ad.ad_id, all_segments[s]}] =
          softmax_distribution(preds, params.beta, lambda_total);
    }
    table.combinations[ad.ad_id] = std::move(combos);
  }
  return table;
}

}  // namespace dco
