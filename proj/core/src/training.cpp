#include "dco/training.hpp"

#include <algorithm>
#include <stdexcept>

#include "dco/errors.hpp"
#include "dco/random.hpp"

namespace dco {

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::impression: return "impression";
    case EventKind::click: return "click";
    case EventKind::conversion: return "conversion";
  }
  return "impression";
}

std::optional<EventKind> parse_event_kind(std::string_view s) noexcept {
  if (s == "impression") return EventKind::impression;
  if (s == "click") return EventKind::click;
  if (s == "conversion") return EventKind::conversion;
  return std::nullopt;
}

AdFeature assets_feature(std::span<const std::string> rendered_assets) {
  AdFeature feature{kAssetsFeature, {}};
  if (rendered_assets.empty()) {
    feature.values.push_back({kNonDcoValue, 1.0});
    return feature;
  }
  feature.values.reserve(rendered_assets.size());
  for (const auto& asset : rendered_assets) feature.values.push_back({asset, 1.0});
  return feature;
}

AdFeatures combination_ad_features(const std::string& ad_id, const AdFeatures& standard,
                                   std::span<const std::string> rendered_assets) {
  AdFeatures features;
  features.reserve(standard.size() + 2);
  features.push_back({kAdIdFeature, {{ad_id, 1.0}}});
  features.insert(features.end(), standard.begin(), standard.end());
  features.push_back(assets_feature(rendered_assets));
  return features;
}

Downsampler::Downsampler(double r_ds, std::uint64_t seed) : r_ds_(r_ds), seed_(seed) {
  if (!(r_ds >= 1.0)) throw ConfigError("r_ds", "downsampling factor must be >= 1");
}

bool Downsampler::keep(const Event& event) const noexcept {
  if (r_ds_ == 1.0) return true;
  const double u = unit_interval(splitmix64(seed_ ^ splitmix64(event.event_id)));
  return u * r_ds_ < 1.0;
}

std::optional<TrainingExample> to_training_example(const Event& event, const Catalog& catalog,
                                                   std::span<const std::string> user_features,
                                                   const Downsampler& sampler) {
  int label = 0;
  switch (event.kind) {
    case EventKind::click:
      return std::nullopt;
    case EventKind::impression:
      if (!sampler.keep(event)) return std::nullopt;
      label = 0;
      break;
    case EventKind::conversion:
      label = 1;
      break;
  }
  static const AdFeatures kNoFeatures;
  const AdListing* listing = catalog.find(event.ad_id);
  TrainingExample ex;
  ex.train_tick = event.report_tick();
  ex.user = extract_segment(event.user_segment_keys, user_features);
  ex.ad = combination_ad_features(event.ad_id, listing ? listing->standard_features : kNoFeatures,
                                  event.rendered_assets);
  ex.label = label;
  return ex;
}

std::vector<TrainingExample> label_and_sample(std::span<const Event> events,
                                              const Catalog& catalog,
                                              std::span<const std::string> user_features,
                                              const Downsampler& sampler) {
  std::vector<TrainingExample> out;
  for (const Event& event : events) {
    if (auto ex = to_training_example(event, catalog, user_features, sampler)) {
      out.push_back(std::move(*ex));
    }
  }
  return out;
}

PeriodResult train_period(ModelState& model, std::vector<TrainingExample> batch) {
  std::stable_sort(batch.begin(), batch.end(), [](const auto& a, const auto& b) {
    return a.train_tick < b.train_tick;
  });
  PeriodResult result;
  for (const auto& ex : batch) {
    if (train_event(model, ex.user, ex.ad, ex.label)) {
      ++result.trained;
    } else {
      ++result.skipped;
    }
  }
  result.snapshot = std::make_shared<const ModelState>(model);
  return result;
}

}  // namespace dco
