#pragma once

// Auxiliary conversion model training stream: impressions become negatives
// (downsampled), conversions become positives at their report tick, clicks
// are ignored, and conversions are never joined back to their impressions.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dco/catalog.hpp"
#include "dco/model.hpp"
#include "dco/segment.hpp"

namespace dco {

enum class EventKind { impression, click, conversion };

const char* to_string(EventKind kind) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view s) noexcept;

struct Event {
  std::uint64_t event_id = 0;
  std::int64_t timestamp = 0;  // occurrence tick
  EventKind kind = EventKind::impression;
  UserFeatureMap user_segment_keys;
  std::string ad_id;
  std::vector<std::string> rendered_assets;  // empty for non-DCO ads
  double price_paid = 0.0;                   // clicks only
  std::int64_t conversion_delay = 0;         // conversions only
  std::string bucket;

  // Tick at which the event becomes visible to training.
  std::int64_t report_tick() const noexcept {
    return kind == EventKind::conversion ? timestamp + conversion_delay : timestamp;
  }
};

inline constexpr const char* kAssetsFeature = "assets";
inline constexpr const char* kAdIdFeature = "ad";
inline constexpr const char* kNonDcoValue = "NONDCO";

// Unit-weight multi-value feature over the rendered assets, or {(NONDCO, 1)}.
AdFeature assets_feature(std::span<const std::string> rendered_assets);

// ad-id feature, the ad's standard features, then the assets feature.
AdFeatures combination_ad_features(const std::string& ad_id, const AdFeatures& standard,
                                   std::span<const std::string> rendered_assets);

struct TrainingExample {
  std::int64_t train_tick = 0;
  std::vector<std::string> user;  // ordered as the model's user features
  AdFeatures ad;
  int label = 0;
};

// Keeps each impression with probability 1/r_ds. The decision is a keyed hash
// of (seed, event_id), so a replay of the same log makes the same choices.
class Downsampler {
 public:
  Downsampler(double r_ds, std::uint64_t seed);

  double factor() const noexcept { return r_ds_; }
  bool keep(const Event& event) const noexcept;

 private:
  double r_ds_;
  std::uint64_t seed_;
};

// nullopt for clicks and dropped impressions.
std::optional<TrainingExample> to_training_example(const Event& event, const Catalog& catalog,
                                                   std::span<const std::string> user_features,
                                                   const Downsampler& sampler);

std::vector<TrainingExample> label_and_sample(std::span<const Event> events,
                                              const Catalog& catalog,
                                              std::span<const std::string> user_features,
                                              const Downsampler& sampler);

using ModelSnapshot = std::shared_ptr<const ModelState>;

struct PeriodResult {
  ModelSnapshot snapshot;
  std::size_t trained = 0;
  std::size_t skipped = 0;
};

// Trains on `batch` in non-decreasing train_tick order (stable for ties) and
// returns an immutable copy of the updated model.
PeriodResult train_period(ModelState& model, std::vector<TrainingExample> batch);

}  // namespace dco
