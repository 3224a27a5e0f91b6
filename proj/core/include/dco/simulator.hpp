#pragma once

// A/B marketplace simulator. Every tick a batch of users arrives; each user is
// assigned to a bucket, an auction is run with the shared ranking model, and
// the winning ad is rendered with a combination chosen by the bucket's policy.
// Clicks and conversions are drawn from the world's true rates. Conversions
// sit in a delay queue until their report tick.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dco/catalog.hpp"
#include "dco/model.hpp"
#include "dco/p2d.hpp"
#include "dco/random.hpp"
#include "dco/serving.hpp"
#include "dco/training.hpp"
#include "dco/world.hpp"

namespace dco {

enum class PolicyKind { conversion_dco, uniform, ctr_counting };

const char* to_string(PolicyKind kind) noexcept;
std::optional<PolicyKind> parse_policy_kind(std::string_view s) noexcept;

struct Bucket {
  std::string name;
  double share = 0.0;
  PolicyKind policy = PolicyKind::uniform;
};

// Names unique, shares positive and summing to 1 (1e-9).
void validate_buckets(std::span<const Bucket> buckets);

std::vector<double> uniform_policy(std::size_t n);

struct ClickCounter {
  std::uint64_t impressions = 0;
  std::uint64_t clicks = 0;
};

// Simplified CTR baseline: smoothed CTR (clicks+1)/(impressions+2) per
// combination through softmax_distribution. Not a
// successive-elimination bandit.
std::vector<double> ctr_counting_policy(std::span<const ClickCounter> counters, double beta,
                                        double lambda_total);

// Conversions waiting for their report tick.
class DelayQueue {
 public:
  void push(Event conversion);
  // All conversions with report_tick <= tick, by report tick then push order.
  std::vector<Event> release(std::int64_t tick);
  std::size_t pending() const noexcept { return size_; }

 private:
  std::map<std::int64_t, std::vector<Event>> queue_;
  std::size_t size_ = 0;
};

struct RankingParams {
  double prior_ctr = 0.02;
  double prior_cvr = 0.008;
  double prior_strength = 100.0;  // pseudo-impressions
  double eligibility = 0.5;       // chance an ad takes part in a given auction

  void validate() const;
};

// Main click and conversion-given-click models shared by all buckets:
// smoothed counts per (ad, segment), refreshed at period boundaries.
class RankingModel {
 public:
  RankingModel(std::size_t n_ads, std::size_t n_segments, RankingParams params);

  double pctr(std::size_t ad, std::size_t segment) const noexcept;
  double pconv(std::size_t ad, std::size_t segment) const noexcept;

  // Counted at the next commit().
  void observe(EventKind kind, std::size_t ad, std::size_t segment) noexcept;
  void commit();

 private:
  struct Cell {
    double impressions = 0, clicks = 0, conversions = 0;
  };
  std::size_t index(std::size_t ad, std::size_t segment) const noexcept {
    return ad * n_segments_ + segment;
  }
  std::size_t n_segments_;
  RankingParams params_;
  std::vector<Cell> committed_;
  std::vector<Cell> pending_;
};

struct SimulationSettings {
  std::uint64_t seed = 1;
  std::int64_t ticks = 24 * 30;
  std::int64_t ticks_per_day = 24;
  std::int64_t training_period = 4;
  int arrivals_per_tick = 200;
  StructureParams model;  // num_user_features is taken from the world's segment keys
  P2DParams p2d;
  double ctr_beta = 13.86;
  double ctr_lambda_mix = 0.1;
  std::vector<Bucket> buckets{{"conversion-dco", 0.9, PolicyKind::conversion_dco},
                              {"uniform", 0.05, PolicyKind::uniform},
                              {"ctr-counting", 0.05, PolicyKind::ctr_counting}};
  RankingParams ranking;

  void validate() const;  // ConfigError

  // Seeds derived from `seed` for the auxiliary model's cold start and its
  // impression downsampling; standalone training must use the same ones.
  std::uint64_t model_seed() const noexcept;
  std::uint64_t downsample_seed() const noexcept;
};

// The auxiliary model the simulator starts from.
ModelState initial_model(const SimulationSettings& settings, const SegmentSpace& segments);

using EventSink = std::function<void(const Event&)>;
using PeriodCallback =
    std::function<void(std::int64_t tick, const ModelSnapshot&, const DistributionTable&)>;

class Simulator {
 public:
  Simulator(WorldModel world, SimulationSettings settings);

  // Receives every logged event in log order.
  void add_sink(EventSink sink);
  // Called after each training period with the new snapshot and table.
  void on_period(PeriodCallback callback);

  // Enqueues a conversion as if it had happened; it is released at its report
  // tick like any other. Ids should not collide with simulated ones.
  void inject_conversion(Event conversion);

  void step(std::int64_t tick);
  void run();  // every tick from 0 to settings.ticks - 1

  const WorldModel& world() const noexcept { return world_; }
  const SimulationSettings& settings() const noexcept { return settings_; }
  const Catalog& catalog() const noexcept { return catalog_; }
  const ModelState& model() const noexcept { return model_; }
  const ModelSnapshot& snapshot() const noexcept { return snapshot_; }
  const DistributionTable& table() const noexcept { return table_; }
  std::size_t pending_conversions() const noexcept { return queue_.pending(); }
  std::uint64_t events_emitted() const noexcept { return emitted_; }

 private:
  struct BucketState {
    Bucket bucket;
    TableHandle table;
    std::vector<double> daily_spend;  // per ad, reset each day
  };

  void emit(const Event& event);
  void end_period(std::int64_t tick);
  void rebuild_ctr_tables();
  void serve_arrival(std::int64_t tick);

  WorldModel world_;
  SimulationSettings settings_;
  Catalog catalog_;
  std::vector<DcoAd> dco_ads_;
  std::vector<Segment> segments_;
  std::vector<UserFeatureMap> segment_users_;
  AliasSampler arrivals_;
  std::vector<double> cumulative_shares_;
  std::vector<std::unique_ptr<BucketState>> buckets_;  // TableHandle is not movable

  ModelState model_;
  ModelSnapshot snapshot_;
  DistributionTable table_;
  Downsampler sampler_;
  RankingModel ranking_;
  std::vector<std::vector<ClickCounter>> ctr_counts_;          // [ad][combination]
  std::vector<std::vector<ClickCounter>> ctr_pending_counts_;  // since last period
  std::map<std::string, std::size_t, std::less<>> ad_index_;
  std::map<Segment, std::size_t> segment_index_;

  DelayQueue queue_;
  std::vector<TrainingExample> batch_;
  std::vector<EventSink> sinks_;
  std::vector<PeriodCallback> period_callbacks_;
  Rng rng_;
  std::uint64_t next_event_id_ = 0;
  std::uint64_t emitted_ = 0;
  std::int64_t current_day_ = -1;
};

}  // namespace dco
