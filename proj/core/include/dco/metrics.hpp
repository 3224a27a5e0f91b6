#pragma once

// Bucket metrics and lifts over an evaluation window.
//
// Only traffic of DCO ads with at least one conversion in the window counts,
// and the same ad set is used for every bucket. Events are attributed to the
// window by occurrence tick.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dco/event_io.hpp"
#include "dco/training.hpp"

namespace dco {

// Half-open tick range [begin, end).
struct Window {
  std::int64_t begin = std::numeric_limits<std::int64_t>::min();
  std::int64_t end = std::numeric_limits<std::int64_t>::max();

  bool contains(std::int64_t tick) const noexcept { return tick >= begin && tick < end; }
};

// "a:b", "a:" or ":b" in ticks. Throws ConfigError("window", ...).
Window parse_window(const std::string& text);

struct Counts {
  std::uint64_t impressions = 0;
  std::uint64_t clicks = 0;
  std::uint64_t conversions = 0;
  double spend = 0.0;

  Counts& operator+=(const Counts& o) noexcept;
};

enum class LiftStatus { ok, baseline_not_positive, metric_absent };

const char* to_string(LiftStatus status) noexcept;

struct Lift {
  std::optional<double> percent;
  LiftStatus status = LiftStatus::ok;
};

// (metric / baseline - 1) * 100; absent when baseline <= 0 or either side is
// missing.
Lift lift(std::optional<double> metric, std::optional<double> baseline);

// One decimal for |x| >= 10, two below ("53.5%", "1.69%",
// "-34.6%", "0.00%"). Absent lifts render as "n/a".
std::string format_lift(const Lift& lift);

// Two-sided p-value of the pooled two-proportion z-test; 1 if undefined.
double two_proportion_p_value(std::uint64_t x1, std::uint64_t n1, std::uint64_t x2,
                              std::uint64_t n2);
double two_proportion_z(std::uint64_t x1, std::uint64_t n1, std::uint64_t x2, std::uint64_t n2);

// Per (bucket, ad) counts of events inside a window; optionally also per
// (bucket, ad, segment label). The label joins the user's values with '|' in
// key-name order.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(Window window = {}, bool per_segment = false);

  void add(const Event& event);

  const Window& window() const noexcept { return window_; }
  // bucket -> ad -> counts
  const std::map<std::string, std::map<std::string, Counts>>& by_ad() const noexcept {
    return by_ad_;
  }
  // (bucket, ad, segment label) -> counts
  const std::map<std::tuple<std::string, std::string, std::string>, Counts>& by_segment()
      const noexcept {
    return by_segment_;
  }
  const std::set<std::string>& dco_ads() const noexcept { return dco_ads_; }

 private:
  Window window_;
  bool per_segment_;
  std::map<std::string, std::map<std::string, Counts>> by_ad_;
  std::map<std::tuple<std::string, std::string, std::string>, Counts> by_segment_;
  std::set<std::string> dco_ads_;  // ads seen with rendered assets
};

// DCO ads with at least one conversion in any bucket.
std::set<std::string> filter_scope(const MetricsAccumulator& acc);

struct BucketReport {
  std::string name;
  double share = 0.0;
  Counts counts;

  double cvr() const noexcept;
  double ctr() const noexcept;
  double cpm() const noexcept;
  std::optional<double> cpa() const noexcept;  // absent without conversions
  double delivery() const noexcept;            // impressions / traffic share
};

struct LiftRow {
  std::string baseline;
  Lift cvr, ctr, delivery, cpm, cpa;
  double cvr_p_value = 1.0;
};

struct Report {
  Window window;
  std::string treatment;
  std::set<std::string> included_ads;
  std::vector<BucketReport> buckets;
  std::vector<LiftRow> rows;  // one per baseline bucket

  bool empty() const noexcept { return included_ads.empty(); }
  const BucketReport* bucket(const std::string& name) const noexcept;
};

// Buckets come from `shares` (in order). Every bucket other than `treatment`
// becomes a baseline row. Without a header, buckets seen in the events are
// used with share 1.
Report build_report(const MetricsAccumulator& acc, const std::vector<BucketShare>& shares,
                    const std::string& treatment = "conversion-dco");

std::string render_report(const Report& report);

}  // namespace dco
