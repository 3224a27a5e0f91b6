#include "dco/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dco/errors.hpp"
#include "dco/segment.hpp"

namespace dco {

Window parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("window", "expected begin:end in ticks");
  auto parse = [&](const std::string& part, std::int64_t fallback) {
    if (part.empty()) return fallback;
    std::size_t used = 0;
    std::int64_t v;
    try {
      v = std::stoll(part, &used);
    } catch (const std::exception&) {
      throw ConfigError("window", "'" + part + "' is not an integer tick");
    }
    if (used != part.size()) throw ConfigError("window", "'" + part + "' is not an integer tick");
    return v;
  };
  Window w;
  w.begin = parse(text.substr(0, colon), w.begin);
  w.end = parse(text.substr(colon + 1), w.end);
  if (w.end < w.begin) throw ConfigError("window", "end precedes begin");
  return w;
}

Counts& Counts::operator+=(const Counts& o) noexcept {
  impressions += o.impressions;
  clicks += o.clicks;
  conversions += o.conversions;
  spend += o.spend;
  return *this;
}

const char* to_string(LiftStatus status) noexcept {
  switch (status) {
    case LiftStatus::ok: return "ok";
    case LiftStatus::baseline_not_positive: return "baseline_not_positive";
    case LiftStatus::metric_absent: return "metric_absent";
  }
  return "ok";
}

Lift lift(std::optional<double> metric, std::optional<double> baseline) {
  if (!metric || !baseline) return {std::nullopt, LiftStatus::metric_absent};
  if (!(*baseline > 0.0) || !std::isfinite(*baseline)) {
    return {std::nullopt, LiftStatus::baseline_not_positive};
  }
  return {(*metric / *baseline - 1.0) * 100.0, LiftStatus::ok};
}

std::string format_lift(const Lift& l) {
  if (!l.percent) return "n/a";
  const double x = *l.percent;
  char buf[64];
  std::snprintf(buf, sizeof buf, std::abs(x) >= 10.0 ? "%.1f" : "%.2f", x);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s + "%";
}

double two_proportion_z(std::uint64_t x1, std::uint64_t n1, std::uint64_t x2, std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) return 0.0;
  const double p1 = static_cast<double>(x1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(x2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(x1 + x2) / static_cast<double>(n1 + n2);
  const double var = pooled * (1.0 - pooled) *
                     (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2));
  if (!(var > 0.0)) return 0.0;
  return (p1 - p2) / std::sqrt(var);
}

double two_proportion_p_value(std::uint64_t x1, std::uint64_t n1, std::uint64_t x2,
                              std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) return 1.0;
  const double z = two_proportion_z(x1, n1, x2, n2);
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

MetricsAccumulator::MetricsAccumulator(Window window, bool per_segment)
    : window_(window), per_segment_(per_segment) {}

void MetricsAccumulator::add(const Event& event) {
  if (!event.rendered_assets.empty()) dco_ads_.insert(event.ad_id);
  if (!window_.contains(event.timestamp)) return;
  Counts delta;
  switch (event.kind) {
    case EventKind::impression: delta.impressions = 1; break;
    case EventKind::click:
      delta.clicks = 1;
      delta.spend = event.price_paid;
      break;
    case EventKind::conversion: delta.conversions = 1; break;
  }
  by_ad_[event.bucket][event.ad_id] += delta;
  if (per_segment_) {
    std::string label;
    for (const auto& [key, value] : event.user_segment_keys) {
      if (!label.empty()) label += '|';
      label += value;
    }
    by_segment_[{event.bucket, event.ad_id, label}] += delta;
  }
}

std::set<std::string> filter_scope(const MetricsAccumulator& acc) {
  std::set<std::string> ads;
  for (const auto& [bucket, per_ad] : acc.by_ad()) {
    for (const auto& [ad, counts] : per_ad) {
      if (counts.conversions > 0 && acc.dco_ads().count(ad)) ads.insert(ad);
    }
  }
  return ads;
}

double BucketReport::cvr() const noexcept {
  return counts.impressions ? static_cast<double>(counts.conversions) /
                                  static_cast<double>(counts.impressions)
                            : 0.0;
}

double BucketReport::ctr() const noexcept {
  return counts.impressions ? static_cast<double>(counts.clicks) /
                                  static_cast<double>(counts.impressions)
                            : 0.0;
}

double BucketReport::cpm() const noexcept {
  return counts.impressions ? 1000.0 * counts.spend / static_cast<double>(counts.impressions)
                            : 0.0;
}

std::optional<double> BucketReport::cpa() const noexcept {
  if (counts.conversions == 0) return std::nullopt;
  return counts.spend / static_cast<double>(counts.conversions);
}

double BucketReport::delivery() const noexcept {
  return share > 0.0 ? static_cast<double>(counts.impressions) / share : 0.0;
}

const BucketReport* Report::bucket(const std::string& name) const noexcept {
  for (const auto& b : buckets) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

Report build_report(const MetricsAccumulator& acc, const std::vector<BucketShare>& shares,
                    const std::string& treatment) {
  Report report;
  report.window = acc.window();
  report.treatment = treatment;
  report.included_ads = filter_scope(acc);
  if (report.empty()) return report;

  std::vector<BucketShare> buckets = shares;
  if (buckets.empty()) {
    for (const auto& [name, per_ad] : acc.by_ad()) buckets.push_back({name, 1.0});
  }
  for (const auto& bs : buckets) {
    BucketReport br{bs.name, bs.share, {}};
    if (auto it = acc.by_ad().find(bs.name); it != acc.by_ad().end()) {
      for (const auto& ad : report.included_ads) {
        if (auto c = it->second.find(ad); c != it->second.end()) br.counts += c->second;
      }
    }
    report.buckets.push_back(std::move(br));
  }

  const BucketReport* t = report.bucket(treatment);
  if (!t) return report;
  for (const auto& base : report.buckets) {
    if (base.name == treatment) continue;
    const bool t_has = t->counts.impressions > 0;
    const bool b_has = base.counts.impressions > 0;
    auto opt = [](bool has, double v) { return has ? std::optional<double>(v) : std::nullopt; };
    LiftRow row;
    row.baseline = base.name;
    row.cvr = lift(opt(t_has, t->cvr()), opt(b_has, base.cvr()));
    row.ctr = lift(opt(t_has, t->ctr()), opt(b_has, base.ctr()));
    row.delivery = lift(t->delivery(), base.delivery());
    row.cpm = lift(opt(t_has, t->cpm()), opt(b_has, base.cpm()));
    row.cpa = lift(t->cpa(), base.cpa());
    row.cvr_p_value = two_proportion_p_value(t->counts.conversions, t->counts.impressions,
                                             base.counts.conversions, base.counts.impressions);
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string window_label(const Window& w) {
  const Window all;
  auto end = [](std::int64_t v, std::int64_t open) {
    return v == open ? std::string() : std::to_string(v);
  };
  if (w.begin == all.begin && w.end == all.end) return "all ticks";
  return "[" + end(w.begin, all.begin) + ", " + end(w.end, all.end) + ") ticks";
}

}  // namespace

std::string render_report(const Report& report) {
  std::ostringstream out;
  out << "window: " << window_label(report.window) << '\n';
  if (report.empty()) {
    out << "no DCO ads with conversions in window; nothing to report\n";
    return out.str();
  }
  out << "treatment: " << report.treatment << '\n';
  out << "ads in scope (" << report.included_ads.size() << "):";
  for (const auto& ad : report.included_ads) out << ' ' << ad;
  out << "\n\n";

  char line[256];
  std::snprintf(line, sizeof line, "%-16s %6s %12s %9s %11s %12s %9s %9s %9s %9s\n", "bucket",
                "share", "impressions", "clicks", "conversions", "spend", "CVR", "CTR", "CPM",
                "CPA");
  out << line;
  for (const auto& b : report.buckets) {
    const auto cpa = b.cpa();
    std::snprintf(line, sizeof line, "%-16s %6.3f %12llu %9llu %11llu %12.2f %9.6f %9.6f %9.4f %9s\n",
                  b.name.c_str(), b.share, static_cast<unsigned long long>(b.counts.impressions),
                  static_cast<unsigned long long>(b.counts.clicks),
                  static_cast<unsigned long long>(b.counts.conversions), b.counts.spend, b.cvr(),
                  b.ctr(), b.cpm(), cpa ? fmt("%.4f", *cpa).c_str() : "n/a");
    out << line;
  }
  out << '\n';
  std::snprintf(line, sizeof line, "%-16s %9s %9s %14s %9s %9s %12s\n", "baseline", "CVR lift",
                "CTR lift", "Delivery lift", "CPM lift", "CPA lift", "CVR p-value");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-16s %9s %9s %14s %9s %9s %12s\n", r.baseline.c_str(),
                  format_lift(r.cvr).c_str(), format_lift(r.ctr).c_str(),
                  format_lift(r.delivery).c_str(), format_lift(r.cpm).c_str(),
                  format_lift(r.cpa).c_str(), fmt("%.3g", r.cvr_p_value).c_str());
    out << line;
  }
  out << "\nCVR p-values: pooled two-proportion z-test, approximate (delayed conversions)\n";
  return out.str();
}

}  // namespace dco
