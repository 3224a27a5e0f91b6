#include "dco/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dco/errors.hpp"

namespace dco {

const char* to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::conversion_dco: return "conversion-dco";
    case PolicyKind::uniform: return "uniform";
    case PolicyKind::ctr_counting: return "ctr-counting";
  }
  return "uniform";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view s) noexcept {
  if (s == "conversion-dco") return PolicyKind::conversion_dco;
  if (s == "uniform") return PolicyKind::uniform;
  if (s == "ctr-counting") return PolicyKind::ctr_counting;
  return std::nullopt;
}

void validate_buckets(std::span<const Bucket> buckets) {
  if (buckets.empty()) throw ConfigError("buckets", "at least one bucket is required");
  std::set<std::string> names;
  double total = 0.0;
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const std::string field = "buckets[" + std::to_string(i) + "]";
    if (buckets[i].name.empty()) throw ConfigError(field + ".name", "empty name");
    if (!names.insert(buckets[i].name).second) {
      throw ConfigError(field + ".name", "duplicate bucket " + buckets[i].name);
    }
    if (!(buckets[i].share > 0.0 && buckets[i].share <= 1.0)) {
      throw ConfigError(field + ".share", "must be in (0, 1]");
    }
    total += buckets[i].share;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("buckets", "shares must sum to 1");
}

std::vector<double> uniform_policy(std::size_t n) {
  if (n == 0) return {};
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<double> ctr_counting_policy(std::span<const ClickCounter> counters, double beta,
                                        double lambda_total) {
  std::vector<double> ctr;
  ctr.reserve(counters.size());
  for (const auto& c : counters) {
    ctr.push_back((static_cast<double>(c.clicks) + 1.0) /
                  (static_cast<double>(c.impressions) + 2.0));
  }
  return softmax_distribution(ctr, beta, lambda_total);
}

void DelayQueue::push(Event conversion) {
  queue_[conversion.report_tick()].push_back(std::move(conversion));
  ++size_;
}

std::vector<Event> DelayQueue::release(std::int64_t tick) {
  std::vector<Event> out;
  auto end = queue_.upper_bound(tick);
  for (auto it = queue_.begin(); it != end; ++it) {
    for (auto& e : it->second) out.push_back(std::move(e));
  }
  queue_.erase(queue_.begin(), end);
  size_ -= out.size();
  return out;
}

void RankingParams::validate() const {
  if (!(prior_ctr > 0.0 && prior_ctr <= 1.0)) throw ConfigError("ranking.prior_ctr", "must be in (0, 1]");
  if (!(prior_cvr >= 0.0 && prior_cvr <= 1.0)) throw ConfigError("ranking.prior_cvr", "must be in [0, 1]");
  if (!(prior_strength > 0.0)) throw ConfigError("ranking.prior_strength", "must be > 0");
  if (!(eligibility > 0.0 && eligibility <= 1.0)) {
    throw ConfigError("ranking.eligibility", "must be in (0, 1]");
  }
}

RankingModel::RankingModel(std::size_t n_ads, std::size_t n_segments, RankingParams params)
    : n_segments_(n_segments),
      params_(params),
      committed_(n_ads * n_segments),
      pending_(n_ads * n_segments) {}

double RankingModel::pctr(std::size_t ad, std::size_t segment) const noexcept {
  const Cell& c = committed_[index(ad, segment)];
  const double m = params_.prior_strength;
  return (c.clicks + m * params_.prior_ctr) / (c.impressions + m);
}

double RankingModel::pconv(std::size_t ad, std::size_t segment) const noexcept {
  const Cell& c = committed_[index(ad, segment)];
  const double m = params_.prior_strength;
  return std::min(1.0, (c.conversions + m * params_.prior_cvr) / (c.clicks + m * params_.prior_ctr));
}

void RankingModel::observe(EventKind kind, std::size_t ad, std::size_t segment) noexcept {
  Cell& c = pending_[index(ad, segment)];
  switch (kind) {
    case EventKind::impression: c.impressions += 1; break;
    case EventKind::click: c.clicks += 1; break;
    case EventKind::conversion: c.conversions += 1; break;
  }
}

void RankingModel::commit() {
  for (std::size_t i = 0; i < committed_.size(); ++i) {
    committed_[i].impressions += pending_[i].impressions;
    committed_[i].clicks += pending_[i].clicks;
    committed_[i].conversions += pending_[i].conversions;
    pending_[i] = Cell{};
  }
}

void SimulationSettings::validate() const {
  if (ticks <= 0) throw ConfigError("ticks", "must be > 0");
  if (ticks_per_day <= 0) throw ConfigError("ticks_per_day", "must be > 0");
  if (training_period <= 0) throw ConfigError("training_period", "must be > 0");
  if (arrivals_per_tick < 0) throw ConfigError("arrivals_per_tick", "must be >= 0");
  try {
    model.validate();
  } catch (const Error& e) {
    throw ConfigError("model", e.what());
  }
  p2d.validate();
  if (!(ctr_beta >= 0.0 && std::isfinite(ctr_beta))) {
    throw ConfigError("ctr_baseline.beta", "must be >= 0");
  }
  if (!(ctr_lambda_mix >= 0.0 && ctr_lambda_mix <= 1.0)) {
    throw ConfigError("ctr_baseline.lambda_mix", "must be in [0, 1]");
  }
  validate_buckets(buckets);
  ranking.validate();
}

std::uint64_t SimulationSettings::model_seed() const noexcept {
  return splitmix64(seed ^ fnv1a64("model"));
}

std::uint64_t SimulationSettings::downsample_seed() const noexcept {
  return splitmix64(seed ^ fnv1a64("downsample"));
}

ModelState initial_model(const SimulationSettings& settings, const SegmentSpace& segments) {
  StructureParams params = settings.model;
  params.num_user_features = static_cast<int>(segments.keys.size());
  return ModelState(segments.keys, params, settings.model_seed());
}

namespace {

DistributionTable table_skeleton(const DistributionTable& source) {
  DistributionTable t;
  t.model_version = source.model_version;
  t.params = source.params;
  t.segment_keys = source.segment_keys;
  t.combinations = source.combinations;
  return t;
}

}  // namespace

Simulator::Simulator(WorldModel world, SimulationSettings settings)
    : world_(std::move(world)),
      settings_(std::move(settings)),
      model_(initial_model(settings_, world_.segments)),
      sampler_(settings_.p2d.r_ds, settings_.downsample_seed()),
      ranking_(world_.ads.size(), world_.all_segments.size(), settings_.ranking),
      rng_(make_stream(settings_.seed, "simulator")) {
  settings_.validate();
  world_.validate();
  catalog_ = world_.catalog();
  dco_ads_ = catalog_.dco_ads();
  segments_ = world_.all_segments;
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    UserFeatureMap user;
    for (std::size_t k = 0; k < world_.segments.keys.size(); ++k) {
      user[world_.segments.keys[k]] = segments_[s][k];
    }
    segment_users_.push_back(std::move(user));
    segment_index_[segments_[s]] = s;
  }
  for (std::size_t a = 0; a < world_.ads.size(); ++a) {
    ad_index_[world_.ads[a].listing.ad_id] = a;
    ctr_counts_.emplace_back(world_.combinations[a].size());
  }
  ctr_pending_counts_ = ctr_counts_;
  arrivals_ = AliasSampler(world_.arrival_weights);

  double cumulative = 0.0;
  for (const auto& b : settings_.buckets) {
    cumulative += b.share;
    cumulative_shares_.push_back(cumulative);
  }
  cumulative_shares_.back() = 1.0;

  snapshot_ = std::make_shared<const ModelState>(model_);
  table_ = generate_table(model_, dco_ads_, world_.segments, settings_.p2d);

  DistributionTable uniform = table_skeleton(table_);
  for (const auto& [ad_id, combos] : uniform.combinations) {
    for (const auto& seg : segments_) uniform.entries[{ad_id, seg}] = uniform_policy(combos.size());
  }
  for (const auto& b : settings_.buckets) {
    auto state = std::make_unique<BucketState>();
    state->bucket = b;
    state->daily_spend.assign(world_.ads.size(), 0.0);
    if (b.policy == PolicyKind::conversion_dco) {
      state->table.store(std::make_shared<const ServingTable>(table_, catalog_));
    } else if (b.policy == PolicyKind::uniform) {
      state->table.store(std::make_shared<const ServingTable>(uniform, catalog_));
    }
    buckets_.push_back(std::move(state));
  }
  rebuild_ctr_tables();
}

void Simulator::add_sink(EventSink sink) { sinks_.push_back(std::move(sink)); }

void Simulator::on_period(PeriodCallback callback) {
  period_callbacks_.push_back(std::move(callback));
}

void Simulator::inject_conversion(Event conversion) {
  conversion.kind = EventKind::conversion;
  queue_.push(std::move(conversion));
}

void Simulator::emit(const Event& event) {
  ++emitted_;
  for (const auto& sink : sinks_) sink(event);
  if (auto ex = to_training_example(event, catalog_, model_.user_features(), sampler_)) {
    batch_.push_back(std::move(*ex));
  }
}

void Simulator::rebuild_ctr_tables() {
  DistributionTable ctr = table_skeleton(table_);
  for (const auto& [ad_id, combos] : ctr.combinations) {
    const std::size_t a = ad_index_.at(ad_id);
    const auto q = ctr_counting_policy(ctr_counts_[a], settings_.ctr_beta,
                                       std::min(1.0, settings_.ctr_lambda_mix));
    for (const auto& seg : segments_) ctr.entries[{ad_id, seg}] = q;
  }
  auto serving = std::make_shared<const ServingTable>(ctr, catalog_);
  for (auto& b : buckets_) {
    if (b->bucket.policy == PolicyKind::ctr_counting) b->table.store(serving);
  }
}

void Simulator::serve_arrival(std::int64_t tick) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t s = arrivals_(rng_);
  const double ub = unit(rng_);
  std::size_t b = 0;
  while (b + 1 < cumulative_shares_.size() && ub >= cumulative_shares_[b]) ++b;
  BucketState& bucket = *buckets_[b];

  const auto& listings = catalog_.ads();
  std::vector<ScoredAd> eligible;
  eligible.reserve(listings.size());
  for (std::size_t a = 0; a < listings.size(); ++a) {
    if (unit(rng_) >= settings_.ranking.eligibility) continue;
    const double budget = world_.ads[a].daily_budget * bucket.bucket.share;
    if (budget > 0.0 && bucket.daily_spend[a] >= budget) continue;
    const double pctr = ranking_.pctr(a, s);
    const double pconv = ranking_.pconv(a, s);
    eligible.push_back({&listings[a], score_ad(listings[a].pricing, pctr, pconv),
                        effective_bid(listings[a].pricing, pconv)});
  }
  const auto table = bucket.table.load();
  const AuctionOutcome outcome = serve(eligible, *table, segments_[s], rng_);
  if (!outcome.filled) return;
  const std::size_t a = static_cast<std::size_t>(catalog_.find(outcome.winner) - listings.data());
  const std::size_t c = outcome.combination_index.value_or(0);

  Event event;
  event.event_id = next_event_id_++;
  event.timestamp = tick;
  event.kind = EventKind::impression;
  event.user_segment_keys = segment_users_[s];
  event.ad_id = outcome.winner;
  if (outcome.rendered_combination) event.rendered_assets = *outcome.rendered_combination;
  event.bucket = bucket.bucket.name;
  emit(event);
  ranking_.observe(EventKind::impression, a, s);
  ctr_pending_counts_[a][c].impressions += 1;

  const bool clicked = unit(rng_) < world_.true_ctr[a][s][c];
  const bool converted = unit(rng_) < world_.true_cvr[a][s][c];
  if (clicked) {
    Event click = event;
    click.event_id = next_event_id_++;
    click.kind = EventKind::click;
    click.price_paid = outcome.price_per_click;
    bucket.daily_spend[a] += outcome.price_per_click;
    emit(click);
    ranking_.observe(EventKind::click, a, s);
    ctr_pending_counts_[a][c].clicks += 1;
  }
  if (converted) {
    Event conversion = std::move(event);
    conversion.event_id = next_event_id_++;
    conversion.kind = EventKind::conversion;
    conversion.conversion_delay = world_.delay.sample(rng_);
    queue_.push(std::move(conversion));
  }
}

void Simulator::step(std::int64_t tick) {
  const std::int64_t day = tick / settings_.ticks_per_day;
  if (day != current_day_) {
    current_day_ = day;
    for (auto& b : buckets_) std::fill(b->daily_spend.begin(), b->daily_spend.end(), 0.0);
  }
  for (int i = 0; i < settings_.arrivals_per_tick; ++i) serve_arrival(tick);

  for (const Event& conversion : queue_.release(tick)) {
    emit(conversion);
    auto a = ad_index_.find(conversion.ad_id);
    auto s = segment_index_.find(extract_segment(conversion.user_segment_keys,
                                                 world_.segments.keys));
    if (a != ad_index_.end() && s != segment_index_.end()) {
      ranking_.observe(EventKind::conversion, a->second, s->second);
    }
  }
  if ((tick + 1) % settings_.training_period == 0 || tick + 1 == settings_.ticks) {
    end_period(tick);
  }
}

void Simulator::end_period(std::int64_t tick) {
  PeriodResult result = train_period(model_, std::move(batch_));
  batch_.clear();
  snapshot_ = std::move(result.snapshot);
  table_ = generate_table(*snapshot_, dco_ads_, world_.segments, settings_.p2d);
  auto serving = std::make_shared<const ServingTable>(table_, catalog_);
  for (auto& b : buckets_) {
    if (b->bucket.policy == PolicyKind::conversion_dco) b->table.store(serving);
  }

  for (std::size_t a = 0; a < ctr_counts_.size(); ++a) {
    for (std::size_t c = 0; c < ctr_counts_[a].size(); ++c) {
      ctr_counts_[a][c].impressions += ctr_pending_counts_[a][c].impressions;
      ctr_counts_[a][c].clicks += ctr_pending_counts_[a][c].clicks;
      ctr_pending_counts_[a][c] = ClickCounter{};
    }
  }
  rebuild_ctr_tables();
  ranking_.commit();
  for (const auto& callback : period_callbacks_) callback(tick, snapshot_, table_);
}

void Simulator::run() {
  for (std::int64_t tick = 0; tick < settings_.ticks; ++tick) step(tick);
}

}  // namespace dco
