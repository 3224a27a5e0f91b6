#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dco/errors.hpp"
#include "dco/event_io.hpp"
#include "dco/model_io.hpp"
#include "dco/training.hpp"

namespace dco {
namespace {

Catalog small_catalog() {
  SegmentSpace space{{"gender", "device"}, {{"f", "m"}, {"mob", "desk"}}};
  AdListing dco_ad{"dco-0", {PricingType::ocpc, 2.0}, {{"campaign", {{"c0", 1.0}}}}, std::nullopt};
  dco_ad.dco = DcoAd{"dco-0", dco_ad.standard_features, {{"t0", "t1"}, {"i0", "i1", "i2"}}};
  AdListing plain{"std-0", {PricingType::mcpc, 0.5}, {{"campaign", {{"c1", 1.0}}}}, std::nullopt};
  return Catalog(space, {dco_ad, plain});
}

Event make_event(std::uint64_t id, EventKind kind, std::int64_t t, std::string ad,
                 std::vector<std::string> assets = {}) {
  Event e;
  e.event_id = id;
  e.kind = kind;
  e.timestamp = t;
  e.ad_id = std::move(ad);
  e.rendered_assets = std::move(assets);
  e.user_segment_keys = {{"gender", "f"}, {"device", "mob"}};
  e.bucket = "uniform";
  return e;
}

TEST(AssetsFeature, Examples) {
  const std::vector<std::string> three{"De123", "Im456", "Ti789"};
  const auto f = assets_feature(three);
  EXPECT_EQ(f.name, "assets");
  ASSERT_EQ(f.values.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(f.values[i].value, three[i]);
    EXPECT_EQ(f.values[i].weight, 1.0);
  }
  const auto none = assets_feature({});
  ASSERT_EQ(none.values.size(), 1u);
  EXPECT_EQ(none.values[0].value, "NONDCO");
  const std::vector<std::string> one{"X"};
  EXPECT_EQ(assets_feature(one).values[0].value, "X");
}

TEST(Labeling, ImpressionsNegativeConversionsPositiveClicksDropped) {
  const auto catalog = small_catalog();
  const std::vector<std::string> keys{"gender", "device"};
  const Downsampler keep_all(1.0, 1);
  std::vector<Event> events{make_event(1, EventKind::impression, 5, "dco-0", {"t0", "i1"}),
                            make_event(2, EventKind::click, 5, "dco-0", {"t0", "i1"}),
                            make_event(3, EventKind::conversion, 5, "dco-0", {"t0", "i1"}),
                            make_event(4, EventKind::impression, 6, "std-0")};
  events[2].conversion_delay = 10;
  const auto ex = label_and_sample(events, catalog, keys, keep_all);
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[0].label, 0);
  EXPECT_EQ(ex[1].label, 1);
  EXPECT_EQ(ex[1].train_tick, 15);
  EXPECT_EQ(ex[2].label, 0);
  EXPECT_EQ(ex[0].user, (std::vector<std::string>{"f", "mob"}));
  // ad id, standard features, assets
  ASSERT_EQ(ex[0].ad.size(), 3u);
  EXPECT_EQ(ex[0].ad[0].name, "ad");
  EXPECT_EQ(ex[0].ad[1].name, "campaign");
  EXPECT_EQ(ex[0].ad[2].values.size(), 2u);
  EXPECT_EQ(ex[2].ad.back().values[0].value, "NONDCO");
}

TEST(Labeling, LoneConversionYieldsOnePositive) {
  const auto catalog = small_catalog();
  const std::vector<std::string> keys{"gender", "device"};
  const Downsampler sampler(100.0, 3);
  const std::vector<Event> events{make_event(9, EventKind::conversion, 0, "std-0")};
  const auto ex = label_and_sample(events, catalog, keys, sampler);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].label, 1);
}

TEST(Downsampling, KeepAllAtFactorOne) {
  const Downsampler sampler(1.0, 5);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    EXPECT_TRUE(sampler.keep(make_event(i, EventKind::impression, 0, "x")));
  }
}

TEST(Downsampling, BinomialCountAtFactorHundred) {
  const Downsampler sampler(100.0, 12345);
  Event e = make_event(0, EventKind::impression, 0, "x");
  std::uint64_t kept = 0;
  const std::uint64_t n = 1'000'000;
  for (std::uint64_t i = 0; i < n; ++i) {
    e.event_id = i;
    kept += sampler.keep(e);
  }
  const double mean = n / 100.0;
  const double sd = std::sqrt(n * 0.01 * 0.99);
  EXPECT_LT(std::abs(static_cast<double>(kept) - mean), 3 * sd);
}

TEST(Downsampling, ReplayMakesTheSameChoices) {
  const Downsampler a(10.0, 77), b(10.0, 77);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto e = make_event(i, EventKind::impression, 0, "x");
    EXPECT_EQ(a.keep(e), b.keep(e));
  }
}

TEST(Downsampling, RejectsFactorBelowOne) {
  EXPECT_THROW(Downsampler(0.5, 1), ConfigError);
}

TEST(TrainPeriod, EmptyBatchLeavesModelUnchanged) {
  ModelState m({"gender", "device"}, {}, 1);
  const auto before = model_to_string(m);
  const auto result = train_period(m, {});
  EXPECT_EQ(result.trained, 0u);
  EXPECT_EQ(model_to_string(*result.snapshot), before);
}

TEST(TrainPeriod, PositiveRaisesItsPrediction) {
  StructureParams p;
  p.init_variance = 0.01;
  ModelState m({"gender", "device"}, p, 1);
  TrainingExample ex{0, {"f", "mob"}, {{"ad", {{"a", 1.0}}}, {"assets", {{"t", 1.0}}}}, 1};
  const auto before = predict(m, build_user_vector(m, ex.user), build_ad_vector(m, ex.ad));
  const auto result = train_period(m, {ex});
  const auto after = predict(m, build_user_vector(m, ex.user), build_ad_vector(m, ex.ad));
  EXPECT_GT(after, before);
  EXPECT_EQ(result.trained, 1u);
}

TEST(TrainPeriod, SnapshotsAreImmutableAndDiffer) {
  StructureParams p;
  p.init_variance = 0.01;
  ModelState m({"gender", "device"}, p, 1);
  TrainingExample ex{0, {"f", "mob"}, {{"ad", {{"a", 1.0}}}}, 1};
  const auto first = train_period(m, {ex}).snapshot;
  const auto first_text = model_to_string(*first);
  const auto second = train_period(m, {ex}).snapshot;
  EXPECT_NE(model_to_string(*second), first_text);
  EXPECT_EQ(model_to_string(*first), first_text);
}

TEST(TrainPeriod, OrdersByTrainTickStably) {
  StructureParams p;
  p.init_variance = 0.01;
  TrainingExample late{9, {"f", "mob"}, {{"ad", {{"a", 1.0}}}}, 1};
  TrainingExample early_a{2, {"m", "desk"}, {{"ad", {{"b", 1.0}}}}, 0};
  TrainingExample early_b{2, {"f", "desk"}, {{"ad", {{"a", 1.0}}}}, 1};
  ModelState shuffled({"gender", "device"}, p, 4);
  train_period(shuffled, {late, early_a, early_b});
  ModelState ordered({"gender", "device"}, p, 4);
  for (const auto& ex : {early_a, early_b, late}) train_event(ordered, ex.user, ex.ad, ex.label);
  EXPECT_EQ(model_to_string(shuffled), model_to_string(ordered));
}

TEST(ModelIo, RoundTripIsBitExact) {
  StructureParams p;
  p.init_variance = 0.1;
  p.lambda_reg = 0.01;
  ModelState m({"gender", "device"}, p, 99);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::vector<std::string> user{"g" + std::to_string(rng() % 3),
                                        "d" + std::to_string(rng() % 4)};
    const AdFeatures ad{{"ad", {{"a" + std::to_string(rng() % 5), 1.0}}},
                        {"assets", {{"t" + std::to_string(rng() % 3), 1.0}}}};
    train_event(m, user, ad, static_cast<int>(rng() % 2));
  }
  const auto text = model_to_string(m);
  std::istringstream in(text);
  const auto loaded = load_model(in);
  EXPECT_EQ(model_to_string(loaded), text);
  EXPECT_EQ(loaded.bias(), m.bias());
  for (const auto& [key, vec] : m.vectors()) {
    const auto* other = loaded.find(key);
    ASSERT_NE(other, nullptr);
    EXPECT_EQ(other->weights, vec.weights);
    EXPECT_EQ(other->grad_accum, vec.grad_accum);
  }
}

TEST(ModelIo, RejectsTruncatedSnapshot) {
  ModelState m({"gender"}, {1, 0, 2, 0.1, 0, 0.05, 1e-8}, 1);
  m.get_or_create({"ad", "x"});
  m.get_or_create({"ad", "y"});
  auto text = model_to_string(m);
  text = text.substr(0, text.rfind("{\"feature"));
  std::istringstream in(text);
  EXPECT_THROW(load_model(in), FormatError);
  std::istringstream garbage("not json\n");
  EXPECT_THROW(load_model(garbage), FormatError);
}

TEST(EventIo, RoundTripAndUnknownFields) {
  Event e = make_event(17, EventKind::click, 3, "dco-0", {"t0", "i2"});
  e.price_paid = 0.625;
  const auto line = event_to_json_line(e);
  const Event back = event_from_json_line(line, 1);
  EXPECT_EQ(back.event_id, 17u);
  EXPECT_EQ(back.kind, EventKind::click);
  EXPECT_EQ(back.price_paid, 0.625);
  EXPECT_EQ(back.rendered_assets, e.rendered_assets);
  EXPECT_EQ(back.user_segment_keys, e.user_segment_keys);
  EXPECT_EQ(event_to_json_line(back), line);

  const Event extra = event_from_json_line(
      R"({"timestamp":4,"kind":"conversion","ad_id":"a","conversion_delay":6,"colour":"red"})", 12);
  EXPECT_EQ(extra.event_id, 12u);
  EXPECT_EQ(extra.report_tick(), 10);
  EXPECT_TRUE(extra.rendered_assets.empty());
}

TEST(EventIo, StreamsHeaderAndEvents) {
  std::stringstream buf;
  buf << R"({"record":"header","format":"dco-events","buckets":[{"name":"a","share":0.25},{"name":"b","share":0.75}]})"
      << '\n'
      << event_to_json_line(make_event(1, EventKind::impression, 0, "x")) << '\n'
      << event_to_json_line(make_event(2, EventKind::impression, 1, "y")) << '\n';
  std::vector<std::string> ads;
  const auto header = for_each_event(buf, [&](const Event& e) { ads.push_back(e.ad_id); });
  ASSERT_EQ(header.buckets.size(), 2u);
  EXPECT_EQ(header.buckets[1].share, 0.75);
  EXPECT_EQ(ads, (std::vector<std::string>{"x", "y"}));
}

}  // namespace
}  // namespace dco
