#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dco/errors.hpp"
#include "dco/model_io.hpp"
#include "dco/p2d.hpp"
#include "dco/table_io.hpp"
#include "dco/training.hpp"
#include "support.hpp"

namespace dco {
namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

DcoAd ad_with_sizes(const std::string& id, std::vector<int> sizes) {
  DcoAd ad{id, {{"campaign", {{"cmp-" + id, 1.0}}}}, {}};
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::vector<std::string> assets;
    for (int m = 0; m < sizes[i]; ++m) {
      assets.push_back(id + "-" + std::to_string(i) + "-" + std::to_string(m));
    }
    ad.attributes.push_back(assets);
  }
  return ad;
}

SegmentSpace gender_device() {
  return {{"gender", "device"},
          {{"female", "male", "unknown"}, {"mobile", "desktop", "tablet", "unknown"}}};
}

TEST(Segments, CartesianProduct) {
  EXPECT_EQ(enumerate_segments(gender_device().domains).size(), 12u);
  EXPECT_EQ(enumerate_segments({{"a"}}), (std::vector<Segment>{{"a"}}));
  EXPECT_EQ(enumerate_segments({{"a", "b"}, {"x", "y"}}),
            (std::vector<Segment>{{"a", "x"}, {"a", "y"}, {"b", "x"}, {"b", "y"}}));
  EXPECT_THROW(enumerate_segments({{"a"}, {}}), ConfigError);
  EXPECT_THROW(enumerate_segments({}), ConfigError);
}

TEST(Combinations, CountsAndOrder) {
  EXPECT_EQ(enumerate_combinations(ad_with_sizes("a", {2, 3, 3})).size(), 18u);
  EXPECT_EQ(enumerate_combinations(ad_with_sizes("a", {1, 1})).size(), 1u);
  EXPECT_EQ(enumerate_combinations(ad_with_sizes("a", {3, 2, 3})).size(), 18u);
  const auto combos = enumerate_combinations(ad_with_sizes("a", {2, 2}));
  EXPECT_EQ(combos, (std::vector<Combination>{{"a-0-0", "a-1-0"},
                                              {"a-0-0", "a-1-1"},
                                              {"a-0-1", "a-1-0"},
                                              {"a-0-1", "a-1-1"}}));
  EXPECT_EQ(enumerate_combinations(ad_with_sizes("a", {2, 2})), combos);
  EXPECT_THROW(enumerate_combinations(ad_with_sizes("a", {4})), ConfigError);
  EXPECT_THROW(enumerate_combinations(ad_with_sizes("a", {})), ConfigError);
}

TEST(Correction, Examples) {
  EXPECT_EQ(correct_prediction(0.0, 100), 0.0);
  // V = 1 conversion, S = 99 skips, r = 100: raw = V / (V + (V+S)/r) = 0.5.
  const double raw = 1.0 / (1.0 + (1.0 + 99.0) / 100.0);
  EXPECT_DOUBLE_EQ(raw, 0.5);
  EXPECT_DOUBLE_EQ(correct_prediction(raw, 100), 1.0 / (1.0 + 99.0));
  EXPECT_EQ(correct_prediction(100.0 / 101.0, 100), 1.0);
  EXPECT_EQ(correct_prediction(0.999, 100), 1.0);
  EXPECT_EQ(correct_prediction(1.0, 100), 1.0);
  EXPECT_LT(correct_prediction(0.98, 100), 1.0);
  EXPECT_DOUBLE_EQ(correct_prediction(0.3, 1.0), 0.3 / 0.7);
}

TEST(Softmax, EqualPredictionsAreUniform) {
  for (double beta : {0.0, 1.0, 13.86, 100.0}) {
    for (double lambda : {0.0, 0.1, 1.0}) {
      const auto q = softmax_distribution(std::vector<double>(7, 0.03), beta, lambda);
      for (double x : q) EXPECT_NEAR(x, 1.0 / 7.0, 1e-15);
    }
  }
}

TEST(Softmax, RatioAnchors) {
  const std::vector<double> p{1.0, 0.9};
  const auto two = softmax_distribution(p, 6.93, 0.0);
  EXPECT_NEAR(two[0], 2.0 / 3.0, 0.001 * 2.0 / 3.0);
  EXPECT_NEAR(two[1], 1.0 / 3.0, 0.001 / 3.0);
  const auto four = softmax_distribution(p, 13.86, 0.0);
  EXPECT_NEAR(four[0], 0.8, 0.0008);
  EXPECT_NEAR(four[1], 0.2, 0.0002);
}

TEST(Softmax, DegenerateInputsAreUniform) {
  const auto zeros = softmax_distribution(std::vector<double>(4, 0.0), 13.86, 0.1);
  for (double x : zeros) EXPECT_DOUBLE_EQ(x, 0.25);
  const auto flat = softmax_distribution(std::vector<double>{0.1, 0.5, 0.9}, 0.0, 0.2);
  for (double x : flat) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(softmax_distribution(std::vector<double>{0.7}, 13.86, 0.1),
            (std::vector<double>{1.0}));
}

TEST(Softmax, InvariantsOnRandomInputs) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 18;
    std::vector<double> p(n);
    for (double& x : p) x = u(rng) * 0.05;
    const double beta = u(rng) * 30.0;
    const double lambda = u(rng);
    const auto q = softmax_distribution(p, beta, lambda);
    EXPECT_NEAR(sum(q), 1.0, 1e-9);
    for (double x : q) EXPECT_GE(x, lambda / n - 1e-15);
    const auto pmax = std::max_element(p.begin(), p.end()) - p.begin();
    const auto qmax = std::max_element(q.begin(), q.end()) - q.begin();
    if (beta > 1e-6 && lambda < 1) EXPECT_EQ(pmax, qmax);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double gap = beta * (p[i] - p[j]) / p[pmax];
        if (gap > 1e-9 && lambda < 1) EXPECT_GT(q[i], q[j]);
      }
    }
    // Scale invariance.
    std::vector<double> scaled = p;
    for (double& x : scaled) x *= 3.7;
    const auto q2 = softmax_distribution(scaled, beta, lambda);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(q[i], q2[i], 1e-12);
  }
}

TEST(Softmax, MatchesEntropyRegularizedMaximizer) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.001, 0.05);
  for (std::size_t n : {2u, 3u, 4u}) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> p(n);
      for (double& x : p) x = u(rng);
      const double beta = 13.86;
      const double alpha = *std::max_element(p.begin(), p.end()) / beta;
      const auto closed = softmax_distribution(p, beta, 0.0);
      const auto numeric = testing::entropy_argmax(p, alpha);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(closed[i], numeric[i], 1e-6);
    }
  }
}

TEST(Params, Validation) {
  P2DParams p;
  p.validate();
  p.r_ds = 0.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.beta = -1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.lambda_mix = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.uniform_mass = UniformMass::per_combination;
  EXPECT_DOUBLE_EQ(p.uniform_total(18), 1.8);
  p.uniform_mass = UniformMass::total;
  EXPECT_DOUBLE_EQ(p.uniform_total(18), 0.1);
}

ModelState fresh_model(double eta) {
  StructureParams s;
  s.init_variance = eta;
  return ModelState({"gender", "device"}, s, 5);
}

TEST(Table, FreshModelIsUniformAndComplete) {
  const auto model = fresh_model(0.0);
  const std::vector<DcoAd> ads{ad_with_sizes("a", {2, 3, 3})};
  const auto table = generate_table(model, ads, gender_device(), {});
  EXPECT_EQ(table.entries.size(), 12u);
  EXPECT_EQ(table.model_version, "examples-0");
  for (const auto& [key, q] : table.entries) {
    ASSERT_EQ(q.size(), 18u);
    for (double x : q) EXPECT_NEAR(x, 1.0 / 18.0, 1e-15);
  }
}

TEST(Table, TrainedModelRespectsFloorAndLeavesModelUntouched) {
  auto model = fresh_model(0.01);
  const auto ad = ad_with_sizes("a", {2, 3, 3});
  const auto combos = enumerate_combinations(ad);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 300; ++i) {
    const auto& c = combos[rng() % combos.size()];
    const std::vector<std::string> user{"female", "mobile"};
    const auto features = combination_ad_features(ad.ad_id, ad.standard_features, c);
    train_event(model, user, features, c == combos[4] ? 1 : static_cast<int>(rng() % 10 == 0));
  }
  const auto before = model_to_string(model);
  const std::vector<DcoAd> ads{ad};
  P2DParams params;
  params.r_ds = 10;
  const auto table = generate_table(model, ads, gender_device(), params);
  EXPECT_EQ(model_to_string(model), before);
  for (const auto& [key, q] : table.entries) {
    EXPECT_NEAR(sum(q), 1.0, 1e-9);
    for (double x : q) EXPECT_GE(x, 0.1 / 18.0 - 1e-15);
  }
  const auto* q = table.find("a", {"female", "mobile"});
  ASSERT_NE(q, nullptr);
  EXPECT_EQ(std::max_element(q->begin(), q->end()) - q->begin(), 4);
}

TEST(Table, SegmentKeysMustMatchModel) {
  const auto model = fresh_model(0.0);
  const std::vector<DcoAd> ads{ad_with_sizes("a", {2})};
  SegmentSpace other{{"device", "gender"}, {{"m"}, {"f"}}};
  EXPECT_THROW(generate_table(model, ads, other, {}), StructuralError);
}

TEST(TableIo, RoundTripIsBitExact) {
  auto model = fresh_model(0.2);
  const std::vector<DcoAd> ads{ad_with_sizes("a", {2, 3}), ad_with_sizes("b", {3})};
  const auto table = generate_table(model, ads, gender_device(), {});
  const auto text = table_to_string(table);
  std::istringstream in(text);
  const auto back = load_table(in);
  EXPECT_EQ(back.entries, table.entries);
  EXPECT_EQ(back.combinations, table.combinations);
  EXPECT_EQ(back.model_version, table.model_version);
  EXPECT_EQ(table_to_string(back), text);
}

}  // namespace
}  // namespace dco
