#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dco/model.hpp"

namespace dco::testing {

// Small random model with every referenced vector materialized, plus one
// user / ad example that touches them.
struct SmallCase {
  ModelState model;
  std::vector<std::string> user;
  AdFeatures ad;
  int label = 0;
};

inline SmallCase random_small_case(std::mt19937_64& rng, double lambda_reg) {
  std::uniform_int_distribution<int> pick_k(1, 3);
  const int k = pick_k(rng);
  StructureParams p;
  p.num_user_features = k;
  // d = (K-1)o + s <= 6
  if (k == 1) {
    p.overlap = 1;
    p.own = std::uniform_int_distribution<int>(1, 6)(rng);
  } else if (k == 2) {
    p.overlap = std::uniform_int_distribution<int>(1, 3)(rng);
    p.own = std::uniform_int_distribution<int>(0, 6 - p.overlap)(rng);
  } else {
    p.overlap = std::uniform_int_distribution<int>(1, 2)(rng);
    p.own = std::uniform_int_distribution<int>(0, 6 - 2 * p.overlap)(rng);
  }
  p.init_variance = 0.25;
  p.lambda_reg = lambda_reg;
  std::vector<std::string> names;
  for (int i = 0; i < k; ++i) names.push_back("u" + std::to_string(i));
  ModelState model(names, p, rng());

  std::vector<std::string> user;
  for (int i = 0; i < k; ++i) user.push_back("val" + std::to_string(rng() % 3));

  std::uniform_real_distribution<double> w(0.2, 2.0);
  AdFeatures ad{{"ad", {{"a" + std::to_string(rng() % 5), 1.0}}},
                {"category", {{"c1", w(rng)}, {"c2", w(rng)}}},
                {"assets", {{"t1", 1.0}, {"i1", 1.0}, {"d1", 1.0}}}};
  // Materialize everything so finite differences can perturb stored weights.
  for (int i = 0; i < k; ++i) model.get_or_create({names[i], user[i]});
  for (const auto& f : ad) {
    for (const auto& v : f.values) model.get_or_create({f.name, v.value});
  }
  model.set_bias(std::normal_distribution<double>(0.0, 0.5)(rng));
  return {std::move(model), std::move(user), std::move(ad), static_cast<int>(rng() % 2)};
}

// Data term plus (lambda/2) * squared norm of every distinct touched vector.
inline double objective(const ModelState& model, const std::vector<std::string>& user,
                        const AdFeatures& ad, int label) {
  const double pred = predict(model, build_user_vector(model, user), build_ad_vector(model, ad));
  double loss = logloss(pred, label);
  const double lambda = model.structure().lambda_reg;
  if (lambda > 0) {
    std::vector<FeatureKey> keys;
    for (std::size_t i = 0; i < user.size(); ++i) {
      keys.push_back({model.user_features()[i], user[i]});
    }
    for (const auto& f : ad) {
      for (const auto& v : f.values) keys.push_back({f.name, v.value});
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (const auto& key : keys) {
      for (double x : model.find(key)->weights) loss += 0.5 * lambda * x * x;
    }
  }
  return loss;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}


// Maximizer of sum_C P_C Q_C - alpha * sum_C Q_C ln Q_C over the simplex by
// pairwise coordinate ascent: each pair (i, j) keeps Q_i + Q_j fixed and
// bisects the (decreasing) derivative in Q_i. Independent of any closed form.
inline std::vector<double> entropy_argmax(const std::vector<double>& p, double alpha) {
  const std::size_t n = p.size();
  std::vector<double> q(n, 1.0 / static_cast<double>(n));
  for (int sweep = 0; sweep < 500; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double t = q[i] + q[j];
        double lo = 0.0, hi = t;
        for (int it = 0; it < 200; ++it) {
          const double x = 0.5 * (lo + hi);
          const double d = p[i] - p[j] - alpha * (std::log(x) - std::log(t - x));
          (d > 0 ? lo : hi) = x;
        }
        const double x = 0.5 * (lo + hi);
        moved = std::max(moved, std::abs(x - q[i]));
        q[i] = x;
        q[j] = t - x;
      }
    }
    if (moved < 1e-15) break;
  }
  return q;
}

}  // namespace dco::testing
