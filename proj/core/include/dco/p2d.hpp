#pragma once

// Predictions to distributions: for every DCO ad and traffic segment, predict
// each combination's conversion rate with the auxiliary model, undo the
// downsampling / non-join bias, and turn the corrected predictions into a
// SoftMax distribution mixed with a uniform floor.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dco/catalog.hpp"
#include "dco/model.hpp"
#include "dco/segment.hpp"

namespace dco {

using Combination = std::vector<std::string>;

// Full Cartesian product, lexicographic (last key varies fastest).
std::vector<Segment> enumerate_segments(const std::vector<std::vector<std::string>>& domains);

// All N = prod m_i asset tuples, lexicographic by attribute order.
std::vector<Combination> enumerate_combinations(const DcoAd& ad);

// min{1, raw / (r_ds * (1 - raw))}; raw >= 1 maps to 1.
double correct_prediction(double raw, double r_ds);

// How lambda_mix is read: `total` means lambda is the whole uniform mass
// (each combination gets lambda/N); `per_combination` means each combination
// gets lambda (total lambda*N, must be <= 1).
enum class UniformMass { total, per_combination };

struct P2DParams {
  double r_ds = 100.0;
  double beta = 13.86;
  double lambda_mix = 0.1;
  UniformMass uniform_mass = UniformMass::total;

  double uniform_total(std::size_t n) const noexcept;
  void validate() const;  // ConfigError
};

// Q_C = (1 - lambda) * exp(-beta (1 - P_C/P_M)) / sum_S exp(-beta (1 - P_S/P_M))
//       + lambda / N
// with lambda the total uniform mass. max(preds) <= 0 yields the uniform vector.
std::vector<double> softmax_distribution(std::span<const double> preds, double beta,
                                         double lambda_total);

struct DistributionTable {
  std::string model_version;
  P2DParams params;
  std::vector<std::string> segment_keys;
  std::map<std::string, std::vector<Combination>> combinations;  // per ad
  std::map<std::pair<std::string, Segment>, std::vector<double>> entries;

  const std::vector<double>* find(const std::string& ad_id, const Segment& segment) const;
};

// Corrected per-combination predictions of one (ad, segment) cell.
std::vector<double> combination_predictions(const ModelState& model, const DcoAd& ad,
                                            const Segment& segment, double r_ds);

// Covers every (ad, segment) pair. Feature values missing from the model are
// cold-started read-only; the model is never modified.
DistributionTable generate_table(const ModelState& model, std::span<const DcoAd> ads,
                                 const SegmentSpace& segments, const P2DParams& params);

}  // namespace dco
