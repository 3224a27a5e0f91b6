#pragma once

// Latent-factor event prediction model.
//
// Each user feature value owns a d-dimensional vector laid out as one o-block
// per other user feature followed by an s-block of its own. The user vector is
// built by scattering every feature's blocks into a D-dimensional vector
// (ones elsewhere) and multiplying the K results entrywise:
//
//   slots [0, C(K,2)*o)         pair blocks, pairs (i,j), i<j, lexicographic
//   slots [C(K,2)*o, D)         own blocks, in feature order
//
// Ad feature values own D-dimensional vectors that are summed (multi-value
// features are combined as (1/sqrt n) * sum w_i v_i). The prediction is
// sigmoid(bias + user . ad).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dco {

inline constexpr std::string_view kUnknownValue = "unknown";

struct StructureParams {
  int num_user_features = 2;  // K
  int overlap = 12;           // o, entries per feature pair
  int own = 12;               // s, entries per feature alone
  double init_variance = 1e-3;  // eta, cold-start Gaussian variance
  double lambda_reg = 0.0;
  double step_size = 0.05;
  double adagrad_epsilon = 1e-8;

  // d = (K-1)*o + s
  std::size_t feature_dim() const noexcept;
  // D = C(K,2)*o + K*s
  std::size_t combined_dim() const noexcept;

  void validate() const;
};

struct FeatureKey {
  std::string feature;
  std::string value;

  friend auto operator<=>(const FeatureKey&, const FeatureKey&) = default;
};

struct FeatureKeyHash {
  std::size_t operator()(const FeatureKey& key) const noexcept;
};

struct FeatureValueVector {
  std::vector<double> weights;
  std::vector<double> grad_accum;  // AdaGrad sum of squared gradients
};

struct WeightedValue {
  std::string value;
  double weight = 1.0;
};

// One ad feature; single-valued features carry one value with weight 1.
struct AdFeature {
  std::string name;
  std::vector<WeightedValue> values;
};

using AdFeatures = std::vector<AdFeature>;

// Per-slot description of the user-vector expansion.
struct UserSlot {
  int feature_a = 0;
  int index_a = 0;
  int feature_b = -1;  // -1 for own-block slots
  int index_b = 0;
};

std::vector<UserSlot> user_slot_layout(const StructureParams& params);

class ModelState {
 public:
  using VectorMap = std::unordered_map<FeatureKey, FeatureValueVector, FeatureKeyHash>;

  ModelState(std::vector<std::string> user_features, StructureParams params,
             std::uint64_t rng_seed);

  const StructureParams& structure() const noexcept { return params_; }
  const std::vector<std::string>& user_features() const noexcept { return user_features_; }
  std::uint64_t rng_seed() const noexcept { return rng_seed_; }
  const std::vector<UserSlot>& slot_layout() const noexcept { return layout_; }

  double bias() const noexcept { return bias_; }
  void set_bias(double b) noexcept { bias_ = b; }
  double bias_accum() const noexcept { return bias_accum_; }
  void set_bias_accum(double g) noexcept { bias_accum_ = g; }

  bool is_user_feature(std::string_view name) const noexcept;
  int user_feature_index(std::string_view name) const noexcept;  // -1 if absent
  // d for user features, D for everything else.
  std::size_t expected_length(std::string_view feature) const noexcept;

  const FeatureValueVector* find(const FeatureKey& key) const;
  // Inserts a cold-started vector on first touch.
  FeatureValueVector& get_or_create(const FeatureKey& key);
  // Inserts a vector as-is (used by snapshot loading). Lengths are checked.
  void insert(FeatureKey key, FeatureValueVector vec);

  // i.i.d. N(0, eta) weights, zero accumulators; deterministic in
  // (rng_seed, key). Throws StructuralError if `length` does not match the
  // feature's kind.
  FeatureValueVector cold_start_vector(const FeatureKey& key, std::size_t length) const;

  // Weights for `key`, or a read-only cold start if the model has none.
  std::vector<double> weights_or_cold(const FeatureKey& key) const;

  const VectorMap& vectors() const noexcept { return vectors_; }
  VectorMap& mutable_vectors() noexcept { return vectors_; }

  std::uint64_t trained_examples() const noexcept { return trained_examples_; }
  std::uint64_t skipped_examples() const noexcept { return skipped_examples_; }
  void set_counters(std::uint64_t trained, std::uint64_t skipped) noexcept {
    trained_examples_ = trained;
    skipped_examples_ = skipped;
  }
  void count_trained() noexcept { ++trained_examples_; }
  void count_skipped() noexcept { ++skipped_examples_; }

  // "examples-<n>": changes whenever the model trains on an example.
  std::string model_version() const;

 private:
  std::vector<std::string> user_features_;
  StructureParams params_;
  std::uint64_t rng_seed_;
  std::vector<UserSlot> layout_;
  double bias_ = 0.0;
  double bias_accum_ = 0.0;
  VectorMap vectors_;
  std::uint64_t trained_examples_ = 0;
  std::uint64_t skipped_examples_ = 0;
};

double sigmoid(double x) noexcept;

// User values are ordered as model.user_features(); empty strings stand for
// the reserved "unknown" value.
std::vector<double> build_user_vector(const ModelState& model,
                                      std::span<const std::string> user);

// Orders named (feature, value) pairs as model.user_features(). Absent
// features map to "unknown"; names the model does not know, or repeated
// names, throw StructuralError.
std::vector<std::string> order_user_values(
    const ModelState& model, std::span<const std::pair<std::string, std::string>> named);

// (1/sqrt n) * sum_i w_i v_i. Throws EmptyFeatureError when n == 0 and
// StructuralError on mismatched sizes.
std::vector<double> aggregate_multivalue(std::span<const std::vector<double>> vectors,
                                         std::span<const double> weights);

std::vector<double> build_ad_vector(const ModelState& model, const AdFeatures& ad);

double predict(const ModelState& model, std::span<const double> user_vec,
               std::span<const double> ad_vec);

inline constexpr double kLoglossClamp = 1e-12;

double logloss(double pred, int label);

// Gradient of logloss + (lambda/2)*||touched vectors||^2 (bias excluded from
// L2) w.r.t. the bias and every participating feature-value vector.
struct Gradient {
  double bias = 0.0;
  std::vector<std::pair<FeatureKey, std::vector<double>>> vectors;
  double prediction = 0.0;
};

Gradient compute_gradient(const ModelState& model, std::span<const std::string> user,
                          const AdFeatures& ad, int label);

// One online AdaGrad step. Returns false (and counts the example as skipped)
// when the gradient is not finite.
bool train_event(ModelState& model, std::span<const std::string> user, const AdFeatures& ad,
                 int label);

}  // namespace dco
