#include "dco/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "dco/errors.hpp"
#include "dco/random.hpp"

namespace dco {

std::size_t StructureParams::feature_dim() const noexcept {
  return static_cast<std::size_t>((num_user_features - 1) * overlap + own);
}

std::size_t StructureParams::combined_dim() const noexcept {
  const std::size_t k = static_cast<std::size_t>(num_user_features);
  return k * (k - 1) / 2 * static_cast<std::size_t>(overlap) +
         k * static_cast<std::size_t>(own);
}

void StructureParams::validate() const {
  if (num_user_features < 1) throw StructuralError("structure: K must be >= 1");
  if (overlap < 0 || own < 0) throw StructuralError("structure: o and s must be >= 0");
  if (combined_dim() == 0) throw StructuralError("structure: combined dimension D is zero");
  if (!(init_variance >= 0.0)) throw StructuralError("structure: eta must be >= 0");
  if (!(lambda_reg >= 0.0)) throw StructuralError("structure: lambda_reg must be >= 0");
  if (!(step_size > 0.0)) throw StructuralError("structure: step_size must be > 0");
  if (!(adagrad_epsilon >= 0.0)) throw StructuralError("structure: adagrad_epsilon must be >= 0");
}

std::size_t FeatureKeyHash::operator()(const FeatureKey& key) const noexcept {
  return static_cast<std::size_t>(fnv1a64(key.value, fnv1a64(key.feature) ^ 0x1f));
}

std::vector<UserSlot> user_slot_layout(const StructureParams& params) {
  const int k = params.num_user_features;
  const int o = params.overlap;
  const int s = params.own;
  std::vector<UserSlot> slots;
  slots.reserve(params.combined_dim());
  // Position of feature `other` inside feature `self`'s list of pair blocks.
  auto pair_pos = [](int self, int other) { return other < self ? other : other - 1; };
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      for (int t = 0; t < o; ++t) {
        slots.push_back({i, pair_pos(i, j) * o + t, j, pair_pos(j, i) * o + t});
      }
    }
  }
  for (int i = 0; i < k; ++i) {
    for (int t = 0; t < s; ++t) slots.push_back({i, (k - 1) * o + t, -1, 0});
  }
  return slots;
}

ModelState::ModelState(std::vector<std::string> user_features, StructureParams params,
                       std::uint64_t rng_seed)
    : user_features_(std::move(user_features)), params_(params), rng_seed_(rng_seed) {
  if (static_cast<int>(user_features_.size()) != params_.num_user_features) {
    throw StructuralError("model: " + std::to_string(user_features_.size()) +
                          " user feature names for K=" +
                          std::to_string(params_.num_user_features));
  }
  params_.validate();
  for (std::size_t i = 0; i < user_features_.size(); ++i) {
    for (std::size_t j = i + 1; j < user_features_.size(); ++j) {
      if (user_features_[i] == user_features_[j]) {
        throw StructuralError("model: duplicate user feature '" + user_features_[i] + "'");
      }
    }
  }
  layout_ = user_slot_layout(params_);
}

bool ModelState::is_user_feature(std::string_view name) const noexcept {
  return user_feature_index(name) >= 0;
}

int ModelState::user_feature_index(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < user_features_.size(); ++i) {
    if (user_features_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::size_t ModelState::expected_length(std::string_view feature) const noexcept {
  return is_user_feature(feature) ? params_.feature_dim() : params_.combined_dim();
}

const FeatureValueVector* ModelState::find(const FeatureKey& key) const {
  auto it = vectors_.find(key);
  return it == vectors_.end() ? nullptr : &it->second;
}

FeatureValueVector& ModelState::get_or_create(const FeatureKey& key) {
  auto it = vectors_.find(key);
  if (it != vectors_.end()) return it->second;
  auto vec = cold_start_vector(key, expected_length(key.feature));
  return vectors_.emplace(key, std::move(vec)).first->second;
}

void ModelState::insert(FeatureKey key, FeatureValueVector vec) {
  const std::size_t len = expected_length(key.feature);
  if (vec.weights.size() != len || vec.grad_accum.size() != len) {
    throw StructuralError("model: vector for " + key.feature + "=" + key.value +
                          " has length " + std::to_string(vec.weights.size()) +
                          ", expected " + std::to_string(len));
  }
  vectors_.insert_or_assign(std::move(key), std::move(vec));
}

FeatureValueVector ModelState::cold_start_vector(const FeatureKey& key,
                                                 std::size_t length) const {
  if (length != expected_length(key.feature)) {
    throw StructuralError("cold start: length " + std::to_string(length) + " for feature '" +
                          key.feature + "', expected " +
                          std::to_string(expected_length(key.feature)));
  }
  FeatureValueVector vec;
  vec.weights.assign(length, 0.0);
  vec.grad_accum.assign(length, 0.0);
  if (params_.init_variance > 0.0) {
    Rng rng(splitmix64(rng_seed_ ^ FeatureKeyHash{}(key)));
    std::normal_distribution<double> gauss(0.0, std::sqrt(params_.init_variance));
    for (double& w : vec.weights) w = gauss(rng);
  }
  return vec;
}

std::vector<double> ModelState::weights_or_cold(const FeatureKey& key) const {
  if (const auto* vec = find(key)) return vec->weights;
  return cold_start_vector(key, expected_length(key.feature)).weights;
}

std::string ModelState::model_version() const {
  return "examples-" + std::to_string(trained_examples_);
}

double sigmoid(double x) noexcept {
  double p;
  if (x >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  // Keep the open interval (0, 1) under floating-point saturation.
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

namespace {

// Borrowed pointer into the model or an owned read-only cold start.
class ResolvedVector {
 public:
  ResolvedVector(const ModelState& model, const FeatureKey& key) {
    if (const auto* vec = model.find(key)) {
      ptr_ = &vec->weights;
    } else {
      owned_ = model.cold_start_vector(key, model.expected_length(key.feature)).weights;
      ptr_ = &owned_;
    }
  }
  ResolvedVector(const ResolvedVector&) = delete;
  ResolvedVector(ResolvedVector&& other) noexcept
      : owned_(std::move(other.owned_)),
        ptr_(other.ptr_ == &other.owned_ ? &owned_ : other.ptr_) {}

  const std::vector<double>& get() const noexcept { return *ptr_; }

 private:
  std::vector<double> owned_;
  const std::vector<double>* ptr_ = nullptr;
};

FeatureKey user_key(const ModelState& model, std::size_t k, const std::string& value) {
  return {model.user_features()[k], value.empty() ? std::string(kUnknownValue) : value};
}

void check_user_count(const ModelState& model, std::span<const std::string> user) {
  if (user.size() != model.user_features().size()) {
    throw StructuralError("user vector: got " + std::to_string(user.size()) +
                          " values, expected K=" +
                          std::to_string(model.user_features().size()));
  }
}

std::vector<double> expand_user(const ModelState& model,
                                const std::vector<ResolvedVector>& features) {
  const auto& layout = model.slot_layout();
  std::vector<double> u(layout.size());
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const UserSlot& slot = layout[j];
    double value = features[slot.feature_a].get()[slot.index_a];
    if (slot.feature_b >= 0) value *= features[slot.feature_b].get()[slot.index_b];
    u[j] = value;
  }
  return u;
}

std::vector<ResolvedVector> resolve_user(const ModelState& model,
                                         std::span<const std::string> user) {
  check_user_count(model, user);
  std::vector<ResolvedVector> out;
  out.reserve(user.size());
  for (std::size_t k = 0; k < user.size(); ++k) out.emplace_back(model, user_key(model, k, user[k]));
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void add_into(std::vector<std::pair<FeatureKey, std::vector<double>>>& grads, FeatureKey key,
              std::size_t length, auto&& fill) {
  auto it = std::find_if(grads.begin(), grads.end(),
                         [&](const auto& entry) { return entry.first == key; });
  if (it == grads.end()) {
    grads.emplace_back(std::move(key), std::vector<double>(length, 0.0));
    it = std::prev(grads.end());
  }
  fill(it->second);
}

}  // namespace

std::vector<double> build_user_vector(const ModelState& model,
                                      std::span<const std::string> user) {
  return expand_user(model, resolve_user(model, user));
}

std::vector<std::string> order_user_values(
    const ModelState& model, std::span<const std::pair<std::string, std::string>> named) {
  std::vector<std::string> out(model.user_features().size(), std::string(kUnknownValue));
  std::vector<bool> seen(out.size(), false);
  for (const auto& [name, value] : named) {
    const int k = model.user_feature_index(name);
    if (k < 0) throw StructuralError("user vector: unknown user feature '" + name + "'");
    if (seen[k]) throw StructuralError("user vector: feature '" + name + "' given twice");
    seen[k] = true;
    if (!value.empty()) out[k] = value;
  }
  return out;
}

std::vector<double> aggregate_multivalue(std::span<const std::vector<double>> vectors,
                                         std::span<const double> weights) {
  if (vectors.empty()) throw EmptyFeatureError("multi-value feature has no values");
  if (vectors.size() != weights.size()) {
    throw StructuralError("multi-value feature: " + std::to_string(vectors.size()) +
                          " vectors but " + std::to_string(weights.size()) + " weights");
  }
  const std::size_t len = vectors.front().size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(vectors.size()));
  std::vector<double> out(len, 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != len) throw StructuralError("multi-value feature: ragged vectors");
    const double w = weights[i] * scale;
    for (std::size_t j = 0; j < len; ++j) out[j] += w * vectors[i][j];
  }
  return out;
}

std::vector<double> build_ad_vector(const ModelState& model, const AdFeatures& ad) {
  const std::size_t dim = model.structure().combined_dim();
  std::vector<double> out(dim, 0.0);
  for (const AdFeature& feature : ad) {
    if (model.is_user_feature(feature.name)) {
      throw StructuralError("ad feature '" + feature.name + "' collides with a user feature");
    }
    std::vector<std::vector<double>> vecs;
    std::vector<double> weights;
    vecs.reserve(feature.values.size());
    for (const WeightedValue& wv : feature.values) {
      vecs.push_back(model.weights_or_cold({feature.name, wv.value}));
      weights.push_back(wv.weight);
    }
    if (vecs.empty()) {
      throw EmptyFeatureError("ad feature '" + feature.name + "' has no values");
    }
    const auto agg = aggregate_multivalue(vecs, weights);
    for (std::size_t j = 0; j < dim; ++j) out[j] += agg[j];
  }
  return out;
}

double predict(const ModelState& model, std::span<const double> user_vec,
               std::span<const double> ad_vec) {
  const std::size_t dim = model.structure().combined_dim();
  if (user_vec.size() != dim || ad_vec.size() != dim) {
    throw StructuralError("predict: vectors must have length D=" + std::to_string(dim));
  }
  return sigmoid(model.bias() + dot(user_vec, ad_vec));
}

double logloss(double pred, int label) {
  const double p = std::clamp(pred, kLoglossClamp, 1.0 - kLoglossClamp);
  return label != 0 ? -std::log(p) : -std::log1p(-p);
}

Gradient compute_gradient(const ModelState& model, std::span<const std::string> user,
                          const AdFeatures& ad, int label) {
  const std::size_t dim = model.structure().combined_dim();
  const std::size_t fdim = model.structure().feature_dim();
  const double lambda = model.structure().lambda_reg;

  const auto user_vecs = resolve_user(model, user);
  const auto u = expand_user(model, user_vecs);

  struct AdTerm {
    FeatureKey key;
    ResolvedVector vec;
    double coeff;  // w_i / sqrt(n)
  };
  std::vector<AdTerm> terms;
  std::vector<double> a(dim, 0.0);
  for (const AdFeature& feature : ad) {
    if (model.is_user_feature(feature.name)) {
      throw StructuralError("ad feature '" + feature.name + "' collides with a user feature");
    }
    if (feature.values.empty()) {
      throw EmptyFeatureError("ad feature '" + feature.name + "' has no values");
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(feature.values.size()));
    for (const WeightedValue& wv : feature.values) {
      FeatureKey key{feature.name, wv.value};
      ResolvedVector vec(model, key);
      const double coeff = wv.weight * scale;
      const auto& w = vec.get();
      for (std::size_t j = 0; j < dim; ++j) a[j] += coeff * w[j];
      terms.push_back({std::move(key), std::move(vec), coeff});
    }
  }

  Gradient grad;
  grad.prediction = sigmoid(model.bias() + dot(u, a));
  const double r = grad.prediction - static_cast<double>(label);
  grad.bias = r;

  std::vector<std::vector<double>> user_grads(user_vecs.size(), std::vector<double>(fdim, 0.0));
  const auto& layout = model.slot_layout();
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const UserSlot& slot = layout[j];
    const double ra = r * a[j];
    if (slot.feature_b < 0) {
      user_grads[slot.feature_a][slot.index_a] += ra;
    } else {
      user_grads[slot.feature_a][slot.index_a] +=
          ra * user_vecs[slot.feature_b].get()[slot.index_b];
      user_grads[slot.feature_b][slot.index_b] +=
          ra * user_vecs[slot.feature_a].get()[slot.index_a];
    }
  }
  for (std::size_t k = 0; k < user_vecs.size(); ++k) {
    add_into(grad.vectors, user_key(model, k, user[k]), fdim, [&](std::vector<double>& g) {
      for (std::size_t i = 0; i < fdim; ++i) g[i] += user_grads[k][i];
    });
  }
  for (const AdTerm& term : terms) {
    add_into(grad.vectors, term.key, dim, [&](std::vector<double>& g) {
      const double c = r * term.coeff;
      for (std::size_t j = 0; j < dim; ++j) g[j] += c * u[j];
    });
  }

  if (lambda > 0.0) {
    for (std::size_t k = 0; k < user_vecs.size(); ++k) {
      auto& g = std::find_if(grad.vectors.begin(), grad.vectors.end(), [&](const auto& e) {
                  return e.first == user_key(model, k, user[k]);
                })->second;
      const auto& w = user_vecs[k].get();
      for (std::size_t i = 0; i < fdim; ++i) g[i] += lambda * w[i];
    }
    // One penalty per distinct ad key, even if a value repeats.
    std::vector<const FeatureKey*> seen;
    for (const AdTerm& term : terms) {
      if (std::any_of(seen.begin(), seen.end(), [&](auto* k) { return *k == term.key; })) continue;
      seen.push_back(&term.key);
      auto& g = std::find_if(grad.vectors.begin(), grad.vectors.end(),
                             [&](const auto& e) { return e.first == term.key; })
                    ->second;
      const auto& w = term.vec.get();
      for (std::size_t j = 0; j < dim; ++j) g[j] += lambda * w[j];
    }
  }
  return grad;
}

bool train_event(ModelState& model, std::span<const std::string> user, const AdFeatures& ad,
                 int label) {
  check_user_count(model, user);
  for (std::size_t k = 0; k < user.size(); ++k) model.get_or_create(user_key(model, k, user[k]));
  for (const AdFeature& feature : ad) {
    for (const WeightedValue& wv : feature.values) model.get_or_create({feature.name, wv.value});
  }

  const Gradient grad = compute_gradient(model, user, ad, label);
  bool finite = std::isfinite(grad.bias);
  for (const auto& [key, g] : grad.vectors) {
    finite = finite && std::all_of(g.begin(), g.end(), [](double x) { return std::isfinite(x); });
  }
  if (!finite) {
    model.count_skipped();
    return false;
  }

  const double step = model.structure().step_size;
  const double eps = model.structure().adagrad_epsilon;
  double acc = model.bias_accum() + grad.bias * grad.bias;
  model.set_bias_accum(acc);
  model.set_bias(model.bias() - step / std::sqrt(eps + acc) * grad.bias);

  for (const auto& [key, g] : grad.vectors) {
    FeatureValueVector& vec = model.get_or_create(key);
    for (std::size_t i = 0; i < g.size(); ++i) {
      vec.grad_accum[i] += g[i] * g[i];
      const double denom = std::sqrt(eps + vec.grad_accum[i]);
      if (denom > 0.0) vec.weights[i] -= step / denom * g[i];
    }
  }
  model.count_trained();
  return true;
}

}  // namespace dco
