#include "dco/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>
#include <type_traits>

#include "catalog_json.hpp"
#include "dco/errors.hpp"

namespace dco {

using detail::json;

namespace {

std::string join(const std::string& prefix, std::string_view key) {
  return prefix.empty() ? std::string(key) : prefix + "." + std::string(key);
}

void require_object(const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field.empty() ? "config" : field, "expected an object");
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(join(prefix, key), "unknown key");
  }
}

template <typename T>
void read(const json& obj, std::string_view key, T& out, const std::string& prefix) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return;
  const std::string field = join(prefix, key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) throw ConfigError(field, "expected true or false");
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw ConfigError(field, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (it->is_number_integer() && !it->is_number_unsigned() && it->template get<long long>() < 0) {
        throw ConfigError(field, "expected a non-negative integer");
      }
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) throw ConfigError(field, "expected a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) throw ConfigError(field, "expected a string");
  }
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(field, e.what());
  }
}

void read_range(const json& obj, std::string_view key, double& lo, double& hi,
                const std::string& prefix) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return;
  const std::string field = join(prefix, key);
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    throw ConfigError(field, "expected [min, max]");
  }
  lo = (*it)[0].get<double>();
  hi = (*it)[1].get<double>();
}

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what, std::string("not valid JSON: ") + e.what());
  }
}

std::string slurp(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

WorldParams world_from_json(const json& j) {
  const std::string p = "world";
  require_object(j, p);
  check_keys(j,
             {"seed", "segment_keys", "dco_ads", "attribute_sizes", "non_dco_ads", "base_cvr",
              "segment_spread", "dominant_multiplier", "base_ctr", "ctr_combination_spread",
              "ocpc_fraction", "bid", "tcpa", "daily_budget", "uniform_arrivals", "delay"},
             p);
  WorldParams w;
  w.segments = default_segment_space();
  read(j, "seed", w.seed, p);
  if (j.contains("segment_keys")) {
    w.segments = detail::segment_space_from_json(j["segment_keys"], "world.segment_keys");
  }
  read(j, "dco_ads", w.dco_ads, p);
  read(j, "attribute_sizes", w.attribute_sizes, p);
  read(j, "non_dco_ads", w.non_dco_ads, p);
  read_range(j, "base_cvr", w.base_cvr_min, w.base_cvr_max, p);
  read(j, "segment_spread", w.segment_spread, p);
  read(j, "dominant_multiplier", w.dominant_multiplier, p);
  read_range(j, "base_ctr", w.base_ctr_min, w.base_ctr_max, p);
  read(j, "ctr_combination_spread", w.ctr_combination_spread, p);
  read(j, "ocpc_fraction", w.ocpc_fraction, p);
  read_range(j, "bid", w.bid_min, w.bid_max, p);
  read_range(j, "tcpa", w.tcpa_min, w.tcpa_max, p);
  read(j, "daily_budget", w.daily_budget, p);
  read(j, "uniform_arrivals", w.uniform_arrivals, p);
  if (j.contains("delay")) {
    const json& d = j["delay"];
    const std::string dp = "world.delay";
    require_object(d, dp);
    check_keys(d, {"kind", "mean", "horizon"}, dp);
    std::string kind = "geometric";
    read(d, "kind", kind, dp);
    if (kind == "geometric") {
      w.delay.kind = DelayDistribution::Kind::geometric;
    } else if (kind == "constant") {
      w.delay.kind = DelayDistribution::Kind::constant;
    } else {
      throw ConfigError("world.delay.kind", "must be \"geometric\" or \"constant\"");
    }
    read(d, "mean", w.delay.mean, dp);
    read(d, "horizon", w.delay.horizon, dp);
  }
  w.validate();
  return w;
}

}  // namespace

WorldParams parse_world_params(const std::string& text) {
  return world_from_json(parse_text(text, "world"));
}

WorldParams load_world_params(const std::filesystem::path& path) {
  return parse_world_params(slurp(path, "world"));
}

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir) {
  const json j = parse_text(text, "config");
  require_object(j, "");
  check_keys(j,
             {"world", "seed", "ticks", "ticks_per_day", "arrivals_per_tick", "training_period",
              "model", "p2d", "ctr_baseline", "ranking", "buckets", "report_window", "output"},
             "");
  ExperimentConfig cfg;
  SimulationSettings& s = cfg.simulation;

  if (!j.contains("world")) throw ConfigError("world", "missing world file");
  if (!j["world"].is_string()) throw ConfigError("world", "expected a file path");
  cfg.world_path = j["world"].get<std::string>();
  if (cfg.world_path.is_relative()) cfg.world_path = base_dir / cfg.world_path;
  if (!std::filesystem::exists(cfg.world_path)) {
    throw ConfigError("world", "file '" + cfg.world_path.string() + "' does not exist");
  }
  cfg.world = load_world_params(cfg.world_path);

  read(j, "seed", s.seed, "");
  read(j, "ticks", s.ticks, "");
  read(j, "ticks_per_day", s.ticks_per_day, "");
  read(j, "arrivals_per_tick", s.arrivals_per_tick, "");
  read(j, "training_period", s.training_period, "");

  if (j.contains("model")) {
    const json& m = j["model"];
    require_object(m, "model");
    check_keys(m, {"overlap", "own", "eta", "lambda_reg", "step_size", "adagrad_epsilon"},
               "model");
    read(m, "overlap", s.model.overlap, "model");
    read(m, "own", s.model.own, "model");
    read(m, "eta", s.model.init_variance, "model");
    read(m, "lambda_reg", s.model.lambda_reg, "model");
    read(m, "step_size", s.model.step_size, "model");
    read(m, "adagrad_epsilon", s.model.adagrad_epsilon, "model");
  }
  s.model.num_user_features = static_cast<int>(cfg.world.segments.keys.size());

  if (j.contains("p2d")) {
    const json& m = j["p2d"];
    require_object(m, "p2d");
    check_keys(m, {"r_ds", "beta", "lambda_mix", "uniform_mass"}, "p2d");
    read(m, "r_ds", s.p2d.r_ds, "p2d");
    read(m, "beta", s.p2d.beta, "p2d");
    read(m, "lambda_mix", s.p2d.lambda_mix, "p2d");
    std::string mass = "total";
    read(m, "uniform_mass", mass, "p2d");
    if (mass == "total") {
      s.p2d.uniform_mass = UniformMass::total;
    } else if (mass == "per_combination") {
      s.p2d.uniform_mass = UniformMass::per_combination;
    } else {
      throw ConfigError("p2d.uniform_mass", "must be \"total\" or \"per_combination\"");
    }
  }
  if (j.contains("ctr_baseline")) {
    const json& m = j["ctr_baseline"];
    require_object(m, "ctr_baseline");
    check_keys(m, {"beta", "lambda_mix"}, "ctr_baseline");
    read(m, "beta", s.ctr_beta, "ctr_baseline");
    read(m, "lambda_mix", s.ctr_lambda_mix, "ctr_baseline");
  }
  if (j.contains("ranking")) {
    const json& m = j["ranking"];
    require_object(m, "ranking");
    check_keys(m, {"prior_ctr", "prior_cvr", "prior_strength", "eligibility"}, "ranking");
    read(m, "prior_ctr", s.ranking.prior_ctr, "ranking");
    read(m, "prior_cvr", s.ranking.prior_cvr, "ranking");
    read(m, "prior_strength", s.ranking.prior_strength, "ranking");
    read(m, "eligibility", s.ranking.eligibility, "ranking");
  }
  if (j.contains("buckets")) {
    const json& arr = j["buckets"];
    if (!arr.is_array()) throw ConfigError("buckets", "expected an array");
    s.buckets.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string bp = "buckets[" + std::to_string(i) + "]";
      require_object(arr[i], bp);
      check_keys(arr[i], {"name", "share", "policy"}, bp);
      Bucket b;
      std::string policy;
      read(arr[i], "name", b.name, bp);
      read(arr[i], "share", b.share, bp);
      read(arr[i], "policy", policy, bp);
      auto kind = parse_policy_kind(policy);
      if (!kind) {
        throw ConfigError(bp + ".policy",
                          "must be \"conversion-dco\", \"uniform\" or \"ctr-counting\"");
      }
      b.policy = *kind;
      if (b.name.empty()) b.name = policy;
      s.buckets.push_back(std::move(b));
    }
  }
  if (j.contains("report_window")) {
    const json& m = j["report_window"];
    require_object(m, "report_window");
    check_keys(m, {"begin", "end"}, "report_window");
    read(m, "begin", cfg.report_window.begin, "report_window");
    read(m, "end", cfg.report_window.end, "report_window");
    if (cfg.report_window.end < cfg.report_window.begin) {
      throw ConfigError("report_window", "end precedes begin");
    }
  }
  if (j.contains("output")) {
    const json& m = j["output"];
    require_object(m, "output");
    check_keys(m, {"events"}, "output");
    read(m, "events", cfg.write_events, "output");
  }
  s.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const std::string text = slurp(path, "config");
  return parse_experiment_config(text, path.parent_path());
}

}  // namespace dco
