#include "dco/catalog.hpp"

#include <set>
#include <sstream>

#include "catalog_json.hpp"

namespace dco {

using detail::json;

std::size_t DcoAd::combination_count() const noexcept {
  if (attributes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& attr : attributes) n *= attr.size();
  return n;
}

void DcoAd::validate() const {
  const std::string field = "ads[" + ad_id + "].attributes";
  if (attributes.empty()) throw ConfigError(field, "a DCO ad needs at least one attribute");
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    const auto& attr = attributes[i];
    if (attr.empty() || attr.size() > kMaxAssetsPerAttribute) {
      throw ConfigError(field + "[" + std::to_string(i) + "]",
                        "attribute must have 1.." + std::to_string(kMaxAssetsPerAttribute) +
                            " assets, got " + std::to_string(attr.size()));
    }
  }
}

Catalog::Catalog(SegmentSpace segments, std::vector<AdListing> ads)
    : segments_(std::move(segments)), ads_(std::move(ads)) {
  if (segments_.keys.size() != segments_.domains.size()) {
    throw ConfigError("segment_keys", "keys and domains differ in length");
  }
  for (std::size_t i = 0; i < segments_.keys.size(); ++i) {
    if (segments_.domains[i].empty()) {
      throw ConfigError("segment_keys[" + segments_.keys[i] + "].values", "empty domain");
    }
  }
  for (std::size_t i = 0; i < ads_.size(); ++i) {
    const AdListing& ad = ads_[i];
    if (ad.ad_id.empty()) throw ConfigError("ads[" + std::to_string(i) + "].ad_id", "empty id");
    if (!(ad.pricing.amount > 0.0)) {
      throw ConfigError("ads[" + ad.ad_id + "].pricing.amount", "must be > 0");
    }
    if (ad.dco) {
      if (ad.dco->ad_id != ad.ad_id) {
        throw ConfigError("ads[" + ad.ad_id + "]", "DCO part has a different ad_id");
      }
      ad.dco->validate();
    }
    if (!index_.emplace(ad.ad_id, i).second) {
      throw ConfigError("ads[" + ad.ad_id + "]", "duplicate ad_id");
    }
  }
}

const AdListing* Catalog::find(const std::string& ad_id) const {
  auto it = index_.find(ad_id);
  return it == index_.end() ? nullptr : &ads_[it->second];
}

std::vector<DcoAd> Catalog::dco_ads() const {
  std::vector<DcoAd> out;
  for (const auto& ad : ads_) {
    if (ad.dco) out.push_back(*ad.dco);
  }
  return out;
}

namespace detail {

json ad_features_to_json(const AdFeatures& features) {
  json arr = json::array();
  for (const auto& f : features) {
    json values = json::array();
    for (const auto& wv : f.values) {
      if (wv.weight == 1.0) {
        values.push_back(wv.value);
      } else {
        values.push_back(json::array({wv.value, wv.weight}));
      }
    }
    arr.push_back({{"name", f.name}, {"values", values}});
  }
  return arr;
}

AdFeatures ad_features_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what, "expected an array of features");
  AdFeatures out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string fwhat = what + "[" + std::to_string(i) + "]";
    const json& f = j[i];
    if (!f.is_object() || !f.contains("name") || !f["name"].is_string()) {
      throw ConfigError(fwhat + ".name", "missing feature name");
    }
    AdFeature feature{f["name"].get<std::string>(), {}};
    if (!f.contains("values") || !f["values"].is_array() || f["values"].empty()) {
      throw ConfigError(fwhat + ".values", "expected a non-empty array");
    }
    for (const json& v : f["values"]) {
      if (v.is_string()) {
        feature.values.push_back({v.get<std::string>(), 1.0});
      } else if (v.is_array() && v.size() == 2 && v[0].is_string() && v[1].is_number()) {
        feature.values.push_back({v[0].get<std::string>(), v[1].get<double>()});
      } else {
        throw ConfigError(fwhat + ".values", "entries must be \"value\" or [\"value\", weight]");
      }
    }
    out.push_back(std::move(feature));
  }
  return out;
}

json segment_space_to_json(const SegmentSpace& space) {
  json arr = json::array();
  for (std::size_t i = 0; i < space.keys.size(); ++i) {
    arr.push_back({{"name", space.keys[i]}, {"values", space.domains[i]}});
  }
  return arr;
}

SegmentSpace segment_space_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what, "expected a non-empty array");
  SegmentSpace space;
  std::set<std::string> names;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string kwhat = what + "[" + std::to_string(i) + "]";
    const json& k = j[i];
    if (!k.is_object() || !k.contains("name") || !k["name"].is_string()) {
      throw ConfigError(kwhat + ".name", "missing key name");
    }
    if (!k.contains("values") || !k["values"].is_array() || k["values"].empty()) {
      throw ConfigError(kwhat + ".values", "empty domain");
    }
    auto name = k["name"].get<std::string>();
    if (!names.insert(name).second) throw ConfigError(kwhat + ".name", "duplicate key " + name);
    space.keys.push_back(std::move(name));
    try {
      space.domains.push_back(k["values"].get<std::vector<std::string>>());
    } catch (const json::exception&) {
      throw ConfigError(kwhat + ".values", "values must be strings");
    }
  }
  return space;
}

}  // namespace detail

namespace {

json catalog_to_json(const Catalog& catalog) {
  json ads = json::array();
  for (const auto& ad : catalog.ads()) {
    json a = {
        {"ad_id", ad.ad_id},
        {"pricing",
         {{"type", ad.pricing.type == PricingType::ocpc ? "ocpc" : "mcpc"},
          {"amount", ad.pricing.amount}}},
        {"features", detail::ad_features_to_json(ad.standard_features)},
    };
    if (ad.dco) a["attributes"] = ad.dco->attributes;
    ads.push_back(std::move(a));
  }
  json j = {{"format", "dco-catalog"},
            {"segment_keys", detail::segment_space_to_json(catalog.segments())},
            {"ads", std::move(ads)}};
  if (catalog.model_version()) j["model_version"] = *catalog.model_version();
  return j;
}

Catalog catalog_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("catalog", "expected a JSON object");
  auto space = detail::segment_space_from_json(j.value("segment_keys", json()), "segment_keys");
  if (!j.contains("ads") || !j["ads"].is_array()) throw ConfigError("ads", "expected an array");
  std::vector<AdListing> ads;
  for (std::size_t i = 0; i < j["ads"].size(); ++i) {
    const json& a = j["ads"][i];
    const std::string what = "ads[" + std::to_string(i) + "]";
    if (!a.contains("ad_id") || !a["ad_id"].is_string()) {
      throw ConfigError(what + ".ad_id", "missing ad id");
    }
    AdListing ad;
    ad.ad_id = a["ad_id"].get<std::string>();
    if (!a.contains("pricing") || !a["pricing"].is_object()) {
      throw ConfigError(what + ".pricing", "missing pricing");
    }
    const json& p = a["pricing"];
    const std::string type = p.value("type", "");
    if (type == "mcpc") {
      ad.pricing.type = PricingType::mcpc;
    } else if (type == "ocpc") {
      ad.pricing.type = PricingType::ocpc;
    } else {
      throw ConfigError(what + ".pricing.type", "must be \"mcpc\" or \"ocpc\"");
    }
    if (!p.contains("amount") || !p["amount"].is_number()) {
      throw ConfigError(what + ".pricing.amount", "missing amount");
    }
    ad.pricing.amount = p["amount"].get<double>();
    if (a.contains("features")) {
      ad.standard_features = detail::ad_features_from_json(a["features"], what + ".features");
    }
    if (a.contains("attributes")) {
      DcoAd dco{ad.ad_id, ad.standard_features, {}};
      try {
        dco.attributes = a["attributes"].get<std::vector<std::vector<std::string>>>();
      } catch (const json::exception&) {
        throw ConfigError(what + ".attributes", "expected an array of asset-id arrays");
      }
      ad.dco = std::move(dco);
    }
    ads.push_back(std::move(ad));
  }
  Catalog catalog(std::move(space), std::move(ads));
  if (j.contains("model_version")) catalog.set_model_version(j["model_version"].get<std::string>());
  return catalog;
}

}  // namespace

std::string catalog_to_string(const Catalog& catalog) {
  return catalog_to_json(catalog).dump(2) + "\n";
}

Catalog catalog_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("catalog: ") + e.what());
  }
  return catalog_from_json(j);
}

void save_catalog_file(const Catalog& catalog, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << catalog_to_string(catalog);
}

Catalog load_catalog_file(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return catalog_from_string(buf.str());
}

}  // namespace dco
