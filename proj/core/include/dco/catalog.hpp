#pragma once

// Ad inventory shared by training, table generation and serving.
//
// Catalog file (JSON):
//   {"format":"dco-catalog",
//    "model_version":"examples-42",            optional pin, see p2d
//    "segment_keys":[{"name":"gender","values":["female","male","unknown"]}, ...],
//    "ads":[{"ad_id":"dco-0",
//            "pricing":{"type":"ocpc","amount":40.0},
//            "features":[{"name":"campaign","values":["c0"]},
//                        {"name":"category","values":[["sports",0.5],["autos",1.0]]}],
//            "attributes":[["t0","t1"],["i0","i1","i2"],["d0","d1","d2"]]}]}
//
// Ads without "attributes" are non-DCO ads.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dco/model.hpp"

namespace dco {

inline constexpr std::size_t kMaxAssetsPerAttribute = 3;

struct DcoAd {
  std::string ad_id;
  AdFeatures standard_features;
  std::vector<std::vector<std::string>> attributes;  // M attributes, m_i assets each

  std::size_t combination_count() const noexcept;
  // 1 <= M, 1 <= m_i <= 3. Throws ConfigError.
  void validate() const;
};

enum class PricingType { mcpc, ocpc };

// mCPC: amount is the bid per click. oCPC: amount is the tCPA.
struct Pricing {
  PricingType type = PricingType::mcpc;
  double amount = 1.0;
};

struct AdListing {
  std::string ad_id;
  Pricing pricing;
  AdFeatures standard_features;
  std::optional<DcoAd> dco;

  bool is_dco() const noexcept { return dco.has_value(); }
};

struct SegmentSpace {
  std::vector<std::string> keys;
  std::vector<std::vector<std::string>> domains;  // parallel to keys
};

class Catalog {
 public:
  Catalog() = default;
  Catalog(SegmentSpace segments, std::vector<AdListing> ads);

  const SegmentSpace& segments() const noexcept { return segments_; }
  const std::vector<AdListing>& ads() const noexcept { return ads_; }
  const AdListing* find(const std::string& ad_id) const;
  std::vector<DcoAd> dco_ads() const;

  const std::optional<std::string>& model_version() const noexcept { return model_version_; }
  void set_model_version(std::optional<std::string> v) { model_version_ = std::move(v); }

 private:
  SegmentSpace segments_;
  std::vector<AdListing> ads_;
  std::map<std::string, std::size_t> index_;
  std::optional<std::string> model_version_;
};

void save_catalog_file(const Catalog& catalog, const std::filesystem::path& path);
Catalog load_catalog_file(const std::filesystem::path& path);
std::string catalog_to_string(const Catalog& catalog);
Catalog catalog_from_string(const std::string& text);

}  // namespace dco
