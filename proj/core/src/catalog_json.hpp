#pragma once

#include "dco/catalog.hpp"
#include "json_util.hpp"

namespace dco::detail {

json ad_features_to_json(const AdFeatures& features);
AdFeatures ad_features_from_json(const json& j, const std::string& what);
json segment_space_to_json(const SegmentSpace& space);
SegmentSpace segment_space_from_json(const json& j, const std::string& what);

}  // namespace dco::detail
