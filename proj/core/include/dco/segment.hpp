#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace dco {

// Values of the configured segment keys, in key order.
using Segment = std::vector<std::string>;

using UserFeatureMap = std::map<std::string, std::string>;

// Projection of `user` onto `keys`; absent or empty values become "unknown".
Segment extract_segment(const UserFeatureMap& user, std::span<const std::string> keys);

std::string segment_label(const Segment& segment);  // "female|desktop"

}  // namespace dco
