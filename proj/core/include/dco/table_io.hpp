#pragma once

// Distribution table files: line-delimited JSON.
//
//   {"record":"header","format":"dco-table","model_version":"examples-42",
//    "beta":13.86,"lambda_mix":0.1,"uniform_mass":"total","r_ds":100.0,
//    "segment_keys":["gender","device"],"entries":60}
//   {"record":"entry","ad_id":"dco-0","segment":["female","desktop"],
//    "combinations":[["t0","i0","d0"], ...],"probabilities":[0.05, ...]}
//
// Entries are ordered by (ad_id, segment). Probabilities are written in the
// shortest form that round-trips exactly (at least as precise as 17
// significant digits).

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dco/p2d.hpp"

namespace dco {

void save_table(const DistributionTable& table, std::ostream& out);
DistributionTable load_table(std::istream& in);

void save_table_file(const DistributionTable& table, const std::filesystem::path& path);
DistributionTable load_table_file(const std::filesystem::path& path);

std::string table_to_string(const DistributionTable& table);

}  // namespace dco
