#pragma once

// Model snapshot files: line-delimited JSON. The first line is a header
// record, every following line one feature-value vector.
//
//   {"record":"header","format":"dco-model","format_version":1,
//    "model_version":"examples-42","user_features":["gender","device"],
//    "K":2,"o":12,"s":12,"eta":0.001,"lambda_reg":0.0,"step_size":0.05,
//    "adagrad_epsilon":1e-08,"rng_seed":7,"bias":-1.2,"bias_accum":3.4,
//    "trained_examples":42,"skipped_examples":0,"vectors":17}
//   {"record":"vector","feature":"ad","value":"dco-0",
//    "weights":[...],"grad_accum":[...]}
//
// Vectors are written sorted by (feature, value). Doubles use the shortest
// decimal form that parses back to the same bits, so save -> load -> save is
// byte-identical.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dco/model.hpp"

namespace dco {

void save_model(const ModelState& model, std::ostream& out);
ModelState load_model(std::istream& in);

void save_model_file(const ModelState& model, const std::filesystem::path& path);
ModelState load_model_file(const std::filesystem::path& path);

std::string model_to_string(const ModelState& model);

}  // namespace dco
