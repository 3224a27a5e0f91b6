#include "dco/model_io.hpp"

#include <algorithm>
#include <sstream>

#include "json_util.hpp"

namespace dco {

using detail::get_field;
using detail::json;

namespace {

constexpr const char* kFormat = "dco-model";
constexpr int kFormatVersion = 1;

}  // namespace

void save_model(const ModelState& model, std::ostream& out) {
  const StructureParams& p = model.structure();
  json header = {
      {"record", "header"},
      {"format", kFormat},
      {"format_version", kFormatVersion},
      {"model_version", model.model_version()},
      {"user_features", model.user_features()},
      {"K", p.num_user_features},
      {"o", p.overlap},
      {"s", p.own},
      {"eta", p.init_variance},
      {"lambda_reg", p.lambda_reg},
      {"step_size", p.step_size},
      {"adagrad_epsilon", p.adagrad_epsilon},
      {"rng_seed", model.rng_seed()},
      {"bias", model.bias()},
      {"bias_accum", model.bias_accum()},
      {"trained_examples", model.trained_examples()},
      {"skipped_examples", model.skipped_examples()},
      {"vectors", model.vectors().size()},
  };
  out << header.dump() << '\n';

  std::vector<const ModelState::VectorMap::value_type*> entries;
  entries.reserve(model.vectors().size());
  for (const auto& entry : model.vectors()) entries.push_back(&entry);
  std::sort(entries.begin(), entries.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });
  for (const auto* entry : entries) {
    json rec = {
        {"record", "vector"},
        {"feature", entry->first.feature},
        {"value", entry->first.value},
        {"weights", entry->second.weights},
        {"grad_accum", entry->second.grad_accum},
    };
    out << rec.dump() << '\n';
  }
}

ModelState load_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError("model snapshot: empty input");
  ++line_no;
  const json header = detail::parse_line(line, "model snapshot", line_no);
  const std::string what = "model snapshot header";
  if (get_field<std::string>(header, "record", what) != "header" ||
      get_field<std::string>(header, "format", what) != kFormat) {
    throw FormatError("model snapshot: first record is not a dco-model header");
  }
  if (get_field<int>(header, "format_version", what) != kFormatVersion) {
    throw FormatError("model snapshot: unsupported format_version");
  }

  StructureParams params;
  params.num_user_features = get_field<int>(header, "K", what);
  params.overlap = get_field<int>(header, "o", what);
  params.own = get_field<int>(header, "s", what);
  params.init_variance = get_field<double>(header, "eta", what);
  params.lambda_reg = get_field<double>(header, "lambda_reg", what);
  params.step_size = get_field<double>(header, "step_size", what);
  params.adagrad_epsilon = get_field<double>(header, "adagrad_epsilon", what);

  ModelState model(get_field<std::vector<std::string>>(header, "user_features", what), params,
                   get_field<std::uint64_t>(header, "rng_seed", what));
  model.set_bias(get_field<double>(header, "bias", what));
  model.set_bias_accum(get_field<double>(header, "bias_accum", what));
  model.set_counters(get_field<std::uint64_t>(header, "trained_examples", what),
                     get_field<std::uint64_t>(header, "skipped_examples", what));
  const auto expected = get_field<std::size_t>(header, "vectors", what);

  std::size_t count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = detail::parse_line(line, "model snapshot", line_no);
    const std::string rwhat = "model snapshot line " + std::to_string(line_no);
    if (get_field<std::string>(rec, "record", rwhat) != "vector") continue;
    FeatureValueVector vec;
    vec.weights = get_field<std::vector<double>>(rec, "weights", rwhat);
    vec.grad_accum = get_field<std::vector<double>>(rec, "grad_accum", rwhat);
    model.insert({get_field<std::string>(rec, "feature", rwhat),
                  get_field<std::string>(rec, "value", rwhat)},
                 std::move(vec));
    ++count;
  }
  if (count != expected) {
    throw FormatError("model snapshot: header announces " + std::to_string(expected) +
                      " vectors, found " + std::to_string(count));
  }
  if (get_field<std::string>(header, "model_version", what) != model.model_version()) {
    throw FormatError("model snapshot: model_version does not match trained_examples");
  }
  return model;
}

void save_model_file(const ModelState& model, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  save_model(model, out);
}

ModelState load_model_file(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return load_model(in);
}

std::string model_to_string(const ModelState& model) {
  std::ostringstream out;
  save_model(model, out);
  return out.str();
}

}  // namespace dco
