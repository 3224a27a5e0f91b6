#include "dco/table_io.hpp"

#include <sstream>

#include "json_util.hpp"

namespace dco {

using detail::get_field;
using detail::json;

void save_table(const DistributionTable& table, std::ostream& out) {
  json header = {
      {"record", "header"},
      {"format", "dco-table"},
      {"model_version", table.model_version},
      {"beta", table.params.beta},
      {"lambda_mix", table.params.lambda_mix},
      {"uniform_mass",
       table.params.uniform_mass == UniformMass::total ? "total" : "per_combination"},
      {"r_ds", table.params.r_ds},
      {"segment_keys", table.segment_keys},
      {"entries", table.entries.size()},
  };
  out << header.dump() << '\n';
  for (const auto& [key, probs] : table.entries) {
    const auto& [ad_id, segment] = key;
    auto combos = table.combinations.find(ad_id);
    json rec = {
        {"record", "entry"},
        {"ad_id", ad_id},
        {"segment", segment},
        {"combinations",
         combos == table.combinations.end() ? json::array() : json(combos->second)},
        {"probabilities", probs},
    };
    out << rec.dump() << '\n';
  }
}

DistributionTable load_table(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError("table: empty input");
  ++line_no;
  const json header = detail::parse_line(line, "table", line_no);
  const std::string what = "table header";
  if (get_field<std::string>(header, "format", what) != "dco-table") {
    throw FormatError("table: first record is not a dco-table header");
  }
  DistributionTable table;
  table.model_version = get_field<std::string>(header, "model_version", what);
  table.params.beta = get_field<double>(header, "beta", what);
  table.params.lambda_mix = get_field<double>(header, "lambda_mix", what);
  table.params.r_ds = get_field<double>(header, "r_ds", what);
  const auto mass = get_field<std::string>(header, "uniform_mass", what);
  if (mass == "total") {
    table.params.uniform_mass = UniformMass::total;
  } else if (mass == "per_combination") {
    table.params.uniform_mass = UniformMass::per_combination;
  } else {
    throw FormatError("table header: unknown uniform_mass '" + mass + "'");
  }
  table.segment_keys = get_field<std::vector<std::string>>(header, "segment_keys", what);

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = detail::parse_line(line, "table", line_no);
    const std::string rwhat = "table line " + std::to_string(line_no);
    if (rec.value("record", "") != "entry") continue;
    auto ad_id = get_field<std::string>(rec, "ad_id", rwhat);
    auto segment = get_field<Segment>(rec, "segment", rwhat);
    auto probs = get_field<std::vector<double>>(rec, "probabilities", rwhat);
    auto combos = get_field<std::vector<Combination>>(rec, "combinations", rwhat);
    if (combos.size() != probs.size()) {
      throw FormatError(rwhat + ": combinations and probabilities differ in length");
    }
    if (segment.size() != table.segment_keys.size()) {
      throw FormatError(rwhat + ": segment does not match segment_keys");
    }
    auto [it, inserted] = table.combinations.emplace(ad_id, combos);
    if (!inserted && it->second != combos) {
      throw FormatError(rwhat + ": inconsistent combinations for ad " + ad_id);
    }
    table.entries[{std::move(ad_id), std::move(segment)}] = std::move(probs);
  }
  return table;
}

void save_table_file(const DistributionTable& table, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  save_table(table, out);
}

DistributionTable load_table_file(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return load_table(in);
}

std::string table_to_string(const DistributionTable& table) {
  std::ostringstream out;
  save_table(table, out);
  return out.str();
}

}  // namespace dco
