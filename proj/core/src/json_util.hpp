#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "dco/errors.hpp"
#include "json.hpp"

namespace dco::detail {

using nlohmann::json;

inline json parse_line(const std::string& line, const std::string& what, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(what + " line " + std::to_string(line_no) + ": " + e.what());
  }
}

template <typename T>
T get_field(const json& obj, const char* field, const std::string& what) {
  auto it = obj.find(field);
  if (it == obj.end()) throw FormatError(what + ": missing field '" + field + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw FormatError(what + ": bad field '" + field + "': " + e.what());
  }
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace dco::detail
