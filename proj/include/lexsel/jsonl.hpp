#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexsel/error.hpp"
#include "lexsel/text.hpp"

namespace lexsel::jsonl {

using nlohmann::json;

/// Calls `fn(object, line_number)` for every non-blank line (1-based numbers).
inline void for_each(const std::filesystem::path& path,
                     const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::format,
           path.string() + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    try {
      fn(value, line_no);
    } catch (const json::exception& e) {
      fail(ErrorKind::format,
           path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::vector<json> read(const std::filesystem::path& path) {
  std::vector<json> out;
  for_each(path, [&](const json& j, std::size_t) { out.push_back(j); });
  return out;
}

inline void write(const std::filesystem::path& path, const std::vector<json>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << '\n';
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::format, path.string() + ": invalid JSON: " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& value) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << value.dump(2) << '\n';
}

}  // namespace lexsel::jsonl
