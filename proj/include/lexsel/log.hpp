#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace lexsel::log {

enum class Level { debug, info, warn, error };

inline const char* to_string(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "info";
}

using Sink = std::function<void(Level, const nlohmann::json&)>;

namespace detail {

inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

inline Sink& sink() {
  static Sink s = [](Level, const nlohmann::json& record) {
    std::cerr << record.dump() << '\n';
  };
  return s;
}

inline Level& threshold() {
  static Level l = Level::info;
  return l;
}

}  // namespace detail

/// Replaces the process-wide sink and returns the previous one.
inline Sink set_sink(Sink sink) {
  std::lock_guard lock(detail::sink_mutex());
  return std::exchange(detail::sink(), std::move(sink));
}

inline void set_level(Level level) {
  std::lock_guard lock(detail::sink_mutex());
  detail::threshold() = level;
}

/// Emits one line-delimited JSON record: {"level", "event", ...fields}.
inline void emit(Level level, const std::string& event, nlohmann::json fields = {}) {
  std::lock_guard lock(detail::sink_mutex());
  if (level < detail::threshold()) return;
  nlohmann::json record = {{"level", to_string(level)}, {"event", event}};
  if (fields.is_object()) {
    for (auto& [k, v] : fields.items()) record[k] = v;
  }
  detail::sink()(level, record);
}

inline void info(const std::string& event, nlohmann::json fields = {}) {
  emit(Level::info, event, std::move(fields));
}

inline void warn(const std::string& event, nlohmann::json fields = {}) {
  emit(Level::warn, event, std::move(fields));
}

inline void error(const std::string& event, nlohmann::json fields = {}) {
  emit(Level::error, event, std::move(fields));
}

/// Captures records for the lifetime of the guard (tests, batch tooling).
class Capture {
 public:
  Capture() {
    previous_ = set_sink([this](Level level, const nlohmann::json& record) {
      if (level >= Level::warn) warnings.push_back(record);
      records.push_back(record);
    });
  }
  ~Capture() { set_sink(std::move(previous_)); }
  Capture(const Capture&) = delete;
  Capture& operator=(const Capture&) = delete;

  bool saw(const std::string& event) const {
    for (const auto& r : records)
      if (r.value("event", "") == event) return true;
    return false;
  }

  std::vector<nlohmann::json> records;
  std::vector<nlohmann::json> warnings;

 private:
  Sink previous_;
};

}  // namespace lexsel::log
