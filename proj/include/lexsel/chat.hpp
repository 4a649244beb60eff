#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lexsel/error.hpp"
#include "lexsel/text.hpp"

namespace lexsel {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

inline nlohmann::json to_json(const ChatRequest& r) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : r.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", r.model}, {"messages", msgs}, {"temperature", r.temperature}};
}

/// A chat-completion backend. Implementations must be safe to call from
/// several threads at once.
class ChatModel {
 public:
  virtual ~ChatModel() = default;
  /// Returns the assistant message content. Throws TransportError when the
  /// backend cannot be reached.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
  /// Some instruction-tuned models take no system role; their system text is
  /// prepended to the user turn instead.
  virtual bool accepts_system_role() const { return true; }
};

/// ChatModel backed by a callable; the building block for scripted and mock
/// models.
class CallbackChatModel : public ChatModel {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;

  CallbackChatModel(std::string name, Fn fn, bool system_role = true)
      : name_(std::move(name)), fn_(std::move(fn)), system_role_(system_role) {}

  std::string complete(const ChatRequest& request) override {
    ++calls_;
    return fn_(request);
  }
  std::string name() const override { return name_; }
  bool accepts_system_role() const override { return system_role_; }

  std::size_t calls() const { return calls_.load(); }

 private:
  std::string name_;
  Fn fn_;
  bool system_role_;
  std::atomic<std::size_t> calls_{0};
};

/// Builds the message list for a (system, user) prompt pair.
inline std::vector<ChatMessage> make_messages(const std::string& system, const std::string& user,
                                              bool accepts_system_role) {
  if (system.empty()) return {{"user", user}};
  if (!accepts_system_role) return {{"user", system + "\n\n" + user}};
  return {{"system", system}, {"user", user}};
}

/// Connection settings for an HTTP chat endpoint.
struct ModelEndpoint {
  std::string base_url;
  std::string model_name;
  double temperature = 0.0;
  int max_retries = 2;
  double timeout_seconds = 60.0;
  bool system_role = true;
  std::string api_key;  // from the environment only
};

inline constexpr const char* env_base_url = "LEXSEL_BASE_URL";
inline constexpr const char* env_model = "LEXSEL_MODEL";
inline constexpr const char* env_api_key = "LEXSEL_API_KEY";

/// Reads a key=value endpoint file (`#` comments). Recognized keys:
/// base_url, model, temperature, max_retries, timeout, system_role.
/// LEXSEL_BASE_URL / LEXSEL_MODEL override the file; the credential is read
/// from LEXSEL_API_KEY and never from the file.
inline ModelEndpoint load_endpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open endpoint config " + path.string());
  ModelEndpoint ep;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::format, path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key(text::trim(body.substr(0, eq)));
    std::string value(text::trim(body.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    try {
      if (key == "base_url") ep.base_url = value;
      else if (key == "model") ep.model_name = value;
      else if (key == "temperature") ep.temperature = std::stod(value);
      else if (key == "max_retries") ep.max_retries = std::stoi(value);
      else if (key == "timeout") ep.timeout_seconds = std::stod(value);
      else if (key == "system_role") ep.system_role = (value == "true" || value == "1");
      else if (key == "api_key")
        fail(ErrorKind::format, path.string() + ": credentials belong in $" + std::string(env_api_key));
      else
        fail(ErrorKind::format, path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(line_no) + ": bad value for '" + key + "'");
    }
  }
  if (const char* v = std::getenv(env_base_url)) ep.base_url = v;
  if (const char* v = std::getenv(env_model)) ep.model_name = v;
  if (const char* v = std::getenv(env_api_key)) ep.api_key = v;
  if (ep.base_url.empty()) fail(ErrorKind::format, path.string() + ": base_url is required");
  if (ep.model_name.empty()) fail(ErrorKind::format, path.string() + ": model is required");
  return ep;
}

}  // namespace lexsel
