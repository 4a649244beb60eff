#pragma once

#include <chrono>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "lexsel/chat.hpp"
#include "lexsel/error.hpp"

namespace lexsel {

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // at least "/"
};

inline SplitUrl split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) fail(ErrorKind::format, "endpoint url lacks a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

/// POSTs JSON with bounded retries on transport failures, 429 and 5xx.
inline nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                                const std::string& bearer, int max_retries, double timeout_s) {
  const auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  const auto secs = static_cast<time_t>(timeout_s);
  const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);

  std::string last_error;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw TransportError(url + ": HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw TransportError(url + ": response is not JSON");
    }
  }
  throw TransportError(url + ": " + last_error + " after " + std::to_string(max_retries + 1) + " attempts");
}

}  // namespace detail

/// Chat endpoint speaking {model, messages, temperature} -> {content}.
/// OpenAI-style {choices[0].message.content} responses are accepted too.
class HttpChatModel : public ChatModel {
 public:
  explicit HttpChatModel(ModelEndpoint endpoint) : ep_(std::move(endpoint)) {}

  std::string complete(const ChatRequest& request) override {
    auto body = to_json(request);
    auto res = detail::post_json(ep_.base_url, body, ep_.api_key, ep_.max_retries, ep_.timeout_seconds);
    if (res.contains("content") && res["content"].is_string()) return res["content"].get<std::string>();
    if (res.contains("choices") && res["choices"].is_array() && !res["choices"].empty()) {
      const auto& msg = res["choices"][0];
      if (msg.contains("message") && msg["message"].contains("content"))
        return msg["message"]["content"].get<std::string>();
    }
    throw TransportError(ep_.base_url + ": response has no content field");
  }

  std::string name() const override { return ep_.model_name; }
  bool accepts_system_role() const override { return ep_.system_role; }
  const ModelEndpoint& endpoint() const { return ep_; }

 private:
  ModelEndpoint ep_;
};

/// Optional client for an HTTP translation service speaking
/// {text, source_lang, target_lang} -> {translation}. Produces the
/// item_id -> translation map consumed by the nmt evaluation setting.
inline std::map<std::string, std::string> fetch_translations(
    const ModelEndpoint& ep, const std::vector<std::pair<std::string, std::string>>& id_and_text,
    const std::string& source_lang, const std::string& target_lang) {
  std::map<std::string, std::string> out;
  for (const auto& [id, text] : id_and_text) {
    nlohmann::json body = {{"text", text}, {"source_lang", source_lang}, {"target_lang", target_lang}};
    if (!ep.model_name.empty()) body["model"] = ep.model_name;
    auto res = detail::post_json(ep.base_url, body, ep.api_key, ep.max_retries, ep.timeout_seconds);
    out[id] = res.at("translation").get<std::string>();
  }
  return out;
}

}  // namespace lexsel
