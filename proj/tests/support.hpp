#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "lexsel/lexsel.hpp"

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "lexsel-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline fs::path write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  return path;
}

inline std::string slurp(const fs::path& path) { return lexsel::read_file(path); }

/// Whitespace-tokenized pair with lemma = lowercased surface.
inline lexsel::SentencePair pair_of(const std::string& id, const std::string& source, const std::string& target,
                                    lexsel::Alignment links = {}) {
  lexsel::SentencePair p;
  p.id = id;
  p.provenance = "toy";
  p.source_tokens = lexsel::make_tokens(lexsel::text::split_whitespace(source));
  p.target_tokens = lexsel::make_tokens(lexsel::text::split_whitespace(target));
  p.alignment = std::move(links);
  return p;
}

inline lexsel::Corpus corpus_of(const std::vector<std::pair<std::string, std::string>>& rows) {
  lexsel::Corpus c;
  for (std::size_t i = 0; i < rows.size(); ++i)
    c.pairs.push_back(pair_of("toy:" + std::to_string(i), rows[i].first, rows[i].second));
  return c;
}

/// The three-sentence German toy bitext.
inline lexsel::Corpus house_corpus() {
  return corpus_of({{"the house", "das haus"}, {"the book", "das buch"}, {"a book", "ein buch"}});
}

/// Corpus in which source lemma `lemma`/`pos` aligns to each target lemma
/// the given number of times, one pair per occurrence. Senses are optional
/// per variation.
inline lexsel::Corpus planted(const std::string& lemma, const std::string& pos,
                              const std::vector<std::pair<std::string, std::size_t>>& variations,
                              const std::map<std::string, std::string>& senses = {}) {
  lexsel::Corpus c;
  std::size_t n = 0;
  for (const auto& [var, count] : variations) {
    for (std::size_t k = 0; k < count; ++k) {
      auto p = pair_of("p:" + std::to_string(n++), "we like " + lemma, "wir " + var + " mögen", {{2, 1}});
      p.source_tokens[2].pos = pos;
      if (auto it = senses.find(var); it != senses.end()) p.source_tokens[2].sense_id = it->second;
      c.pairs.push_back(std::move(p));
    }
  }
  return c;
}

inline lexsel::Concept concept_of(const std::string& lemma, const std::string& pos,
                                  const std::vector<std::pair<std::string, std::uint64_t>>& counts) {
  lexsel::Concept c;
  c.lemma = lemma;
  c.pos = pos;
  std::vector<std::uint64_t> raw;
  for (const auto& [_, n] : counts) raw.push_back(n);
  for (std::size_t i = 0; i < counts.size(); ++i)
    c.variations.push_back({counts[i].first, counts[i].second, lexsel::variation_probability(raw, i), 1.0});
  c.entropy = lexsel::concept_entropy(raw);
  return c;
}

inline lexsel::SelectionItem item_of(const std::string& id, const std::string& lemma,
                                     std::vector<std::string> candidates, const std::string& gold,
                                     const std::string& sentence = "") {
  lexsel::SelectionItem i;
  i.id = id;
  i.concept_key = {lemma, "NOUN"};
  i.source_tokens = lexsel::text::split_whitespace(sentence.empty() ? "I ate a " + lemma + " today" : sentence);
  for (std::size_t k = 0; k < i.source_tokens.size(); ++k)
    if (i.source_tokens[k] == lemma) i.concept_index = k;
  std::sort(candidates.begin(), candidates.end());
  i.candidates = std::move(candidates);
  i.gold = gold;
  i.pair_ref = "pair:" + id;
  return i;
}

/// Local HTTP chat endpoint: handler maps the request JSON to the reply
/// content. Counts requests.
class MockEndpoint {
 public:
  using Handler = std::function<std::string(const nlohmann::json&)>;

  explicit MockEndpoint(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      const auto body = nlohmann::json::parse(req.body);
      {
        std::lock_guard lock(mutex_);
        bodies_.push_back(body);
      }
      if (fail_next_ > 0) {
        --fail_next_;
        res.status = 503;
        return;
      }
      res.set_content(nlohmann::json{{"content", handler_(body)}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat"; }
  std::size_t requests() const { return requests_; }
  void fail_next(int n) { fail_next_ = n; }
  std::vector<nlohmann::json> bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
  }

  /// Writes an endpoint config file pointing at this server.
  fs::path write_config(const fs::path& path, const std::string& model = "mock") const {
    return write_file(path, "base_url = " + url() + "\nmodel = " + model + "\nmax_retries = 1\ntimeout = 5\n");
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<int> fail_next_{0};
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> bodies_;
};

/// The user turn of a chat request.
inline std::string user_text(const lexsel::ChatRequest& r) { return r.messages.back().content; }

/// Candidates as listed after "from the following list: " in a selection
/// prompt, in presented order.
inline std::vector<std::string> listed_candidates(const std::string& prompt) {
  const std::string marker = "from the following list: ";
  auto start = prompt.find(marker);
  if (start == std::string::npos) return {};
  start += marker.size();
  const auto end = prompt.find(".\n", start);
  std::vector<std::string> out;
  for (const auto& part : lexsel::text::split(prompt.substr(start, end - start), ','))
    out.emplace_back(lexsel::text::trim(part));
  return out;
}

}  // namespace testing_support
