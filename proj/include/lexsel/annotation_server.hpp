#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "lexsel/annotate.hpp"
#include "lexsel/dataset.hpp"
#include "lexsel/error.hpp"
#include "lexsel/jsonl.hpp"
#include "lexsel/log.hpp"
#include "lexsel/mine.hpp"
#include "lexsel/rules.hpp"

namespace lexsel {

/// On-disk description of an annotation session. Relative paths resolve
/// against the session file's directory.
///
///   {"id": "af-1", "seed": 1, "annotators": ["a1","a2","a3"],
///    "kind": "lexical_selection", "source": "items.jsonl",
///    "journal": "judgments.jsonl"}
///
/// `source` holds dataset items, rules, or concepts depending on `kind`.
struct SessionSpec {
  std::string id;
  std::uint64_t seed = 0;
  std::vector<std::string> annotators;
  TaskKind kind = TaskKind::lexical_selection;
  std::filesystem::path source;
  std::optional<std::filesystem::path> journal;
};

inline SessionSpec read_session_spec(const std::filesystem::path& path) {
  const auto o = jsonl::read_json(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  SessionSpec s;
  try {
    s.id = o.at("id").get<std::string>();
    s.seed = o.value("seed", std::uint64_t{0});
    s.annotators = o.at("annotators").get<std::vector<std::string>>();
    s.kind = parse_task_kind(o.value("kind", "lexical_selection"));
    s.source = resolve(o.at("source").get<std::string>());
    if (o.contains("journal") && o["journal"].is_string())
      s.journal = resolve(o["journal"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
  return s;
}

inline std::vector<AnnotationTask> session_tasks(const SessionSpec& spec) {
  std::vector<TaskSource> sources;
  switch (spec.kind) {
    case TaskKind::lexical_selection:
      sources = task_sources(read_items(spec.source));
      break;
    case TaskKind::rule_verification: {
      std::vector<RuleSet> sets;
      for (auto& [_, r] : read_rules(spec.source)) sets.push_back(std::move(r));
      sources = task_sources(rules_to_verify(sets));
      break;
    }
    case TaskKind::variation_precision:
    case TaskKind::variation_recall:
      sources = task_sources(read_concepts(spec.source), spec.kind);
      break;
  }
  return create_session(sources, spec.annotators, spec.seed);
}

inline std::unique_ptr<AnnotationSession> load_session(const std::filesystem::path& path) {
  const auto spec = read_session_spec(path);
  return std::make_unique<AnnotationSession>(spec.id, session_tasks(spec), spec.journal);
}

/// HTTP JSON API over one session, all routes under /api/v1. Optionally
/// serves static UI assets from `static_dir` at /.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationSession& session,
                            std::optional<std::filesystem::path> static_dir = std::nullopt)
      : session_(session) {
    if (static_dir && !server_.set_mount_point("/", static_dir->string()))
      fail(ErrorKind::io, "cannot serve static files from " + static_dir->string());
    routes();
  }

  /// Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) fail(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
  }

  /// Blocks serving requests until stop().
  void serve() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  using Req = httplib::Request;
  using Res = httplib::Response;

  static void reply(Res& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void error(Res& res, int status, const std::string& message) {
    reply(res, status, {{"error", message}});
  }

  bool annotator_param(const Req& req, Res& res, std::string& annotator) const {
    annotator = req.get_param_value("annotator");
    if (annotator.empty()) {
      error(res, 400, "missing query parameter 'annotator'");
      return false;
    }
    if (!session_.has_annotator(annotator)) {
      error(res, 404, "unknown annotator '" + annotator + "'");
      return false;
    }
    return true;
  }

  void routes() {
    server_.Get("/api/v1/tasks/next", [this](const Req& req, Res& res) {
      std::string a;
      if (!annotator_param(req, res, a)) return;
      auto task = session_.next_task(a);
      if (!task) {
        res.status = 204;
        return;
      }
      reply(res, 200, to_json(*task));
    });

    server_.Post("/api/v1/judgments", [this](const Req& req, Res& res) {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::parse_error&) {
        return error(res, 400, "request body is not JSON");
      }
      if (!body.is_object() || !body.contains("task_id") || !body["task_id"].is_string() ||
          !body.contains("annotator_id") || !body["annotator_id"].is_string() || !body.contains("value"))
        return error(res, 400, "expected {task_id, annotator_id, value}");
      const auto task_id = body["task_id"].get<std::string>();
      if (!session_.find_task(task_id)) return error(res, 404, "unknown task '" + task_id + "'");
      try {
        const bool replaced = session_.submit(task_id, body["annotator_id"].get<std::string>(), body["value"]);
        log::info("judgment", {{"task_id", task_id}, {"replaced", replaced}});
        reply(res, 201, {{"task_id", task_id}, {"replaced", replaced}});
      } catch (const Error& e) {
        error(res, e.kind() == ErrorKind::io ? 500 : 400, e.what());
      }
    });

    server_.Get("/api/v1/progress", [this](const Req& req, Res& res) {
      std::string a;
      if (!annotator_param(req, res, a)) return;
      const auto p = session_.progress(a);
      reply(res, 200, {{"done", p.done}, {"total", p.total}});
    });

    server_.Get("/api/v1/reports/agreement", [this](const Req& req, Res& res) {
      const auto id = req.get_param_value("session");
      if (id != session_.id()) return error(res, 404, "unknown session '" + id + "'");
      nlohmann::json reports = nlohmann::json::object();
      try {
        for (const auto& [kind, rep] : session_.agreement_reports())
          reports[kind] = rep ? to_json(*rep) : nlohmann::json();
      } catch (const Error& e) {
        return error(res, 409, e.what());
      }
      reply(res, 200, {{"session", id}, {"reports", reports}});
    });
  }

  AnnotationSession& session_;
  httplib::Server server_;
};

}  // namespace lexsel
