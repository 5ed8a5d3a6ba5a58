#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "json.hpp"

#include "hsbc/config.hpp"
#include "hsbc/harness.hpp"
#include "hsbc/io.hpp"
#include "hsbc/oracle.hpp"

namespace httplib {
class Server;
}

namespace hsbc {

inline constexpr int kApiVersion = 1;

struct PendingQuery {
  std::uint64_t query_id = 0;
  int batch_index = 0;
  int position = 0;
  int batch_size = 0;
  double score = 0.0;
  Segment seg0;
  Segment seg1;
};

enum class SubmitOutcome { Accepted, Conflict, Invalid };

/// Oracle answered by an external labeler. label() parks the learning loop
/// until submit() delivers the matching query id. Labels already present in
/// `replay` are answered from it, and the first `bootstrap` queries go to
/// `simulated`.
class HumanOracle : public Oracle {
 public:
  HumanOracle(PreferenceLog& log, std::map<std::uint64_t, LoggedPreference> replay,
              std::unique_ptr<Oracle> simulated, int bootstrap);

  LabelResult label(const QueryRequest& query) override;

  SubmitOutcome submit(std::uint64_t query_id, int label);
  std::optional<PendingQuery> pending() const;
  /// Wakes a parked label() call, which then throws Cancelled.
  void cancel();

  int answered() const;
  int human_answered() const;

 private:
  PreferenceLog& log_;
  std::map<std::uint64_t, LoggedPreference> replay_;
  std::unique_ptr<Oracle> simulated_;
  int bootstrap_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<PendingQuery> pending_;
  std::optional<int> answer_;
  bool cancelled_ = false;
  int answered_ = 0;
  int human_answered_ = 0;
};

/// A human-labeled run in a background thread. Restarting on the same output
/// directory replays logged labels and continues from the first unanswered query.
class Session {
 public:
  /// Uses `output_dir/config.json` when present so a restarted session replays the same run.
  explicit Session(RunConfig config);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void start();
  void stop();
  /// Blocks until the run finishes or fails.
  void wait();

  nlohmann::json status() const;
  nlohmann::json query() const;
  nlohmann::json curve() const;
  SubmitOutcome submit(std::uint64_t query_id, int label);

  const RunConfig& config() const { return config_; }
  bool resumed() const { return resumed_; }

 private:
  RunConfig config_;
  bool resumed_ = false;
  std::unique_ptr<PreferenceLog> log_;
  std::unique_ptr<HumanOracle> oracle_;
  std::atomic<bool> cancel_{false};
  std::thread thread_;

  mutable std::mutex mutex_;
  std::condition_variable done_cv_;
  RunPhase phase_ = RunPhase::Optimizing;
  int iteration_ = 0;
  bool finished_ = false;
  std::string error_;
  LearningCurve curve_;
};

/// Installs the versioned endpoints under /api/v1.
void register_routes(httplib::Server& server, Session& session);

/// Runs the session behind an HTTP server until the process is stopped.
void serve_session(const RunConfig& config, const std::string& host, int port);

}  // namespace hsbc
