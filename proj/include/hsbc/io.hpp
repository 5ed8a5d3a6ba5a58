#pragma once

#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsbc/cut.hpp"
#include "hsbc/sampler.hpp"

namespace hsbc {

struct CurvePoint {
  int iteration = 0;
  int queries = 0;  ///< labels consumed so far
  double mean = 0.0;
  double stddev = 0.0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
};

nlohmann::json segment_to_json(const Segment& seg);
Segment segment_from_json(const nlohmann::json& j);
nlohmann::json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const nlohmann::json& j);

/// One line of the preference log.
struct LoggedPreference {
  PreferenceRecord record;
  int batch_index = 0;
  int position = 0;
  std::optional<int> rational_label;
  double score = 0.0;
};

nlohmann::json preference_to_json(const LoggedPreference& p);
LoggedPreference preference_from_json(const nlohmann::json& j);

/// Append-only line-delimited preference log, flushed per record. Reopening an
/// existing file keeps its records and ignores repeated query ids.
class PreferenceLog {
 public:
  PreferenceLog() = default;
  explicit PreferenceLog(const std::string& path);

  bool is_open() const { return out_.is_open(); }
  /// Returns false when the query id is already logged.
  bool append(const LoggedPreference& p);
  bool contains(std::uint64_t query_id) const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::ofstream out_;
  std::set<std::uint64_t> ids_;
};

/// Reads every complete line; a torn trailing line is skipped.
std::vector<LoggedPreference> read_preference_log(const std::string& path);

/// Text checkpoint: a header line then one member per line.
void write_ensemble(const std::string& path, const Ensemble& ensemble);
Ensemble read_ensemble(const std::string& path);

void write_curve_csv(const std::string& path, const LearningCurve& curve);
LearningCurve read_curve_csv(const std::string& path);
nlohmann::json curve_to_json(const LearningCurve& curve);

/// Line-delimited structured events; thread-safe.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(const std::string& path);

  void write(const std::string& event, nlohmann::json fields = nlohmann::json::object());
  bool is_open() const { return out_.is_open(); }

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace hsbc
