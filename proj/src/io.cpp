#include "hsbc/io.hpp"

#include <cstdio>
#include <filesystem>
#include <iterator>
#include <iomanip>
#include <sstream>

#include "hsbc/errors.hpp"

namespace hsbc {

using nlohmann::json;

namespace {

json vectors_to_json(const std::vector<Eigen::VectorXd>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return out;
}

std::vector<Eigen::VectorXd> vectors_from_json(const json& j) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& row : j) {
    const auto values = row.get<std::vector<double>>();
    out.push_back(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  return out;
}

}  // namespace

json trajectory_to_json(const Trajectory& traj) {
  return {{"states", vectors_to_json(traj.states)}, {"actions", vectors_to_json(traj.actions)}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.states = vectors_from_json(j.at("states"));
  t.actions = vectors_from_json(j.at("actions"));
  return t;
}

json segment_to_json(const Segment& seg) {
  json j = trajectory_to_json(seg.data);
  j["source_id"] = seg.source_id;
  j["offset"] = seg.offset;
  j["length"] = seg.length();
  return j;
}

Segment segment_from_json(const json& j) {
  Segment s;
  s.data = trajectory_from_json(j);
  s.source_id = j.at("source_id").get<std::uint64_t>();
  s.offset = j.at("offset").get<std::size_t>();
  return s;
}

json preference_to_json(const LoggedPreference& p) {
  json j = {{"query_id", p.record.query_id},
            {"batch_index", p.batch_index},
            {"position", p.position},
            {"label", p.record.label},
            {"source", to_string(p.record.source)},
            {"score", p.score},
            {"seg0", segment_to_json(p.record.seg0)},
            {"seg1", segment_to_json(p.record.seg1)}};
  j["rational_label"] = p.rational_label ? json(*p.rational_label) : json(nullptr);
  return j;
}

LoggedPreference preference_from_json(const json& j) {
  LoggedPreference p;
  p.record.query_id = j.at("query_id").get<std::uint64_t>();
  p.record.label = j.at("label").get<int>();
  p.record.source = label_source_from_string(j.at("source").get<std::string>());
  p.record.seg0 = segment_from_json(j.at("seg0"));
  p.record.seg1 = segment_from_json(j.at("seg1"));
  p.batch_index = j.at("batch_index").get<int>();
  p.position = j.at("position").get<int>();
  p.score = j.value("score", 0.0);
  if (j.contains("rational_label") && !j["rational_label"].is_null())
    p.rational_label = j["rational_label"].get<int>();
  return p;
}

namespace {

/// Drops a partial last line left by an interrupted write.
void truncate_torn_tail(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  if (content.empty() || content.back() == '\n') return;
  const auto keep = content.find_last_of('\n');
  std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
}

}  // namespace

PreferenceLog::PreferenceLog(const std::string& path) {
  for (const auto& p : read_preference_log(path)) ids_.insert(p.record.query_id);
  truncate_torn_tail(path);
  out_.open(path, std::ios::app);
  if (!out_) throw ConfigError("cannot open preference log '" + path + "'");
}

bool PreferenceLog::append(const LoggedPreference& p) {
  std::lock_guard lock(mutex_);
  if (!ids_.insert(p.record.query_id).second) return false;
  if (out_.is_open()) out_ << preference_to_json(p).dump() << '\n' << std::flush;
  return true;
}

bool PreferenceLog::contains(std::uint64_t query_id) const {
  std::lock_guard lock(mutex_);
  return ids_.count(query_id) > 0;
}

std::size_t PreferenceLog::size() const {
  std::lock_guard lock(mutex_);
  return ids_.size();
}

std::vector<LoggedPreference> read_preference_log(const std::string& path) {
  std::vector<LoggedPreference> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(preference_from_json(json::parse(line)));
    } catch (const json::exception&) {
      if (in.peek() != EOF) throw InvalidInput("corrupt preference log line in '" + path + "'");
    }
  }
  return out;
}

void write_ensemble(const std::string& path, const Ensemble& ensemble) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot write checkpoint '" + path + "'");
  const auto dim = ensemble.empty() ? 0 : ensemble.members.front().size();
  std::fprintf(f, "# hsbc-ensemble v1 iteration=%d members=%zu dim=%ld\n", ensemble.iteration,
               ensemble.size(), static_cast<long>(dim));
  for (const auto& theta : ensemble.members) {
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      std::fprintf(f, i == 0 ? "%.17g" : " %.17g", theta(i));
    std::fputc('\n', f);
  }
  std::fclose(f);
}

Ensemble read_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  std::string header;
  std::getline(in, header);
  int iteration = 0;
  std::size_t members = 0;
  long dim = 0;
  if (std::sscanf(header.c_str(), "# hsbc-ensemble v1 iteration=%d members=%zu dim=%ld", &iteration,
                  &members, &dim) != 3)
    throw InvalidInput("'" + path + "' is not an ensemble checkpoint");
  Ensemble e;
  e.iteration = iteration;
  for (std::size_t k = 0; k < members; ++k) {
    RewardParams theta(dim);
    for (long i = 0; i < dim; ++i)
      if (!(in >> theta(i))) throw InvalidInput("truncated checkpoint '" + path + "'");
    e.members.push_back(std::move(theta));
  }
  return e;
}

void write_curve_csv(const std::string& path, const LearningCurve& curve) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write curve '" + path + "'");
  out << "iteration,queries,mean_return,stddev_return\n" << std::setprecision(10);
  for (const auto& p : curve.points)
    out << p.iteration << ',' << p.queries << ',' << p.mean << ',' << p.stddev << '\n';
}

LearningCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open curve '" + path + "'");
  LearningCurve curve;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CurvePoint p;
    char c1, c2, c3;
    std::istringstream row(line);
    if (!(row >> p.iteration >> c1 >> p.queries >> c2 >> p.mean >> c3 >> p.stddev))
      throw InvalidInput("malformed curve row '" + line + "'");
    curve.points.push_back(p);
  }
  return curve;
}

json curve_to_json(const LearningCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points)
    points.push_back({{"iteration", p.iteration},
                      {"queries", p.queries},
                      {"mean_return", p.mean},
                      {"stddev_return", p.stddev}});
  return points;
}

EventLog::EventLog(const std::string& path) : out_(path, std::ios::app) {
  if (!out_) throw ConfigError("cannot open event log '" + path + "'");
}

void EventLog::write(const std::string& event, json fields) {
  std::lock_guard lock(mutex_);
  if (!out_.is_open()) return;
  fields["event"] = event;
  out_ << fields.dump() << '\n' << std::flush;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return json::parse(in);
}

}  // namespace hsbc
