#include "hsbc/session.hpp"

#include <filesystem>
#include <iostream>

#include "httplib.h"

#include "hsbc/errors.hpp"

namespace hsbc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool same_segment(const Segment& a, const Segment& b) {
  if (a.source_id != b.source_id || a.offset != b.offset || a.length() != b.length()) return false;
  for (std::size_t t = 0; t < a.data.states.size(); ++t)
    if (a.data.states[t] != b.data.states[t]) return false;
  for (std::size_t t = 0; t < a.data.actions.size(); ++t)
    if (a.data.actions[t] != b.data.actions[t]) return false;
  return true;
}

}  // namespace

HumanOracle::HumanOracle(PreferenceLog& log, std::map<std::uint64_t, LoggedPreference> replay,
                         std::unique_ptr<Oracle> simulated, int bootstrap)
    : log_(log), replay_(std::move(replay)), simulated_(std::move(simulated)), bootstrap_(bootstrap) {
  if (bootstrap_ > 0 && !simulated_) throw ConfigError("bootstrap labels need a simulated oracle");
}

LabelResult HumanOracle::label(const QueryRequest& q) {
  std::unique_lock lock(mutex_);
  if (cancelled_) throw Cancelled("session stopped");

  if (auto it = replay_.find(q.query_id); it != replay_.end()) {
    const PreferenceRecord& rec = it->second.record;
    if (!same_segment(rec.seg0, *q.seg0) || !same_segment(rec.seg1, *q.seg1))
      throw InvalidInput("logged label for query " + std::to_string(q.query_id) +
                         " refers to different segments; the run has diverged from its log");
    ++answered_;
    if (rec.source == LabelSource::Human) ++human_answered_;
    return {rec.label, rec.source, it->second.rational_label};
  }

  if (answered_ < bootstrap_) {
    ++answered_;
    LabelResult r = simulated_->label(q);
    r.source = LabelSource::Simulated;
    return r;
  }

  pending_ = PendingQuery{q.query_id, q.batch_index, q.position, q.batch_size, q.score, *q.seg0, *q.seg1};
  answer_.reset();
  cv_.notify_all();
  cv_.wait(lock, [&] { return answer_.has_value() || cancelled_; });
  if (!answer_) {
    pending_.reset();
    throw Cancelled("session stopped while a query was pending");
  }
  LabelResult r{*answer_, LabelSource::Human, std::nullopt};
  pending_.reset();
  answer_.reset();
  ++answered_;
  ++human_answered_;
  return r;
}

SubmitOutcome HumanOracle::submit(std::uint64_t query_id, int label) {
  if (label != 0 && label != 1) return SubmitOutcome::Invalid;
  std::lock_guard lock(mutex_);
  if (!pending_ || pending_->query_id != query_id || answer_) return SubmitOutcome::Conflict;
  // Persist before acknowledging so an accepted label survives a crash.
  LoggedPreference p;
  p.record = {pending_->seg0, pending_->seg1, label, query_id, LabelSource::Human};
  p.batch_index = pending_->batch_index;
  p.position = pending_->position;
  p.score = pending_->score;
  log_.append(p);
  answer_ = label;
  cv_.notify_all();
  return SubmitOutcome::Accepted;
}

std::optional<PendingQuery> HumanOracle::pending() const {
  std::lock_guard lock(mutex_);
  if (answer_) return std::nullopt;
  return pending_;
}

void HumanOracle::cancel() {
  std::lock_guard lock(mutex_);
  cancelled_ = true;
  cv_.notify_all();
}

int HumanOracle::answered() const {
  std::lock_guard lock(mutex_);
  return answered_;
}

int HumanOracle::human_answered() const {
  std::lock_guard lock(mutex_);
  return human_answered_;
}

// ---------------------------------------------------------------------------

Session::Session(RunConfig config) : config_(std::move(config)) {
  if (config_.output_dir.empty()) throw ConfigError("a session needs an output directory");
  const fs::path dir(config_.output_dir);
  fs::create_directories(dir);
  const fs::path saved = dir / "config.json";
  if (fs::exists(saved)) {
    const std::string out_dir = config_.output_dir;
    config_ = config_from_json(read_json_file(saved.string()));
    config_.output_dir = out_dir;
    resumed_ = true;
  } else {
    config_.validate();
    write_json_file(saved.string(), config_to_json(config_));
  }

  const std::string log_path = (dir / "preferences.jsonl").string();
  std::map<std::uint64_t, LoggedPreference> replay;
  for (auto& p : read_preference_log(log_path)) replay.emplace(p.record.query_id, std::move(p));
  resumed_ = resumed_ && !replay.empty();
  log_ = std::make_unique<PreferenceLog>(log_path);

  std::unique_ptr<Oracle> simulated;
  if (config_.bootstrap_labels > 0) {
    OracleSpec spec;
    spec.kind = OracleKind::Rational;
    spec.seed = derive_seed(config_.seed, 6);
    simulated = std::make_unique<SimulatedOracle>(spec, GroundTruth::from_env(config_.env));
  }
  oracle_ = std::make_unique<HumanOracle>(*log_, std::move(replay), std::move(simulated),
                                          config_.bootstrap_labels);
}

Session::~Session() { stop(); }

void Session::start() {
  if (thread_.joinable()) return;
  thread_ = std::thread([this] {
    RunOptions opt;
    opt.oracle = oracle_.get();
    opt.preference_log = log_.get();
    opt.cancel = &cancel_;
    opt.on_phase = [this](RunPhase p, int i) {
      std::lock_guard lock(mutex_);
      phase_ = p;
      iteration_ = i;
    };
    opt.on_evaluation = [this](const CurvePoint& p) {
      std::lock_guard lock(mutex_);
      curve_.points.push_back(p);
    };
    std::string error;
    try {
      run_hsbc(config_, opt);
    } catch (const Cancelled&) {
      error = "stopped";
    } catch (const std::exception& e) {
      error = e.what();
      std::cerr << "session failed: " << error << '\n';
    }
    std::lock_guard lock(mutex_);
    finished_ = true;
    error_ = error;
    if (error.empty()) phase_ = RunPhase::Done;
    done_cv_.notify_all();
  });
}

void Session::stop() {
  cancel_ = true;
  if (oracle_) oracle_->cancel();
  if (thread_.joinable()) thread_.join();
}

void Session::wait() {
  std::unique_lock lock(mutex_);
  done_cv_.wait(lock, [&] { return finished_; });
}

json Session::status() const {
  const auto pending = oracle_->pending();
  std::lock_guard lock(mutex_);
  std::string state = to_string(phase_);
  if (finished_ && !error_.empty()) state = error_ == "stopped" ? "stopped" : "failed";
  if (pending) state = "collecting";
  json j = {{"api_version", kApiVersion},
            {"run_id", config_.name + "-" + std::to_string(config_.seed)},
            {"status", state},
            {"iteration", pending ? pending->batch_index : iteration_},
            {"iterations", config_.iterations},
            {"batch_size", config_.query.batch_size},
            {"labels_answered", oracle_->answered()},
            {"human_labels", oracle_->human_answered()},
            {"bootstrap_labels", config_.bootstrap_labels},
            {"resumed", resumed_},
            {"pending", pending.has_value()}};
  if (pending) {
    j["pending_query_id"] = pending->query_id;
    j["answered_in_batch"] = pending->position;
    j["remaining_in_batch"] = pending->batch_size - pending->position;
  }
  if (!error_.empty() && error_ != "stopped") j["error"] = error_;
  return j;
}

json Session::query() const {
  json j = status();
  const auto pending = oracle_->pending();
  if (!pending) {
    j["query"] = nullptr;
    return j;
  }
  j["query"] = {{"query_id", pending->query_id},
                {"batch_index", pending->batch_index},
                {"position", pending->position},
                {"batch_size", pending->batch_size},
                {"score", pending->score},
                {"env", to_string(config_.env.kind)},
                {"dt", config_.env.control_dt()},
                {"seg0", segment_to_json(pending->seg0)},
                {"seg1", segment_to_json(pending->seg1)}};
  return j;
}

json Session::curve() const {
  std::lock_guard lock(mutex_);
  return {{"api_version", kApiVersion}, {"points", curve_to_json(curve_)}};
}

SubmitOutcome Session::submit(std::uint64_t query_id, int label) {
  return oracle_->submit(query_id, label);
}

// ---------------------------------------------------------------------------

namespace {

void reply(httplib::Response& res, int code, const json& body) {
  res.status = code;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int code, const std::string& message) {
  reply(res, code, {{"api_version", kApiVersion}, {"error", message}});
}

}  // namespace

void register_routes(httplib::Server& server, Session& session) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});

  server.Get("/api/v1/status", [&session](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, session.status());
  });
  server.Get("/api/v1/query", [&session](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, session.query());
  });
  server.Get("/api/v1/curve", [&session](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, session.curve());
  });
  server.Options("/api/v1/label", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.Post("/api/v1/label", [&session](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return fail(res, 400, "body is not valid JSON");
    }
    if (!body.is_object() || !body.contains("query_id") || !body.contains("label") ||
        !body["query_id"].is_number_unsigned() || !body["label"].is_number_integer())
      return fail(res, 400, "expected {\"query_id\": <unsigned>, \"label\": 0 | 1}");
    const auto id = body["query_id"].get<std::uint64_t>();
    const auto label = body["label"].get<std::int64_t>();
    if (label != 0 && label != 1) return fail(res, 400, "label must be 0 or 1");
    switch (session.submit(id, static_cast<int>(label))) {
      case SubmitOutcome::Accepted:
        return reply(res, 200, {{"api_version", kApiVersion}, {"accepted", true}, {"query_id", id}});
      case SubmitOutcome::Conflict:
        return fail(res, 409, "query " + std::to_string(id) + " is not pending");
      case SubmitOutcome::Invalid:
        return fail(res, 400, "label must be 0 or 1");
    }
  });
}

void serve_session(const RunConfig& config, const std::string& host, int port) {
  Session session(config);
  httplib::Server server;
  register_routes(server, session);
  session.start();
  std::cerr << "serving session on http://" << host << ":" << port << "/api/v1/status"
            << (session.resumed() ? " (resumed)" : "") << '\n';
  if (!server.listen(host, port)) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
}

}  // namespace hsbc
