#include <chrono>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "hsbc/errors.hpp"
#include "hsbc/session.hpp"
#include "httplib.h"

using namespace hsbc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RunConfig human_pointmass(const fs::path& dir, int bootstrap) {
  RunConfig c = preset("pointmass");
  c.oracle.kind = OracleKind::Human;
  c.iterations = 2;
  c.query.batch_size = 4;
  c.bootstrap_labels = bootstrap;
  c.eval.episodes = 1;
  c.eval.episode_length = 10;
  c.output_dir = dir.string();
  return c;
}

/// Polls until the session exposes a pending query.
json wait_for_query(Session& s) {
  for (int k = 0; k < 2000; ++k) {
    json q = s.query();
    if (!q["query"].is_null()) return q;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  FAIL("no query became pending");
  return {};
}

struct Server {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit Server(Session& session) {
    register_routes(server, session);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Server() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("session endpoints serve status, queries, labels and the curve") {
  const fs::path dir = fs::temp_directory_path() / "hsbc_session_http";
  fs::remove_all(dir);
  Session session(human_pointmass(dir, 2));
  Server srv(session);
  httplib::Client cli("127.0.0.1", srv.port);

  session.start();
  const json first = wait_for_query(session);
  CHECK(first["labels_answered"] == 2);  // bootstrap answered by the simulated oracle

  auto status = cli.Get("/api/v1/status");
  REQUIRE(status);
  CHECK(status->status == 200);
  const json sj = json::parse(status->body);
  CHECK(sj["api_version"] == kApiVersion);
  CHECK(sj["status"] == "collecting");
  CHECK(sj["pending"] == true);

  auto query = cli.Get("/api/v1/query");
  REQUIRE(query);
  const json qj = json::parse(query->body);
  const auto id = qj["query"]["query_id"].get<std::uint64_t>();
  CHECK(qj["query"]["seg0"]["states"].size() == 21);
  CHECK(qj["query"]["seg1"]["actions"].size() == 20);
  CHECK(qj["query"]["env"] == "pointmass");
  CHECK(status->get_header_value("Access-Control-Allow-Origin") == "*");

  auto post = [&](const std::string& body) { return cli.Post("/api/v1/label", body, "application/json"); };
  CHECK(post("not json")->status == 400);
  CHECK(post(R"({"query_id": 1})")->status == 400);
  CHECK(post(json{{"query_id", id}, {"label", 2}}.dump())->status == 400);
  CHECK(post(json{{"query_id", id + 1000}, {"label", 1}}.dump())->status == 409);

  auto ok = post(json{{"query_id", id}, {"label", 1}}.dump());
  REQUIRE(ok);
  CHECK(ok->status == 200);
  CHECK(json::parse(ok->body)["accepted"] == true);
  CHECK(post(json{{"query_id", id}, {"label", 0}}.dump())->status == 409);

  // Answer the rest with label 0 through the API.
  for (;;) {
    json q;
    for (int k = 0; k < 4000; ++k) {
      q = session.query();
      if (!q["query"].is_null() || session.status()["status"] == "done") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (q["query"].is_null()) break;
    const auto next = q["query"]["query_id"].get<std::uint64_t>();
    CHECK(next != id);
    REQUIRE(post(json{{"query_id", next}, {"label", 0}}.dump())->status == 200);
  }
  session.wait();
  const json done = json::parse(cli.Get("/api/v1/status")->body);
  CHECK(done["status"] == "done");
  CHECK(done["labels_answered"] == 8);
  CHECK(done["human_labels"] == 6);
  CHECK(json::parse(cli.Get("/api/v1/query")->body)["query"].is_null());
  const json curve = json::parse(cli.Get("/api/v1/curve")->body);
  CHECK(curve["points"].size() >= 1);

  const auto log = read_preference_log((dir / "preferences.jsonl").string());
  REQUIRE(log.size() == 8);
  CHECK(log[0].record.source == LabelSource::Simulated);
  CHECK(log[1].record.source == LabelSource::Simulated);
  for (std::size_t k = 2; k < 8; ++k) CHECK(log[k].record.source == LabelSource::Human);
  fs::remove_all(dir);
}

TEST_CASE("restarting a session keeps accepted labels and resumes at the next query") {
  const fs::path dir = fs::temp_directory_path() / "hsbc_session_resume";
  fs::remove_all(dir);
  std::vector<std::uint64_t> answered;
  std::uint64_t pending_before = 0;
  {
    Session s(human_pointmass(dir, 0));
    CHECK_FALSE(s.resumed());
    s.start();
    for (int k = 0; k < 3; ++k) {
      const auto id = wait_for_query(s)["query"]["query_id"].get<std::uint64_t>();
      if (!answered.empty() && answered.back() == id) {
        --k;
        continue;
      }
      REQUIRE(s.submit(id, k % 2) == SubmitOutcome::Accepted);
      answered.push_back(id);
    }
    json q;
    do q = wait_for_query(s);
    while (q["query"]["query_id"].get<std::uint64_t>() == answered.back());
    pending_before = q["query"]["query_id"].get<std::uint64_t>();
    s.stop();
    CHECK(s.status()["status"] == "stopped");
  }
  CHECK(read_preference_log((dir / "preferences.jsonl").string()).size() == 3);

  Session again(human_pointmass(dir, 0));
  CHECK(again.resumed());
  again.start();
  const json q = wait_for_query(again);
  CHECK(q["query"]["query_id"].get<std::uint64_t>() == pending_before);
  CHECK(q["labels_answered"] == 3);
  CHECK(q["resumed"] == true);
  CHECK(again.submit(answered[0], 1) == SubmitOutcome::Conflict);
  again.stop();

  const auto log = read_preference_log((dir / "preferences.jsonl").string());
  REQUIRE(log.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(log[k].record.query_id == answered[k]);
    CHECK(log[k].record.label == k % 2);
  }
  fs::remove_all(dir);
}

TEST_CASE("a session needs an output directory") {
  RunConfig c = preset("pointmass");
  c.oracle.kind = OracleKind::Human;
  CHECK_THROWS_AS(Session{c}, ConfigError);
}
