#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "hsbc/errors.hpp"
#include "hsbc/io.hpp"

using namespace hsbc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

LoggedPreference sample_preference(std::uint64_t id, Rng& rng) {
  const EnvSpec env = EnvSpec::make_cartpole();
  LoggedPreference p;
  p.record = {fixtures::random_segment(env, 5, rng, 10 + id), fixtures::random_segment(env, 5, rng, 20 + id),
              static_cast<int>(id % 2), id, id % 3 == 0 ? LabelSource::Human : LabelSource::Simulated};
  p.record.seg1.offset = 7;
  p.batch_index = static_cast<int>(id / 10);
  p.position = static_cast<int>(id % 10);
  p.score = 0.875;
  if (id % 2 == 0) p.rational_label = 1;
  return p;
}

void check_same(const LoggedPreference& a, const LoggedPreference& b) {
  CHECK(a.record.query_id == b.record.query_id);
  CHECK(a.record.label == b.record.label);
  CHECK(a.record.source == b.record.source);
  CHECK(a.batch_index == b.batch_index);
  CHECK(a.position == b.position);
  CHECK(a.score == b.score);
  CHECK(a.rational_label == b.rational_label);
  CHECK(a.record.seg1.offset == b.record.seg1.offset);
  CHECK(a.record.seg0.source_id == b.record.seg0.source_id);
  REQUIRE(a.record.seg0.length() == b.record.seg0.length());
  for (std::size_t t = 0; t <= a.record.seg0.length(); ++t)
    CHECK(a.record.seg0.data.states[t] == b.record.seg0.data.states[t]);
  for (std::size_t t = 0; t < a.record.seg1.length(); ++t)
    CHECK(a.record.seg1.data.actions[t] == b.record.seg1.data.actions[t]);
}

}  // namespace

TEST_CASE("preference records round-trip through JSON bit for bit") {
  Rng rng(1);
  for (std::uint64_t id = 0; id < 6; ++id) {
    const LoggedPreference p = sample_preference(id, rng);
    check_same(p, preference_from_json(nlohmann::json::parse(preference_to_json(p).dump())));
  }
}

TEST_CASE("preference log appends, skips repeated ids and reloads") {
  TempDir dir("hsbc_io_log");
  const auto path = dir.file("prefs.jsonl");
  Rng rng(2);
  std::vector<LoggedPreference> written;
  {
    PreferenceLog log(path);
    for (std::uint64_t id = 0; id < 5; ++id) {
      written.push_back(sample_preference(id, rng));
      CHECK(log.append(written.back()));
    }
    CHECK_FALSE(log.append(sample_preference(3, rng)));
    CHECK(log.size() == 5);
    CHECK(log.contains(4));
    CHECK_FALSE(log.contains(9));
  }
  const auto back = read_preference_log(path);
  REQUIRE(back.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) check_same(written[k], back[k]);

  PreferenceLog reopened(path);
  CHECK(reopened.size() == 5);
  CHECK_FALSE(reopened.append(written[0]));
  CHECK(reopened.append(sample_preference(5, rng)));
}

TEST_CASE("a torn final line is ignored and cleaned before new appends") {
  TempDir dir("hsbc_io_torn");
  const auto path = dir.file("prefs.jsonl");
  Rng rng(3);
  {
    PreferenceLog log(path);
    log.append(sample_preference(0, rng));
    log.append(sample_preference(1, rng));
  }
  const std::string line = preference_to_json(sample_preference(2, rng)).dump();
  std::ofstream(path, std::ios::app) << line.substr(0, line.size() / 2);

  CHECK(read_preference_log(path).size() == 2);
  {
    PreferenceLog log(path);
    CHECK(log.size() == 2);
    CHECK(log.append(sample_preference(2, rng)));
  }
  const auto back = read_preference_log(path);
  REQUIRE(back.size() == 3);
  CHECK(back[2].record.query_id == 2);
}

TEST_CASE("a corrupt line in the middle of the log is an error") {
  TempDir dir("hsbc_io_corrupt");
  const auto path = dir.file("prefs.jsonl");
  Rng rng(4);
  std::ofstream(path) << "{not json}\n" << preference_to_json(sample_preference(0, rng)).dump() << '\n';
  CHECK_THROWS_AS(read_preference_log(path), InvalidInput);
  CHECK(read_preference_log(dir.file("absent.jsonl")).empty());
}

TEST_CASE("ensemble checkpoints round-trip exactly") {
  TempDir dir("hsbc_io_ckpt");
  Rng rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Ensemble e;
  e.iteration = 7;
  for (int k = 0; k < 4; ++k) {
    RewardParams p(9);
    for (auto& x : p) x = n(rng) * 1e3;
    e.members.push_back(p);
  }
  write_ensemble(dir.file("e.txt"), e);
  const Ensemble back = read_ensemble(dir.file("e.txt"));
  CHECK(back.iteration == 7);
  REQUIRE(back.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(back.members[k] == e.members[k]);

  std::ofstream(dir.file("bad.txt")) << "# something else\n1 2 3\n";
  CHECK_THROWS_AS(read_ensemble(dir.file("bad.txt")), InvalidInput);
  std::ofstream(dir.file("short.txt")) << "# hsbc-ensemble v1 iteration=1 members=2 dim=3\n1 2 3\n4\n";
  CHECK_THROWS_AS(read_ensemble(dir.file("short.txt")), InvalidInput);
  CHECK_THROWS_AS(read_ensemble(dir.file("none.txt")), ConfigError);
}

TEST_CASE("learning curves round-trip through CSV") {
  TempDir dir("hsbc_io_curve");
  LearningCurve c;
  c.points = {{0, 0, 1.25, 0.5}, {5, 50, 17.125, 2.0}, {10, 100, -3.5, 0.0}};
  write_curve_csv(dir.file("c.csv"), c);
  const LearningCurve back = read_curve_csv(dir.file("c.csv"));
  REQUIRE(back.points.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(back.points[k].iteration == c.points[k].iteration);
    CHECK(back.points[k].queries == c.points[k].queries);
    CHECK(back.points[k].mean == c.points[k].mean);
    CHECK(back.points[k].stddev == c.points[k].stddev);
  }
  const auto j = curve_to_json(c);
  CHECK(j.size() == 3);
  CHECK(j[1]["queries"] == 50);
}

TEST_CASE("event log writes one JSON object per line") {
  TempDir dir("hsbc_io_events");
  {
    EventLog log(dir.file("events.jsonl"));
    log.write("start", {{"seed", 3}});
    log.write("done");
  }
  std::ifstream in(dir.file("events.jsonl"));
  std::string a, b;
  std::getline(in, a);
  std::getline(in, b);
  CHECK(nlohmann::json::parse(a)["event"] == "start");
  CHECK(nlohmann::json::parse(a)["seed"] == 3);
  CHECK(nlohmann::json::parse(b)["event"] == "done");
}
